"""Public rendering entry point for the three illumination modes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..scene import Scene, validate_scene
from . import kernels
from .bake import LightmapError, LightmapSet, check_coverage, pack_lightmaps
from .images import LinearImage
from .packing import InvalidSceneError, pack_scene

MODES = ("direct", "gi", "baked")


@dataclass(frozen=True)
class RenderSettings:
    """How to render a scene.

    ``max_bounces`` counts scattering events: 0 shows emitters and the
    environment only. ``direct`` caps it at 1. ``baked`` treats any value
    above 0 the same, since indirect light comes from the lightmaps.
    """

    mode: str = "gi"
    samples_per_pixel: int = 16
    max_bounces: int = 4
    seed: int = 0
    exposure: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.samples_per_pixel < 1:
            raise ValueError("samples_per_pixel must be >= 1")
        if self.max_bounces < 0:
            raise ValueError("max_bounces must be >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if not self.exposure > 0:
            raise ValueError("exposure must be > 0")


def render(scene: Scene, settings: RenderSettings,
           lightmaps: Optional[LightmapSet] = None) -> LinearImage:
    problems = validate_scene(scene)
    if problems:
        raise InvalidSceneError("invalid scene: " + "; ".join(problems))
    packed = pack_scene(scene)
    w, h = scene.camera.resolution
    if settings.mode == "baked":
        if lightmaps is None:
            raise LightmapError("baked mode requires lightmaps")
        check_coverage(scene, lightmaps)
        pixels = kernels.render_baked(
            packed.kind, packed.geo, packed.prim_mat, packed.albedo, packed.roughness,
            packed.specular, packed.emission, packed.env, packed.camera, w, h,
            settings.samples_per_pixel, settings.max_bounces, settings.seed,
            *pack_lightmaps(scene, lightmaps))
    else:
        bounces = settings.max_bounces
        if settings.mode == "direct":
            bounces = min(bounces, 1)
        pixels = kernels.render_path_traced(
            *packed.transport_args(), packed.camera, w, h,
            settings.samples_per_pixel, bounces, settings.seed)
    return LinearImage(pixels)
