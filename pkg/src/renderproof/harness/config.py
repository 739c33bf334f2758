"""Experiment configuration file (JSON).

Example::

    {
      "scenes": [
        {"id": "bay", "scene": "scenes/bay.json",
         "reference": {"render": {"mode": "gi", "spp": 256, "bounces": 8, "seed": 99}}}
      ],
      "variants": [
        {"id": "original", "overrides": "overrides/degraded.json",
         "render": {"mode": "direct", "spp": 64, "bounces": 1, "seed": 1}},
        {"id": "improved", "overrides": "overrides/corrected.json",
         "render": {"mode": "gi", "spp": 64, "bounces": 4, "seed": 1}}
      ],
      "metrics": ["psnr", "ssim", "nrq"],
      "normalize": true,
      "out_dir": "renderproof-out"
    }

Input paths are relative to the config file. ``out_dir`` is relative to the
working directory. A reference may instead be ``{"image": "photo.ppm"}``.
Variants in ``baked`` mode take an optional ``"bake"`` object with
``texel_size``, ``samples``, ``bounces`` and ``seed``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..iqa import FR_METRICS, METRICS
from ..render import BakeSettings, RenderSettings


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SceneEntry:
    scene_id: str
    scene_path: Path
    reference_image: Optional[Path] = None
    reference_settings: Optional[RenderSettings] = None


@dataclass(frozen=True)
class VariantEntry:
    variant_id: str
    settings: RenderSettings
    overrides_path: Optional[Path] = None
    bake: Optional[BakeSettings] = None


@dataclass(frozen=True)
class ExperimentConfig:
    scenes: tuple[SceneEntry, ...]
    variants: tuple[VariantEntry, ...]
    metrics: tuple[str, ...] = METRICS
    normalize: bool = True
    out_dir: Path = Path("renderproof-out")
    calibration_path: Optional[Path] = None
    tie_epsilon: float = 0.0
    source: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.scenes:
            raise ConfigError("config needs at least one scene")
        if len(self.variants) < 2:
            raise ConfigError("config needs at least two variants (a baseline and one to compare)")
        if not self.metrics:
            raise ConfigError("config needs at least one metric")
        for label, ids in (("scene", [s.scene_id for s in self.scenes]),
                           ("variant", [v.variant_id for v in self.variants]),
                           ("metric", list(self.metrics))):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            if dupes:
                raise ConfigError(f"duplicate {label} id {dupes[0]!r}")
        for m in self.metrics:
            if m not in METRICS:
                raise ConfigError(f"unknown metric {m!r} (expected one of {', '.join(METRICS)})")
        if any(m in FR_METRICS for m in self.metrics):
            for s in self.scenes:
                if s.reference_image is None and s.reference_settings is None:
                    raise ConfigError(f"scene {s.scene_id!r}: full-reference metrics need a reference")
        if self.tie_epsilon < 0:
            raise ConfigError("tie_epsilon must be >= 0")


def _keys(obj, where, required, optional=()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    for k in obj:
        if k not in set(required) | set(optional):
            raise ConfigError(f"{where}: unknown key {k!r}")
    for k in required:
        if k not in obj:
            raise ConfigError(f"{where}: missing required field {k!r}")


def _id(value, where) -> str:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{where}: expected a non-empty string id")
    return value


def _int(value, where) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer")
    return value


def _float(value, where) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number")
    return float(value)


def parse_render_settings(obj, where: str) -> RenderSettings:
    _keys(obj, where, ("mode",), ("spp", "bounces", "seed", "exposure"))
    defaults = RenderSettings()
    try:
        return RenderSettings(
            mode=obj["mode"],
            samples_per_pixel=_int(obj.get("spp", defaults.samples_per_pixel), where + ".spp"),
            max_bounces=_int(obj.get("bounces", defaults.max_bounces), where + ".bounces"),
            seed=_int(obj.get("seed", defaults.seed), where + ".seed"),
            exposure=_float(obj.get("exposure", defaults.exposure), where + ".exposure"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None


def parse_bake_settings(obj, where: str) -> BakeSettings:
    _keys(obj, where, (), ("texel_size", "samples", "bounces", "seed"))
    defaults = BakeSettings()
    try:
        return BakeSettings(
            texel_size=_float(obj.get("texel_size", defaults.texel_size), where + ".texel_size"),
            samples_per_texel=_int(obj.get("samples", defaults.samples_per_texel), where + ".samples"),
            max_bounces=_int(obj.get("bounces", defaults.max_bounces), where + ".bounces"),
            seed=_int(obj.get("seed", defaults.seed), where + ".seed"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(text: str, base_dir=".") -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    _keys(doc, "config", ("scenes", "variants"),
          ("metrics", "normalize", "out_dir", "calibration", "tie_epsilon"))
    base = Path(base_dir)

    if not isinstance(doc["scenes"], list):
        raise ConfigError("scenes: expected an array")
    scenes = []
    for i, s in enumerate(doc["scenes"]):
        where = f"scenes[{i}]"
        _keys(s, where, ("id", "scene"), ("reference",))
        ref_image = ref_settings = None
        if "reference" in s:
            ref = s["reference"]
            _keys(ref, where + ".reference", (), ("image", "render"))
            if ("image" in ref) == ("render" in ref):
                raise ConfigError(f"{where}.reference: give exactly one of 'image' or 'render'")
            if "image" in ref:
                ref_image = base / _id(ref["image"], where + ".reference.image")
            else:
                ref_settings = parse_render_settings(ref["render"], where + ".reference.render")
        scenes.append(SceneEntry(_id(s["id"], where + ".id"), base / _id(s["scene"], where + ".scene"),
                                 ref_image, ref_settings))

    if not isinstance(doc["variants"], list):
        raise ConfigError("variants: expected an array")
    variants = []
    for i, v in enumerate(doc["variants"]):
        where = f"variants[{i}]"
        _keys(v, where, ("id", "render"), ("overrides", "bake"))
        settings = parse_render_settings(v["render"], where + ".render")
        bake = parse_bake_settings(v["bake"], where + ".bake") if "bake" in v else None
        if settings.mode == "baked" and bake is None:
            bake = BakeSettings()
        overrides = base / _id(v["overrides"], where + ".overrides") if "overrides" in v else None
        variants.append(VariantEntry(_id(v["id"], where + ".id"), settings, overrides, bake))

    metrics = doc.get("metrics", list(METRICS))
    if not isinstance(metrics, list) or not all(isinstance(m, str) for m in metrics):
        raise ConfigError("metrics: expected an array of metric ids")
    normalize = doc.get("normalize", True)
    if not isinstance(normalize, bool):
        raise ConfigError("normalize: expected true or false")
    calibration = doc.get("calibration")
    return ExperimentConfig(
        scenes=tuple(scenes),
        variants=tuple(variants),
        metrics=tuple(metrics),
        normalize=normalize,
        out_dir=Path(_id(doc.get("out_dir", "renderproof-out"), "out_dir")),
        calibration_path=base / _id(calibration, "calibration") if calibration is not None else None,
        tie_epsilon=_float(doc.get("tie_epsilon", 0.0), "tie_epsilon"),
        source=doc,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, base_dir=path.parent)
