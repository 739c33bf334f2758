"""Precomputed lighting: per-primitive irradiance lightmaps and the LMP1 file format."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..scene import Scene, validate_scene
from . import kernels
from .packing import InvalidSceneError, pack_scene, planar_edges

LMP_MAGIC = b"LMP1"


class LightmapError(ValueError):
    pass


@dataclass(frozen=True)
class BakeSettings:
    texel_size: float = 0.25
    samples_per_texel: int = 256
    max_bounces: int = 8
    seed: int = 0

    def __post_init__(self):
        if not (self.texel_size > 0 and math.isfinite(self.texel_size)):
            raise ValueError("texel_size must be > 0")
        if self.samples_per_texel < 1:
            raise ValueError("samples_per_texel must be >= 1")
        if self.max_bounces < 0:
            raise ValueError("max_bounces must be >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True, eq=False)
class Lightmap:
    primitive: int
    used: np.ndarray        # (height, width) bool
    irradiance: np.ndarray  # (height, width, 3) float32

    @property
    def width(self) -> int:
        return self.used.shape[1]

    @property
    def height(self) -> int:
        return self.used.shape[0]


@dataclass(frozen=True, eq=False)
class LightmapSet:
    entries: tuple[Lightmap, ...]
    settings: Optional[BakeSettings] = None

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.primitive in seen:
                raise LightmapError(f"duplicate lightmap for primitive {e.primitive}")
            seen.add(e.primitive)
            if e.used.shape != e.irradiance.shape[:2] or e.irradiance.shape[2:] != (3,):
                raise LightmapError(f"primitive {e.primitive}: inconsistent lightmap arrays")
            if e.width < 1 or e.height < 1:
                raise LightmapError(f"primitive {e.primitive}: empty lightmap grid")
            if not np.all(np.isfinite(e.irradiance)) or np.any(e.irradiance < 0):
                raise LightmapError(f"primitive {e.primitive}: irradiance must be finite and >= 0")

    def by_primitive(self) -> dict[int, Lightmap]:
        return {e.primitive: e for e in self.entries}


def grid_size(prim, texel_size: float) -> tuple[int, int]:
    """(width, height) of a primitive's lightmap: ceil(edge length / texel size) per axis."""
    _, eu, ev = planar_edges(prim)
    # the tolerance keeps 1.1 / 0.1 = 11.000000000000002 from becoming 12
    w = max(1, math.ceil(np.linalg.norm(eu) / texel_size - 1e-9))
    h = max(1, math.ceil(np.linalg.norm(ev) / texel_size - 1e-9))
    return w, h


def triangle_texels_used(w: int, h: int) -> np.ndarray:
    # a texel is used when it overlaps the triangle u + v <= 1 with positive area
    cols = np.arange(w)[None, :] / w
    rows = np.arange(h)[:, None] / h
    return (cols + rows) < 1.0


def bake_lightmaps(scene: Scene, settings: BakeSettings) -> LightmapSet:
    # an unlit scene bakes to zero irradiance rather than failing
    problems = [p for p in validate_scene(scene) if p != "no emitter"]
    if problems:
        raise InvalidSceneError("invalid scene: " + "; ".join(problems))
    targets = [i for i, p in enumerate(scene.primitives) if p.kind in ("quad", "triangle")]
    if not targets:
        raise LightmapError("scene has no quad or triangle to bake")

    grids = []
    tex_prim, tex_col, tex_row, tex_w, tex_h = [], [], [], [], []
    for i in targets:
        prim = scene.primitives[i]
        w, h = grid_size(prim, settings.texel_size)
        used = triangle_texels_used(w, h) if prim.kind == "triangle" else np.ones((h, w), dtype=bool)
        grids.append((i, used))
        rows, cols = np.nonzero(used)
        tex_prim.append(np.full(rows.size, i))
        tex_col.append(cols)
        tex_row.append(rows)
        tex_w.append(np.full(rows.size, w))
        tex_h.append(np.full(rows.size, h))

    packed = pack_scene(scene)
    irr = kernels.bake_texels(
        *packed.transport_args(),
        np.concatenate(tex_prim).astype(np.int64),
        np.concatenate(tex_col).astype(np.int64),
        np.concatenate(tex_row).astype(np.int64),
        np.concatenate(tex_w).astype(np.float64),
        np.concatenate(tex_h).astype(np.float64),
        settings.samples_per_texel, settings.max_bounces, settings.seed,
    ).astype(np.float32)

    entries = []
    start = 0
    for i, used in grids:
        grid = np.zeros(used.shape + (3,), dtype=np.float32)
        count = int(used.sum())
        grid[used] = irr[start:start + count]
        start += count
        entries.append(Lightmap(i, used, grid))
    return LightmapSet(tuple(entries), settings)


def check_coverage(scene: Scene, lightmaps: LightmapSet) -> None:
    """Raise LightmapError unless `lightmaps` fits `scene` for baked rendering."""
    n = len(scene.primitives)
    maps = lightmaps.by_primitive()
    for idx, lm in maps.items():
        if not 0 <= idx < n:
            raise LightmapError(f"lightmap for primitive {idx}, scene has {n} primitives")
        prim = scene.primitives[idx]
        if prim.kind == "sphere":
            raise LightmapError(f"lightmap for primitive {idx}, which is a sphere")
        if lightmaps.settings is not None:
            expected = grid_size(prim, lightmaps.settings.texel_size)
            if (lm.width, lm.height) != expected:
                raise LightmapError(
                    f"primitive {idx}: lightmap is {lm.width}x{lm.height}, expected "
                    f"{expected[0]}x{expected[1]}")
        if not lm.used.any():
            raise LightmapError(f"primitive {idx}: lightmap has no used texel")
    for i, p in enumerate(scene.primitives):
        if i not in maps and not scene.material(p.material).is_emissive:
            raise LightmapError(f"primitive {i} ({p.kind}) has no lightmap")


def nearest_used(used: np.ndarray) -> np.ndarray:
    """Flat index of the nearest used texel (by texel-centre distance) for every texel."""
    h, w = used.shape
    rows, cols = np.nonzero(used)
    yy, xx = np.mgrid[0:h, 0:w]
    d2 = (yy.reshape(-1, 1) - rows) ** 2 + (xx.reshape(-1, 1) - cols) ** 2
    best = np.argmin(d2, axis=1)  # first minimum: ties resolve in row-major order
    return rows[best] * w + cols[best]


def pack_lightmaps(scene: Scene, lightmaps: LightmapSet):
    n = len(scene.primitives)
    off = np.full(n, -1, dtype=np.int64)
    lw = np.ones(n, dtype=np.int64)
    lh = np.ones(n, dtype=np.int64)
    near, irr = [], []
    total = 0
    for lm in sorted(lightmaps.entries, key=lambda e: e.primitive):
        off[lm.primitive] = total
        lw[lm.primitive] = lm.width
        lh[lm.primitive] = lm.height
        near.append(nearest_used(lm.used) + total)
        irr.append(lm.irradiance.reshape(-1, 3).astype(np.float64))
        total += lm.width * lm.height
    near_arr = np.concatenate(near).astype(np.int64) if near else np.zeros(0, dtype=np.int64)
    irr_arr = np.concatenate(irr) if irr else np.zeros((0, 3))
    return off, lw, lh, near_arr, irr_arr


# ---------------------------------------------------------------------------
# LMP1 files

def write_lightmaps(path, lightmaps: LightmapSet) -> None:
    with open(path, "wb") as fh:
        fh.write(LMP_MAGIC)
        fh.write(struct.pack("<I", len(lightmaps.entries)))
        for lm in lightmaps.entries:
            fh.write(struct.pack("<III", lm.primitive, lm.width, lm.height))
            fh.write(lm.used.astype(np.uint8).tobytes())
            fh.write(np.ascontiguousarray(lm.irradiance, dtype="<f4").tobytes())


def read_lightmaps(path) -> LightmapSet:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != LMP_MAGIC:
        raise LightmapError(f"{path}: not an LMP1 lightmap file")
    try:
        (count,) = struct.unpack_from("<I", data, 4)
        pos = 8
        entries = []
        for _ in range(count):
            idx, w, h = struct.unpack_from("<III", data, pos)
            pos += 12
            n = w * h
            if pos + n + 12 * n > len(data):
                raise struct.error("truncated entry")
            used = np.frombuffer(data, dtype=np.uint8, count=n, offset=pos).reshape(h, w) != 0
            pos += n
            irr = np.frombuffer(data, dtype="<f4", count=3 * n, offset=pos).reshape(h, w, 3)
            pos += 12 * n
            entries.append(Lightmap(idx, used, irr.astype(np.float32)))
    except struct.error:
        raise LightmapError(f"{path}: truncated lightmap file") from None
    if pos != len(data):
        raise LightmapError(f"{path}: {len(data) - pos} trailing bytes")
    return LightmapSet(tuple(entries))
