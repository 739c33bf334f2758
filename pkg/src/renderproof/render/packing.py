"""Flatten a Scene into the contiguous arrays the kernels consume."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..scene import Scene
from . import kernels

class InvalidSceneError(ValueError):
    """The scene violates an invariant the renderer depends on."""


_KIND = {"sphere": kernels.SPHERE, "quad": kernels.QUAD, "triangle": kernels.TRIANGLE}


@dataclass(frozen=True, eq=False)
class PackedScene:
    kind: np.ndarray       # (N,) int64
    geo: np.ndarray        # (N, 18) float64
    prim_mat: np.ndarray   # (N,) int64
    area: np.ndarray       # (N,) float64
    albedo: np.ndarray     # (M, 3)
    roughness: np.ndarray  # (M,)
    specular: np.ndarray   # (M,)
    emission: np.ndarray   # (M, 3)
    em_prims: np.ndarray   # (K,) emissive primitive indices
    em_cdf: np.ndarray     # (K,) cumulative area
    em_total: float
    env: np.ndarray        # (3,)
    camera: np.ndarray     # (4, 3)

    def transport_args(self):
        return (self.kind, self.geo, self.prim_mat, self.albedo, self.roughness, self.specular,
                self.emission, self.em_prims, self.em_cdf, self.em_total, self.env)


def planar_edges(prim):
    """Origin and the two parallelogram edges of a quad or triangle."""
    if prim.kind == "quad":
        return tuple(np.asarray(g, dtype=np.float64) for g in prim.geometry)
    p0, p1, p2 = (np.asarray(g, dtype=np.float64) for g in prim.geometry)
    return p0, p1 - p0, p2 - p0


def camera_frame(scene: Scene) -> np.ndarray:
    cam = scene.camera
    pos = np.asarray(cam.position, dtype=np.float64)
    fwd = np.asarray(cam.look_at, dtype=np.float64) - pos
    fwd /= np.linalg.norm(fwd)
    right = np.cross(fwd, np.asarray(cam.up, dtype=np.float64))
    right /= np.linalg.norm(right)
    up = np.cross(right, fwd)
    half = math.tan(math.radians(cam.vertical_fov) / 2.0)
    aspect = cam.width / cam.height
    return np.stack([pos, right * half * aspect, up * half, fwd])


def pack_scene(scene: Scene) -> PackedScene:
    n = len(scene.primitives)
    kind = np.zeros(n, dtype=np.int64)
    geo = np.zeros((n, 18))
    area = np.zeros(n)
    prim_mat = np.zeros(n, dtype=np.int64)
    index = {m.name: i for i, m in enumerate(scene.materials)}
    for i, p in enumerate(scene.primitives):
        kind[i] = _KIND[p.kind]
        prim_mat[i] = index[p.material]
        if p.kind == "sphere":
            center, radius = p.geometry
            geo[i, 0:3] = center
            geo[i, 3] = radius
            area[i] = 4.0 * math.pi * radius * radius
            continue
        o, eu, ev = planar_edges(p)
        nn = np.cross(eu, ev)
        nn2 = float(nn @ nn)
        geo[i, 0:3] = o
        geo[i, 3:6] = eu
        geo[i, 6:9] = ev
        geo[i, 9:12] = nn
        geo[i, 12:15] = nn / nn2
        geo[i, 15:18] = nn / math.sqrt(nn2)
        area[i] = math.sqrt(nn2) * (0.5 if p.kind == "triangle" else 1.0)

    albedo = np.array([m.albedo for m in scene.materials], dtype=np.float64).reshape(-1, 3)
    emission = np.array([m.emission for m in scene.materials], dtype=np.float64).reshape(-1, 3)
    roughness = np.array([m.roughness for m in scene.materials], dtype=np.float64)
    specular = np.array([m.specular for m in scene.materials], dtype=np.float64)

    emissive = emission.max(axis=1) > 0 if len(emission) else np.zeros(0, dtype=bool)
    em_prims = np.array([i for i in range(n) if emissive[prim_mat[i]]], dtype=np.int64)
    em_cdf = np.cumsum(area[em_prims]) if len(em_prims) else np.zeros(0)
    em_total = float(em_cdf[-1]) if len(em_cdf) else 0.0

    return PackedScene(kind=kind, geo=geo, prim_mat=prim_mat, area=area, albedo=albedo,
                       roughness=roughness, specular=specular, emission=emission,
                       em_prims=em_prims, em_cdf=em_cdf, em_total=em_total,
                       env=np.asarray(scene.environment_radiance, dtype=np.float64),
                       camera=camera_frame(scene))
