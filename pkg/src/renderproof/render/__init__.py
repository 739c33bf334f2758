from .bake import (BakeSettings, Lightmap, LightmapError, LightmapSet, bake_lightmaps,
                   read_lightmaps, write_lightmaps)
from .images import (DisplayImage, ImageFormatError, LinearImage, encode_display, luma, read_pfm,
                     read_ppm, write_pfm, write_ppm)
from .integrator import MODES, InvalidSceneError, RenderSettings, render

__all__ = [
    "BakeSettings", "Lightmap", "LightmapError", "LightmapSet", "bake_lightmaps",
    "read_lightmaps", "write_lightmaps", "DisplayImage", "ImageFormatError", "LinearImage",
    "encode_display", "luma", "read_pfm", "read_ppm", "write_pfm", "write_ppm", "MODES",
    "InvalidSceneError", "RenderSettings", "render",
]
