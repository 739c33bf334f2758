"""Linear and display image buffers, display encoding, and PFM/PPM files."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np


class ImageFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LinearImage:
    """Linear radiance, shape (height, width, 3), rows top to bottom."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"expected a (height, width, 3) array, got shape {px.shape}")
        if not np.all(np.isfinite(px)) or np.any(px < 0):
            raise ValueError("linear pixels must be finite and non-negative")
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def mean(self) -> float:
        return float(self.pixels.mean())


@dataclass(frozen=True, eq=False)
class DisplayImage:
    """8-bit display-encoded RGB, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"expected a (height, width, 3) array, got shape {px.shape}")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255) or np.any(px != np.round(px)):
                raise ValueError("display pixels must be integers in 0..255")
            px = px.astype(np.uint8)
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def srgb_transfer(v):
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.0031308, 12.92 * v, 1.055 * np.power(v, 1.0 / 2.4) - 0.055)


def encode_display(image: LinearImage, exposure: float = 1.0) -> DisplayImage:
    if not exposure > 0:
        raise ValueError("exposure must be > 0")
    v = np.clip(image.pixels * exposure, 0.0, 1.0)
    # round half away from zero; np.round would round 0.5 to even
    q = np.floor(srgb_transfer(v) * 255.0 + 0.5)
    return DisplayImage(q.astype(np.uint8))


def luma(image: DisplayImage) -> np.ndarray:
    """Rec. 709 luma of the display-encoded values, unquantized."""
    # integer weights then one division: white maps to exactly 255
    px = image.pixels.astype(np.int64)
    return (2126 * px[..., 0] + 7152 * px[..., 1] + 722 * px[..., 2]) / 10000.0


# ---------------------------------------------------------------------------
# files

def _read_token_line(fh) -> bytes:
    line = fh.readline()
    if not line:
        raise ImageFormatError("unexpected end of file in header")
    return line.strip()


def write_pfm(path, image: LinearImage) -> None:
    h, w = image.height, image.width
    data = np.ascontiguousarray(image.pixels[::-1], dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(f"PF\n{w} {h}\n-1.0\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pfm(path) -> LinearImage:
    with open(path, "rb") as fh:
        magic = _read_token_line(fh)
        if magic != b"PF":
            raise ImageFormatError(f"{os.fspath(path)}: not an RGB PFM file")
        try:
            w, h = (int(t) for t in _read_token_line(fh).split())
            scale = float(_read_token_line(fh))
        except ValueError:
            raise ImageFormatError(f"{os.fspath(path)}: malformed PFM header") from None
        dtype = "<f4" if scale < 0 else ">f4"
        raw = fh.read()
    if len(raw) != w * h * 12:
        raise ImageFormatError(f"{os.fspath(path)}: expected {w * h * 12} data bytes, got {len(raw)}")
    px = np.frombuffer(raw, dtype=dtype).reshape(h, w, 3)[::-1].astype(np.float64)
    return LinearImage(px)


def write_ppm(path, image: DisplayImage) -> None:
    with open(path, "wb") as fh:
        fh.write(f"P6\n{image.width} {image.height}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(image.pixels).tobytes())


def read_ppm(path) -> DisplayImage:
    """Read a binary (P6) PPM with maxval 255. Header comments are allowed."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError(f"{os.fspath(path)}: truncated PPM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P6":
        raise ImageFormatError(f"{os.fspath(path)}: not a binary PPM (P6) file")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ImageFormatError(f"{os.fspath(path)}: malformed PPM header") from None
    if maxval != 255:
        raise ImageFormatError(f"{os.fspath(path)}: only maxval 255 is supported")
    pos += 1  # single whitespace after maxval
    body = data[pos:pos + w * h * 3]
    if len(body) != w * h * 3:
        raise ImageFormatError(f"{os.fspath(path)}: expected {w * h * 3} pixel bytes, got {len(body)}")
    return DisplayImage(np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3))
