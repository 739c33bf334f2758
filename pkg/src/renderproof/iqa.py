"""Image quality metrics.

Full-reference: `mse`, `psnr`, `ssim` on luma grids that must be pixel
aligned. No-reference: `nr_features` (sharpness, contrast, colorfulness)
combined into one score by `nr_score`. `zscore` normalizes a score
population. Every metric here reads "higher is better" except `mse`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .render.images import DisplayImage, luma

FR_METRICS = ("psnr", "ssim")
NR_METRICS = ("nrq",)
METRICS = FR_METRICS + NR_METRICS


class MetricPreconditionError(ValueError):
    """Inputs violate a metric's precondition (alignment, minimum size, calibration)."""


@dataclass(frozen=True)
class SsimParams:
    window_size: int = 11
    gaussian_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise ValueError("window_size must be odd and >= 3")
        if min(self.gaussian_sigma, self.k1, self.k2, self.dynamic_range) <= 0:
            raise ValueError("SSIM scalars must be > 0")


@dataclass(frozen=True)
class NrFeatures:
    sharpness: float
    contrast: float
    colorfulness: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.sharpness, self.contrast, self.colorfulness)


@dataclass(frozen=True)
class NrCalibration:
    """Per-feature (mean, stddev) used to put the three features on one scale."""

    sharpness: tuple[float, float]
    contrast: tuple[float, float]
    colorfulness: tuple[float, float]

    def pairs(self):
        return (self.sharpness, self.contrast, self.colorfulness)

    def to_json(self) -> str:
        return json.dumps({k: list(getattr(self, k)) for k in ("sharpness", "contrast", "colorfulness")},
                          indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "NrCalibration":
        doc = json.loads(text)
        try:
            return cls(**{k: (float(doc[k][0]), float(doc[k][1]))
                          for k in ("sharpness", "contrast", "colorfulness")})
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed NR calibration: {exc}") from None


def default_calibration() -> NrCalibration:
    text = resources.files("renderproof").joinpath("data/nr_calibration.json").read_text()
    return NrCalibration.from_json(text)


@dataclass
class MetricScore:
    """One cell of a metric x scene x variant score table."""

    metric_id: str
    scene_id: str
    variant_id: str
    raw: float
    normalized: Optional[float] = None

    def to_dict(self) -> dict:
        return {"metric": self.metric_id, "scene": self.scene_id, "variant": self.variant_id,
                "raw": _json_number(self.raw), "normalized": _json_number(self.normalized)}

    def to_json(self, digits: Optional[int] = None) -> str:
        """One-line JSON object. With `digits`, numbers are written with that many decimals."""
        if digits is None:
            return json.dumps(self.to_dict())

        def num(v):
            if v is None:
                return "null"
            if math.isinf(v):
                return json.dumps("inf" if v > 0 else "-inf")
            return f"{v:.{digits}f}"

        return ('{"metric": %s, "scene": %s, "variant": %s, "raw": %s, "normalized": %s}'
                % (json.dumps(self.metric_id), json.dumps(self.scene_id),
                   json.dumps(self.variant_id), num(self.raw), num(self.normalized)))


def _json_number(v):
    if v is None:
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


# ---------------------------------------------------------------------------
# full reference

def _aligned(ref, test):
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.ndim != 2 or test.ndim != 2:
        raise MetricPreconditionError("expected 2-D luma grids")
    if ref.shape != test.shape:
        raise MetricPreconditionError(
            f"dimension mismatch: reference {ref.shape[1]}x{ref.shape[0]}, "
            f"test {test.shape[1]}x{test.shape[0]}")
    return ref, test


def mse(ref, test) -> float:
    ref, test = _aligned(ref, test)
    return float(np.mean((ref - test) ** 2))


def psnr(ref, test, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give +inf."""
    err = mse(ref, test)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def _valid_filter(img: np.ndarray, g1: np.ndarray) -> np.ndarray:
    # separable Gaussian, interior windows only
    n = g1.size
    h, w = img.shape
    rows = np.zeros((h, w - n + 1))
    for i in range(n):
        rows += g1[i] * img[:, i:i + w - n + 1]
    out = np.zeros((h - n + 1, w - n + 1))
    for i in range(n):
        out += g1[i] * rows[i:i + h - n + 1, :]
    return out


def ssim_map(ref, test, params: SsimParams = SsimParams()) -> np.ndarray:
    ref, test = _aligned(ref, test)
    n = params.window_size
    if ref.shape[0] < n or ref.shape[1] < n:
        raise MetricPreconditionError(
            f"image {ref.shape[1]}x{ref.shape[0]} smaller than the {n}x{n} SSIM window")
    x = np.arange(n) - (n - 1) / 2.0
    g1 = np.exp(-(x * x) / (2.0 * params.gaussian_sigma ** 2))
    g1 /= g1.sum()
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2
    mu_x = _valid_filter(ref, g1)
    mu_y = _valid_filter(test, g1)
    var_x = _valid_filter(ref * ref, g1) - mu_x * mu_x
    var_y = _valid_filter(test * test, g1) - mu_y * mu_y
    cov = _valid_filter(ref * test, g1) - mu_x * mu_y
    return ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / ((mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2))


def ssim(ref, test, params: SsimParams = SsimParams()) -> float:
    """Mean SSIM over all fully interior Gaussian windows."""
    value = float(np.mean(ssim_map(ref, test, params)))
    # rounding in the variance terms can push |value| a hair past 1
    return min(1.0, max(-1.0, value))


# ---------------------------------------------------------------------------
# no reference

def _centred_mean_square(values: np.ndarray) -> float:
    n = values.size
    centred = (values * n - values.sum()).astype(np.float64)
    return float(np.mean(centred * centred)) / (n * n)


def nr_features(image: DisplayImage) -> NrFeatures:
    if image.width < 3 or image.height < 3:
        raise MetricPreconditionError(f"image {image.width}x{image.height} is smaller than 3x3")
    # luma scaled by 10000 is an exact integer; centring in integers keeps
    # flat images at exactly zero sharpness and contrast
    px_i = image.pixels.astype(np.int64)
    y = 2126 * px_i[..., 0] + 7152 * px_i[..., 1] + 722 * px_i[..., 2]
    lap = 4 * y[1:-1, 1:-1] - y[:-2, 1:-1] - y[2:, 1:-1] - y[1:-1, :-2] - y[1:-1, 2:]
    sharpness = _centred_mean_square(lap) / 1e8
    contrast = math.sqrt(_centred_mean_square(y)) / 1e4
    px = image.pixels.astype(np.float64)
    rg = px[..., 0] - px[..., 1]
    yb = 0.5 * (px[..., 0] + px[..., 1]) - px[..., 2]
    sigma = math.sqrt(float(np.var(rg)) + float(np.var(yb)))
    mu = math.sqrt(float(np.mean(rg)) ** 2 + float(np.mean(yb)) ** 2)
    return NrFeatures(sharpness, contrast, sigma + 0.3 * mu)


def nr_score(features: NrFeatures, calibration: NrCalibration) -> float:
    """Mean of the per-feature z-scores under `calibration`."""
    total = 0.0
    for f, (mean, std) in zip(features.as_tuple(), calibration.pairs()):
        if not std > 0:
            raise MetricPreconditionError("calibration stddev must be > 0")
        total += (f - mean) / std
    return total / 3.0


def fit_calibration(features: Sequence[NrFeatures]) -> NrCalibration:
    """Population mean and stddev of each feature over a corpus."""
    if not features:
        raise ValueError("need at least one feature set")
    arr = np.array([f.as_tuple() for f in features], dtype=np.float64)
    mean = arr.mean(axis=0)
    std = arr.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return NrCalibration(*((float(m), float(s)) for m, s in zip(mean, std)))


def zscore(values: Sequence[float]) -> list[float]:
    """(v - mean) / population std; all zeros when every value is equal."""
    if len(values) == 0:
        raise ValueError("zscore of an empty list")
    arr = np.asarray(values, dtype=np.float64)
    # the rounded mean of equal values can differ from them by an ulp
    if np.all(arr == arr[0]):
        return [0.0] * len(arr)
    dev = arr - arr.mean()
    # scale before squaring so tiny or huge spreads neither underflow nor overflow
    dev /= np.max(np.abs(dev))
    return [float(v) for v in dev / np.sqrt(np.mean(dev * dev))]


def score(metric_id: str, test: DisplayImage, reference: Optional[DisplayImage] = None,
          ssim_params: SsimParams = SsimParams(),
          calibration: Optional[NrCalibration] = None) -> float:
    """Raw value of one metric for a display image."""
    if metric_id in FR_METRICS:
        if reference is None:
            raise MetricPreconditionError(f"{metric_id} needs a reference image")
        if metric_id == "psnr":
            return psnr(luma(reference), luma(test))
        return ssim(luma(reference), luma(test), ssim_params)
    if metric_id == "nrq":
        return nr_score(nr_features(test), calibration or default_calibration())
    raise ValueError(f"unknown metric {metric_id!r}")
