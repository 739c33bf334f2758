import json
import math

import numpy as np
import pytest

from renderproof.iqa import (MetricPreconditionError, MetricScore, NrCalibration, NrFeatures, SsimParams,
                             default_calibration, fit_calibration, mse, nr_features, nr_score, psnr,
                             score, ssim, ssim_map, zscore)
from renderproof.render import DisplayImage, RenderSettings, encode_display, render
from renderproof.scene import load_scene

from conftest import BUNDLED_SCENES, SCENES, at_resolution
from oracles import brute_features, brute_mse, brute_psnr, brute_ssim, random_pairs


def _display(rgb):
    return DisplayImage(np.asarray(rgb, dtype=np.uint8))


# -- full reference ------------------------------------------------------------

def test_mse_examples():
    a = np.full((4, 4), 100.0)
    assert mse(a, a) == 0.0
    assert mse(a, np.full((4, 4), 116.0)) == 256.0
    rng = np.random.default_rng(3)
    x, y = rng.random((8, 8)) * 255, rng.random((8, 8)) * 255
    assert mse(x, y) == pytest.approx(brute_mse(x, y), abs=1e-9)


def test_psnr_examples():
    a = np.full((4, 4), 100.0)
    assert psnr(a, a) == math.inf
    assert psnr(a, np.full((4, 4), 116.0)) == pytest.approx(24.0484, abs=1e-4)


def test_fr_metrics_match_brute_force():
    for a, b in random_pairs(100):
        assert abs(mse(a, b) - brute_mse(a, b)) < 1e-6
        assert abs(psnr(a, b) - brute_psnr(a, b)) < 1e-6
        assert abs(ssim(a, b) - brute_ssim(a, b)) < 1e-6


def test_psnr_decreases_with_mse():
    rng = np.random.default_rng(5)
    a = rng.integers(0, 256, (16, 16)).astype(float)
    prev = math.inf
    for sigma in (1, 2, 4, 8, 16, 32):
        b = a + rng.normal(0, sigma, a.shape)
        p = psnr(a, b)
        assert p < prev
        prev = p


def test_ssim_identity_symmetry_range():
    for a, b in random_pairs(20, seed=9):
        assert ssim(a, a) == pytest.approx(1.0, abs=1e-9)
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-9)
        assert -1.0 <= ssim(a, b) <= 1.0
        assert -1.0 <= ssim(a, 255 - a) <= 1.0


def test_ssim_constant_closed_form():
    value = ssim(np.full((16, 16), 100.0), np.full((16, 16), 200.0))
    c1 = (0.01 * 255) ** 2
    closed = (2 * 100 * 200 + c1) / (100 ** 2 + 200 ** 2 + c1)
    assert closed == 40006.5025 / 50006.5025
    assert abs(value - closed) < 1e-6
    assert round(value, 5) == 0.80003


def test_ssim_map_shape_and_params():
    a = np.zeros((20, 30))
    assert ssim_map(a, a).shape == (10, 20)
    assert ssim_map(a, a, SsimParams(window_size=7)).shape == (14, 24)
    with pytest.raises(ValueError):
        SsimParams(window_size=8)


def test_fr_preconditions():
    with pytest.raises(MetricPreconditionError, match="dimension mismatch"):
        mse(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(MetricPreconditionError, match="window"):
        ssim(np.zeros((8, 8)), np.zeros((8, 8)))


# -- no reference --------------------------------------------------------------

def test_uniform_image_features():
    f = nr_features(_display(np.full((8, 8, 3), 120)))
    assert f.sharpness == 0.0 and f.contrast == 0.0 and f.colorfulness == 0.0
    tinted = nr_features(_display(np.broadcast_to([200, 40, 10], (8, 8, 3))))
    assert tinted.sharpness == 0.0 and tinted.contrast == 0.0 and tinted.colorfulness > 0


def test_checkerboard_matches_brute_force():
    board = (np.indices((8, 8)).sum(axis=0) % 2) * 255
    rgb = np.repeat(board[..., None], 3, axis=2)
    f = nr_features(_display(rgb))
    assert f.as_tuple() == pytest.approx(brute_features(rgb), abs=1e-9)


def test_random_images_match_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(5):
        rgb = rng.integers(0, 256, (9, 7, 3))
        assert nr_features(_display(rgb)).as_tuple() == pytest.approx(brute_features(rgb), rel=1e-9, abs=1e-9)


def test_nr_features_translation_invariance():
    rng = np.random.default_rng(2)
    base = rng.integers(20, 236, (12, 12, 3))
    f0 = nr_features(_display(base))
    for k in range(-10, 11):
        fk = nr_features(_display(base + k))
        assert fk.sharpness == pytest.approx(f0.sharpness, rel=1e-6)
        assert fk.contrast == pytest.approx(f0.contrast, rel=1e-6)


def _blur(rgb):
    p = np.pad(rgb.astype(float), ((1, 1), (1, 1), (0, 0)), mode="edge")
    k = (1, 2, 1)
    rows = sum(k[i] * p[i:i + rgb.shape[0], :, :] for i in range(3)) / 4
    out = sum(k[j] * rows[:, j:j + rgb.shape[1], :] for j in range(3)) / 4
    return np.clip(np.floor(out + 0.5), 0, 255)


def test_blur_never_sharpens_bundled_renders():
    for name in BUNDLED_SCENES:
        scene = at_resolution(load_scene(SCENES / f"{name}.json"), 48, 36)
        rgb = encode_display(render(scene, RenderSettings("gi", 8, 3, 1))).pixels
        assert nr_features(_display(_blur(rgb))).sharpness <= nr_features(_display(rgb)).sharpness


def test_nr_features_need_3x3():
    with pytest.raises(MetricPreconditionError):
        nr_features(_display(np.zeros((2, 5, 3))))


def test_nr_score_examples():
    cal = NrCalibration((100.0, 10.0), (40.0, 5.0), (20.0, 2.0))
    assert nr_score(NrFeatures(100.0, 40.0, 20.0), cal) == 0.0
    assert nr_score(NrFeatures(110.0, 45.0, 22.0), cal) == pytest.approx(1.0)
    assert nr_score(NrFeatures(110.0, 35.0, 20.0), cal) == pytest.approx(0.0)
    with pytest.raises(MetricPreconditionError):
        nr_score(NrFeatures(1, 1, 1), NrCalibration((0, 0), (0, 1), (0, 1)))


def test_calibration_round_trip_and_fit():
    feats = [NrFeatures(1, 2, 3), NrFeatures(3, 2, 5)]
    cal = fit_calibration(feats)
    assert cal.sharpness == (2.0, 1.0)
    assert cal.contrast == (2.0, 1.0)  # zero spread falls back to 1
    assert NrCalibration.from_json(cal.to_json()) == cal
    with pytest.raises(ValueError, match="malformed"):
        NrCalibration.from_json('{"sharpness": [1]}')


def test_bundled_calibration_loads():
    cal = default_calibration()
    assert all(std > 0 for _, std in cal.pairs())


# -- normalization -------------------------------------------------------------

def test_zscore_examples():
    assert zscore([5, 5, 5]) == [0.0, 0.0, 0.0]
    assert zscore([1, 2, 3]) == pytest.approx([-1.22474, 0.0, 1.22474], abs=1e-5)
    assert zscore([7.5]) == [0.0]
    with pytest.raises(ValueError):
        zscore([])


# -- score records -------------------------------------------------------------

def test_score_dispatch():
    rng = np.random.default_rng(4)
    a = _display(rng.integers(0, 256, (16, 16, 3)))
    assert score("psnr", a, a) == math.inf
    assert score("ssim", a, a) == pytest.approx(1.0)
    assert math.isfinite(score("nrq", a))
    with pytest.raises(MetricPreconditionError):
        score("psnr", a)
    with pytest.raises(ValueError, match="unknown metric"):
        score("lpips", a, a)


def test_metric_score_serialization():
    s = MetricScore("psnr", "bay", "improved", math.inf)
    assert json.loads(s.to_json()) == {"metric": "psnr", "scene": "bay", "variant": "improved",
                                       "raw": "inf", "normalized": None}
    t = MetricScore("ssim", "bay", "improved", 0.912345, -0.5)
    assert t.to_json(4) == ('{"metric": "ssim", "scene": "bay", "variant": "improved", '
                            '"raw": 0.9123, "normalized": -0.5000}')
