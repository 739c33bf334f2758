"""Brute-force reference implementations used as test oracles."""
import math

import numpy as np


def brute_mse(a, b):
    total = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            total += (float(a[i, j]) - float(b[i, j])) ** 2
    return total / a.size


def brute_psnr(a, b):
    e = brute_mse(a, b)
    return math.inf if e == 0 else 10 * math.log10(255.0 ** 2 / e)


def brute_ssim(a, b, n=11, sigma=1.5, k1=0.01, k2=0.03, peak=255.0):
    # direct 2-D weighted sums per window, two-pass variances
    r = np.arange(n) - (n - 1) / 2
    w = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2 * sigma * sigma))
    w /= w.sum()
    c1, c2 = (k1 * peak) ** 2, (k2 * peak) ** 2
    vals = []
    for i in range(a.shape[0] - n + 1):
        for j in range(a.shape[1] - n + 1):
            x = a[i:i + n, j:j + n]
            y = b[i:i + n, j:j + n]
            mx, my = (w * x).sum(), (w * y).sum()
            vx = (w * (x - mx) ** 2).sum()
            vy = (w * (y - my) ** 2).sum()
            cxy = (w * (x - mx) * (y - my)).sum()
            vals.append((2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


def brute_features(rgb):
    rgb = rgb.astype(float)
    h, w, _ = rgb.shape
    y = [[0.2126 * rgb[i, j, 0] + 0.7152 * rgb[i, j, 1] + 0.0722 * rgb[i, j, 2] for j in range(w)] for i in range(h)]
    lap = [4 * y[i][j] - y[i - 1][j] - y[i + 1][j] - y[i][j - 1] - y[i][j + 1]
           for i in range(1, h - 1) for j in range(1, w - 1)]
    m = sum(lap) / len(lap)
    sharp = sum((v - m) ** 2 for v in lap) / len(lap)
    flat = [v for row in y for v in row]
    my = sum(flat) / len(flat)
    contrast = math.sqrt(sum((v - my) ** 2 for v in flat) / len(flat))
    rg = [rgb[i, j, 0] - rgb[i, j, 1] for i in range(h) for j in range(w)]
    yb = [0.5 * (rgb[i, j, 0] + rgb[i, j, 1]) - rgb[i, j, 2] for i in range(h) for j in range(w)]

    def mean(v):
        return sum(v) / len(v)

    def var(v):
        mu = mean(v)
        return sum((t - mu) ** 2 for t in v) / len(v)

    colorful = math.sqrt(var(rg) + var(yb)) + 0.3 * math.sqrt(mean(rg) ** 2 + mean(yb) ** 2)
    return sharp, contrast, colorful


def random_pairs(count, shape=(16, 16), seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        a = rng.integers(0, 256, shape).astype(float)
        b = np.clip(a + rng.normal(0, rng.uniform(1, 60), shape), 0, 255).round()
        yield a, b
