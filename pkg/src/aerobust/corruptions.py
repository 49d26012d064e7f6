"""The 19 corruption kinds, grouped as noise / blur / weather / digital,
each at severities 1..5.

Everything is driven by a parameter schedule (see
:mod:`aerobust.schedule`) and an explicit seed, so
``corrupt(image, spec)`` is a pure function: same image, same spec,
same schedule, same bytes out.  Per-kind functions take a float64 image
in [0, 255] and return the same; quantization happens once in
:func:`corrupt`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import raster
from .errors import ParameterError
from .schedule import (
    CORRUPTION_CATEGORIES,
    CORRUPTION_KINDS,
    SEVERITIES,
    SeveritySchedule,
    default_schedule,
)

__all__ = [
    "CorruptionSpec",
    "corrupt",
    "psnr",
    "CORRUPTION_KINDS",
    "CORRUPTION_CATEGORIES",
]


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    severity: int
    seed: int


# ---------------------------------------------------------------------------
# noise

def _gaussian_noise(x, p, rng):
    noise = rng.normal(0.0, p["sigma"], x.shape)
    return x + noise * 255.0


def _shot_noise(x, p, rng):
    lam = float(p["lam"])
    return rng.poisson(x / 255.0 * lam) / lam * 255.0


def _impulse_noise(x, p, rng):
    # whole-pixel salt or pepper, equiprobable
    h, w = x.shape[:2]
    hit = rng.random((h, w)) < p["fraction"]
    salt = rng.random((h, w)) < 0.5
    out = x.copy()
    out[hit & salt] = 255.0
    out[hit & ~salt] = 0.0
    return out


def _speckle_noise(x, p, rng):
    noise = rng.normal(0.0, p["sigma"], x.shape)
    return x * (1.0 + noise)


# ---------------------------------------------------------------------------
# blur

def _disk_kernel(radius: int, alias_blur: float) -> np.ndarray:
    extent = max(8, int(radius))
    ax = np.arange(-extent, extent + 1, dtype=np.float64)
    xx, yy = np.meshgrid(ax, ax)
    k = ((xx ** 2 + yy ** 2) <= radius ** 2).astype(np.float64)
    k /= k.sum()
    if alias_blur > 0:
        k = ndimage.gaussian_filter(k, alias_blur, mode="constant")
    return k / k.sum()


def _defocus_blur(x, p, rng):
    kernel = _disk_kernel(int(p["radius"]), float(p["alias_blur"]))
    return raster.convolve2d(x, kernel, border="replicate")


def _swap_sequential_py(img, disp, delta):
    h, w = img.shape[:2]
    iters, n_i, n_j = disp.shape[:3]
    for t in range(iters):
        for a in range(n_i):
            i = h - delta - 1 - a
            for b in range(n_j):
                j = w - delta - 1 - b
                ii = i + disp[t, a, b, 0]
                jj = j + disp[t, a, b, 1]
                for c in range(img.shape[2]):
                    tmp = img[i, j, c]
                    img[i, j, c] = img[ii, jj, c]
                    img[ii, jj, c] = tmp


try:  # optional compiled fast path; identical arithmetic either way
    from numba import njit

    _swap_sequential = njit(cache=True)(_swap_sequential_py)
except ImportError:  # pragma: no cover
    _swap_sequential = _swap_sequential_py


def _glass_blur(x, p, rng):
    delta = int(p["max_delta"])
    iters = int(p["iterations"])
    h, w = x.shape[:2]
    n_i = max(h - 2 * delta, 0)
    n_j = max(w - 2 * delta, 0)
    disp = rng.integers(-delta, delta, size=(iters, n_i, n_j, 2), endpoint=True)
    out = x.copy()
    if n_i and n_j:
        _swap_sequential(out, disp, delta)
    return raster.gaussian_filter(out, float(p["sigma"]))


def _line_kernel(radius: int, sigma: float, angle_deg: float) -> np.ndarray:
    """One-sided blur line: length radius+1, Gaussian-weighted, 1 px wide."""
    size = 2 * radius + 1
    k = np.zeros((size, size), dtype=np.float64)
    theta = np.radians(angle_deg)
    dx, dy = np.cos(theta), np.sin(theta)
    for i in range(radius + 1):
        px = radius + int(round(i * dx))
        py = radius + int(round(i * dy))
        weight = np.exp(-(i * i) / (2.0 * sigma * sigma)) if sigma > 0 else 1.0
        k[py, px] += weight
    return k / k.sum()


def _motion_blur(x, p, rng):
    angle = rng.uniform(-45.0, 45.0)
    kernel = _line_kernel(int(p["radius"]), float(p["sigma"]), angle)
    return raster.convolve2d(x, kernel, border="replicate")


def _center_zoom(arr: np.ndarray, factor: float) -> np.ndarray:
    """Scale up by factor (bilinear) and crop the center back to input size."""
    h, w = arr.shape[:2]
    zh = max(h, int(round(h * factor)))
    zw = max(w, int(round(w * factor)))
    zoomed = raster.resize(arr, zw, zh, "bilinear")
    y0 = (zh - h) // 2
    x0 = (zw - w) // 2
    return zoomed[y0:y0 + h, x0:x0 + w]


def _zoom_blur(x, p, rng):
    step = float(p["step"])
    factors = np.arange(1.0, float(p["z_max"]) + step / 2.0, step)
    acc = np.zeros_like(x)
    for z in factors:
        acc += _center_zoom(x, z)
    return acc / len(factors)


def _gaussian_blur(x, p, rng):
    return raster.gaussian_filter(x, float(p["sigma"]))


# ---------------------------------------------------------------------------
# weather

def _snow(x, p, rng):
    h, w = x.shape[:2]
    layer = rng.normal(p["layer_mean"], p["layer_std"], (h, w))
    angle = rng.uniform(-135.0, -45.0)
    layer = _center_zoom(layer, float(p["zoom"]))
    layer[layer < p["threshold"]] = 0.0
    kernel = _line_kernel(int(p["blur_radius"]), float(p["blur_sigma"]), angle)
    layer = ndimage.convolve(layer, kernel, mode="nearest")
    layer = np.clip(layer, 0.0, 1.0)
    x01 = x / 255.0
    gray = 0.299 * x01[..., 0] + 0.587 * x01[..., 1] + 0.114 * x01[..., 2]
    whitened = np.maximum(x01, gray[..., None] * 1.5 + 0.5)
    blend = float(p["blend"])
    base = blend * x01 + (1.0 - blend) * whitened
    out = base + layer[..., None] + np.rot90(layer, 2)[..., None]
    return np.clip(out, 0.0, 1.0) * 255.0


def _frost_texture(size: int, rng) -> np.ndarray:
    """Procedural crystalline texture in [0,1]: bright field with ridged
    fractal veins, like frost creeping over glass."""
    f = raster.fractal_noise(size, size, 1.7, rng)
    ridges = (1.0 - np.abs(2.0 * f - 1.0)) ** 3
    return 0.4 + 0.6 * (0.65 * ridges + 0.35 * f)


def _frost(x, p, rng):
    h, w = x.shape[:2]
    size = raster._next_pow2(max(h, w) + 1)
    tex = _frost_texture(size, rng) * 255.0
    y0 = int(rng.integers(0, size - h + 1))
    x0 = int(rng.integers(0, size - w + 1))
    crop = tex[y0:y0 + h, x0:x0 + w]
    return p["w_img"] * x + p["w_frost"] * crop[..., None]


def _fog(x, p, rng):
    h, w = x.shape[:2]
    strength = float(p["strength"])
    veil = raster.fractal_noise(w, h, float(p["decay"]), rng)
    # fix the heightmap's mean and contrast so severity alone sets the damage
    sd = veil.std()
    if sd > 0:
        veil = np.clip(0.5 + (veil - veil.mean()) * (0.16 / sd), 0.0, 1.0)
    x01 = x / 255.0
    mx = x01.max()
    out = x01 + strength * veil[..., None]
    return np.clip(out * mx / (mx + strength), 0.0, 1.0) * 255.0


def _brightness(x, p, rng):
    hsv = raster.rgb_to_hsv(x)
    hsv[..., 2] = np.clip(hsv[..., 2] + p["delta"], 0.0, 1.0)
    return raster.hsv_to_rgb(hsv)


_WATER_COLOR = np.array([175.0, 238.0, 238.0]) / 255.0
_MUD_COLOR = np.array([63.0, 42.0, 20.0]) / 255.0


def _spatter(x, p, rng):
    h, w = x.shape[:2]
    layer = rng.normal(p["loc"], p["scale"], (h, w))
    layer = ndimage.gaussian_filter(layer, float(p["blur_sigma"]), mode="nearest")
    thr = float(p["threshold"])
    strength = float(p["strength"])
    x01 = x / 255.0
    if p["mode"] == "water":
        m = np.where(layer >= thr, layer - thr, 0.0)
        peak = m.max()
        if peak > 0:
            m /= peak
        m *= strength
        out = x01 + m[..., None] * _WATER_COLOR
    else:  # mud: opaque blobs replacing the underlying pixels
        m = (layer >= thr).astype(np.float64)
        m = ndimage.gaussian_filter(m, strength, mode="nearest")
        m[m < 0.8] = 0.0
        m = m[..., None]
        out = x01 * (1.0 - m) + m * _MUD_COLOR
    return np.clip(out, 0.0, 1.0) * 255.0


# ---------------------------------------------------------------------------
# digital

def _contrast(x, p, rng):
    means = x.mean(axis=(0, 1), keepdims=True)
    return (x - means) * p["factor"] + means


def _elastic_transform(x, p, rng):
    h, w = x.shape[:2]
    side = min(h, w)
    alpha = p["alpha"] * side
    sigma = max(p["sigma"] * side, 0.5)
    affine = p["affine"] * side
    # small random affine first, then the smooth displacement field
    third = side // 3
    cy, cx = h / 2.0, w / 2.0
    src = np.array(
        [[cx - third, cy - third], [cx + third, cy - third], [cx - third, cy + third]],
        dtype=np.float64,
    )
    dst = src + rng.uniform(-affine, affine, (3, 2))
    dx = ndimage.gaussian_filter(rng.uniform(-1, 1, (h, w)), sigma, mode="reflect") * alpha
    dy = ndimage.gaussian_filter(rng.uniform(-1, 1, (h, w)), sigma, mode="reflect") * alpha
    # affine sending each warped point back to its source location
    ones = np.ones((3, 1))
    mat = np.linalg.solve(np.hstack([dst, ones]), np.hstack([src, ones])).T[:2]
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    sx = mat[0, 0] * xx + mat[0, 1] * yy + mat[0, 2] + dx
    sy = mat[1, 0] * xx + mat[1, 1] * yy + mat[1, 2] + dy
    out = np.empty_like(x)
    for c in range(x.shape[2]):
        out[..., c] = ndimage.map_coordinates(x[..., c], [sy, sx], order=1, mode="reflect")
    return out


def _pixelate(x, p, rng):
    h, w = x.shape[:2]
    s = float(p["scale"])
    nh = max(1, int(round(h * s)))
    nw = max(1, int(round(w * s)))
    if (nh, nw) == (h, w):
        return x.copy()
    down = raster.resize(x, nw, nh, "box")
    return raster.resize(down, w, h, "nearest")


def _jpeg_compression(x, p, rng):
    q = int(p["quality"])
    data = raster.encode_image(raster.quantize(x), "jpeg", q)
    return raster.decode_image(data).astype(np.float64)


def _saturate(x, p, rng):
    hsv = raster.rgb_to_hsv(x)
    hsv[..., 1] = np.clip(hsv[..., 1] * p["factor"] + p["offset"], 0.0, 1.0)
    return raster.hsv_to_rgb(hsv)


_FUNCS = {
    "gaussian_noise": _gaussian_noise,
    "shot_noise": _shot_noise,
    "impulse_noise": _impulse_noise,
    "speckle_noise": _speckle_noise,
    "defocus_blur": _defocus_blur,
    "glass_blur": _glass_blur,
    "motion_blur": _motion_blur,
    "zoom_blur": _zoom_blur,
    "gaussian_blur": _gaussian_blur,
    "snow": _snow,
    "frost": _frost,
    "fog": _fog,
    "brightness": _brightness,
    "spatter": _spatter,
    "contrast": _contrast,
    "elastic_transform": _elastic_transform,
    "pixelate": _pixelate,
    "jpeg_compression": _jpeg_compression,
    "saturate": _saturate,
}

assert set(_FUNCS) == set(CORRUPTION_KINDS)


def corrupt(
    image: np.ndarray,
    spec: CorruptionSpec,
    schedule: SeveritySchedule | None = None,
) -> np.ndarray:
    """Apply one corruption deterministically; returns a new uint8 image."""
    arr = raster.ensure_rgb(image)
    if spec.kind not in _FUNCS:
        raise ParameterError(
            f"unknown corruption kind {spec.kind!r}; valid: {', '.join(CORRUPTION_KINDS)}"
        )
    if spec.severity not in SEVERITIES:
        raise ParameterError(f"severity {spec.severity} outside 1..5")
    sched = schedule if schedule is not None else default_schedule()
    params = sched.for_spec(spec.kind, spec.severity)
    rng = raster.rng_stream(spec.seed)
    out = _FUNCS[spec.kind](arr.astype(np.float64), params, rng)
    return raster.quantize(out)


def psnr(reference: np.ndarray, test: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; inf for identical images."""
    a = np.asarray(reference, dtype=np.float64)
    b = np.asarray(test, dtype=np.float64)
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(255.0 ** 2 / mse))
