"""Low-level raster utilities: codecs, resampling, convolution, color
space conversion, seeded randomness, and fractal noise.

Images are numpy arrays.  Storage form is uint8 with shape (H, W, 3);
processing form is float64 in [0, 255].  Quantization back to uint8
(round half up, then clamp) happens once, at the end of a pipeline,
via :func:`quantize`.

Randomness is always explicit: callers derive a 64-bit seed with
:func:`derive_seed` (FNV-1a over the lineage string) and turn it into a
generator with :func:`rng_stream`.  The generator is numpy's Philox
counter-based bit generator, which is platform-stable, so identical
lineage gives identical pixels on any machine.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import DecodeError, ParameterError

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
_U64 = 1 << 64


def derive_seed(global_seed: int, image_id: str, kind: str, severity: int) -> int:
    """FNV-1a 64-bit hash of "global_seed|image_id|kind|severity"."""
    text = f"{global_seed}|{image_id}|{kind}|{severity}"
    h = FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * FNV_PRIME) % _U64
    return h


def rng_stream(seed: int) -> np.random.Generator:
    """Deterministic generator for a derived seed (Philox, counter-based)."""
    return np.random.Generator(np.random.Philox(key=seed % _U64))


def quantize(arr: np.ndarray) -> np.ndarray:
    """Real [0,255] values to uint8: round half up, clamp."""
    return np.clip(np.floor(np.asarray(arr, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def to_float(arr: np.ndarray) -> np.ndarray:
    return np.asarray(arr, dtype=np.float64)


def ensure_rgb(arr: np.ndarray) -> np.ndarray:
    """Validate an (H, W, 3) uint8 array, returning it unchanged."""
    a = np.asarray(arr)
    if a.ndim != 3 or a.shape[2] != 3:
        raise DecodeError(f"expected an (H, W, 3) array, got shape {a.shape}")
    if a.dtype != np.uint8:
        raise DecodeError(f"expected uint8 pixel data, got dtype {a.dtype}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DecodeError(f"empty image with shape {a.shape}")
    return a


def decode_image(data: bytes | str | Path, format: str | None = None) -> np.ndarray:
    """Decode PNG or JPEG bytes (or a file path) to an (H, W, 3) uint8 array.

    Grayscale sources are replicated to three channels; palette and alpha
    images are converted to plain RGB.
    """
    try:
        if isinstance(data, (str, Path)):
            img = Image.open(data)
        else:
            img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc
    fmt = (img.format or "").lower()
    if format is not None:
        want = {"jpg": "jpeg"}.get(format.lower(), format.lower())
        if fmt != want:
            raise DecodeError(f"expected {want} data, found {img.format or 'unknown'}")
    if img.mode != "RGB":
        img = img.convert("RGB")
    return np.asarray(img, dtype=np.uint8)


def encode_image(image: np.ndarray, format: str, quality: int | None = None) -> bytes:
    """Encode an (H, W, 3) uint8 array as PNG (lossless) or JPEG."""
    arr = ensure_rgb(image)
    fmt = format.lower()
    if fmt not in ("png", "jpeg", "jpg"):
        raise ParameterError(f"unsupported format {format!r}")
    if fmt in ("jpeg", "jpg"):
        if quality is None:
            raise ParameterError("jpeg encoding requires a quality in 1..100")
        if not 1 <= quality <= 100:
            raise ParameterError(f"jpeg quality {quality} outside 1..100")
    elif quality is not None:
        raise ParameterError("quality only applies to jpeg")
    buf = io.BytesIO()
    pil = Image.fromarray(arr, mode="RGB")
    if fmt == "png":
        pil.save(buf, format="PNG")
    else:
        pil.save(buf, format="JPEG", quality=quality)
    return buf.getvalue()


def load_image(path: str | Path) -> np.ndarray:
    return decode_image(Path(path))


def save_image(path: str | Path, image: np.ndarray, quality: int | None = None) -> None:
    """Write uint8 RGB to a file; format chosen by extension."""
    p = Path(path)
    ext = p.suffix.lower().lstrip(".")
    fmt = {"jpg": "jpeg", "jpeg": "jpeg", "png": "png"}.get(ext)
    if fmt is None:
        raise ParameterError(f"unsupported image extension {p.suffix!r}")
    if fmt == "jpeg" and quality is None:
        quality = 95
    p.write_bytes(encode_image(image, fmt, quality))


# ---------------------------------------------------------------------------
# resampling

def _nearest_indices(n_in: int, n_out: int) -> np.ndarray:
    # half-pixel centers, matching the common convention
    idx = np.floor((np.arange(n_out) + 0.5) * (n_in / n_out)).astype(np.int64)
    return np.clip(idx, 0, n_in - 1)


def _bilinear_axis(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    i0 = np.floor(src).astype(np.int64)
    frac = src - i0
    i1 = np.clip(i0 + 1, 0, n_in - 1)
    i0 = np.clip(i0, 0, n_in - 1)
    return i0, i1, frac


def _box_weights(n_in: int, n_out: int) -> np.ndarray:
    """Area-overlap weight matrix (n_out, n_in); rows sum to 1."""
    w = np.zeros((n_out, n_in), dtype=np.float64)
    scale = n_in / n_out
    for o in range(n_out):
        a = o * scale
        b = (o + 1) * scale
        i0 = int(np.floor(a))
        i1 = min(int(np.ceil(b)), n_in)
        for i in range(i0, i1):
            w[o, i] = min(b, i + 1) - max(a, i)
    w /= w.sum(axis=1, keepdims=True)
    return w


def resize(image: np.ndarray, new_w: int, new_h: int, filter: str = "bilinear") -> np.ndarray:
    """Resample to (new_h, new_w) with nearest, bilinear, or box filtering.

    uint8 input gives quantized uint8 output; float input stays float64.
    """
    if new_w < 1 or new_h < 1:
        raise ParameterError(f"target size {new_w}x{new_h} must be at least 1x1")
    if filter not in ("nearest", "bilinear", "box"):
        raise ParameterError(f"unknown resize filter {filter!r}")
    arr = np.asarray(image)
    was_int = arr.dtype == np.uint8
    x = arr.astype(np.float64)
    h, w = x.shape[:2]
    if (h, w) == (new_h, new_w):
        return arr.copy()
    if filter == "nearest":
        yi = _nearest_indices(h, new_h)
        xi = _nearest_indices(w, new_w)
        out = x[np.ix_(yi, xi)]
    elif filter == "bilinear":
        y0, y1, fy = _bilinear_axis(h, new_h)
        x0, x1, fx = _bilinear_axis(w, new_w)
        fy = fy.reshape(-1, 1) if x.ndim == 2 else fy.reshape(-1, 1, 1)
        fxs = fx.reshape(1, -1) if x.ndim == 2 else fx.reshape(1, -1, 1)
        top = x[np.ix_(y0, x0)] * (1 - fxs) + x[np.ix_(y0, x1)] * fxs
        bot = x[np.ix_(y1, x0)] * (1 - fxs) + x[np.ix_(y1, x1)] * fxs
        out = top * (1 - fy) + bot * fy
    else:
        wy = _box_weights(h, new_h)
        wx = _box_weights(w, new_w)
        out = np.tensordot(wy, x, axes=(1, 0))
        out = np.tensordot(wx, out, axes=(1, 1))
        out = np.moveaxis(out, 0, 1)
    return quantize(out) if was_int else out


# ---------------------------------------------------------------------------
# filtering

_BORDER_MODES = {"replicate": "nearest", "reflect": "reflect"}


def convolve2d(image: np.ndarray, kernel: np.ndarray, border: str = "replicate") -> np.ndarray:
    """Per-channel 2-D convolution with an odd-sized kernel.

    Clamping only happens for uint8 input, at the final quantization.
    """
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
        raise ParameterError(f"kernel must be 2-D with odd dimensions, got {k.shape}")
    if border not in _BORDER_MODES:
        raise ParameterError(f"unknown border mode {border!r}")
    mode = _BORDER_MODES[border]
    arr = np.asarray(image)
    was_int = arr.dtype == np.uint8
    x = arr.astype(np.float64)
    if x.ndim == 2:
        out = ndimage.convolve(x, k, mode=mode)
    else:
        out = np.stack(
            [ndimage.convolve(x[..., c], k, mode=mode) for c in range(x.shape[2])], axis=-1
        )
    return quantize(out) if was_int else out


def gaussian_filter(image: np.ndarray, sigma: float) -> np.ndarray:
    """Per-channel Gaussian smoothing, kernel radius 3 sigma, replicate border."""
    x = np.asarray(image, dtype=np.float64)
    if sigma <= 0:
        return x.copy()
    if x.ndim == 2:
        return ndimage.gaussian_filter(x, sigma, truncate=3.0, mode="nearest")
    return ndimage.gaussian_filter(x, (sigma, sigma, 0), truncate=3.0, mode="nearest")


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 2-D Gaussian kernel, radius 3 sigma (at least 1)."""
    radius = max(1, int(round(3 * sigma)))
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(ax ** 2) / (2 * sigma ** 2))
    k = np.outer(g, g)
    return k / k.sum()


# ---------------------------------------------------------------------------
# color

def rgb_to_hsv(image: np.ndarray) -> np.ndarray:
    """RGB [0,255] to HSV with H in [0,360), S and V in [0,1]."""
    x = np.asarray(image, dtype=np.float64) / 255.0
    r, g, b = x[..., 0], x[..., 1], x[..., 2]
    v = np.max(x, axis=-1)
    c = v - np.min(x, axis=-1)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    safe = np.where(c > 0, c, 1.0)
    h = np.zeros_like(v)
    rm = (c > 0) & (v == r)
    gm = (c > 0) & (v == g) & ~rm
    bm = (c > 0) & (v == b) & ~rm & ~gm
    h = np.where(rm, ((g - b) / safe) % 6.0, h)
    h = np.where(gm, (b - r) / safe + 2.0, h)
    h = np.where(bm, (r - g) / safe + 4.0, h)
    return np.stack([h * 60.0, s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """Inverse of rgb_to_hsv; returns float64 RGB in [0,255]."""
    x = np.asarray(hsv, dtype=np.float64)
    h6 = (x[..., 0] % 360.0) / 60.0
    s = np.clip(x[..., 1], 0.0, 1.0)
    v = np.clip(x[..., 2], 0.0, 1.0)
    c = v * s
    xx = c * (1.0 - np.abs(h6 % 2.0 - 1.0))
    m = v - c
    z = np.zeros_like(c)
    sector = np.minimum(np.floor(h6).astype(np.int64), 5)
    r = np.choose(sector, [c, xx, z, z, xx, c])
    g = np.choose(sector, [xx, c, c, xx, z, z])
    b = np.choose(sector, [z, z, xx, c, c, xx])
    return np.stack([r + m, g + m, b + m], axis=-1) * 255.0


# ---------------------------------------------------------------------------
# fractal noise

def _next_pow2(n: int) -> int:
    return 1 << max(1, (n - 1).bit_length())


def fractal_noise(w: int, h: int, roughness_decay: float, rng: np.random.Generator) -> np.ndarray:
    """Diamond-square heightmap cropped to (h, w), normalized to [0,1].

    Runs on the next power-of-two square with periodic neighbor wrap;
    the perturbation amplitude is divided by roughness_decay at each
    halving of the lattice step.
    """
    if w < 1 or h < 1:
        raise ParameterError(f"noise size {w}x{h} must be at least 1x1")
    if roughness_decay <= 0:
        raise ParameterError("roughness_decay must be positive")
    size = _next_pow2(max(w, h, 2))
    grid = np.zeros((size, size), dtype=np.float64)
    grid[0, 0] = rng.uniform(-1.0, 1.0)
    step = size
    amp = 1.0
    while step >= 2:
        half = step // 2
        corners = grid[0:size:step, 0:size:step]
        centers = (
            corners
            + np.roll(corners, -1, axis=0)
            + np.roll(corners, -1, axis=1)
            + np.roll(np.roll(corners, -1, axis=0), -1, axis=1)
        ) / 4.0
        grid[half::step, half::step] = centers + amp * rng.uniform(-1.0, 1.0, centers.shape)
        centers = grid[half::step, half::step]
        top = (
            corners
            + np.roll(corners, -1, axis=1)
            + centers
            + np.roll(centers, 1, axis=0)
        ) / 4.0
        grid[0:size:step, half::step] = top + amp * rng.uniform(-1.0, 1.0, top.shape)
        left = (
            corners
            + np.roll(corners, -1, axis=0)
            + centers
            + np.roll(centers, 1, axis=1)
        ) / 4.0
        grid[half::step, 0:size:step] = left + amp * rng.uniform(-1.0, 1.0, left.shape)
        step = half
        amp /= roughness_decay
    out = grid[:h, :w]
    lo = out.min()
    hi = out.max()
    if hi > lo:
        return (out - lo) / (hi - lo)
    return np.zeros_like(out)
