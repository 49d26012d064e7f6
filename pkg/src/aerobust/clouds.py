"""Real-cloud transfer: extract cloud layers from cloudy scenes and
composite them onto clean images.

Pipeline per channel, all in float64 [0, 255]:

1. self-subtraction: ``I_dc = max(0, source - gamma)`` keeps only
   intensity above the background threshold gamma;
2. compensation: ``k = sum(source where I_dc > 0) / sum(I_dc)``, then
   ``I_ci = clamp(k * I_dc, 0, 255)`` restores cloud brightness lost to
   the subtraction;
3. compositing: ``out = clean * (255 - I_ci) / 255 + 0.95 * I_ci``,
   an alpha blend whose transmittance falls as the cloud thickens.

Where I_ci is zero the clean pixel passes through untouched; a fully
opaque cloud saturates to 0.95 * 255.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import raster
from .errors import ConfigurationError, EmptyCloudError, ParameterError, ParseError

GRAY_LEVELS = 255.0
ATMOSPHERIC_LIGHT = 0.95
DEFAULT_GAMMA = 128.0


@dataclass(frozen=True)
class CloudSource:
    """A cloudy scene plus its extraction threshold."""

    image: np.ndarray
    gamma: float
    path: str = ""


def cloud_self_subtract(cloudy: np.ndarray, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """Threshold-shifted cloud map: per channel max(0, value - gamma)."""
    if not 0.0 <= gamma <= 255.0:
        raise ParameterError(f"gamma {gamma} outside [0, 255]")
    x = np.asarray(cloudy, dtype=np.float64)
    return np.maximum(x - gamma, 0.0)


def _compensate_channel(source: np.ndarray, i_dc: np.ndarray) -> np.ndarray:
    support = i_dc != 0
    if not support.any():
        # no cloud in this channel: nothing to add back
        return np.zeros_like(i_dc)
    k = source[support].sum() / i_dc[support].sum()
    return np.clip(k * i_dc, 0.0, GRAY_LEVELS)


def cloud_compensate(cloudy: np.ndarray, i_dc: np.ndarray) -> np.ndarray:
    """Rescale the subtracted map so cloud pixels regain scene brightness.

    Applied independently per channel; a channel with empty support
    yields zeros.  A map with no support in any channel raises
    EmptyCloudError.
    """
    src = np.asarray(cloudy, dtype=np.float64)
    dc = np.asarray(i_dc, dtype=np.float64)
    if src.shape != dc.shape:
        raise ParameterError(f"shape mismatch {src.shape} vs {dc.shape}")
    if not (dc != 0).any():
        raise EmptyCloudError("cloud map is identically zero; threshold removes everything")
    if dc.ndim == 2:
        return _compensate_channel(src, dc)
    out = np.empty_like(dc)
    for c in range(dc.shape[-1]):
        out[..., c] = _compensate_channel(src[..., c], dc[..., c])
    return out


def composite_map(clean: np.ndarray, i_ci: np.ndarray) -> np.ndarray:
    """Unquantized composite in float64; exact blend arithmetic."""
    base = np.asarray(clean, dtype=np.float64)
    ci = np.asarray(i_ci, dtype=np.float64)
    if base.shape != ci.shape:
        if ci.ndim == 2 and base.ndim == 3 and base.shape[:2] == ci.shape:
            ci = ci[..., None]
        else:
            raise ParameterError(f"shape mismatch {base.shape} vs {ci.shape}")
    return base * (GRAY_LEVELS - ci) / GRAY_LEVELS + ATMOSPHERIC_LIGHT * ci


def cloud_composite(clean: np.ndarray, i_ci: np.ndarray) -> np.ndarray:
    """Composite and quantize to uint8."""
    return raster.quantize(composite_map(clean, i_ci))


def extract_ingredient(source: CloudSource) -> np.ndarray:
    """Full extraction for one source: subtract then compensate."""
    i_dc = cloud_self_subtract(source.image, source.gamma)
    return cloud_compensate(np.asarray(source.image, dtype=np.float64), i_dc)


def fit_to(ingredient: np.ndarray, height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    """Crop with wraparound tiling to (height, width) at a seeded offset."""
    src = np.asarray(ingredient)
    sh, sw = src.shape[:2]
    y0 = int(rng.integers(0, sh))
    x0 = int(rng.integers(0, sw))
    rows = (y0 + np.arange(height)) % sh
    cols = (x0 + np.arange(width)) % sw
    return src[np.ix_(rows, cols)]


def apply_cloud(clean: np.ndarray, source: CloudSource, rng: np.random.Generator) -> np.ndarray:
    """Whole pipeline for one image: extract, fit, composite, quantize."""
    base = raster.ensure_rgb(clean)
    ingredient = extract_ingredient(source)
    h, w = base.shape[:2]
    fitted = fit_to(ingredient, h, w, rng)
    return cloud_composite(base.astype(np.float64), fitted)


def load_cloud_pool(manifest_path: str | Path, default_gamma: float = DEFAULT_GAMMA) -> list[CloudSource]:
    """Read a pool manifest: one "path [gamma]" per line, # comments allowed.

    Relative paths resolve against the manifest location.  Every source
    must have at least one pixel above its gamma in some channel.
    """
    p = Path(manifest_path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read cloud pool manifest {p}: {exc}") from exc
    pool: list[CloudSource] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) > 2:
            raise ParseError(f"{p}:{lineno}: expected 'path [gamma]', got {len(parts)} tokens")
        src_path = Path(parts[0])
        if not src_path.is_absolute():
            src_path = p.parent / src_path
        gamma = default_gamma
        if len(parts) == 2:
            try:
                gamma = float(parts[1])
            except ValueError as exc:
                raise ParseError(f"{p}:{lineno}: bad gamma {parts[1]!r}") from exc
        if not 0.0 <= gamma <= 255.0:
            raise ParseError(f"{p}:{lineno}: gamma {gamma} outside [0, 255]")
        image = raster.load_image(src_path)
        if not (image.astype(np.float64) > gamma).any():
            raise EmptyCloudError(
                f"cloud source {src_path} has no pixel above gamma {gamma:g} in any channel"
            )
        pool.append(CloudSource(image=image, gamma=gamma, path=str(src_path)))
    if not pool:
        raise ConfigurationError(f"cloud pool manifest {p} lists no sources")
    return pool
