"""Shared fixtures for the test suite."""

import numpy as np
import pytest
from scipy import ndimage


def fixture_image(index: int, base_seed: int = 1000) -> np.ndarray:
    """Build a deterministic textured RGB test image.

    The image mixes a smooth low frequency base, fine detail, and a handful
    of rectangular patches so that every corruption family has structure to
    act on (edges for blurs, flat areas for noise, color for saturation).
    """
    rng = np.random.default_rng(base_seed + index)
    base = ndimage.gaussian_filter(rng.random((128, 128)), 6)
    base = (base - base.min()) / (base.max() - base.min() + 1e-9)
    img = np.stack([base * 120 + 60, base * 110 + 70, base * 100 + 60], axis=-1)
    detail = ndimage.gaussian_filter(rng.random((128, 128, 3)), 1.2)
    img += (detail - 0.5) * 60
    for _ in range(8):
        y, x = rng.integers(5, 110, 2)
        hh, ww = rng.integers(6, 22, 2)
        col = rng.uniform(40, 215, 3)
        img[y:y+hh, x:x+ww] = 0.65 * img[y:y+hh, x:x+ww] + 0.35 * col
    return np.clip(img, 0, 255).astype(np.uint8)


@pytest.fixture(scope="session")
def fixture_images():
    """Twenty deterministic textured images used by statistical checks."""
    return [fixture_image(i) for i in range(20)]


@pytest.fixture
def textured_image():
    return fixture_image(0)


def synthetic_cloud(size: int = 96, seed: int = 50, peak: float = 255.0) -> np.ndarray:
    """Build a bright-blob RGB image usable as a cloud source.

    A few Gaussian bumps on a dark sky so that part of the frame sits above
    typical brightness thresholds and part below.
    """
    rng = np.random.default_rng(seed)
    field = np.zeros((size, size))
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(4):
        cy, cx = rng.uniform(0.2 * size, 0.8 * size, 2)
        rad = rng.uniform(0.12 * size, 0.3 * size)
        field += np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * rad ** 2))
    field = field / field.max()
    img = 40.0 + field * (peak - 40.0)
    return np.clip(np.stack([img, img, img], axis=-1), 0, 255).astype(np.uint8)


def pytest_runtest_logreport(report):
    """Print one visible pass/fail line per acceptance check."""
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {outcome}", flush=True)
    elif report.when == "setup" and (report.failed or report.skipped):
        outcome = "FAIL" if report.failed else "SKIP"
        print(f"\n[acceptance] {name}: {outcome}", flush=True)
