"""Acceptance gate: one test per headline guarantee of the toolkit.

Covers the aggregate arithmetic against reference values for eleven rotated
detectors, the severity-curve identity, the rotated-IoU and AP oracles,
per-kind corruption determinism and monotonicity, the cloud compositing
pipeline, and the tiling round trip.  The conftest hook prints one visible
pass/fail line per test.
"""

import math
import time

import numpy as np

from aerobust import clouds, corruptions, dota, geometry, metrics
from aerobust.corruptions import CorruptionSpec
from aerobust.raster import derive_seed
from aerobust.schedule import CORRUPTION_KINDS, SEVERITIES
from conftest import fixture_image, synthetic_cloud
from oracles import brute_force_ap, random_case, square

# Reference aggregates for eleven rotated-detector baselines.  Per row:
# clean AP, mean AP under corruption, then the 19 severity-averaged per-kind
# APs in CORRUPTION_KINDS order.
REFERENCE_ROWS = {
    "rot_faster": (73.4, 38.9, [20.2, 19.7, 17.7, 27.6, 40.5, 46.4, 40.6, 14.1, 43.0,
                                24.3, 46.2, 49.3, 63.1, 46.7, 42.4, 33.2, 53.1, 50.4, 60.7]),
    "roi_trans": (76.1, 39.9, [19.8, 20.2, 17.8, 29.1, 41.1, 48.8, 42.6, 14.7, 44.0,
                               26.5, 47.1, 49.2, 63.5, 49.4, 42.5, 35.0, 53.6, 51.5, 62.3]),
    "oriented_rcnn": (75.7, 40.7, [21.7, 21.7, 18.7, 30.3, 41.9, 49.0, 42.3, 14.8, 44.3,
                                   25.6, 48.7, 51.5, 65.6, 48.5, 43.2, 34.9, 55.5, 50.7, 63.4]),
    "redet": (76.7, 45.9, [24.7, 24.6, 22.4, 34.3, 50.3, 53.6, 48.3, 18.1, 53.2,
                           35.3, 58.3, 63.1, 70.5, 52.0, 54.3, 33.2, 59.4, 52.4, 64.9]),
    "sfrnet": (75.9, 41.3, [22.0, 22.2, 19.6, 30.4, 42.6, 49.4, 43.6, 14.8, 45.4,
                            28.0, 48.7, 51.5, 66.1, 49.3, 44.0, 35.2, 55.6, 52.5, 63.5]),
    "oan": (73.9, 40.0, [19.4, 20.1, 17.2, 28.6, 41.6, 49.0, 43.8, 14.6, 44.4,
                         26.0, 47.6, 50.1, 64.1, 48.8, 42.7, 34.5, 53.9, 51.5, 61.8]),
    "rot_retina": (68.4, 37.3, [20.0, 19.7, 16.9, 26.7, 40.5, 45.8, 39.6, 14.0, 43.3,
                                23.3, 45.2, 47.9, 59.4, 42.9, 40.3, 31.5, 48.0, 46.4, 58.1]),
    "rot_fcos": (71.3, 38.9, [20.6, 20.5, 18.7, 27.6, 41.3, 46.8, 39.6, 14.5, 43.7,
                              26.1, 46.6, 50.7, 61.2, 45.8, 43.8, 31.6, 51.4, 48.3, 59.6]),
    "r3det": (69.8, 37.8, [19.9, 19.6, 17.3, 27.4, 38.6, 44.3, 38.0, 14.4, 42.0,
                           24.8, 46.5, 48.6, 61.1, 43.8, 41.8, 31.8, 51.7, 47.1, 59.4]),
    "s2anet": (73.9, 39.8, [18.6, 18.6, 15.7, 26.3, 42.3, 48.4, 41.2, 15.1, 44.9,
                            28.7, 49.7, 53.2, 64.0, 46.5, 45.0, 33.8, 50.9, 49.9, 62.7]),
    "psc": (71.9, 37.9, [18.3, 18.2, 16.0, 25.3, 41.5, 46.0, 40.6, 14.4, 44.7,
                         23.8, 46.0, 49.9, 61.3, 44.4, 42.3, 32.8, 48.0, 46.8, 59.2]),
}

# Per row: overall relative robustness, then the noise / blur / weather /
# digital category values, all in percent.
REFERENCE_RPC = {
    "rot_faster": (53.01, 29.01, 50.31, 62.56, 65.38),
    "roi_trans": (52.46, 28.55, 50.24, 61.95, 64.35),
    "oriented_rcnn": (53.71, 30.52, 50.84, 63.39, 65.45),
    "redet": (59.90, 34.55, 58.27, 72.81, 68.91),
    "sfrnet": (54.39, 31.04, 51.59, 64.18, 66.10),
    "oan": (54.08, 28.84, 52.34, 64.00, 66.10),
    "rot_retina": (54.57, 30.40, 53.55, 63.93, 65.55),
    "rot_fcos": (54.50, 30.67, 52.13, 64.62, 65.85),
    "r3det": (54.14, 30.14, 50.80, 64.38, 66.43),
    "s2anet": (53.81, 26.83, 51.96, 65.50, 65.57),
    "psc": (52.67, 27.01, 52.10, 62.72, 63.73),
}

# Per row: clean AP, AP on the clouded test set, relative cloud robustness.
REFERENCE_CLOUDS = {
    "rot_faster": (73.4, 58.53, 79.73),
    "roi_trans": (76.1, 60.03, 78.90),
    "oriented_rcnn": (75.7, 60.59, 80.05),
    "redet": (76.7, 66.19, 86.33),
    "sfrnet": (75.9, 60.38, 79.55),
    "oan": (73.9, 60.25, 81.51),
    "rot_retina": (68.4, 55.12, 80.55),
    "rot_fcos": (71.3, 57.51, 80.68),
    "r3det": (69.8, 56.65, 81.15),
    "s2anet": (73.9, 59.29, 80.22),
    "psc": (71.9, 57.25, 79.62),
}


def matrix_from_kind_aps(kind_aps, ap_clean=None):
    """Build a complete EvalMatrix whose per-kind means equal kind_aps."""
    m = metrics.EvalMatrix(ap_clean=ap_clean)
    for kind, value in zip(CORRUPTION_KINDS, kind_aps):
        for sev in SEVERITIES:
            m.set_cell(kind, sev, float(value))
    return m


def test_mean_corruption_score_matches_reference():
    start = time.monotonic()
    for model in ("rot_faster", "roi_trans"):
        _, published, kind_aps = REFERENCE_ROWS[model]
        got = metrics.mpc(matrix_from_kind_aps(kind_aps))
        assert abs(got - published) <= 0.05, (model, got, published)
    assert time.monotonic() - start < 1.0


def test_relative_robustness_matches_reference():
    for model, (clean, _, kind_aps) in REFERENCE_ROWS.items():
        m = matrix_from_kind_aps(kind_aps)
        overall, *per_category = REFERENCE_RPC[model]
        got = metrics.rpc(metrics.mpc(m), clean)
        assert abs(got - overall) <= 0.1, (model, got, overall)
        for category, expected in zip(("noise", "blur", "weather", "digital"),
                                      per_category):
            got = metrics.category_rpc(m, category, clean)
            assert abs(got - expected) <= 0.1, (model, category, got, expected)


def test_cloud_robustness_matches_reference():
    for model, (clean, ap_clouds, expected) in REFERENCE_CLOUDS.items():
        got = metrics.rpc_clouds(ap_clouds, clean)
        assert abs(got - expected) <= 0.1, (model, got, expected)


def test_severity_curve_mean_equals_overall_mean():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        m = metrics.EvalMatrix()
        for kind in CORRUPTION_KINDS:
            for sev in SEVERITIES:
                m.set_cell(kind, sev, float(rng.uniform(0.0, 100.0)))
        curve = metrics.severity_curve(m)
        assert len(curve) == len(SEVERITIES)
        assert abs(float(np.mean(curve)) - metrics.mpc(m)) <= 1e-9


def random_rect_params(rng):
    cx, cy = rng.uniform(30.0, 70.0, 2)
    w, h = rng.uniform(10.0, 40.0, 2)
    angle = rng.uniform(0.0, 180.0)
    return float(cx), float(cy), float(w), float(h), float(angle)


def rect_corners(cx, cy, w, h, angle_deg):
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    local = np.array([[-w, -h], [w, -h], [w, h], [-w, h]]) / 2.0
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + [cx, cy]


def points_in_rect(xs, ys, params):
    cx, cy, w, h, angle_deg = params
    a = math.radians(angle_deg)
    c, s = np.float32(math.cos(a)), np.float32(math.sin(a))
    dx = xs - np.float32(cx)
    dy = ys - np.float32(cy)
    u = dx * c + dy * s
    v = dy * c - dx * s
    return (np.abs(u) <= w / 2.0) & (np.abs(v) <= h / 2.0)


def stratified_mc_iou(params_a, params_b, rng, n_side=1000):
    """IoU from 10^6 jittered grid samples over the bbox intersection.

    Only the intersection area is estimated; both rectangle areas are exact,
    so the per-pair error stays well below 1e-3.
    """
    corners_a = rect_corners(*params_a)
    corners_b = rect_corners(*params_b)
    area_a = params_a[2] * params_a[3]
    area_b = params_b[2] * params_b[3]
    lo = np.maximum(corners_a.min(axis=0), corners_b.min(axis=0))
    hi = np.minimum(corners_a.max(axis=0), corners_b.max(axis=0))
    if lo[0] >= hi[0] or lo[1] >= hi[1]:
        return 0.0
    width, height = hi - lo
    idx = np.arange(n_side, dtype=np.float32)
    jx = rng.random((n_side, n_side), dtype=np.float32)
    jy = rng.random((n_side, n_side), dtype=np.float32)
    xs = np.float32(lo[0]) + (idx[None, :] + jx) * np.float32(width / n_side)
    ys = np.float32(lo[1]) + (idx[:, None] + jy) * np.float32(height / n_side)
    inside = points_in_rect(xs, ys, params_a) & points_in_rect(xs, ys, params_b)
    inter = float(np.count_nonzero(inside)) / (n_side * n_side) * width * height
    return inter / (area_a + area_b - inter)


def test_rotated_iou_matches_monte_carlo():
    start = time.monotonic()

    offset_a = square(0.0, 0.0, 1.0)
    offset_b = square(0.5, 0.0, 1.0)
    assert abs(geometry.rotated_iou(offset_a, offset_b) - 1.0 / 3.0) <= 1e-6
    diamond = rect_corners(0.5, 0.5, 1.0, 1.0, 45.0)
    expected = 1.0 / math.sqrt(2.0)
    assert abs(geometry.rotated_iou(square(0.0, 0.0, 1.0), diamond) - expected) <= 1e-6

    rng = np.random.default_rng(20260822)
    worst = 0.0
    disjoint = 0
    for _ in range(1000):
        params_a = random_rect_params(rng)
        params_b = random_rect_params(rng)
        got = geometry.rotated_iou(rect_corners(*params_a), rect_corners(*params_b))
        estimate = stratified_mc_iou(params_a, params_b, rng)
        if estimate == 0.0:
            disjoint += 1
        diff = abs(got - estimate)
        worst = max(worst, diff)
        assert diff <= 1e-3, (params_a, params_b, got, estimate)
    assert disjoint < 1000  # the sample must actually exercise overlaps
    assert time.monotonic() - start < 60.0, worst


def test_average_precision_matches_brute_force():
    rng = np.random.default_rng(424242)
    cases = 0
    for _ in range(220):
        dets, gts = random_case(rng)
        if len(dets) > 6 or len(gts) > 4:
            continue
        for interp in metrics.INTERP_MODES:
            _, got = metrics.average_precision(dets, gts, 0.5, interp)
            _, want = brute_force_ap(dets, gts, 0.5, interp)
            assert abs(got - want) <= 1e-9, (interp, got, want)
        cases += 1
    assert cases >= 200


def test_corruptions_deterministic_and_monotone():
    start = time.monotonic()
    images = [fixture_image(i) for i in range(20)]
    schedule = corruptions.default_schedule()
    for kind in CORRUPTION_KINDS:
        mean_psnr = []
        for sev in SEVERITIES:
            values = []
            for idx, image in enumerate(images):
                spec = CorruptionSpec(kind, sev, derive_seed(7, f"fix{idx:02d}", kind, sev))
                out = corruptions.corrupt(image, spec, schedule)
                if idx < 5:
                    again = corruptions.corrupt(image, spec, schedule)
                    if kind == "jpeg_compression":
                        delta = np.abs(out.astype(np.int16) - again.astype(np.int16))
                        assert int(delta.max()) <= 2
                    else:
                        assert np.array_equal(out, again)
                values.append(corruptions.psnr(image, out))
            mean_psnr.append(float(np.mean(values)))
        for lighter, heavier in zip(mean_psnr, mean_psnr[1:]):
            assert heavier <= lighter + 1e-9, (kind, mean_psnr)
    assert time.monotonic() - start < 600.0


def test_cloud_pipeline_examples():
    uniform = np.full((4, 4, 3), 100, np.uint8)
    assert np.all(clouds.cloud_self_subtract(uniform, 128.0) == 0.0)

    chan = np.array([[200.0, 50.0], [130.0, 120.0]])
    cloudy = np.stack([chan] * 3, axis=-1)
    i_dc = clouds.cloud_self_subtract(cloudy, 128.0)
    assert np.array_equal(i_dc[..., 0], np.array([[72.0, 0.0], [2.0, 0.0]]))
    i_ci = clouds.cloud_compensate(cloudy, i_dc)
    k = 330.0 / 74.0
    assert np.allclose(i_ci[..., 0], np.array([[255.0, 0.0], [k * 2.0, 0.0]]))

    clean = np.full((2, 2, 3), 100, np.uint8)
    opaque = clouds.cloud_composite(clean, np.full(clean.shape, 255.0))
    assert np.all(opaque == 242)
    untouched = clouds.cloud_composite(clean, np.zeros(clean.shape))
    assert np.array_equal(untouched, clean)
    halfway = clouds.cloud_composite(clean, np.full(clean.shape, 127.5))
    assert np.all(halfway == 171)

    source = clouds.CloudSource(synthetic_cloud(seed=50), 128.0)
    changed = 0
    for i in range(10):
        image = fixture_image(i)
        seed = derive_seed(7, f"fix{i:02d}", "clouds", 0)
        first = clouds.apply_cloud(image, source, np.random.default_rng(seed))
        second = clouds.apply_cloud(image, source, np.random.default_rng(seed))
        assert np.array_equal(first, second)
        assert first.dtype == np.uint8 and first.shape == image.shape
        if not np.array_equal(first, image):
            changed += 1
    assert changed == 10


def test_tiling_offsets_round_trip_and_merge():
    plan = dota.plan_tiles(2048, 1024)
    assert sorted({ox for ox, _ in plan.offsets}) == [0, 824, 1024]
    assert {oy for _, oy in plan.offsets} == {0}

    originals = [
        dota.GroundTruthRecord("P1", square(100, 100), "plane"),
        dota.GroundTruthRecord("P1", square(900, 100), "ship"),
        dota.GroundTruthRecord("P1", square(1500, 500), "plane"),
    ]
    by_tile = dota.split_ground_truth(originals, plan)
    seen = set()
    for (ox, oy), records in by_tile.items():
        for record in records:
            restored = record.box + np.array([ox, oy], float)
            matches = [i for i, orig in enumerate(originals)
                       if orig.category == record.category
                       and np.array_equal(restored, orig.box)]
            assert matches, (ox, oy, record.box)
            seen.update(matches)
    assert seen == {0, 1, 2}

    duplicates = [
        dota.DetectionRecord("P1__0__0", "plane", 0.9, square(900, 100)),
        dota.DetectionRecord("P1__824__0", "plane", 0.8, square(76.5, 100)),
    ]
    merged = dota.merge_detections(duplicates, plan)
    assert len(merged) == 1
    assert merged[0].score == 0.9
    assert merged[0].image_id == "P1"
    assert np.allclose(merged[0].box, square(900, 100))

    distant = [
        dota.DetectionRecord("P1__0__0", "plane", 0.9, square(50, 50)),
        dota.DetectionRecord("P1__824__0", "plane", 0.8, square(500, 500)),
    ]
    assert len(dota.merge_detections(distant, plan)) == 2
