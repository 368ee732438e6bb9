import numpy as np
import pytest

from helixslice import (
    HelixParams,
    LabeledCloud,
    MethodInfo,
    PointCloud,
    Scenario,
    circular_span,
    scan_flexible,
    threshold_search,
    verticality_report,
)
from helixslice.geometry import TWO_PI

from oracles import circular_span_bruteforce


# ---------------------------------------------------------------------------
# circular_span
# ---------------------------------------------------------------------------

def test_span_single_angle():
    assert circular_span([0.1]) == 0.0


def test_span_two_points():
    assert circular_span([0.0, np.pi / 2]) == pytest.approx(np.pi / 2)


def test_span_all_equal_is_exactly_zero():
    assert circular_span([1.3] * 7) == 0.0


def test_span_empty_errors():
    with pytest.raises(ValueError):
        circular_span([])


def test_span_wraparound():
    # points hugging the seam: a thin sector, not almost-2pi
    assert circular_span([0.05, TWO_PI - 0.05]) == pytest.approx(0.1, abs=1e-12)


def test_span_matches_bruteforce_exactly():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        m = int(rng.integers(1, 40))
        angles = rng.uniform(-10, 10, size=m)
        assert circular_span(angles) == circular_span_bruteforce(angles)


def test_span_rotation_invariance():
    rng = np.random.default_rng(18)
    for _ in range(200):
        angles = rng.uniform(0, TWO_PI, size=int(rng.integers(2, 30)))
        base = circular_span(angles)
        rot = circular_span(angles + rng.uniform(-7, 7))
        assert abs(base - rot) < 1e-9


# ---------------------------------------------------------------------------
# verticality_report
# ---------------------------------------------------------------------------

def _cloud_with_t(t):
    t = np.asarray(t, dtype=np.float64)
    xyz = np.zeros((len(t), 3))
    return PointCloud(xyz, turn=np.floor(t / TWO_PI).astype(np.int64),
                      t=t, phi=np.zeros_like(t))


def test_report_ideal_binning():
    k = 72
    rng = np.random.default_rng(20)
    t = rng.uniform(0, TWO_PI, 3600)
    cloud = _cloud_with_t(t)
    labels = np.minimum((t / (TWO_PI / k)).astype(np.int64), k - 1)
    lc = LabeledCloud(cloud, labels, k, MethodInfo("external", "xyz", "none"))
    rep = verticality_report(lc, 1.5)
    assert rep.vertical
    assert rep.purity == 1.0
    assert rep.nonempty == k
    assert np.all(rep.per_cluster_span <= TWO_PI / k + 1e-12)


def test_report_k1_is_always_vertical():
    rng = np.random.default_rng(21)
    cloud = _cloud_with_t(rng.uniform(0, TWO_PI, 500))
    lc = LabeledCloud(cloud, np.zeros(500, dtype=int), 1,
                      MethodInfo("external", "xyz", "none"))
    rep = verticality_report(lc, 1.5)
    assert rep.vertical
    assert rep.max_span == pytest.approx(TWO_PI, rel=0.05)


def test_report_random_labels_fail():
    # frozen from a 30-seed sweep: random labels at k=20 failed in 30/30
    for seed in range(5):
        rng = np.random.default_rng(seed)
        cloud = _cloud_with_t(rng.uniform(0, TWO_PI, 3600))
        labels = rng.integers(0, 20, 3600)
        lc = LabeledCloud(cloud, labels, 20, MethodInfo("external", "xyz", "none"))
        assert not verticality_report(lc, 1.5).vertical


def test_report_requires_truth():
    cloud = PointCloud(np.zeros((4, 3)))
    lc = LabeledCloud(cloud, np.zeros(4, dtype=int), 1,
                      MethodInfo("external", "xyz", "none"))
    with pytest.raises(ValueError, match="truth"):
        verticality_report(lc, 1.5)


def test_report_alpha_validation():
    cloud = _cloud_with_t([0.0, 0.1])
    lc = LabeledCloud(cloud, np.zeros(2, dtype=int), 1,
                      MethodInfo("external", "xyz", "none"))
    with pytest.raises(ValueError):
        verticality_report(lc, 0.5)


def test_report_relabeling_invariance():
    rng = np.random.default_rng(23)
    t = rng.uniform(0, TWO_PI, 600)
    cloud = _cloud_with_t(t)
    k = 6
    labels = np.minimum((t / (TWO_PI / k)).astype(np.int64), k - 1)
    perm = rng.permutation(k)
    lc1 = LabeledCloud(cloud, labels, k, MethodInfo("external", "xyz", "none"))
    lc2 = LabeledCloud(cloud, perm[labels], k, MethodInfo("external", "xyz", "none"))
    r1 = verticality_report(lc1, 1.5)
    r2 = verticality_report(lc2, 1.5)
    assert r1.vertical == r2.vertical
    assert r1.max_span == pytest.approx(r2.max_span, abs=1e-12)
    assert sorted(r1.per_cluster_span) == pytest.approx(sorted(r2.per_cluster_span))
    assert r1.purity == pytest.approx(r2.purity)


def test_report_empty_clusters_do_not_fail_verdict():
    # labels skip id 2 entirely: nonempty drops, verdict unaffected
    t = np.concatenate([np.full(10, 0.1), np.full(10, 1.0)])
    cloud = _cloud_with_t(t)
    labels = np.array([0] * 10 + [1] * 10)
    lc = LabeledCloud(cloud, labels, 4, MethodInfo("external", "xyz", "none"))
    rep = verticality_report(lc, 1.5)
    assert rep.nonempty == 2
    assert rep.vertical


# ---------------------------------------------------------------------------
# threshold_search
# ---------------------------------------------------------------------------

def test_threshold_grid_of_one():
    sc = Scenario(params=HelixParams(), n_points=200, algo="kmedoids",
                  features="xy", split="truth", seed=1)
    res = threshold_search(sc, [1], trials=2, rho=0.6)
    assert res.threshold == 1
    assert res.verdicts == [1.0]
    assert res.first_fail is None


def test_threshold_flags_errored_trials():
    # 40-point scans cannot host k=60: every trial errors and counts failed
    sc = Scenario(params=HelixParams(), n_points=40, algo="kmedoids",
                  features="xy", split="truth", seed=2)
    res = threshold_search(sc, [1, 60], trials=3, rho=0.6)
    assert res.error_counts == [0, 3]
    assert res.verdicts[1] == 0.0
    assert res.threshold == 1
    assert res.first_fail == 60
    assert np.isnan(res.mean_max_span[1])


def test_threshold_validation():
    sc = Scenario(n_points=100)
    with pytest.raises(ValueError):
        threshold_search(sc, [5, 3], trials=2)
    with pytest.raises(ValueError):
        threshold_search(sc, [3], trials=0)
    with pytest.raises(ValueError):
        threshold_search(sc, [3], trials=1, rho=1.5)


def test_threshold_reproducible():
    sc = Scenario(params=HelixParams(), n_points=300, algo="som",
                  features="xy", split="model", seed=7)
    a = threshold_search(sc, [2, 4], trials=2, rho=0.5)
    b = threshold_search(sc, [2, 4], trials=2, rho=0.5)
    assert a.verdicts == b.verdicts
    assert a.mean_max_span == b.mean_max_span
    assert a.threshold == b.threshold


def test_threshold_parallel_matches_serial():
    sc = Scenario(params=HelixParams(), n_points=300, algo="kmedoids",
                  features="xy", split="model", seed=8)
    serial = threshold_search(sc, [3, 5], trials=2, rho=0.5, workers=1)
    parallel = threshold_search(sc, [3, 5], trials=2, rho=0.5, workers=2)
    assert serial.verdicts == parallel.verdicts
    assert serial.mean_max_span == parallel.mean_max_span
    assert serial.error_counts == parallel.error_counts


def test_threshold_scan_mode_sequential():
    sc = Scenario(scan_mode="sequential", sections_per_turn=24,
                  points_per_section=10, algo="kmedoids", features="xy",
                  split="truth", seed=3)
    res = threshold_search(sc, [4], trials=2, rho=0.5)
    assert res.error_counts == [0]
    assert res.verdicts[0] >= 0.5
