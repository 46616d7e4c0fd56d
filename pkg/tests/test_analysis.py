import math

import numpy as np
import pytest

from finekit.analysis import (
    PrBounds,
    calibrate_constant_c,
    compute_prf,
    empirical_perturbation,
    hyperplane_heatmap,
    normal_cdf,
    perturbation_bound,
    pr_lower_bounds,
)
from finekit.errors import (
    EmptySetError,
    InvalidDeltaError,
    InvalidSigmaError,
    InvalidSpecError,
    LengthMismatchError,
    NotUnitError,
)
from finekit.synthetic import SyntheticSpec, generate_lda
from oracles import (
    BOUND_REFERENCE,
    NORMAL_CDF_TABLE,
    RANK2_REFERENCE,
    prf_counting,
    rank2_sin_angle,
)


# ------------------------------------------------------------------- prf


def test_prf_perfect_selection():
    truth = np.array([True, True, False, True, False])
    m = compute_prf(truth, truth)
    assert (m.precision, m.recall, m.f_score) == (1.0, 1.0, 1.0)
    assert (m.tp, m.fp, m.fn, m.tn) == (3, 0, 0, 2)


def test_prf_select_all():
    truth = np.array([True] * 7 + [False] * 3)
    m = compute_prf(np.ones(10, dtype=bool), truth)
    assert m.precision == pytest.approx(0.7)
    assert m.recall == 1.0
    assert m.f_score == pytest.approx(2 * 0.7 / 1.7)


def test_prf_small_counts():
    selected = np.array([True, True, True, True, False])
    truth = np.array([True, True, True, False, True])
    m = compute_prf(selected, truth)
    assert m.precision == 0.75
    assert m.recall == 0.75
    assert m.f_score == 0.75
    assert (m.tp, m.fp, m.fn, m.tn) == (3, 1, 1, 0)


def test_prf_matches_counting_oracle():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(1, 60))
        selected = rng.random(n) < rng.random()
        truth = rng.random(n) < rng.random()
        m = compute_prf(selected, truth)
        p, r, f, counts = prf_counting(selected.tolist(), truth.tolist())
        assert (m.tp, m.fp, m.fn, m.tn) == counts
        assert m.precision == pytest.approx(p, abs=1e-12)
        assert m.recall == pytest.approx(r, abs=1e-12)
        assert m.f_score == pytest.approx(f, abs=1e-12)


def test_prf_zero_denominators_flagged():
    none = compute_prf(np.zeros(4, dtype=bool), np.array([True, False, True, False]))
    assert none.precision == 0.0 and not none.precision_defined
    all_noisy = compute_prf(np.array([True, False, False, False]), np.zeros(4, dtype=bool))
    assert all_noisy.recall == 0.0 and not all_noisy.recall_defined


def test_prf_joint_permutation_invariance():
    rng = np.random.default_rng(9)
    selected = rng.random(40) < 0.6
    truth = rng.random(40) < 0.5
    base = compute_prf(selected, truth)
    perm = rng.permutation(40)
    permuted = compute_prf(selected[perm], truth[perm])
    assert (base.precision, base.recall, base.f_score) == (
        permuted.precision, permuted.recall, permuted.f_score)


def test_prf_length_mismatch():
    with pytest.raises(LengthMismatchError):
        compute_prf(np.zeros(3, dtype=bool), np.zeros(4, dtype=bool))


# ----------------------------------------------------------------- bound


def test_bound_zero_when_no_contamination_and_no_noise():
    assert perturbation_bound(100, 0, 0.5, 0.0, 16) == 0.0


def test_bound_vanishes_at_orthogonal_directions():
    # cos(pi/2) under floating point is ~6e-17, so the numerator is not an
    # exact zero but sits at rounding scale.
    assert perturbation_bound(1000, 100, math.pi / 2, 0.0, 64) <= 1e-12


def test_bound_matches_frozen_reference():
    got = perturbation_bound(1000, 100, math.pi / 3, 0.1, 64, 0.05, 1.0)
    assert got == pytest.approx(BOUND_REFERENCE, abs=1e-12)


def test_bound_infinite_when_denominator_closes():
    assert math.isinf(perturbation_bound(100, 100, math.pi / 3, 0.0, 16))


def test_bound_monotone_in_contamination():
    values = [perturbation_bound(1000, m, math.pi / 3, 0.1, 64)
              for m in (0, 50, 100, 200, 300)]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert all(math.isfinite(v) for v in values)


def test_bound_monotone_in_sigma():
    values = [perturbation_bound(1000, 100, math.pi / 3, s, 64)
              for s in (0.0, 0.05, 0.1, 0.2, 0.4)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_bound_shrinks_with_more_clean_samples():
    values = [perturbation_bound(n, n // 10, math.pi / 3, 0.1, 64)
              for n in (500, 1000, 5000, 50_000)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_bound_validation():
    with pytest.raises(InvalidDeltaError):
        perturbation_bound(100, 10, 0.5, 0.1, 16, delta=0.0)
    with pytest.raises(InvalidDeltaError):
        perturbation_bound(100, 10, 0.5, 0.1, 16, delta=1.0)
    with pytest.raises(InvalidSpecError):
        perturbation_bound(0, 10, 0.5, 0.1, 16)
    with pytest.raises(InvalidSpecError):
        perturbation_bound(100, -1, 0.5, 0.1, 16)
    with pytest.raises(InvalidSpecError):
        perturbation_bound(100, 10, 3.0, 0.1, 16)
    with pytest.raises(InvalidSpecError):
        perturbation_bound(100, 10, 0.5, -0.1, 16)


def test_calibration_round_trip():
    c = calibrate_constant_c(0.3, 1000, 100, math.pi / 3, 0.1, 64, 0.05)
    assert c > 0.0
    back = perturbation_bound(1000, 100, math.pi / 3, 0.1, 64, 0.05, c)
    assert back == pytest.approx(0.3, abs=1e-12)


def test_calibration_zero_when_constant_free_bound_dominates():
    assert calibrate_constant_c(0.9, 1000, 500, math.pi / 3, 0.1, 64, 0.05) == 0.0


def test_calibration_unreachable_without_noise():
    assert math.isinf(calibrate_constant_c(0.5, 1000, 10, math.pi / 3, 0.0, 64, 0.05))


# ------------------------------------------------------- empirical bound


def test_empirical_orthogonal_noiseless_recovers_v():
    spec = SyntheticSpec(d=16, n_clean=400, n_noisy=100, theta=math.pi / 2,
                         sigma=0.0, seed=3)
    report = empirical_perturbation(generate_lda(spec), seed=0)
    assert report.empirical_perturbation <= 1e-8
    assert report.tau == 0.25


def test_empirical_matches_rank_two_closed_form():
    # The frozen constant pins the oracle itself; the dataset comparison
    # then pins the library against the oracle.
    assert rank2_sin_angle(400, 100, math.pi / 4) == pytest.approx(
        RANK2_REFERENCE, abs=1e-12)
    spec = SyntheticSpec(d=16, n_clean=400, n_noisy=100, theta=math.pi / 4,
                         sigma=0.0, seed=3)
    report = empirical_perturbation(generate_lda(spec), seed=0)
    assert report.empirical_perturbation == pytest.approx(
        rank2_sin_angle(400, 100, math.pi / 4), abs=1e-8)


def test_empirical_perturbation_grows_with_tau():
    means = []
    for tau in (0.05, 0.1, 0.25, 0.67, 1.5):
        values = []
        for seed in range(10):
            spec = SyntheticSpec(d=32, n_clean=2000,
                                 n_noisy=int(round(tau * 2000)),
                                 theta=math.pi / 3, sigma=0.1, seed=seed)
            values.append(empirical_perturbation(
                generate_lda(spec), seed=0).empirical_perturbation)
        means.append(float(np.mean(values)))
    assert all(a < b for a, b in zip(means, means[1:]))


def test_empirical_report_carries_parameters():
    spec = SyntheticSpec(d=16, n_clean=300, n_noisy=60, theta=0.7, sigma=0.2,
                         seed=1)
    report = empirical_perturbation(generate_lda(spec), seed=0, delta=0.1,
                                    constant_c=2.0)
    assert (report.n_plus, report.n_minus, report.d) == (300, 60, 16)
    assert report.theta == 0.7 and report.sigma == 0.2
    assert report.delta == 0.1 and report.constant_c == 2.0
    assert report.bound_rhs == perturbation_bound(300, 60, 0.7, 0.2, 16, 0.1, 2.0)
    assert 0.0 <= report.empirical_perturbation <= 1.0


# ------------------------------------------------------------- pr bounds


def test_pr_bounds_coin_flip_limit():
    b = pr_lower_bounds(0.0, 1.0, 100, 100, constant_c=0.0)
    assert b.recall_lb == pytest.approx(0.5, abs=1e-12)
    assert b.precision_lb == pytest.approx(0.5, abs=1e-12)


def test_pr_bounds_wide_separation():
    b = pr_lower_bounds(20.0, 1.0, 10_000, 10_000, constant_c=0.0)
    assert b.recall_lb >= 1.0 - 1e-12
    assert b.precision_lb >= 1.0 - 1e-10


def test_pr_bounds_monotone_in_gap():
    values = [pr_lower_bounds(g, 1.0, 1000, 1000).recall_lb
              for g in (0.5, 1.0, 2.0, 4.0)]
    assert all(a < b for a, b in zip(values, values[1:]))
    prec = [pr_lower_bounds(g, 1.0, 1000, 1000).precision_lb
            for g in (0.5, 1.0, 2.0, 4.0)]
    assert all(a < b for a, b in zip(prec, prec[1:]))


def test_pr_bounds_degrade_with_sigma():
    values = [pr_lower_bounds(2.0, s, 1000, 1000).recall_lb
              for s in (0.25, 0.5, 1.0, 2.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_pr_bounds_slack_trades_recall_for_precision():
    # The concentration slack moves the worst-case threshold toward the
    # clean cluster: recall_lb drops, while the false-positive tail shrinks
    # even faster, so precision_lb rises.
    loose = pr_lower_bounds(2.0, 1.0, 100, 100, constant_c=1.0)
    tight = pr_lower_bounds(2.0, 1.0, 100, 100, constant_c=0.0)
    assert loose.recall_lb < tight.recall_lb
    assert loose.precision_lb > tight.precision_lb


def test_pr_bounds_priors_shift_precision_only():
    even = pr_lower_bounds(2.0, 1.0, 1000, 1000)
    skewed = pr_lower_bounds(2.0, 1.0, 1000, 1000, p_plus=0.3, p_minus=0.7)
    assert even.recall_lb == skewed.recall_lb
    assert skewed.precision_lb < even.precision_lb


def test_pr_bounds_validation():
    with pytest.raises(InvalidSigmaError):
        pr_lower_bounds(1.0, 0.0, 100, 100)
    with pytest.raises(InvalidSigmaError):
        pr_lower_bounds(1.0, -1.0, 100, 100)
    with pytest.raises(InvalidDeltaError):
        pr_lower_bounds(1.0, 1.0, 100, 100, delta=1.5)
    with pytest.raises(InvalidSpecError):
        pr_lower_bounds(1.0, 1.0, 0, 100)
    with pytest.raises(InvalidSpecError):
        pr_lower_bounds(1.0, 1.0, 100, 100, p_plus=0.6, p_minus=0.6)
    assert isinstance(pr_lower_bounds(1.0, 1.0, 100, 100), PrBounds)


def test_normal_cdf_against_frozen_table():
    for x, want in NORMAL_CDF_TABLE:
        got = normal_cdf(x)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-18)


# --------------------------------------------------------------- heatmap


def heatmap_dataset(theta=math.pi / 2, sigma=0.0, seed=3):
    spec = SyntheticSpec(d=16, n_clean=200, n_noisy=50, theta=theta,
                         sigma=sigma, seed=seed)
    return generate_lda(spec)


def test_heatmap_shape_and_grid():
    ds = heatmap_dataset()
    grid = hyperplane_heatmap(ds, ds.v, resolution=360, seed=0)
    assert grid.shape == (360, 2)
    assert np.array_equal(grid[:, 0], 2.0 * np.pi * np.arange(360) / 360)


def test_heatmap_antipodal_symmetry_is_exact():
    ds = heatmap_dataset(sigma=0.1)
    grid = hyperplane_heatmap(ds, ds.v, resolution=360, seed=0)
    values = grid[:, 1]
    assert np.array_equal(values[:180], values[180:])


def test_heatmap_value_at_phi_zero_is_direct_objective():
    ds = heatmap_dataset(theta=math.pi / 3, sigma=0.2, seed=7)
    grid = hyperplane_heatmap(ds, ds.v, resolution=8, seed=0)
    proj = ds.features @ ds.v
    want = float(np.mean(proj[ds.true_mask] ** 2)) - float(
        np.mean(proj[~ds.true_mask] ** 2))
    assert grid[0, 1] == pytest.approx(want, rel=1e-12)


def test_heatmap_noiseless_peak_sits_at_u():
    ds = heatmap_dataset()
    grid = hyperplane_heatmap(ds, ds.v, resolution=360, seed=0,
                              clean_only=True)
    values = grid[:, 1]
    # sigma = 0 clean samples all equal v, so the objective is cos^2(phi):
    # the peak lands exactly on the phi = 0 and phi = pi grid points.
    assert int(np.argmax(values)) in (0, 180)
    assert values[0] == pytest.approx(1.0, abs=1e-12)


def test_heatmap_peak_height_is_seed_invariant_when_plane_holds_optimum():
    ds = heatmap_dataset()
    maxima = [hyperplane_heatmap(ds, ds.v, resolution=360,
                                 seed=s)[:, 1].max() for s in range(5)]
    assert max(maxima) - min(maxima) <= 1e-6


def test_heatmap_requires_nonempty_sets():
    spec = SyntheticSpec(d=8, n_clean=20, n_noisy=0, theta=0.5, sigma=0.1,
                         seed=1)
    ds = generate_lda(spec)
    with pytest.raises(EmptySetError):
        hyperplane_heatmap(ds, ds.v, resolution=8, seed=0)
    grid = hyperplane_heatmap(ds, ds.v, resolution=8, seed=0, clean_only=True)
    assert grid.shape == (8, 2)


def test_heatmap_validation():
    ds = heatmap_dataset()
    with pytest.raises(NotUnitError):
        hyperplane_heatmap(ds, ds.v * 2.0, resolution=8, seed=0)
    with pytest.raises(InvalidSpecError):
        hyperplane_heatmap(ds, ds.v, resolution=0, seed=0)
