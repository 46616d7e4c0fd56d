"""Empirical checks of the selection theory.

Covers the selection-quality metrics, the eigenvector perturbation bound and
its empirical counterpart on synthetic data, precision/recall lower bounds
for a midpoint-threshold rule on two projected Gaussians, and the
plane-restricted objective map used to show the class eigenvector nearly
maximizes the clean-minus-noisy alignment gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptySetError,
    InvalidDeltaError,
    InvalidSigmaError,
    InvalidSpecError,
    LengthMismatchError,
    NotUnitError,
)
from .linalg import accumulate_gram, projector_distance, top_eigenpair
from .synthetic import SyntheticDataset

DEFAULT_DELTA = 0.05
DEFAULT_CONSTANT_C = 1.0


@dataclass
class Metrics:
    """Precision/recall/F over a clean-vs-noisy split, clean = positive.

    When a denominator is zero the corresponding rate is reported as 0 and
    the matching *_defined flag is cleared.
    """

    precision: float
    recall: float
    f_score: float
    tp: int
    fp: int
    fn: int
    tn: int
    precision_defined: bool = True
    recall_defined: bool = True


def compute_prf(clean_mask, true_mask) -> Metrics:
    """Score a selection mask against the ground-truth clean mask."""
    sel = np.asarray(clean_mask, dtype=bool)
    truth = np.asarray(true_mask, dtype=bool)
    if sel.shape != truth.shape or sel.ndim != 1:
        raise LengthMismatchError(
            f"mask shapes differ: {sel.shape} vs {truth.shape}"
        )
    tp = int(np.sum(sel & truth))
    fp = int(np.sum(sel & ~truth))
    fn = int(np.sum(~sel & truth))
    tn = int(np.sum(~sel & ~truth))
    precision_defined = (tp + fp) > 0
    recall_defined = (tp + fn) > 0
    precision = tp / (tp + fp) if precision_defined else 0.0
    recall = tp / (tp + fn) if recall_defined else 0.0
    f_score = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics(
        precision=precision,
        recall=recall,
        f_score=f_score,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        precision_defined=precision_defined,
        recall_defined=recall_defined,
    )


def normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate to well under 1e-12 everywhere."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _concentration_term(constant_c: float, sigma: float, d: int,
                        delta: float, n_plus: int) -> float:
    return constant_c * sigma * sigma * math.sqrt((d + math.log(4.0 / delta)) / n_plus)


def _validate_bound_params(n_plus: int, theta: float, sigma: float,
                           delta: float, constant_c: float):
    if not (0.0 < delta < 1.0):
        raise InvalidDeltaError(f"delta must lie in (0, 1), got {delta!r}")
    if n_plus < 1:
        raise InvalidSpecError("n_plus must be >= 1")
    if not (math.isfinite(theta) and 0.0 <= theta <= math.pi / 2 + 1e-12):
        raise InvalidSpecError("theta must lie in [0, pi/2]")
    if not (math.isfinite(sigma) and sigma >= 0.0):
        raise InvalidSpecError("sigma must be >= 0")
    if constant_c < 0.0:
        raise InvalidSpecError("constant_c must be >= 0")


def perturbation_bound(
    n_plus: int,
    n_minus: int,
    theta: float,
    sigma: float,
    d: int,
    delta: float = DEFAULT_DELTA,
    constant_c: float = DEFAULT_CONSTANT_C,
) -> float:
    """Worst-case projector distance between the class eigenvector and v.

    Evaluates (3 tau cos(theta) + eps) / (1 - tau (sin(theta) + 3 cos(theta))
    - eps) with tau = n_minus / n_plus and eps = constant_c * sigma^2 *
    sqrt((d + log(4/delta)) / n_plus). Returns +inf when the denominator is
    not positive (the regime where the bound says nothing).
    """
    _validate_bound_params(n_plus, theta, sigma, delta, constant_c)
    if n_minus < 0:
        raise InvalidSpecError("n_minus must be >= 0")
    tau = n_minus / n_plus
    eps = _concentration_term(constant_c, sigma, d, delta, n_plus)
    numerator = 3.0 * tau * math.cos(theta) + eps
    denominator = 1.0 - tau * (math.sin(theta) + 3.0 * math.cos(theta)) - eps
    if denominator <= 0.0:
        return math.inf
    return numerator / denominator


def calibrate_constant_c(
    target: float,
    n_plus: int,
    n_minus: int,
    theta: float,
    sigma: float,
    d: int,
    delta: float = DEFAULT_DELTA,
) -> float:
    """Smallest constant_c >= 0 whose bound reaches `target` at these parameters.

    The bound is strictly increasing in constant_c, so this is a closed-form
    solve; 0 when the constant-free bound already dominates, +inf when
    sigma = 0 makes the constant inert and the target unreachable.
    """
    if perturbation_bound(n_plus, n_minus, theta, sigma, d, delta, 0.0) >= target:
        return 0.0
    s = _concentration_term(1.0, sigma, d, delta, n_plus)
    if s == 0.0:
        return math.inf
    tau = n_minus / n_plus
    a = 3.0 * tau * math.cos(theta)
    b = 1.0 - tau * (math.sin(theta) + 3.0 * math.cos(theta))
    return max(0.0, (target * b - a) / (s * (1.0 + target)))


@dataclass
class BoundReport:
    """Measured projector distance next to the bound evaluated at the dataset's parameters."""

    empirical_perturbation: float
    bound_rhs: float
    tau: float
    theta: float
    sigma: float
    d: int
    n_plus: int
    n_minus: int
    delta: float
    constant_c: float
    gap_degenerate: bool = False


def empirical_perturbation(
    dataset: SyntheticDataset,
    seed: int = 0,
    delta: float = DEFAULT_DELTA,
    constant_c: float = DEFAULT_CONSTANT_C,
) -> BoundReport:
    """Projector distance between the full-gram top eigenvector and the true v."""
    gram = accumulate_gram(dataset.features)
    pair = top_eigenpair(gram, seed=seed)
    distance = projector_distance(pair.u, dataset.v)
    spec = dataset.spec
    bound = perturbation_bound(
        spec.n_clean, spec.n_noisy, spec.theta, spec.sigma, spec.d, delta, constant_c
    )
    return BoundReport(
        empirical_perturbation=distance,
        bound_rhs=bound,
        tau=spec.tau,
        theta=spec.theta,
        sigma=spec.sigma,
        d=spec.d,
        n_plus=spec.n_clean,
        n_minus=spec.n_noisy,
        delta=delta,
        constant_c=constant_c,
        gap_degenerate=pair.gap_degenerate,
    )


@dataclass
class PrBounds:
    """Lower bounds for recall and precision of the midpoint-threshold rule."""

    recall_lb: float
    precision_lb: float
    delta_gap: float
    sigma: float
    n_plus: int
    n_minus: int
    delta: float
    constant_c: float
    p_plus: float
    p_minus: float


def pr_lower_bounds(
    delta_gap: float,
    sigma: float,
    n_plus: int,
    n_minus: int,
    delta: float = DEFAULT_DELTA,
    constant_c: float = DEFAULT_CONSTANT_C,
    p_plus: float = 0.5,
    p_minus: float = 0.5,
) -> PrBounds:
    """Evaluate the recall and precision lower bounds.

    delta_gap is the separation of the two projected cluster means; sigma the
    projected noise scale; p_plus/p_minus the class priors. The concentration
    slack is 2 * constant_c * sqrt((1/n_plus + 1/n_minus) * log(2/delta)).
    Outputs are clamped to [0, 1].
    """
    if not (math.isfinite(sigma) and sigma > 0.0):
        raise InvalidSigmaError(f"sigma must be > 0, got {sigma!r}")
    if not (0.0 < delta < 1.0):
        raise InvalidDeltaError(f"delta must lie in (0, 1), got {delta!r}")
    if n_plus < 1 or n_minus < 1:
        raise InvalidSpecError("n_plus and n_minus must be >= 1")
    if constant_c < 0.0:
        raise InvalidSpecError("constant_c must be >= 0")
    if abs(p_plus + p_minus - 1.0) > 1e-9 or p_plus < 0.0 or p_minus < 0.0:
        raise InvalidSpecError("p_plus and p_minus must be nonnegative and sum to 1")

    slack = 2.0 * constant_c * math.sqrt((1.0 / n_plus + 1.0 / n_minus) * math.log(2.0 / delta))
    recall_lb = normal_cdf((delta_gap - slack) / (2.0 * sigma))
    pos = p_plus * normal_cdf((delta_gap - slack) / (2.0 * sigma))
    neg = p_minus * normal_cdf((-delta_gap - slack) / (2.0 * sigma))
    if pos <= 0.0:
        precision_lb = 0.0
    else:
        precision_lb = 1.0 / (1.0 + neg / pos)
    return PrBounds(
        recall_lb=min(max(recall_lb, 0.0), 1.0),
        precision_lb=min(max(precision_lb, 0.0), 1.0),
        delta_gap=delta_gap,
        sigma=sigma,
        n_plus=n_plus,
        n_minus=n_minus,
        delta=delta,
        constant_c=constant_c,
        p_plus=p_plus,
        p_minus=p_minus,
    )


def _mirrored_trig_table(resolution: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Angle grid over [0, 2pi) with cos/sin tables.

    For even resolutions the second half is the exact negation of the first,
    so objective values at phi and phi + pi agree bit for bit.
    """
    phis = 2.0 * np.pi * np.arange(resolution) / resolution
    if resolution % 2 == 0:
        half = resolution // 2
        cos_half = np.cos(phis[:half])
        sin_half = np.sin(phis[:half])
        cos_tab = np.concatenate([cos_half, -cos_half])
        sin_tab = np.concatenate([sin_half, -sin_half])
    else:
        cos_tab = np.cos(phis)
        sin_tab = np.sin(phis)
    return phis, cos_tab, sin_tab


def _plane_moments(points: np.ndarray, u: np.ndarray, r: np.ndarray) -> tuple[float, float, float]:
    pu = points @ u
    pr = points @ r
    return (
        float(np.mean(pu * pu)),
        float(np.mean(pu * pr)),
        float(np.mean(pr * pr)),
    )


def hyperplane_heatmap(
    dataset: SyntheticDataset,
    u: np.ndarray,
    resolution: int = 360,
    seed: int = 0,
    clean_only: bool = False,
) -> np.ndarray:
    """Clean-minus-noisy mean squared alignment around the unit circle.

    Draws a seeded random direction r orthonormal to u and evaluates, for
    each grid angle phi, the objective at a(phi) = cos(phi) u + sin(phi) r:
    mean over clean samples of <a, x>^2 minus mean over noisy samples of
    <a, x>^2 (second term dropped when clean_only). Restricted to the plane
    the objective is a quadratic form, so each mean reduces to three moments.
    Returns an array of (phi, value) rows.
    """
    if resolution < 1:
        raise InvalidSpecError("resolution must be >= 1")
    u = np.asarray(u, dtype=np.float64)
    if abs(float(np.linalg.norm(u)) - 1.0) > 1e-6:
        raise NotUnitError("u must be unit norm")
    feats = dataset.features
    mask = dataset.true_mask
    clean = feats[mask]
    noisy = feats[~mask]
    if clean.shape[0] == 0:
        raise EmptySetError("clean set is empty")
    if not clean_only and noisy.shape[0] == 0:
        raise EmptySetError("noisy set is empty")

    rng = np.random.default_rng(seed)
    while True:
        r = rng.standard_normal(u.shape[0])
        r -= (r @ u) * u
        norm = float(np.linalg.norm(r))
        if norm > 1e-8:
            r /= norm
            break

    muu, mur, mrr = _plane_moments(clean, u, r)
    if not clean_only:
        nuu, nur, nrr = _plane_moments(noisy, u, r)
        muu, mur, mrr = muu - nuu, mur - nur, mrr - nrr

    phis, cos_tab, sin_tab = _mirrored_trig_table(resolution)
    values = (
        cos_tab * cos_tab * muu
        + 2.0 * cos_tab * sin_tab * mur
        + sin_tab * sin_tab * mrr
    )
    return np.column_stack([phis, values])
