"""Two-component one-dimensional Gaussian mixture fit by EM.

Alignment scores of a mislabeled class split into a low cluster (wrong-class
samples barely project onto the class eigenvector) and a high cluster; the
component with the larger mean is the clean side. This module fits that
mixture and answers posterior queries against the high-mean component.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TooFewSamplesError

DEFAULT_MAX_ITER = 200
DEFAULT_TOL = 1e-6
DEFAULT_VAR_FLOOR_REL = 1e-8
_VAR_FLOOR_ABS = 1e-12

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class GmmFit:
    """Converged two-component mixture, components ordered mean_low <= mean_high.

    `degenerate` marks the all-scores-identical case: a single point mass
    where every posterior query answers 1 (no evidence of a noisy cluster).
    """

    mean_low: float
    mean_high: float
    var_low: float
    var_high: float
    weight_high: float
    iterations: int = 0
    loglik_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    degenerate: bool = False

    @property
    def weight_low(self) -> float:
        return 1.0 - self.weight_high


def _log_normal_pdf(x: np.ndarray, mean: float, var: float) -> np.ndarray:
    return -0.5 * (_LOG_2PI + np.log(var)) - (x - mean) ** 2 / (2.0 * var)


def fit_gmm2(
    scores,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    var_floor_rel: float = DEFAULT_VAR_FLOOR_REL,
) -> GmmFit:
    """Fit the mixture by EM, initialized from a median split of the scores.

    Convergence is |delta log-likelihood| < tol (absolute) or max_iter.
    Variances are clamped at var_floor_rel * variance(scores) + 1e-12 every
    M step so near-duplicate scores cannot produce a singular component.
    """
    x = np.asarray(scores, dtype=np.float64).ravel()
    n = x.shape[0]
    if n < 2:
        raise TooFewSamplesError(f"need at least 2 scores to fit, got {n}")
    if not np.all(np.isfinite(x)):
        raise TooFewSamplesError("scores must be finite")

    if np.all(x == x[0]):
        return GmmFit(
            mean_low=float(x[0]),
            mean_high=float(x[0]),
            var_low=0.0,
            var_high=0.0,
            weight_high=1.0,
            iterations=0,
            loglik_trace=np.empty(0),
            degenerate=True,
        )

    floor = var_floor_rel * float(np.var(x)) + _VAR_FLOOR_ABS

    # Median-split init: component parameters from the two sorted halves.
    order = np.sort(x)
    half = n // 2
    lo, hi = order[:half], order[half:]
    means = np.array([lo.mean(), hi.mean()])
    variances = np.array([max(lo.var(), floor), max(hi.var(), floor)])
    weights = np.array([half / n, (n - half) / n])

    trace = []
    prev_ll = -np.inf
    iterations = 0
    resp_hi = None
    for iterations in range(1, max_iter + 1):
        # E step in the log domain; scores far from both components would
        # underflow a direct density evaluation.
        with np.errstate(divide="ignore"):
            log_w = np.log(weights)
        log_joint = np.stack(
            [log_w[c] + _log_normal_pdf(x, means[c], variances[c]) for c in (0, 1)]
        )
        top = np.max(log_joint, axis=0)
        ll_per_sample = top + np.log(np.exp(log_joint - top).sum(axis=0))
        ll = float(ll_per_sample.sum())
        trace.append(ll)
        resp_hi = np.exp(log_joint[1] - ll_per_sample)
        if abs(ll - prev_ll) < tol:
            break
        prev_ll = ll

        # M step with the variance floor.
        n_hi = float(resp_hi.sum())
        n_lo = n - n_hi
        for c, (r, n_c) in enumerate(((1.0 - resp_hi, n_lo), (resp_hi, n_hi))):
            if n_c <= 0.0:
                weights[c] = 0.0
                continue
            mu = float(r @ x) / n_c
            var = float(r @ (x - mu) ** 2) / n_c
            means[c] = mu
            variances[c] = max(var, floor)
            weights[c] = n_c / n

    if means[0] <= means[1]:
        low, high = 0, 1
    else:
        low, high = 1, 0
    return GmmFit(
        mean_low=float(means[low]),
        mean_high=float(means[high]),
        var_low=float(variances[low]),
        var_high=float(variances[high]),
        weight_high=float(weights[high]),
        iterations=iterations,
        loglik_trace=np.asarray(trace),
        degenerate=False,
    )


def clean_posterior(fit: GmmFit, score):
    """Posterior probability that `score` came from the high-mean component.

    Accepts a scalar or an array. Computed in the log domain; returns 0.5
    exactly where the two weighted densities tie, and 1 for degenerate fits.
    """
    x = np.asarray(score, dtype=np.float64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if fit.degenerate:
        out = np.ones_like(x)
        return float(out[0]) if scalar else out

    with np.errstate(divide="ignore"):
        log_low = np.log(fit.weight_low)
        log_high = np.log(fit.weight_high)
    if fit.weight_high <= 0.0:
        out = np.zeros_like(x)
        return float(out[0]) if scalar else out
    if fit.weight_low <= 0.0:
        out = np.ones_like(x)
        return float(out[0]) if scalar else out

    diff = (log_low + _log_normal_pdf(x, fit.mean_low, fit.var_low)) - (
        log_high + _log_normal_pdf(x, fit.mean_high, fit.var_high)
    )
    # posterior = 1 / (1 + exp(diff)), evaluated without overflow.
    out = np.empty_like(x)
    pos = diff >= 0
    out[pos] = np.exp(-diff[pos]) / (1.0 + np.exp(-diff[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(diff[~pos]))
    return float(out[0]) if scalar else out
