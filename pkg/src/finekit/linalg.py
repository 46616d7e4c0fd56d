"""Gram-matrix accumulation and leading-eigenpair extraction.

The detector scores samples by their squared alignment with the first
eigenvector of a per-class uncentered gram matrix, so everything here is
built around symmetric PSD matrices: accumulate the gram, pull out the top
eigenpair by power iteration, and measure the distance between the rank-one
projectors two unit vectors induce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    EmptyClassError,
    NotUnitError,
)

# Any finite 1-D float array of length d >= 1 is a valid vector.
Vector = np.ndarray

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
# Relative spectral gap below which the top eigenvector is not well defined.
GAP_DEGENERATE_REL = 1e-6
UNIT_NORM_TOL = 1e-6


@dataclass
class GramMatrix:
    """Uncentered second-moment sum: entries = sum_i z_i z_i^T over `count` samples."""

    entries: np.ndarray
    count: int

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass
class EigenPair:
    """Leading eigenpair of a symmetric PSD matrix.

    `u` is unit-norm with its largest-magnitude entry made positive so
    repeated runs agree on sign. `gap_degenerate` is set when the relative
    gap (lambda1 - lambda2) / lambda1 falls below GAP_DEGENERATE_REL and the
    eigenvector direction therefore carries little meaning.
    """

    u: np.ndarray
    lambda1: float
    lambda2: float
    gap_degenerate: bool


def _as_feature_matrix(features) -> np.ndarray:
    try:
        arr = np.asarray(features, dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise DimensionMismatchError(f"vectors do not share a dimension: {exc}") from exc
    if arr.dtype == object:
        raise DimensionMismatchError("vectors do not share a dimension")
    if arr.shape[0] == 0 and arr.ndim <= 2:
        raise EmptyClassError("cannot accumulate a gram matrix over zero samples")
    if arr.ndim != 2:
        raise DimensionMismatchError(
            f"expected a sequence of equal-length vectors, got ndim={arr.ndim}"
        )
    if arr.shape[1] < 1:
        raise DimensionMismatchError("feature dimension must be >= 1")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatchError("features must be finite")
    return arr


def accumulate_gram(features) -> GramMatrix:
    """Sum the outer products z_i z_i^T in ascending sample order.

    The loop is deliberately sequential: float addition does not commute, and
    a fixed summation order keeps results bit-identical across runs and
    thread counts.
    """
    arr = _as_feature_matrix(features)
    n, d = arr.shape
    total = np.zeros((d, d), dtype=np.float64)
    outer = np.empty((d, d), dtype=np.float64)
    for i in range(n):
        np.outer(arr[i], arr[i], out=outer)
        total += outer
    return GramMatrix(entries=total, count=n)


def _power_iterate(matvec, dim: int, scale: float, rng, tol: float, max_iter: int,
                   strict: bool = True):
    """Power iteration with a residual stopping rule.

    Returns (eigenvalue, eigenvector). `scale` sets the residual target
    tol * max(scale, 1). With strict=False, exhausting max_iter returns the
    last Rayleigh-quotient estimate instead of raising; the deflation pass
    uses this because near-equal trailing eigenvalues stall the residual
    while the eigenvalue estimate itself is already accurate.
    """
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    target = tol * max(scale, 1.0)
    w = matvec(v)
    last_residual = np.inf
    lam = 0.0
    for _ in range(max_iter):
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            # v landed exactly in the null space; re-seed the direction.
            v = rng.standard_normal(dim)
            v /= np.linalg.norm(v)
            w = matvec(v)
            continue
        v = w / norm_w
        w = matvec(v)
        lam = float(v @ w)
        last_residual = float(np.linalg.norm(w - lam * v))
        if last_residual <= target:
            return lam, v
    if not strict:
        return lam, v
    raise ConvergenceError(
        f"power iteration did not reach residual {target:.3e} "
        f"in {max_iter} iterations (last residual {last_residual:.3e})",
        residual=last_residual,
    )


def _canonical_sign(u: np.ndarray) -> np.ndarray:
    pivot = int(np.argmax(np.abs(u)))
    return -u if u[pivot] < 0 else u


def top_eigenpair(
    gram,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 0,
) -> EigenPair:
    """Leading eigenpair of a symmetric PSD matrix via power iteration.

    Accepts a GramMatrix or a raw square array. lambda2 comes from one
    deflation step (power iteration on gram - lambda1 * u u^T, clamped at
    zero) and only feeds the degeneracy flag. A zero matrix short-circuits
    to lambda1 = 0, u = e_1, degenerate.
    """
    if isinstance(gram, GramMatrix):
        a = gram.entries
    else:
        a = np.asarray(gram, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise DimensionMismatchError("matrix dimension must be >= 1")
    if tol <= 0:
        raise DimensionMismatchError("tol must be positive")
    d = a.shape[0]
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        e1 = np.zeros(d)
        e1[0] = 1.0
        return EigenPair(u=e1, lambda1=0.0, lambda2=0.0, gap_degenerate=True)

    rng = np.random.default_rng(seed)
    lam1, u = _power_iterate(lambda x: a @ x, d, scale, rng, tol, max_iter)
    lam1 = max(lam1, 0.0)
    u = _canonical_sign(u)

    if d == 1:
        return EigenPair(u=np.array([1.0]), lambda1=lam1, lambda2=0.0,
                         gap_degenerate=lam1 == 0.0)

    def deflated(x: np.ndarray) -> np.ndarray:
        return a @ x - lam1 * u * (u @ x)

    lam2, _ = _power_iterate(deflated, d, max(lam1, scale), rng, tol, max_iter,
                             strict=False)
    lam2 = min(max(lam2, 0.0), lam1)

    if lam1 <= 0.0:
        degenerate = True
    else:
        degenerate = (lam1 - lam2) / lam1 < GAP_DEGENERATE_REL
    return EigenPair(u=u, lambda1=lam1, lambda2=lam2, gap_degenerate=degenerate)


def projector_distance(u: Vector, v: Vector) -> float:
    """Spectral-norm distance between the projectors u u^T and v v^T.

    For unit u, v this collapses to sqrt(1 - <u, v>^2) = |sin(angle(u, v))|,
    so no matrix is ever formed. It is evaluated as
    |u - v| * |u + v| / 2 (the half-angle product), which computes the same
    sine but stays accurate when the vectors are nearly parallel, where the
    inner-product form loses half its digits to cancellation.
    """
    uu = np.asarray(u, dtype=np.float64)
    vv = np.asarray(v, dtype=np.float64)
    if uu.ndim != 1 or vv.ndim != 1:
        raise DimensionMismatchError("projector_distance expects 1-D vectors")
    if uu.shape[0] != vv.shape[0]:
        raise DimensionMismatchError(
            f"dimension mismatch: {uu.shape[0]} vs {vv.shape[0]}"
        )
    for name, vec in (("u", uu), ("v", vv)):
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise NotUnitError(f"{name} must be unit norm, got |{name}| = {norm!r}")
    # 2 sin(t/2) * 2 cos(t/2) / 2 = sin(t); both factors are cancellation-free.
    sine = 0.5 * float(np.linalg.norm(uu - vv)) * float(np.linalg.norm(uu + vv))
    return min(1.0, sine)
