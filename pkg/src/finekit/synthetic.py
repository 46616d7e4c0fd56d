"""Synthetic feature generators matching the theoretical data model.

The binary generator draws one clean cluster aligned on a random unit vector
v and one mislabeled cluster aligned on w at a chosen angle theta from v,
both with isotropic Gaussian noise. The multiclass generator extends this to
K independent random unit directions so the full selection pipeline can run
end to end without any real data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import InvalidSpecError

HALF_PI = math.pi / 2.0


@dataclass
class SyntheticSpec:
    """Parameters of the binary aligned-clusters model.

    theta is the angle between the noisy-cluster direction w and the clean
    direction v; sigma is the per-coordinate white-noise standard deviation.
    """

    d: int
    n_clean: int
    n_noisy: int
    theta: float
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise InvalidSpecError("d must be >= 2")
        if self.n_clean < 1:
            raise InvalidSpecError("n_clean must be >= 1 (the bound needs clean data)")
        if self.n_noisy < 0:
            raise InvalidSpecError("n_noisy must be >= 0")
        if not (math.isfinite(self.theta) and 0.0 <= self.theta <= HALF_PI + 1e-12):
            raise InvalidSpecError("theta must lie in [0, pi/2]")
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise InvalidSpecError("sigma must be >= 0")

    @property
    def tau(self) -> float:
        return self.n_noisy / self.n_clean


@dataclass
class SyntheticDataset:
    """Binary synthetic sample set with its generating directions attached."""

    features: np.ndarray
    observed_labels: np.ndarray
    true_mask: np.ndarray
    v: np.ndarray
    w: np.ndarray
    spec: SyntheticSpec

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_plus(self) -> int:
        return int(self.true_mask.sum())

    @property
    def n_minus(self) -> int:
        return self.n - self.n_plus


def _random_unit(rng, d: int) -> np.ndarray:
    while True:
        g = rng.standard_normal(d)
        norm = np.linalg.norm(g)
        if norm > 1e-12:
            return g / norm


def _unit_orthogonal_to(rng, v: np.ndarray) -> np.ndarray:
    while True:
        g = rng.standard_normal(v.shape[0])
        g -= (g @ v) * v
        norm = np.linalg.norm(g)
        if norm > 1e-8:
            return g / norm


def generate_lda(spec: SyntheticSpec) -> SyntheticDataset:
    """Draw the two aligned Gaussian clusters of the binary model.

    Clean samples come first (v + noise), then the mislabeled ones
    (w + noise). All randomness flows from spec.seed, so equal specs give
    bit-identical datasets.
    """
    rng = np.random.default_rng(spec.seed)
    v = _random_unit(rng, spec.d)
    v_perp = _unit_orthogonal_to(rng, v)
    w = math.cos(spec.theta) * v + math.sin(spec.theta) * v_perp

    n = spec.n_clean + spec.n_noisy
    features = np.empty((n, spec.d), dtype=np.float64)
    features[: spec.n_clean] = v
    features[spec.n_clean :] = w
    if spec.sigma > 0.0:
        features += spec.sigma * rng.standard_normal((n, spec.d))

    true_mask = np.zeros(n, dtype=bool)
    true_mask[: spec.n_clean] = True
    observed = np.ones(n, dtype=np.int64)
    return SyntheticDataset(
        features=features,
        observed_labels=observed,
        true_mask=true_mask,
        v=v,
        w=w,
        spec=spec,
    )


@dataclass
class MulticlassDataset:
    """Multiclass synthetic dataset plus the directions it was drawn from.

    `pairwise_abs_cos[i][j]` records |<v_i, v_j>| so callers can report how
    close to orthogonal the class directions landed.
    """

    dataset: Dataset
    directions: np.ndarray
    pairwise_abs_cos: np.ndarray


def generate_multiclass(
    d: int, k: int, per_class_n: int, sigma: float, seed: int = 0
) -> MulticlassDataset:
    """K aligned clusters on independent random unit directions.

    Class directions are not forced orthogonal; in high dimension they land
    nearly orthogonal on their own. Per-class noise uses an independent
    child stream so any one class's samples do not depend on the others.
    """
    if k < 2:
        raise InvalidSpecError("k must be >= 2")
    if per_class_n < 1:
        raise InvalidSpecError("per_class_n must be >= 1")
    if d < 2:
        raise InvalidSpecError("d must be >= 2")
    if not (math.isfinite(sigma) and sigma >= 0.0):
        raise InvalidSpecError("sigma must be >= 0")

    root = np.random.SeedSequence(entropy=seed)
    children = root.spawn(k + 1)
    dir_rng = np.random.default_rng(children[0])
    directions = np.stack([_random_unit(dir_rng, d) for _ in range(k)])

    n = k * per_class_n
    features = np.empty((n, d), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    for c in range(k):
        block = slice(c * per_class_n, (c + 1) * per_class_n)
        labels[block] = c
        features[block] = directions[c]
        if sigma > 0.0:
            class_rng = np.random.default_rng(children[c + 1])
            features[block] += sigma * class_rng.standard_normal((per_class_n, d))

    cos = np.abs(directions @ directions.T)
    np.fill_diagonal(cos, 1.0)
    dataset = Dataset(
        features=features,
        observed_labels=labels,
        true_labels=labels.copy(),
        num_classes=k,
    )
    return MulticlassDataset(dataset=dataset, directions=directions, pairwise_abs_cos=cos)
