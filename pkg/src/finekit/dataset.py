"""Dataset container shared by the detector, the generators, and file io."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InvalidSpecError


@dataclass
class Dataset:
    """Feature vectors with observed labels and optional ground-truth labels.

    `observed_labels` are what the detector sees; `true_labels`, when
    present, let the analysis side score a selection against ground truth.
    Classes in [0, num_classes) are normally all expected to appear; a
    dataset that legitimately misses some (e.g. a single-class slice) must
    say so via allow_missing_classes.
    """

    features: np.ndarray
    observed_labels: np.ndarray
    num_classes: int
    true_labels: np.ndarray | None = None
    allow_missing_classes: bool = field(default=False, repr=False)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.observed_labels = np.asarray(self.observed_labels, dtype=np.int64)
        if self.true_labels is not None:
            self.true_labels = np.asarray(self.true_labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise DimensionMismatchError(
                f"features must be (n, d), got shape {self.features.shape}"
            )
        n = self.features.shape[0]
        if self.observed_labels.shape != (n,):
            raise DimensionMismatchError(
                f"expected {n} observed labels, got shape {self.observed_labels.shape}"
            )
        if self.true_labels is not None and self.true_labels.shape != (n,):
            raise DimensionMismatchError(
                f"expected {n} true labels, got shape {self.true_labels.shape}"
            )
        if self.num_classes < 1:
            raise InvalidSpecError("num_classes must be >= 1")
        for name, labels in (("observed", self.observed_labels),
                             ("true", self.true_labels)):
            if labels is None or labels.size == 0:
                continue
            if labels.min() < 0 or labels.max() >= self.num_classes:
                raise InvalidSpecError(
                    f"{name} labels must lie in [0, {self.num_classes})"
                )
        if n > 0 and not self.allow_missing_classes:
            present = np.unique(self.observed_labels)
            if present.size != self.num_classes:
                missing = sorted(set(range(self.num_classes)) - set(present.tolist()))
                raise InvalidSpecError(
                    f"classes {missing} have no samples; pass "
                    "allow_missing_classes=True if that is intended"
                )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def has_true_labels(self) -> bool:
        return self.true_labels is not None

    def clean_mask_from_truth(self) -> np.ndarray:
        """Boolean mask, true where the observed label matches ground truth."""
        if self.true_labels is None:
            raise InvalidSpecError("dataset carries no true labels")
        return self.observed_labels == self.true_labels
