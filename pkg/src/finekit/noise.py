"""Seeded label-corruption generators with exact corruption counts.

Three corruption models: symmetric (a fixed fraction of all labels redrawn
uniformly over the other classes), asymmetric pairs (source classes flipped
to mapped targets), and asymmetric circular (each class flipped to its
successor inside a contiguous superclass block, wrapping at the block edge).
Counts are exact, floor(rate * n) per scope, never Bernoulli draws, so a
requested rate is reproduced to the sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidMappingError,
    InvalidRateError,
    InvalidSuperclassError,
    ParseError,
)

KIND_SYMMETRIC = "symmetric"
KIND_ASYMMETRIC_PAIRS = "asymmetric_pairs"
KIND_ASYMMETRIC_CIRCULAR = "asymmetric_circular"
KINDS = (KIND_SYMMETRIC, KIND_ASYMMETRIC_PAIRS, KIND_ASYMMETRIC_CIRCULAR)


@dataclass
class NoiseSpec:
    """Corruption model parameters.

    `mapping` applies to asymmetric_pairs only; `superclass_size` to
    asymmetric_circular; `include_true_class` to symmetric (when true, the
    replacement draw is uniform over all K classes, so the realized
    corruption count can fall below floor(rate * n)).
    """

    kind: str
    rate: float
    num_classes: int
    mapping: list[tuple[int, int]] | None = None
    superclass_size: int | None = None
    include_true_class: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidMappingError(
                f"unknown noise kind {self.kind!r}; expected one of {KINDS}"
            )
        if not (math.isfinite(self.rate) and 0.0 <= self.rate <= 1.0):
            raise InvalidRateError(f"rate must lie in [0, 1], got {self.rate!r}")
        if self.num_classes < 2:
            raise InvalidMappingError("num_classes must be >= 2")
        if self.kind == KIND_ASYMMETRIC_PAIRS:
            if not self.mapping:
                raise InvalidMappingError("asymmetric_pairs requires a mapping")
            seen = set()
            for src, dst in self.mapping:
                if not (0 <= src < self.num_classes and 0 <= dst < self.num_classes):
                    raise InvalidMappingError(
                        f"mapping {src}>{dst} references a class outside "
                        f"[0, {self.num_classes})"
                    )
                if src == dst:
                    raise InvalidMappingError(f"mapping {src}>{dst} maps a class to itself")
                if src in seen:
                    raise InvalidMappingError(f"class {src} appears twice as a source")
                seen.add(src)
        if self.kind == KIND_ASYMMETRIC_CIRCULAR:
            size = self.superclass_size
            if size is None or size < 2:
                raise InvalidSuperclassError("superclass_size must be an integer >= 2")
            if self.num_classes % size != 0:
                raise InvalidSuperclassError(
                    f"num_classes {self.num_classes} is not divisible by "
                    f"superclass_size {size}"
                )


@dataclass
class CorruptionResult:
    """Corrupted labels next to the originals, with the flip mask."""

    observed_labels: np.ndarray
    true_labels: np.ndarray
    corrupted_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        self.corrupted_mask = self.observed_labels != self.true_labels

    @property
    def num_corrupted(self) -> int:
        return int(self.corrupted_mask.sum())


def parse_mapping(text: str, num_classes: int) -> list[tuple[int, int]]:
    """Parse comma-separated "from>to" integer pairs, e.g. "9>1,2>0,3>5"."""
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(">")
        if len(parts) != 2:
            raise ParseError(f"expected 'from>to', got {chunk!r}")
        try:
            src, dst = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ParseError(f"non-integer class id in {chunk!r}") from exc
        pairs.append((src, dst))
    if not pairs:
        raise ParseError("mapping text contains no pairs")
    for src, dst in pairs:
        if not (0 <= src < num_classes and 0 <= dst < num_classes):
            raise InvalidMappingError(
                f"mapping {src}>{dst} references a class outside [0, {num_classes})"
            )
        if src == dst:
            raise InvalidMappingError(f"mapping {src}>{dst} maps a class to itself")
    return pairs


def _checked_labels(labels, num_classes: int) -> np.ndarray:
    arr = np.asarray(labels, dtype=np.int64)
    if arr.ndim != 1:
        raise InvalidMappingError("labels must be a 1-D integer array")
    if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
        raise InvalidMappingError(f"labels must lie in [0, {num_classes})")
    return arr


def _class_rng(seed: int, class_id: int) -> np.random.Generator:
    # One independent child stream per source class: corruption of class c is
    # the same no matter how many other classes exist or in what order they
    # are processed.
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(class_id,)))


def inject_symmetric(labels, spec: NoiseSpec) -> CorruptionResult:
    """Redraw exactly floor(rate * n) uniformly chosen labels.

    Default replacement is uniform over the K-1 other classes, so the
    realized corrupted fraction is exactly floor(rate * n) / n. With
    include_true_class=True, replacement is uniform over all K classes and
    the mask reflects the labels that actually changed.
    """
    if spec.kind != KIND_SYMMETRIC:
        raise InvalidRateError(f"spec kind is {spec.kind!r}, not symmetric")
    true = _checked_labels(labels, spec.num_classes)
    n = true.shape[0]
    count = math.floor(spec.rate * n)
    observed = true.copy()
    if count > 0:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=spec.seed))
        chosen = np.sort(rng.choice(n, size=count, replace=False))
        if spec.include_true_class:
            observed[chosen] = rng.integers(0, spec.num_classes, size=count)
        else:
            draws = rng.integers(0, spec.num_classes - 1, size=count)
            draws += draws >= true[chosen]
            observed[chosen] = draws
    return CorruptionResult(observed_labels=observed, true_labels=true)


def _relabel_per_class(true: np.ndarray, rate: float, seed: int,
                       targets: dict[int, int]) -> np.ndarray:
    observed = true.copy()
    for src in sorted(targets):
        idx = np.flatnonzero(true == src)
        count = math.floor(rate * idx.size)
        if count == 0:
            continue
        rng = _class_rng(seed, src)
        picked = rng.choice(idx.size, size=count, replace=False)
        observed[idx[np.sort(picked)]] = targets[src]
    return observed


def inject_asymmetric_pairs(labels, spec: NoiseSpec) -> CorruptionResult:
    """Flip exactly floor(rate * n_class) samples of each mapped source class."""
    if spec.kind != KIND_ASYMMETRIC_PAIRS:
        raise InvalidMappingError(f"spec kind is {spec.kind!r}, not asymmetric_pairs")
    true = _checked_labels(labels, spec.num_classes)
    targets = {src: dst for src, dst in spec.mapping}
    observed = _relabel_per_class(true, spec.rate, spec.seed, targets)
    return CorruptionResult(observed_labels=observed, true_labels=true)


def circular_successor(class_id: int, superclass_size: int) -> int:
    """Next class inside the contiguous superclass block, wrapping at the edge."""
    base = (class_id // superclass_size) * superclass_size
    return base + (class_id - base + 1) % superclass_size


def inject_asymmetric_circular(labels, spec: NoiseSpec) -> CorruptionResult:
    """Flip exactly floor(rate * n_class) samples of every class to its block successor."""
    if spec.kind != KIND_ASYMMETRIC_CIRCULAR:
        raise InvalidSuperclassError(
            f"spec kind is {spec.kind!r}, not asymmetric_circular"
        )
    true = _checked_labels(labels, spec.num_classes)
    size = spec.superclass_size
    targets = {c: circular_successor(c, size) for c in range(spec.num_classes)}
    observed = _relabel_per_class(true, spec.rate, spec.seed, targets)
    return CorruptionResult(observed_labels=observed, true_labels=true)


def inject(labels, spec: NoiseSpec) -> CorruptionResult:
    """Dispatch on spec.kind."""
    if spec.kind == KIND_SYMMETRIC:
        return inject_symmetric(labels, spec)
    if spec.kind == KIND_ASYMMETRIC_PAIRS:
        return inject_asymmetric_pairs(labels, spec)
    return inject_asymmetric_circular(labels, spec)
