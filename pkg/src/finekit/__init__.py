"""Noisy-label detection via per-class principal-alignment scores.

The core pipeline builds one uncentered gram matrix per observed class,
scores every sample by its squared projection on the class's top
eigenvector, and splits each class's scores with a two-component mixture
to decide which labels look clean. Around that sit synthetic data
generators, label-noise injectors, analysis routines for the supporting
theory, and a binary feature/selection file format, all reproducible
from a single seed.
"""

from .analysis import (
    BoundReport,
    Metrics,
    PrBounds,
    calibrate_constant_c,
    compute_prf,
    empirical_perturbation,
    hyperplane_heatmap,
    normal_cdf,
    perturbation_bound,
    pr_lower_bounds,
)
from .dataset import Dataset
from .detector import (
    SelectionResult,
    SubsampleRow,
    fine_iterate,
    fine_select,
    subsample_similarity,
)
from .errors import FinekitError
from .gmm import GmmFit, clean_posterior, fit_gmm2
from .io import (
    read_csv_features,
    read_features,
    read_selection,
    write_features,
    write_selection,
)
from .linalg import (
    EigenPair,
    GramMatrix,
    accumulate_gram,
    projector_distance,
    top_eigenpair,
)
from .noise import CorruptionResult, NoiseSpec, inject, parse_mapping
from .synthetic import (
    MulticlassDataset,
    SyntheticDataset,
    SyntheticSpec,
    generate_lda,
    generate_multiclass,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "CorruptionResult",
    "Dataset",
    "EigenPair",
    "FinekitError",
    "GmmFit",
    "GramMatrix",
    "Metrics",
    "MulticlassDataset",
    "PrBounds",
    "SelectionResult",
    "SubsampleRow",
    "SyntheticDataset",
    "SyntheticSpec",
    "accumulate_gram",
    "calibrate_constant_c",
    "clean_posterior",
    "compute_prf",
    "empirical_perturbation",
    "fine_iterate",
    "fine_select",
    "fit_gmm2",
    "generate_lda",
    "generate_multiclass",
    "hyperplane_heatmap",
    "inject",
    "normal_cdf",
    "parse_mapping",
    "perturbation_bound",
    "pr_lower_bounds",
    "projector_distance",
    "read_csv_features",
    "read_features",
    "read_selection",
    "subsample_similarity",
    "top_eigenpair",
    "write_features",
    "write_selection",
]
