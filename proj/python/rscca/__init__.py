"""Robust sparse canonical correlation analysis.

Thin wrapper over the C++ library. Matrices are numpy arrays with observations in rows.
"""

from ._rscca import (
    CcaFit,
    PairLog,
    RsccaError,
    UnsupportedConfigError,
    cv_score,
    design_names,
    distances,
    fit,
    generate,
    robust_correlation,
    select_rank,
    subspace_angle,
    true_vectors,
)

METHODS = ("classical", "robust", "sparse", "robust-sparse")

__all__ = [
    "CcaFit",
    "METHODS",
    "PairLog",
    "RsccaError",
    "UnsupportedConfigError",
    "cv_score",
    "design_names",
    "distances",
    "fit",
    "generate",
    "robust_correlation",
    "select_rank",
    "subspace_angle",
    "true_vectors",
]
