"""Edge-aware optimization with the domain transform."""

import numba as _numba

# skip the TBB layer: it warns on older TBB installs and gains nothing here
_numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

from .domain_transform import (  # noqa: E402
    DomainTransform,
    DtParams,
    box_count_row,
    box_mean_row,
    confidence_from_variance,
    edge_aware_mean,
    edge_aware_variance,
    warp_row,
)
from .solver import DataTerm, ProblemInstance, SolverConfig, objective, solve  # noqa: E402

__all__ = [
    "DataTerm",
    "DomainTransform",
    "DtParams",
    "ProblemInstance",
    "SolverConfig",
    "box_count_row",
    "box_mean_row",
    "confidence_from_variance",
    "edge_aware_mean",
    "edge_aware_variance",
    "objective",
    "solve",
    "warp_row",
]
