"""Precision-driven randomized low-rank approximation."""

from .errors import (
    ConfigError,
    DecompositionError,
    FormatError,
    InternalConsistencyError,
    InvalidArgumentError,
    SingularTriangularError,
    UndefinedMetricError,
)
from .matcore import RngStream, count_flops, gaussian_matrix
from .rangefinder import RangeBasis, block_rangefinder, renormalize_columnwise, residual_energy
from .grsvd import SvdApprox, grsvd, reconstruct
from .gri import RegularizedInverse, apply, gri_left, gri_right, materialize
from .metrics import eps_rank_oracle

__version__ = "0.1.0"
