"""L^p Fourier analysis on compact quantum groups at finite truncation."""

from .backend import (
    BackendMismatchError,
    CoeffIndex,
    ConsistencyError,
    Functional,
    GnsVector,
    QuantumGroupBackend,
    TruncationError,
)
from .groups import FiniteGroupBackend, cyclic, group_convolve, group_fourier, symmetric3
from .linalg import (
    BlockDiagonal,
    InterpolationParams,
    InvalidExponentError,
    PositiveDiagonal,
    diag_power,
    schatten_norm,
    weighted_lp_norm,
)
from .suq2 import LaurentOperator, SUq2Backend, build_generators, haar_state

__version__ = "0.1.0"
