"""Boolean networks solved by continuous projection onto constraint subspaces."""
from ._kernels import BACKEND
from .errors import (
    AnnihilatedError,
    DegenerateNetworkError,
    InfeasibleError,
    NetworkParseError,
    NetworkValidationError,
    PropagationConflict,
    QReductError,
    RegisterError,
)
from .hilbert import DensityMatrix, LinearOperator, StateVector, Subspace

__version__ = "0.1.0"
