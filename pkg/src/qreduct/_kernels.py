"""Select the compiled kernels when available, else the numpy reference.

Set ``QREDUCT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

if os.environ.get("QREDUCT_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND
consistent_mask = _impl.consistent_mask
cell_rescale = _impl.cell_rescale
bit_populations = _impl.bit_populations
