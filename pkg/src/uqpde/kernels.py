"""Backend selection for the numerical inner loops.

The compiled extension is used when it imports; setting ``UQPDE_PURE_PYTHON=1``
forces the numpy fallback. ``BACKEND`` names the active implementation.
"""

import os

from . import _pykernels

if os.environ.get("UQPDE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "cython"

assemble_csr_data = _impl.assemble_csr_data
euler_tridiag = _impl.euler_tridiag
leapfrog_record = _impl.leapfrog_record
cholesky_symbolic = _impl.cholesky_symbolic
cholesky_numeric = _impl.cholesky_numeric
cholesky_solve = _impl.cholesky_solve


def available_backends():
    """Map backend name to module for every importable implementation."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
