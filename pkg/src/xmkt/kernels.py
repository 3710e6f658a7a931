"""Backend selection for the polynomial kernels.

The compiled extension is used when importable; set ``XMKT_PURE_PYTHON=1``
to force the pure-Python implementation.
"""

import os
import warnings

from . import _kernels_py

if os.environ.get("XMKT_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # pragma: no cover - depends on the build
        warnings.warn(
            "xmkt._kernels extension not built; using the pure-Python kernels "
            "(Monte Carlo runs will be much slower)",
            RuntimeWarning,
            stacklevel=2,
        )
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "compiled"
ROOT_TOL = _impl.ROOT_TOL
TIE_TOL = _impl.TIE_TOL
MAXDEG = _impl.MAXDEG

poly_roots = _impl.poly_roots
poly_argmax = _impl.poly_argmax
pp_argmax = _impl.pp_argmax
pp_argmax_batch = _impl.pp_argmax_batch


def backends():
    """Return the available kernel modules keyed by name."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:  # pragma: no cover
        pass
    else:
        found["compiled"] = _kernels
    return found
