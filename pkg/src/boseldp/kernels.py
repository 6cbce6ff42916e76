"""Backend selection for the numerical kernels.

The compiled extension is used when it imports cleanly; otherwise, or when
``BOSELDP_PURE_PYTHON`` is set to a non-empty value other than ``0``, the
pure-Python implementations are used.  ``BACKEND`` names the active one.
"""

import os

from . import _kernels_py

_force_pure = os.environ.get("BOSELDP_PURE_PYTHON", "") not in ("", "0")

_compiled = None
if not _force_pure:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py
BACKEND = "compiled" if _compiled is not None else "python"

lambert_w = _impl.lambert_w
lambert_w_array = _impl.lambert_w_array
bose_series = _impl.bose_series
power_exp_sum = _impl.power_exp_sum
mh_block = _impl.mh_block


def compiled_available():
    """Return True when the compiled extension could be imported."""
    if _compiled is not None:
        return True
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True


def backends():
    """Return a dict of every importable backend module keyed by name."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
        out["compiled"] = _kernels
    except ImportError:
        pass
    return out
