"""Backend selection for the elementwise kernels.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``PHIPROJ_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

KIND_BURG = _kernels_py.KIND_BURG
KIND_KL = _kernels_py.KIND_KL
KIND_POWER = _kernels_py.KIND_POWER
KIND_CHI2_FULL = _kernels_py.KIND_CHI2_FULL

_compiled = None
if os.environ.get("PHIPROJ_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py
BACKEND = "compiled" if _compiled is not None else "python"


def available_backends():
    """Mapping of backend name to kernel module, for tests and benchmarks."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


phi_values = _impl.phi_values
conj_values = _impl.conj_values
grid_objective = _impl.grid_objective
