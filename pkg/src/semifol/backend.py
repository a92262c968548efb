"""Kernel backend selection.

The compiled extension (semifol._kernels, Cython) is used when it imported
cleanly; otherwise the pure-Python twin takes over.  Setting the environment
variable SEMIFOL_PURE_PY=1 before import forces the fallback, which is how the
benchmark compares the two.
"""

import os

from . import _kernels_py

if os.environ.get("SEMIFOL_PURE_PY"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

eval_values = _impl.eval_values
eval_jets = _impl.eval_jets
eval_value_scalar = _impl.eval_value_scalar
eval_jet_scalar = _impl.eval_jet_scalar


def backend_name():
    return _impl.BACKEND_NAME


def get_backend(name):
    """Explicit backend module by name ('compiled' or 'python'); for benchmarks."""
    if name == "python":
        return _kernels_py
    from . import _kernels
    return _kernels
