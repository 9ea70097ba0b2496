"""Kernel backend selection.

The compiled extension is used when it imports; setting ``NORMSEP_PURE_PYTHON=1``
forces the numpy fallback. ``BACKEND`` names the active one.
"""
import os

from . import _kernels_py

if os.environ.get("NORMSEP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

forward = _impl.forward
loss_grad = _impl.loss_grad
min_pairwise_sqdist = _impl.min_pairwise_sqdist
n_params = _kernels_py.n_params
