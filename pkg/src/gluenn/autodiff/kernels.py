"""Kernel backend selection.

The compiled extension is preferred; setting ``GLUENN_PURE_PYTHON=1``
forces the numpy fallback (used by the benchmark and the parity tests).
"""
import os

from . import _kernels_py

BACKEND = "python"
tanh_jet_forward = _kernels_py.tanh_jet_forward
tanh_jet_backward = _kernels_py.tanh_jet_backward

if os.environ.get("GLUENN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        BACKEND = "compiled"
        tanh_jet_forward = _compiled.tanh_jet_forward
        tanh_jet_backward = _compiled.tanh_jet_backward
