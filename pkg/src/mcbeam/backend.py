"""Kernel backend selection.

The hot per-slot kernels (Jacobi eigendecomposition, Cholesky solves, the
beamformer construction and the candidate-gain sweep) exist twice: a Cython
extension ``mcbeam._kernels`` and a pure-numpy twin ``mcbeam._kernels_py``.
The compiled module is preferred when importable; set ``MCBEAM_PURE_PY=1``
to force the fallback. Both expose an identical function surface, so all
higher-level modules import ``kernels`` from here and stay backend-agnostic.
"""

import os

if os.environ.get("MCBEAM_PURE_PY"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as kernels


def backend_name():
    """Name of the active kernel backend: ``"cython"`` or ``"python"``."""
    return kernels.BACKEND


def available_backends():
    """All importable kernel backends, keyed by name."""
    from . import _kernels_py

    out = {_kernels_py.BACKEND: _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        out[_kernels.BACKEND] = _kernels
    return out
