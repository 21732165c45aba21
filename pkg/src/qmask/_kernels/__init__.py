"""Kernel backend selection.

The hot numerical kernels (generator-parameterized unitaries, the masking
surrogate objective, Jacobi joint off-diagonalization) exist twice: a compiled
Cython extension (``_core``) and a pure-NumPy fallback (``_py``) with identical
semantics.  The compiled module is preferred when it imported successfully;
set ``QMASK_BACKEND=python`` or ``QMASK_BACKEND=cython`` to force a choice.
"""

import os

_requested = os.environ.get("QMASK_BACKEND", "").strip().lower()

if _requested in ("python", "numpy", "py"):
    from . import _py as _impl
elif _requested in ("cython", "c", "compiled"):
    from . import _core as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _py as _impl

BACKEND = _impl.BACKEND
unitary_from_params = _impl.unitary_from_params
jacobi_minimize = _impl.jacobi_minimize
SpanObjective = _impl.SpanObjective

__all__ = ["BACKEND", "unitary_from_params", "jacobi_minimize", "SpanObjective"]
