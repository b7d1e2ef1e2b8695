"""Backend selection for the hot loops.

Set ``AIRYLAB_BACKEND=numpy`` to force the pure-numpy paths even when numba
is importable. ``AIRYLAB_BACKEND=numba`` makes a missing numba an error
instead of a silent fallback.
"""
import os

_requested = os.environ.get("AIRYLAB_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ImportError("AIRYLAB_BACKEND must be one of auto, numba, numpy; got %r" % _requested)

try:
    if _requested == "numpy":
        raise ImportError
    import numba

    HAVE_NUMBA = True
    njit = numba.njit(cache=True, nogil=True)
except ImportError:
    if _requested == "numba":
        raise
    numba = None
    HAVE_NUMBA = False

    def njit(f):
        return f


BACKEND = "numba" if HAVE_NUMBA else "numpy"


def backend():
    """Name of the active backend, ``"numba"`` or ``"numpy"``."""
    return BACKEND
