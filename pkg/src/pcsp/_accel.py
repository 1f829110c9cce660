"""Switch between numba-compiled kernels and their plain Python versions.

Set ``PCSP_NO_NUMBA=1`` before import to run every kernel as ordinary
Python over numpy arrays.  The kernels are written once; the fallback is
the same source executed by the interpreter.
"""

import os

_flag = os.environ.get("PCSP_NO_NUMBA", "").strip().lower()
DISABLED = _flag not in ("", "0", "false", "no")

try:
    if DISABLED:
        raise ImportError("numba disabled by PCSP_NO_NUMBA")
    import numba as _numba
    HAVE_NUMBA = True
except ImportError:
    _numba = None
    HAVE_NUMBA = False


def kernel(fn=None, **opts):
    """Compile ``fn`` with ``numba.njit`` when available, else return it unchanged."""
    opts.setdefault("cache", True)
    opts.setdefault("nogil", True)

    def wrap(f):
        if not HAVE_NUMBA:
            f.py_func = f
            return f
        return _numba.njit(**opts)(f)

    if fn is not None:
        return wrap(fn)
    return wrap


def backend_name():
    return "numba" if HAVE_NUMBA else "python"
