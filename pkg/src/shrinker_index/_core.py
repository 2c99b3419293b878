"""Backend selection for the hot loops.

The compiled extension is used when it imports cleanly; setting
``SHRINKER_INDEX_PURE=1`` forces the pure-Python twin.
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _kernels_c
except ImportError:  # pragma: no cover - depends on the build
    _kernels_c = None


def get_backend(name=None):
    """Return the kernel module named ``"compiled"`` or ``"python"``.

    With ``name=None`` the compiled module is preferred unless the
    environment override is set or the build did not produce it.
    """
    if name is None:
        if os.environ.get("SHRINKER_INDEX_PURE") == "1" or _kernels_c is None:
            return _kernels_py
        return _kernels_c
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _kernels_c is None:
            raise ImportError("compiled kernels are not built")
        return _kernels_c
    raise ValueError(f"unknown backend {name!r}")


def backend_name():
    return "compiled" if get_backend() is _kernels_c else "python"


HAVE_COMPILED = _kernels_c is not None
