"""Hot-loop kernels with backend selection.

The compiled extension (``_native``, Cython) is preferred when it imported
successfully; otherwise the pure-NumPy implementation is used. Set the
environment variable ``SKULLSTRIP_BACKEND=numpy`` (or ``native``) before
import to force a backend. Both produce identical results for unit voxel
spacing and agree to floating-point rounding otherwise.
"""

import os

from . import _numpy

try:
    from . import _native
except ImportError:
    _native = None

_requested = os.environ.get("SKULLSTRIP_BACKEND", "").strip().lower()
if _requested == "numpy":
    _impl = _numpy
elif _requested == "native":
    if _native is None:
        raise ImportError(
            "SKULLSTRIP_BACKEND=native but the compiled extension is not built; "
            "run `python setup.py build_ext --inplace`"
        )
    _impl = _native
else:
    _impl = _native if _native is not None else _numpy


def backend_name() -> str:
    return _impl.NAME


def has_native() -> bool:
    return _native is not None


def conv3d_forward(x, w, b):
    return _impl.conv3d_forward(x, w, b)


def conv3d_backward(x, w, gy):
    return _impl.conv3d_backward(x, w, gy)


def edt_squared(mask, voxel_size):
    return _impl.edt_squared(mask, voxel_size)
