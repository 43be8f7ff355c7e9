"""Kernel backend selection.

The compiled Cython core is used when it importable; set
``RSQP_PURE_PYTHON=1`` to force the NumPy fallback (useful for
debugging and for the backend benchmark).
"""

import os

from . import pycore

if os.environ.get("RSQP_PURE_PYTHON"):
    impl = pycore
else:
    try:
        from . import _core as impl  # type: ignore[no-redef]
    except ImportError:
        impl = pycore


def backend_name() -> str:
    return impl.BACKEND
