"""Kernel backend selection.

The environment variable ``EIV_GOF_BACKEND`` picks the implementation:

* ``auto`` (default) -- use the numba backend when numba imports cleanly,
  otherwise fall back to pure numpy;
* ``numpy`` -- force the pure-numpy kernels;
* ``numba`` -- require the numba kernels, raising if numba is unavailable.

The chosen module is re-exported here as ``kernels`` and its name as
``BACKEND``.  Both backends expose the identical function set, so all
call sites go through this module and stay backend-agnostic.
"""

import os

from . import _kernels_numpy

_requested = os.environ.get("EIV_GOF_BACKEND", "auto").strip().lower()

if _requested not in ("auto", "numpy", "numba"):
    raise ValueError(
        f"EIV_GOF_BACKEND must be 'auto', 'numpy' or 'numba', got {_requested!r}"
    )

if _requested == "numpy":
    kernels = _kernels_numpy
elif _requested == "numba":
    from . import _kernels_numba
    kernels = _kernels_numba
else:
    try:
        from . import _kernels_numba
        kernels = _kernels_numba
    except ImportError:
        kernels = _kernels_numpy

BACKEND = kernels.NAME
