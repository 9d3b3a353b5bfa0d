"""Backend selection for the q-loop kernels.

The compiled extension is used when it imports; set ``MULTDIOPH_PURE_PYTHON=1``
to force the pure-Python implementation.  Both expose the same functions and
return bit-identical results.
"""
import os

from . import _kernels_py as python_backend

try:
    from . import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and not os.environ.get("MULTDIOPH_PURE_PYTHON"):
    backend = compiled_backend
    BACKEND = "cython"
else:
    backend = python_backend
    BACKEND = "python"

NLAYERS = python_backend.NLAYERS

count_diag_seg = backend.count_diag_seg
count_box_seg = backend.count_box_seg
recsum_seg = backend.recsum_seg
phi_seg = backend.phi_seg
