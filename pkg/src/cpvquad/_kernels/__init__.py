"""Hot numeric kernels: compiled extension with a NumPy fallback.

The Cython module ``cpvquad._kernels.native`` is preferred when it was built;
setting ``CPVQUAD_PURE_PYTHON=1`` forces the NumPy implementation.  Both
backends expose the same functions with identical semantics; equivalence is
covered by tests/test_kernels.py and relative speed by
benchmarks/bench_kernels.py.
"""

import os

from . import pyfallback

if os.environ.get("CPVQUAD_PURE_PYTHON") == "1":
    _impl = pyfallback
    BACKEND = "python"
else:
    try:
        from . import native as _impl

        BACKEND = "native"
    except ImportError:
        _impl = pyfallback
        BACKEND = "python"

pn_eval = _impl.pn_eval
pn_eval_pair = _impl.pn_eval_pair
pn_sum_sq = _impl.pn_sum_sq
pn_matrix = _impl.pn_matrix
cauchy_node_sum = _impl.cauchy_node_sum
cauchy_node_sum_abs = _impl.cauchy_node_sum_abs
pn_eval_scaled = _impl.pn_eval_scaled

__all__ = [
    "BACKEND",
    "pn_eval",
    "pn_eval_pair",
    "pn_sum_sq",
    "pn_matrix",
    "cauchy_node_sum",
    "cauchy_node_sum_abs",
    "pn_eval_scaled",
    "pyfallback",
]
