"""Hot numerical kernels with a compiled core and a numpy fallback.

The Cython extension ``_kernels`` is used when it was built; otherwise the
pure-Python module ``_fallback`` is loaded.  Setting ``FTMKIT_PURE_PYTHON=1``
forces the fallback.  Both expose:

build_tree
    Greedy CART growth into flat node arrays.
smo_solve
    SMO solver for the epsilon-SVR dual over a precomputed kernel matrix.
segmented_grid_search
    Exhaustive one/two-breakpoint search over prefix statistics.
"""

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("FTMKIT_PURE_PYTHON") != "1":
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        _impl = _kernels
        BACKEND = "cython"


def available_backends():
    out = {"python": _fallback}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out


def build_tree(X, y, min_leaf):
    return _impl.build_tree(X, y, int(min_leaf))


def smo_solve(K, target, C, epsilon, tol, max_iter):
    return _impl.smo_solve(K, target, float(C), float(epsilon), float(tol), int(max_iter))


def segmented_grid_search(stats, cuts, n_bp, min_points):
    return _impl.segmented_grid_search(stats, cuts, int(n_bp), int(max(1, min_points)))
