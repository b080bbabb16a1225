"""Select the Gram assembly backend at import time.

The compiled extension ``_gram_ext`` is used when it imports; otherwise the
numpy kernel-tree walk in :mod:`gpforecast.kernels` is used. Setting
``GPFORECAST_PURE_PYTHON=1`` forces the fallback.
"""
import os

import numpy as np

_ext = None
if os.environ.get("GPFORECAST_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _gram_ext as _ext
    except ImportError:
        _ext = None

NAME = "cython" if _ext is not None else "python"


def gram(X, theta, want_grads):
    if _ext is None:
        from .kernels import tree_gram
        return tree_gram(X, theta, want_grads)
    return _ext.gram_core(X, np.exp(theta), bool(want_grads))


def cross_gram(A, B, theta):
    if _ext is None:
        from .kernels import tree_cross_gram
        return tree_cross_gram(A, B, theta)
    return _ext.cross_core(A, B, np.exp(theta))


def python_gram(X, theta, want_grads):
    from .kernels import tree_gram
    return tree_gram(X, theta, want_grads)


def python_cross_gram(A, B, theta):
    from .kernels import tree_cross_gram
    return tree_cross_gram(A, B, theta)


def extension():
    """The compiled module, or None when running on the fallback."""
    return _ext
