"""Backend selection for the inner-loop kernels.

The compiled extension ``pgrad._ckernels`` is used when it imports; otherwise
the numpy implementation in ``pgrad._pykernels`` is used. Set
``PGRAD_KERNELS=python`` to force the fallback.
"""

import os

from . import _pykernels

_NAMES = (
    "grid_sum",
    "row_sqnorm",
    "centered_diff",
    "forward_diff",
    "second_diff",
    "pseudo_huber",
    "pseudo_huber_diff",
    "cosine",
    "cosine_diff",
)

_impl = _pykernels
BACKEND = "python"
if os.environ.get("PGRAD_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

grid_sum = _impl.grid_sum
row_sqnorm = _impl.row_sqnorm
centered_diff = _impl.centered_diff
forward_diff = _impl.forward_diff
second_diff = _impl.second_diff
pseudo_huber = _impl.pseudo_huber
pseudo_huber_diff = _impl.pseudo_huber_diff
cosine = _impl.cosine
cosine_diff = _impl.cosine_diff


def backend_module(name):
    """Return the kernel module for ``name`` in {"python", "cython"}."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
