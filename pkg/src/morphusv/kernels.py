"""Backend selection for the integration kernels.

The compiled ``_ckernels`` extension is used when importable; otherwise, or
when ``MORPHUSV_PURE_PYTHON`` is set to a non-empty value, the pure-Python
``_pykernels`` module is used. Both expose ``qdot``, ``rk4_step``,
``rollout``, ``rollout_sensitivity`` and ``box_qp``.
"""
import os

from . import _pykernels

if os.environ.get("MORPHUSV_PURE_PYTHON"):
    _backend = _pykernels
else:
    try:
        from . import _ckernels as _backend
    except ImportError:  # extension not built
        _backend = _pykernels

BACKEND = _backend.NAME

qdot = _backend.qdot
rk4_step = _backend.rk4_step
rollout = _backend.rollout
rollout_sensitivity = _backend.rollout_sensitivity
box_qp = _backend.box_qp


def backends():
    """Return every importable backend module keyed by name."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
