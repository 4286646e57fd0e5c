"""Kernel lane selection.

Imports the compiled core (:mod:`loggas._core`) when available and falls
back to the pure-Python twin otherwise.  Set ``LOGGAS_PURE_PYTHON=1`` to
force the fallback (used by the lane-parity tests and benchmarks).  Both
lanes implement identical contracts; see :mod:`loggas._core_py`.
"""

import os

if os.environ.get("LOGGAS_PURE_PYTHON"):
    from . import _core_py as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _core_py as _impl

LANE = _impl.LANE

RngCore = _impl.RngCore
stream_origin = _impl.stream_origin
tridiag_eigvals = _impl.tridiag_eigvals
tridiag_eigvals_batch = _impl.tridiag_eigvals_batch
sample_spectra = _impl.sample_spectra
normals_batch = _impl.normals_batch
shuffle_rows = _impl.shuffle_rows
dou_paths = _impl.dou_paths
dou_coupled = _impl.dou_coupled


def active_lane():
    """Name of the kernel lane in use: 'compiled' or 'python'."""
    return LANE


def available_lanes():
    """Import every buildable lane, keyed by name (for benchmarks/tests)."""
    from . import _core_py

    lanes = {"python": _core_py}
    try:
        from . import _core  # type: ignore[attr-defined]

        lanes["compiled"] = _core
    except ImportError:
        pass
    return lanes
