"""Stepping-kernel backend selection.

Prefers the compiled Cython kernel; falls back to the pure-Python twin when
the extension is missing or when ``QSIRS_PURE_PYTHON=1`` is set.  Both
backends expose the same ``integrate_raw``/``rhs`` contract and identical
arithmetic; ``benchmarks/bench_kernel.py`` compares them.
"""
from __future__ import annotations

import os

from . import _core_py

if os.environ.get("QSIRS_PURE_PYTHON", "") == "1":
    _impl = _core_py
else:
    try:
        from . import _core_c as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _core_py

BACKEND: str = _impl.BACKEND

SETTLED = _core_py.SETTLED
HORIZON = _core_py.HORIZON
STEP_BUDGET = _core_py.STEP_BUDGET
STEP_UNDERFLOW = _core_py.STEP_UNDERFLOW
NONFINITE = _core_py.NONFINITE
EV_CLAMP = _core_py.EV_CLAMP
EV_SETTLED = _core_py.EV_SETTLED
EV_BUDGET = _core_py.EV_BUDGET

integrate_raw = _impl.integrate_raw
rhs = _impl.rhs


def available_backends() -> dict[str, object]:
    """Importable kernels keyed by name ('c' may be absent)."""
    out: dict[str, object] = {"python": _core_py}
    try:
        from . import _core_c  # type: ignore[attr-defined]

        out["c"] = _core_c
    except ImportError:
        pass
    return out
