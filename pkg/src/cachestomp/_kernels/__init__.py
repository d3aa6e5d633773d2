"""Kernel backend selection.

The compiled extension is preferred; the pure-Python module is a drop-in
fallback with identical semantics. ``BACKEND`` names whichever is active.
"""

from . import pure

try:  # pragma: no cover - exercised indirectly depending on the build
    from . import _core as _active
except ImportError:  # pragma: no cover
    _active = pure

BACKEND = getattr(_active, "BACKEND_NAME", "pure")

sim_ages = _active.sim_ages
sim_total = _active.sim_total
sim_totals_all_sigmas = _active.sim_totals_all_sigmas
worst_total = _active.worst_total
oracle_min_total = _active.oracle_min_total
oracle_totals_all_sigmas = _active.oracle_totals_all_sigmas


def backends() -> dict:
    """Importable backends by name (for tests and benchmarks)."""
    out = {"pure": pure}
    if _active is not pure:
        out[BACKEND] = _active
    return out
