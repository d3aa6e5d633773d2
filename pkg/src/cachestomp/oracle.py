"""Offline-optimal schedule oracle: the best feasible schedule for a fully
known adversary sequence, by dynamic programming and by brute force.

Budgets are treated as upper bounds (an optimal schedule never has to spend
an update), and the single-update rule defaults to enforced, with a flag to
study the unconstrained problem. Both solvers break ties toward the
lexicographically smallest action string under idle < to-cache < to-user.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from . import _kernels
from .dynamics import validate_schedule
from .types import (
    AdversarySequence,
    CapExceededError,
    InstanceParams,
    Schedule,
    SourceAction,
    ValidationError,
)

DEFAULT_DP_CAP = 64
DEFAULT_BRUTEFORCE_CAP = 2_000_000


@dataclass(frozen=True)
class OracleResult:
    best_schedule: Schedule
    value: Fraction
    states_explored: int


def offline_optimal(
    sigma: AdversarySequence,
    params: InstanceParams,
    enforce_single_update: bool = True,
    cap: int = DEFAULT_DP_CAP,
) -> OracleResult:
    """Exact minimum average age over feasible schedules for ``sigma``.

    The DP tracks (slot, updates used per link, last cache-update slot, user
    generation, direct-update-since-last-cache flag); the cache always holds
    its newest packet, so the last update slot fully describes it.
    """
    params.require_valid()
    T = params.T
    if len(sigma) != T:
        _length_error(sigma, T)
    if T > cap:
        raise CapExceededError(f"horizon T={T} exceeds DP cap {cap}")
    total, actions, states = _kernels.oracle_min_total(
        sigma.packed(), params.T1, params.T2, enforce_single_update
    )
    schedule = Schedule(tuple(actions))
    return OracleResult(schedule, Fraction(total, T), states)


def _length_error(sigma: AdversarySequence, T: int):
    raise ValidationError(f"adversary length {len(sigma)} != horizon T={T}")


def offline_optimal_bruteforce(
    sigma: AdversarySequence,
    params: InstanceParams,
    enforce_single_update: bool = True,
    cap: int = DEFAULT_BRUTEFORCE_CAP,
) -> OracleResult:
    """Independent oracle for the DP: exhaustive search over action strings
    in lexicographic order, so tie-breaking matches exactly."""
    params.require_valid()
    T = params.T
    if len(sigma) != T:
        _length_error(sigma, T)
    size = sum(comb(T, k) for k in range(params.T1 + 1)) * sum(
        comb(T, k) for k in range(params.T2 + 1)
    )
    if size > cap:
        raise CapExceededError(
            f"brute-force space {size} exceeds cap {cap}"
        )

    bits = sigma.packed()
    best_total: int | None = None
    best_actions: bytes | None = None
    tried = 0
    order = (SourceAction.IDLE, SourceAction.TO_CACHE, SourceAction.TO_USER)
    for combo in itertools.product(order, repeat=T):
        schedule = Schedule(combo)
        if schedule.n_user > params.T1 or schedule.n_cache > params.T2:
            continue
        if enforce_single_update and not validate_schedule(
            schedule, params, enforce_single_update=True
        ):
            continue
        tried += 1
        total = _kernels.sim_total(schedule.packed(), bits)
        if best_total is None or total < best_total:
            best_total = total
            best_actions = schedule.packed()
    assert best_actions is not None  # the all-idle schedule always qualifies
    return OracleResult(
        Schedule(tuple(best_actions)), Fraction(best_total, T), tried
    )


def oracle_values_all_sigmas(
    params: InstanceParams,
    enforce_single_update: bool = True,
    cap: int = 20,
) -> list[int]:
    """Offline-optimal age totals for every adversary sequence, indexed
    lexicographically; the heavy lifting happens in the kernel sweep."""
    params.require_valid()
    if params.T > cap:
        raise CapExceededError(
            f"sweeping 2^{params.T} sequences exceeds cap 2^{cap}"
        )
    return _kernels.oracle_totals_all_sigmas(
        params.T, params.T1, params.T2, enforce_single_update
    )
