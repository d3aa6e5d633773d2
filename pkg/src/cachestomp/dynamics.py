"""Slot-by-slot state machine and the trace-level operations built on it.

Within a slot the order is fixed: the source acts first, then the adversary,
then deliveries resolve. A forwarded cache copy always carries the current
slot as its displayed stamp, so the user accepts it unless a direct source
packet arrives in the same slot, in which case the source packet wins and
the copy is dropped. Packets whose displayed stamp merely ties the user's
current stamp are rejected.
"""

from __future__ import annotations

import csv
import io
from fractions import Fraction
from typing import Iterable, TextIO

from . import _kernels
from .types import (
    AdversaryAction,
    AdversarySequence,
    AgeTrace,
    InstanceParams,
    Schedule,
    SourceAction,
    SystemState,
    ValidationError,
    ValidationReport,
    initial_state,
)


def validate_instance(params: InstanceParams) -> ValidationReport:
    """Check the budget and ordering constraints on an instance."""
    return ValidationReport(params.violations())


def validate_schedule(
    schedule: Schedule,
    params: InstanceParams,
    enforce_single_update: bool = True,
) -> ValidationReport:
    """Check budgets and, when asked, the rule that at most one direct user
    update may occur between consecutive cache updates (including before the
    first and after the last)."""
    if len(schedule) != params.T:
        raise ValidationError(
            f"schedule length {len(schedule)} does not match horizon T={params.T}"
        )
    report = ValidationReport()
    n_user, n_cache = schedule.n_user, schedule.n_cache
    if n_user > params.T1:
        report.violations.append(
            f"{n_user} direct updates exceed budget T1={params.T1}"
        )
    if n_cache > params.T2:
        report.violations.append(
            f"{n_cache} cache updates exceed budget T2={params.T2}"
        )
    if enforce_single_update:
        users_in_span = 0
        for t, action in enumerate(schedule.actions):
            if action == SourceAction.TO_CACHE:
                users_in_span = 0
            elif action == SourceAction.TO_USER:
                users_in_span += 1
                if users_in_span > 1:
                    report.violations.append(
                        f"second direct update at slot {t} within one "
                        "cache-update span"
                    )
                    break
    return report


def step(
    state: SystemState, src_action: SourceAction, adv_action: AdversaryAction
) -> SystemState:
    """Advance one slot. This is the literal reference semantics, including
    the displayed-stamp comparison the optimized kernels elide."""
    t = state.now
    cache_gen = state.cache_gen
    user_gen = state.user_gen
    user_stamp = state.user_stamp

    if src_action == SourceAction.TO_CACHE:
        cache_gen = t
    if src_action == SourceAction.TO_USER:
        # direct packet always kept; a same-slot cache copy is discarded
        user_gen = t
        user_stamp = t
    elif adv_action == AdversaryAction.FORWARD and t > user_stamp:
        # forged stamp t strictly beats any stamp acquired before slot t
        user_gen = cache_gen
        user_stamp = t
    return SystemState(t + 1, cache_gen, user_gen, user_stamp)


def simulate(
    schedule: Schedule,
    sigma: AdversarySequence,
    params: InstanceParams | None = None,
    enforce_single_update: bool = False,
) -> AgeTrace:
    """Run the deterministic dynamics and return the per-slot age trace.

    ``params`` is optional so that infeasible bound witnesses can still be
    simulated; when given, the instance and schedule budgets are validated
    first.
    """
    if len(schedule) != len(sigma):
        raise ValidationError(
            f"schedule length {len(schedule)} != adversary length {len(sigma)}"
        )
    if params is not None:
        validate_instance(params).require()
        validate_schedule(schedule, params, enforce_single_update).require()
    ages = _kernels.sim_ages(schedule.packed(), sigma.packed())
    return AgeTrace(tuple(ages))


def replay(schedule: Schedule, sigma: AdversarySequence) -> AgeTrace:
    """Trace computed by composing :func:`step`; exists as an independent
    cross-check of the kernel fast path."""
    state = initial_state()
    ages = []
    for src, bit in zip(schedule.actions, sigma.bits):
        ages.append(state.age)
        state = step(state, src, AdversaryAction(bit))
    return AgeTrace(tuple(ages))


def average_age(trace: AgeTrace | Iterable[int]) -> Fraction:
    """Exact mean age of a trace; empty traces are an error."""
    ages = tuple(trace.ages if isinstance(trace, AgeTrace) else trace)
    if not ages:
        raise ValidationError("cannot average an empty trace")
    return Fraction(sum(ages), len(ages))


def write_trace_csv(
    out: TextIO,
    trace: AgeTrace,
    schedule: Schedule,
    sigma: AdversarySequence,
) -> None:
    """Emit one row per slot plus a trailing exact-average comment row."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["t", "age", "src_action", "adv_action"])
    text = schedule.to_text()
    for t, age in enumerate(trace.ages):
        writer.writerow([t, age, text[t], sigma.bits[t]])
    avg = trace.average_age
    out.write(f"# average={avg.numerator}/{avg.denominator}\n")


def trace_csv_text(
    trace: AgeTrace, schedule: Schedule, sigma: AdversarySequence
) -> str:
    buf = io.StringIO()
    write_trace_csv(buf, trace, schedule, sigma)
    return buf.getvalue()
