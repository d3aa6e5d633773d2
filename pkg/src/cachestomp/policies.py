"""Deterministic source-policy builders and schedule transformers.

Two layouts recur throughout:

* the block policy splits the horizon into T1+1 equal blocks, updating the
  user at the end of each block (except the last) and the cache at the start
  of each block (except the first);

* the section policies split the horizon into T2+1 sections whose last slot
  carries a cache update (except the final section). Sections holding a
  direct user update are one slot longer, and the user update sits directly
  before the cache update at the section end.
"""

from __future__ import annotations

from dataclasses import dataclass

from .types import (
    AdversarySequence,
    DivisibilityError,
    InstanceParams,
    Schedule,
    SourceAction,
    ValidationError,
)

IDLE = SourceAction.IDLE
TO_CACHE = SourceAction.TO_CACHE
TO_USER = SourceAction.TO_USER


@dataclass(frozen=True)
class SectionGeometry:
    """Exact section lengths implied by an instance.

    x2: base section length (T-T1)/(T2+1)
    x3: sections per megasection, T2/T1
    block_len: block length T/(T1+1) for the block policy
    """

    x2: int
    x3: int
    block_len: int

    @classmethod
    def for_block_policy(cls, params: InstanceParams) -> "SectionGeometry":
        T, T1 = params.T, params.T1
        if T % (T1 + 1):
            raise DivisibilityError(
                f"block policy needs (T1+1) | T, got T={T}, T1={T1}"
            )
        return cls(x2=0, x3=0, block_len=T // (T1 + 1))

    @classmethod
    def for_section_policy(cls, params: InstanceParams) -> "SectionGeometry":
        T, T1, T2 = params.T, params.T1, params.T2
        if (T - T1) % (T2 + 1):
            raise DivisibilityError(
                f"section policy needs (T2+1) | (T-T1), got T={T}, T1={T1}, T2={T2}"
            )
        if T1 < 1 or T2 % T1:
            raise DivisibilityError(
                f"section policy needs T1 >= 1 and T1 | T2, got T1={T1}, T2={T2}"
            )
        return cls(x2=(T - T1) // (T2 + 1), x3=T2 // T1, block_len=0)

    @classmethod
    def for_uniform_reference(cls, params: InstanceParams) -> "SectionGeometry":
        T, T1, T2 = params.T, params.T1, params.T2
        if T % (T1 + T2 + 1):
            raise DivisibilityError(
                f"uniform reference needs (T1+T2+1) | T, got T={T}, "
                f"T1={T1}, T2={T2}"
            )
        return cls(x2=0, x3=0, block_len=T // (T1 + T2 + 1))


def build_hat_policy(
    params: InstanceParams, extra_cache_slots: list[int] | None = None
) -> Schedule:
    """Block policy: user updates at slots b*L-1 for b=1..T1, cache updates
    at slots (b-1)*L for b=2..T1+1, with the remaining T2-T1 cache updates
    at the earliest idle slots unless an explicit list is given."""
    params.require_valid()
    L = SectionGeometry.for_block_policy(params).block_len
    T, T1, T2 = params.T, params.T1, params.T2
    actions = [IDLE] * T
    for b in range(1, T1 + 1):
        actions[b * L - 1] = TO_USER
    for b in range(2, T1 + 2):
        actions[(b - 1) * L] = TO_CACHE

    spare = T2 - T1
    if extra_cache_slots is None:
        extra_cache_slots = [t for t in range(T) if actions[t] == IDLE][:spare]
    if len(extra_cache_slots) != spare:
        raise ValidationError(
            f"expected exactly {spare} extra cache slots, got "
            f"{len(extra_cache_slots)}"
        )
    for t in extra_cache_slots:
        if not 0 <= t < T or actions[t] != IDLE:
            raise ValidationError(f"extra cache slot {t} is not an idle slot")
        actions[t] = TO_CACHE
    return Schedule(tuple(actions))


def _section_layout(
    params: InstanceParams, user_slots: list[int]
) -> tuple[list[SourceAction], int]:
    """Lay out T2+1 sections left to right. A section spanning a requested
    user slot is stretched by one slot; every section except the last ends
    with a cache update. Returns the actions and the first slot after the
    final section (idle tail when fewer than T1 user updates are used)."""
    T, T2 = params.T, params.T2
    x2 = (T - params.T1) // (T2 + 1)
    actions = [IDLE] * T
    pending = sorted(set(user_slots))
    pos = 0
    for i in range(1, T2 + 2):
        hits = [u for u in pending if pos <= u < pos + x2]
        if len(hits) > 1:
            raise ValidationError(
                f"user slots {hits} fall inside one section (from slot {pos})"
            )
        length = x2 + 1 if hits else x2
        if hits:
            actions[hits[0]] = TO_USER
            pending.remove(hits[0])
        if i <= T2:
            actions[pos + length - 1] = TO_CACHE
        pos += length
    if pending:
        raise ValidationError(
            f"user slots {pending} lie outside every section (sections end "
            f"at slot {pos - 1})"
        )
    return actions, pos


def build_check_policy(params: InstanceParams) -> Schedule:
    """Section policy with evenly spread user updates: every x3-th section
    is stretched and carries a user update at its second-to-last slot."""
    params.require_valid()
    geom = SectionGeometry.for_section_policy(params)
    x2, x3 = geom.x2, geom.x3
    # second-to-last slot of each stretched section, computed directly from
    # the layout: section i starts after (i-1) bases plus one extra slot per
    # earlier stretched section
    user_slots = []
    for k in range(1, params.T1 + 1):
        i = k * x3  # index of the k-th stretched section
        start = (i - 1) * x2 + (k - 1)
        user_slots.append(start + x2 - 1)
    actions, _ = _section_layout(params, user_slots)
    return Schedule(tuple(actions))


def build_bar_policy(params: InstanceParams, user_slots: list[int]) -> Schedule:
    """Section policy with caller-chosen user-update slots; cache updates
    stay at section ends. With the default user slots of
    :func:`build_check_policy` the two builders agree."""
    params.require_valid()
    SectionGeometry.for_section_policy(params)
    if len(set(user_slots)) != len(user_slots):
        raise ValidationError(f"duplicate user slots in {user_slots}")
    if len(user_slots) > params.T1:
        raise ValidationError(
            f"{len(user_slots)} user slots exceed budget T1={params.T1}"
        )
    for u in user_slots:
        if not 0 <= u < params.T:
            raise ValidationError(f"user slot {u} outside horizon")
    actions, _ = _section_layout(params, list(user_slots))
    return Schedule(tuple(actions))


def shift_cache_update(
    schedule: Schedule, update_index: int, delta: int
) -> Schedule:
    """Move the ``update_index``-th cache update (1-based, slot order) by one
    slot. The destination must be idle."""
    if delta not in (-1, 1):
        raise ValidationError(f"shift must be +-1, got {delta}")
    cache_slots = schedule.cache_slots()
    if not 1 <= update_index <= len(cache_slots):
        raise ValidationError(
            f"no cache update with index {update_index}; schedule has "
            f"{len(cache_slots)}"
        )
    src = cache_slots[update_index - 1]
    dst = src + delta
    if not 0 <= dst < len(schedule):
        raise ValidationError(f"shift target {dst} outside horizon")
    if schedule.actions[dst] != IDLE:
        raise ValidationError(
            f"shift target slot {dst} holds {schedule.actions[dst].name}, "
            "not idle"
        )
    return schedule.replace(src, IDLE).replace(dst, TO_CACHE)


def nominal_section_ends(params: InstanceParams) -> list[int]:
    """Cache-update slots of the default section policy, which double as the
    nominal section boundaries for the reactive variant."""
    return build_check_policy(params).cache_slots()


def build_clairvoyant_bound_policy(
    params: InstanceParams, sigma: AdversarySequence
) -> Schedule:
    """Reactive section policy: the i-th cache update moves to the first
    forwarding slot inside its section window (strictly after the previous
    nominal boundary, at most the next one), falling back to the nominal
    boundary when the window has no forwarding slot. User updates stay at
    the default section-policy slots; a forwarding slot already holding a
    user update is skipped."""
    params.require_valid()
    if len(sigma) != params.T:
        raise ValidationError(
            f"adversary length {len(sigma)} != horizon T={params.T}"
        )
    reference = build_check_policy(params)
    user_slots = set(reference.user_slots())
    actions = [TO_USER if t in user_slots else IDLE for t in range(params.T)]
    prev = -1
    for end in reference.cache_slots():
        chosen = end
        for t in range(prev + 1, end + 1):
            if sigma.bits[t] and t not in user_slots:
                chosen = t
                break
        actions[chosen] = TO_CACHE
        prev = end
    return Schedule(tuple(actions))


def build_uniform_reference(params: InstanceParams) -> Schedule:
    """Bound witness with all T1+T2 update slots treated as direct user
    updates at uniform spacing. Deliberately ignores the budget split, so it
    is exempt from schedule validation and only used to evaluate the
    universal age lower bound."""
    params.require_valid()
    L = SectionGeometry.for_uniform_reference(params).block_len
    actions = [IDLE] * params.T
    for k in range(1, params.T1 + params.T2 + 1):
        actions[k * L - 1] = TO_USER
    return Schedule(tuple(actions))


def build_idle_policy(T: int) -> Schedule:
    """Never transmit; useful as a degenerate baseline."""
    return Schedule(tuple([IDLE] * T))
