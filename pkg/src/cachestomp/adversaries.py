"""Adversary sequence generators: constants, seeded coin flips, exhaustive
enumeration, and the worst-case sequence for a fixed schedule."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from . import _kernels
from .types import (
    AdversaryAction,
    AdversarySequence,
    CapExceededError,
    InstanceParams,
    Schedule,
    ValidationError,
)

DEFAULT_ENUMERATION_CAP = 20

# Reproducibility is contractual, the generator is not; we pin the stdlib
# Mersenne Twister and record it in run metadata.
RNG_NAME = "python-random-mt19937"


@dataclass(frozen=True)
class SequenceDistribution:
    """Per-slot i.i.d. forwarding probability plus a seed. The fair-coin
    default is the distribution used for the minimax lower bound."""

    p: Fraction = Fraction(1, 2)
    seed: int = 0

    def __post_init__(self):
        p = Fraction(self.p)
        if not 0 <= p <= 1:
            raise ValidationError(f"forward probability must be in [0,1], got {p}")
        object.__setattr__(self, "p", p)


def constant_sequence(T: int, bit: AdversaryAction | int) -> AdversarySequence:
    if T < 1:
        raise ValidationError(f"sequence length must be positive, got {T}")
    return AdversarySequence(tuple([int(AdversaryAction(bit))] * T))


def bernoulli_sequence(dist: SequenceDistribution, T: int) -> AdversarySequence:
    """Seeded i.i.d. draws; the same seed always yields the same sequence.
    The float draw is compared against the exact probability."""
    rng = random.Random(dist.seed)
    return AdversarySequence(tuple(1 if rng.random() < dist.p else 0 for _ in range(T)))


def enumerate_sequences(
    T: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[AdversarySequence]:
    """All 2^T sequences in lexicographic bitstring order."""
    if T > cap:
        raise CapExceededError(
            f"enumerating 2^{T} sequences exceeds cap 2^{cap}"
        )
    for k in range(1 << T):
        yield AdversarySequence.from_int(k, T)


def worst_sequence(
    schedule: Schedule, params: InstanceParams | None = None
) -> tuple[AdversarySequence, Fraction]:
    """Sequence maximizing the average age for a fixed schedule, and that
    exact supremum. Ties break toward idling, hence toward the
    lexicographically smallest sequence."""
    if params is not None:
        params.require_valid()
        if len(schedule) != params.T:
            raise ValidationError(
                f"schedule length {len(schedule)} != horizon T={params.T}"
            )
    total, bits = _kernels.worst_total(schedule.packed())
    return AdversarySequence(tuple(bits)), Fraction(total, len(schedule))
