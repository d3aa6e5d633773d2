"""Domain types shared across the package.

Conventions used everywhere:
  * slots are numbered 0..T-1,
  * generation times and displayed timestamps live in {-1} | {0..T-1},
    where -1 is the synthetic packet every node holds before slot 0,
  * ages and age sums are plain ints, averages are exact ``Fraction``s.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from typing import Iterator


class ValidationError(ValueError):
    """An instance, schedule or adversary sequence breaks a hard constraint."""


class DivisibilityError(ValidationError):
    """A policy builder needs an exact section length and did not get one."""


class CapExceededError(RuntimeError):
    """An exhaustive computation was asked to exceed its configured cap."""


class SourceAction(IntEnum):
    IDLE = 0
    TO_CACHE = 1
    TO_USER = 2


class AdversaryAction(IntEnum):
    IDLE = 0
    FORWARD = 1


# one printable character per source action, used in configs and golden files
_ACTION_CHARS = ".CU"
_CHAR_TO_ACTION = {c: SourceAction(i) for i, c in enumerate(_ACTION_CHARS)}


@dataclass(frozen=True)
class InstanceParams:
    """Problem instance: horizon ``T``, direct-update budget ``T1``,
    cache-update budget ``T2``."""

    T: int
    T1: int
    T2: int

    def violations(self) -> list[str]:
        out = []
        if self.T < 1:
            out.append(f"horizon must be positive, got T={self.T}")
        if self.T1 < 0:
            out.append(f"direct-update budget must be non-negative, got T1={self.T1}")
        if self.T2 < 0:
            out.append(f"cache-update budget must be non-negative, got T2={self.T2}")
        if self.T1 + self.T2 >= self.T:
            out.append(
                f"power constraint T1+T2 < T violated: {self.T1}+{self.T2} >= {self.T}"
            )
        if self.T1 > self.T2:
            out.append(f"expected T1 <= T2, got T1={self.T1} > T2={self.T2}")
        return out

    def require_valid(self) -> "InstanceParams":
        bad = self.violations()
        if bad:
            raise ValidationError("; ".join(bad))
        return self


@dataclass(frozen=True)
class Schedule:
    """Per-slot source actions. Immutable; builders construct new instances."""

    actions: tuple[SourceAction, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "actions", tuple(SourceAction(a) for a in self.actions)
        )

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def n_user(self) -> int:
        return sum(1 for a in self.actions if a == SourceAction.TO_USER)

    @property
    def n_cache(self) -> int:
        return sum(1 for a in self.actions if a == SourceAction.TO_CACHE)

    def user_slots(self) -> list[int]:
        return [t for t, a in enumerate(self.actions) if a == SourceAction.TO_USER]

    def cache_slots(self) -> list[int]:
        return [t for t, a in enumerate(self.actions) if a == SourceAction.TO_CACHE]

    def packed(self) -> bytes:
        """Byte-per-slot encoding (0/1/2) consumed by the kernels."""
        return bytes(int(a) for a in self.actions)

    def to_text(self) -> str:
        return "".join(_ACTION_CHARS[a] for a in self.actions)

    @classmethod
    def from_text(cls, text: str) -> "Schedule":
        try:
            return cls(tuple(_CHAR_TO_ACTION[c] for c in text))
        except KeyError as exc:
            raise ValidationError(
                f"schedule string may only contain '{_ACTION_CHARS}': bad char {exc}"
            ) from None

    def replace(self, slot: int, action: SourceAction) -> "Schedule":
        acts = list(self.actions)
        acts[slot] = action
        return Schedule(tuple(acts))


@dataclass(frozen=True)
class AdversarySequence:
    """Oblivious adversary decisions, one bit per slot (1 = forward)."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValidationError("adversary bits must be 0 or 1")
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    def packed(self) -> bytes:
        return bytes(self.bits)

    def to_text(self) -> str:
        return "".join(str(b) for b in self.bits)

    @classmethod
    def from_text(cls, text: str) -> "AdversarySequence":
        if set(text) - {"0", "1"}:
            raise ValidationError("adversary string may only contain 0/1")
        return cls(tuple(int(c) for c in text))

    @classmethod
    def from_int(cls, value: int, length: int) -> "AdversarySequence":
        """Bit t of the sequence is bit (length-1-t) of ``value``, so integer
        order equals lexicographic order of the bitstrings."""
        if not 0 <= value < (1 << length):
            raise ValueError(f"value {value} does not fit in {length} bits")
        return cls(tuple((value >> (length - 1 - t)) & 1 for t in range(length)))

    def to_int(self) -> int:
        out = 0
        for b in self.bits:
            out = (out << 1) | b
        return out


@dataclass(frozen=True)
class SystemState:
    """Snapshot between slots: slot counter plus the three tracked times."""

    now: int
    cache_gen: int
    user_gen: int
    user_stamp: int

    @property
    def age(self) -> int:
        """Instantaneous age at the upcoming slot."""
        return self.now - self.user_gen


def initial_state() -> SystemState:
    """All nodes start with a synthetic generation -1 packet, so the age seen
    at slot 0 is exactly 1."""
    return SystemState(now=0, cache_gen=-1, user_gen=-1, user_stamp=-1)


@dataclass(frozen=True)
class AgeTrace:
    """Per-slot instantaneous ages for one (schedule, adversary) run."""

    ages: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ages", tuple(int(v) for v in self.ages))

    def __len__(self) -> int:
        return len(self.ages)

    def __iter__(self) -> Iterator[int]:
        return iter(self.ages)

    @property
    def total(self) -> int:
        return sum(self.ages)

    @property
    def average_age(self) -> Fraction:
        if not self.ages:
            raise ValidationError("cannot average an empty trace")
        return Fraction(self.total, len(self.ages))


@dataclass
class ValidationReport:
    """Report-style validation result: empty violation list means accepted."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def require(self) -> None:
        if self.violations:
            raise ValidationError("; ".join(self.violations))
