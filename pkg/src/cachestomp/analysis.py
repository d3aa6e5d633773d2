"""Closed-form expressions: competitive-ratio bounds, per-section age
recursions, megasection sums, and the shift-comparison difference formulas.

Everything here is a pure function of small integers and evaluates in exact
rational arithmetic (the expressions only involve powers of two and small
ratios), so audits against the enumeration oracles can compare exactly and
the published 1e-9 tolerance is met trivially. Two distinct roles share the
historical name x3 and are kept apart here: ``x3`` always means sections per
megasection, while the in-section offset of a direct update is ``offset``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .types import DivisibilityError, InstanceParams
from .policies import SectionGeometry


@dataclass(frozen=True)
class MegasectionParams:
    """Section length x2 and sections-per-megasection x3."""

    x2: int
    x3: int

    def __post_init__(self):
        if self.x2 < 1 or self.x3 < 1:
            raise ValueError(f"need x2 >= 1 and x3 >= 1, got {self}")

    def smallest_instance(self, T1: int = 1) -> InstanceParams:
        """Smallest instance realizing this geometry for a given direct
        budget: T2 = T1*x3 and T = x2*(T2+1) + T1."""
        T2 = T1 * self.x3
        return InstanceParams(T=self.x2 * (T2 + 1) + T1, T1=T1, T2=T2)


@dataclass(frozen=True)
class FormulaReport:
    """A named closed-form evaluation, for audit rows and CLI output."""

    name: str
    inputs: Mapping[str, int]
    value: Fraction


def _geometry(params: InstanceParams) -> MegasectionParams:
    geom = SectionGeometry.for_section_policy(params)
    return MegasectionParams(geom.x2, geom.x3)


def theorem1_bound(params: InstanceParams) -> Fraction:
    """Competitive-ratio upper bound for the block policy:
    ((1+T1+T)/(1+T2+T1+T)) * (1+T2/(T1+1))."""
    params.require_valid()
    T, T1, T2 = params.T, params.T1, params.T2
    return Fraction(1 + T1 + T, 1 + T2 + T1 + T) * (1 + Fraction(T2, T1 + 1))


def optimal_age_lower_bound(params: InstanceParams) -> Fraction:
    """Universal lower bound on any schedule's average age against any
    adversary sequence: (1 + T/(T1+T2+1)) / 2."""
    params.require_valid()
    return Fraction(1, 2) * (1 + Fraction(params.T, params.T1 + params.T2 + 1))


def hat_age_all_zeros(params: InstanceParams) -> Fraction:
    """Average age of the block policy when the adversary never forwards:
    (1 + T/(T1+1)) / 2. Needs (T1+1) | T."""
    params.require_valid()
    if params.T % (params.T1 + 1):
        raise DivisibilityError(
            f"needs (T1+1) | T, got T={params.T}, T1={params.T1}"
        )
    return Fraction(1, 2) * (1 + Fraction(params.T, params.T1 + 1))


def numerator_recursion(v0: Fraction | int, j: int, x2: int) -> Fraction:
    """Expected age at in-section slot j of the waiting section policy,
    given age v0 at the preceding section boundary:
    v0/2^j + sum_{k=2}^{j+1} k/2^{j+2-k}."""
    if not 1 <= j <= x2:
        raise ValueError(f"need 1 <= j <= x2, got j={j}, x2={x2}")
    return Fraction(v0, 2**j) + sum(
        (Fraction(k, 2 ** (j + 2 - k)) for k in range(2, j + 2)), Fraction(0)
    )


def alpha_beta(x2: int) -> tuple[Fraction, Fraction]:
    """Coefficients of the within-section age sum: the expected sum of ages
    over one section is alpha*v0 + beta."""
    if x2 < 1:
        raise ValueError(f"need x2 >= 1, got {x2}")
    alpha = 2 * (1 - Fraction(1, 2**x2))
    beta = Fraction((x2 - 1) * x2, 2)
    return alpha, beta


def r_s(x2: int) -> tuple[Fraction, Fraction]:
    """Coefficients of the boundary-to-boundary age map: the expected age at
    the next section boundary is r*v0 + s."""
    if x2 < 1:
        raise ValueError(f"need x2 >= 1, got {x2}")
    return Fraction(1, 2**x2), Fraction(x2)


def megasection_numerator(m: MegasectionParams) -> Fraction:
    """Expected age summed over one megasection of the waiting section
    policy (cache updates at section ends), starting from boundary age 1."""
    x2, x3 = m.x2, m.x3
    return (
        Fraction(x3 * x2 * (x2 - 1), 2)
        + 2 * x2 * x3
        + 2
        - Fraction(1, 2 ** (x2 * x3))
        + Fraction(x2 * 2**x2, 2**x2 - 1) * (Fraction(1, 2 ** (x2 * x3)) - 1)
    )


def expected_age_check(params: InstanceParams) -> Fraction:
    """Megasection approximation of the section policy's expected average
    age under fair-coin forwarding: (T1/T) times the megasection sum."""
    params.require_valid()
    m = _geometry(params)
    return Fraction(params.T1, params.T) * megasection_numerator(m)


def denominator_recursion(v0: Fraction | int, j: int, x2: int) -> Fraction:
    """Expected age at in-section slot j when the cache update rides the
    first forwarded slot of the section: (v0+j)/2^j +
    sum_{k=0}^{j-1} (j-k)/2^{k+1}."""
    if not 1 <= j <= x2:
        raise ValueError(f"need 1 <= j <= x2, got j={j}, x2={x2}")
    return Fraction(v0 + j, 2**j) + sum(
        (Fraction(j - k, 2 ** (k + 1)) for k in range(j)), Fraction(0)
    )


def alphabar_betabar(x2: int) -> tuple[Fraction, Fraction]:
    """Within-section sum coefficients for the reactive variant."""
    if x2 < 1:
        raise ValueError(f"need x2 >= 1, got {x2}")
    alphabar = 2 * (1 - Fraction(1, 2**x2))
    betabar = (
        4
        - Fraction(2 * x2, 2**x2)
        - Fraction(4, 2**x2)
        + Fraction((x2 - 3) * x2, 2)
    )
    return alphabar, betabar


def rbar_sbar(x2: int) -> tuple[Fraction, Fraction]:
    """Boundary-to-boundary map coefficients for the reactive variant."""
    if x2 < 1:
        raise ValueError(f"need x2 >= 1, got {x2}")
    rbar = Fraction(1, 2**x2)
    sbar = Fraction(x2, 2**x2) + x2 + Fraction(1, 2**x2) - 1
    return rbar, sbar


def megasection_denominator(m: MegasectionParams) -> Fraction:
    """Expected age summed over one megasection of the reactive section
    policy, starting from boundary age 1."""
    x2, x3 = m.x2, m.x3
    p2 = 2**x2
    p23 = 2 ** (x2 * x3)
    return (
        3
        - Fraction(2 * x3, p2)
        + 2 * x3
        + x2
        - Fraction(2, p23)
        + Fraction(x3 * x2 * (x2 - 3), 2)
        + 2 * x3 * x2
        + Fraction(x2 * (p2 + 1), p23 * (p2 - 1))
        - Fraction(2 * x2 * p2, p2 - 1)
    )


def offline_expected_upper(params: InstanceParams) -> Fraction:
    """Megasection upper bound on the offline optimum's expected average age
    under fair-coin forwarding: (T1/T) times the reactive megasection sum."""
    params.require_valid()
    m = _geometry(params)
    return Fraction(params.T1, params.T) * megasection_denominator(m)


def yao_lower_bound(params: InstanceParams) -> Fraction:
    """Closed-form minimax lower bound on the competitive ratio of any
    randomized policy: the ratio of the two megasection sums."""
    return expected_age_check(params) / offline_expected_upper(params)


@dataclass(frozen=True)
class ShiftComparison:
    """Expected age differences between the section policy and its variant
    with one left cache update shifted one slot earlier, conditioned on the
    four joint values of the adversary bits at the boundary slot pair.

    ``offset`` is the direct update's in-section offset (its own role; not
    the megasection width). Signs follow the source formulas: s and s3
    are stated as (shifted minus original), s1 and s2 as (original minus
    shifted), and total as (original minus shifted).
    """

    s: Fraction
    s1: Fraction
    s2: Fraction
    s3: Fraction
    total: Fraction


def lemma1_differences(x2: int, offset: int) -> ShiftComparison:
    """Conditional expected-age differences for the one-slot cache shift."""
    if not 1 <= offset <= x2:
        raise ValueError(f"need 1 <= offset <= x2, got offset={offset}, x2={x2}")
    d = 2 ** (x2 - offset + 1)
    e = 2**offset
    s = Fraction(3 * x2, 2) + Fraction(1, d) - Fraction(offset, d) - Fraction(1, 2)
    s1 = 2 * x2 - Fraction(2 * x2, e) - Fraction(1, 2) - Fraction(1, d)
    s2 = -Fraction(1, d) - Fraction(1, 2)
    s3 = x2 + Fraction(2, e) + Fraction(1, d) - Fraction(5, 2)
    total = (
        2
        - Fraction(x2, 2)
        - Fraction(2, 2 ** (x2 - offset))
        - Fraction(2 * x2, e)
        + Fraction(offset, d)
        - Fraction(2, e)
    )
    return ShiftComparison(s, s1, s2, s3, total)
