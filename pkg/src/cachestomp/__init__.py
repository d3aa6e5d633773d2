"""Discrete-time cache updating under a timestamp-forging adversary:
simulator, policy builders, worst-case and offline-optimal oracles,
closed-form analysis, and expectation engines."""

from ._kernels import BACKEND
from .types import (
    AdversaryAction,
    AdversarySequence,
    AgeTrace,
    CapExceededError,
    DivisibilityError,
    InstanceParams,
    Schedule,
    SourceAction,
    SystemState,
    ValidationError,
    ValidationReport,
    initial_state,
)
from .dynamics import (
    average_age,
    replay,
    simulate,
    step,
    trace_csv_text,
    validate_instance,
    validate_schedule,
    write_trace_csv,
)
from .policies import (
    SectionGeometry,
    build_bar_policy,
    build_check_policy,
    build_clairvoyant_bound_policy,
    build_hat_policy,
    build_idle_policy,
    build_uniform_reference,
    nominal_section_ends,
    shift_cache_update,
)
from .adversaries import (
    SequenceDistribution,
    bernoulli_sequence,
    constant_sequence,
    enumerate_sequences,
    worst_sequence,
)
from .oracle import (
    OracleResult,
    offline_optimal,
    offline_optimal_bruteforce,
    oracle_values_all_sigmas,
)

__version__ = "0.1.0"
