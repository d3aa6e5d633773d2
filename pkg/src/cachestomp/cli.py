"""Command-line front end.

Subcommands: simulate, expect, ratio, worst, oracle, yao, audit,
search-best. Every subcommand also accepts ``--config FILE`` pointing at a
JSON document with the same fields as the flags; explicit flags win.

Exit codes: 0 success, 2 validation/config error, 3 cap exceeded. Reports
carry no timestamps or worker counts, so identical configurations produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from ._kernels import BACKEND
from .adversaries import (
    DEFAULT_ENUMERATION_CAP,
    RNG_NAME,
    SequenceDistribution,
    bernoulli_sequence,
    constant_sequence,
    worst_sequence,
)
from .analysis import MegasectionParams
from .dynamics import simulate, write_trace_csv
from .estimator import (
    AUDIT_CSV_HEADER,
    audit_formulas,
    best_deterministic_under_P1,
    exact_competitive_ratio,
    exact_expected_age,
    exact_expected_age_enumeration,
    mc_expected_age,
    yao_bound_empirical,
)
from .oracle import DEFAULT_DP_CAP, offline_optimal, offline_optimal_bruteforce
from .policies import (
    build_bar_policy,
    build_check_policy,
    build_clairvoyant_bound_policy,
    build_hat_policy,
    build_idle_policy,
    build_uniform_reference,
)
from .types import (
    AdversarySequence,
    CapExceededError,
    InstanceParams,
    Schedule,
    ValidationError,
)

MODES = (
    "simulate",
    "expect",
    "ratio",
    "worst",
    "oracle",
    "yao",
    "audit",
    "search-best",
)

POLICY_NAMES = ("hat", "check", "clairvoyant", "uniform", "idle", "bar")


@dataclass
class ExperimentConfig:
    mode: str
    T: int | None = None
    T1: int | None = None
    T2: int | None = None
    policy: str | None = None
    user_slots: list[int] = field(default_factory=list)
    adversary: str | None = None
    p: Fraction = Fraction(1, 2)
    seed: int = 0
    method: str | None = None
    n: int = 100_000
    workers: int = 1
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP
    dp_cap: int = DEFAULT_DP_CAP
    single_update: bool = True
    out: str | None = None

    def params(self) -> InstanceParams:
        if self.T is None or self.T1 is None or self.T2 is None:
            raise ValidationError("this mode needs --T, --T1 and --T2")
        params = InstanceParams(self.T, self.T1, self.T2)
        params.require_valid()
        return params


def _parse_fraction(text: str | int | float) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"cannot parse probability {text!r}: {exc}") from None


def parse_config(path: str | Path) -> ExperimentConfig:
    """Load a JSON experiment description. Unknown keys are rejected so that
    typos fail loudly."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError("config document must be a JSON object")
    known = {
        "mode",
        "T",
        "T1",
        "T2",
        "policy",
        "user_slots",
        "adversary",
        "p",
        "seed",
        "method",
        "n",
        "workers",
        "enumeration_cap",
        "dp_cap",
        "single_update",
        "out",
    }
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    if "mode" not in raw:
        raise ValidationError("config needs a 'mode' field")
    if raw["mode"] not in MODES:
        raise ValidationError(f"unknown mode {raw['mode']!r}; pick from {MODES}")
    cfg = ExperimentConfig(mode=raw["mode"])
    for key in ("T", "T1", "T2", "seed", "n", "workers", "enumeration_cap", "dp_cap"):
        if key in raw:
            setattr(cfg, key, int(raw[key]))
    for key in ("policy", "adversary", "method", "out"):
        if key in raw:
            setattr(cfg, key, str(raw[key]))
    if "user_slots" in raw:
        cfg.user_slots = [int(v) for v in raw["user_slots"]]
    if "p" in raw:
        cfg.p = _parse_fraction(raw["p"])
    if "single_update" in raw:
        cfg.single_update = bool(raw["single_update"])
    return cfg


def resolve_policy(cfg: ExperimentConfig, params: InstanceParams) -> Schedule:
    """Turn a policy name or explicit action string into a schedule. The
    clairvoyant policy needs the adversary sequence, so it resolves after
    the adversary."""
    name = cfg.policy
    if name is None:
        raise ValidationError("this mode needs --policy")
    if name == "hat":
        return build_hat_policy(params)
    if name == "check":
        return build_check_policy(params)
    if name == "clairvoyant":
        sigma = resolve_adversary(cfg, params)
        return build_clairvoyant_bound_policy(params, sigma)
    if name == "uniform":
        return build_uniform_reference(params)
    if name == "idle":
        return build_idle_policy(params.T)
    if name == "bar":
        return build_bar_policy(params, cfg.user_slots)
    if set(name) <= {".", "C", "U"}:
        schedule = Schedule.from_text(name)
        if len(schedule) != params.T:
            raise ValidationError(
                f"schedule string length {len(schedule)} != T={params.T}"
            )
        return schedule
    raise ValidationError(
        f"unknown policy {name!r}; pick from {POLICY_NAMES} or give an "
        "explicit .CU string"
    )


def resolve_adversary(cfg: ExperimentConfig, params: InstanceParams) -> AdversarySequence:
    spec = cfg.adversary
    if spec is None:
        raise ValidationError("this mode needs --adversary")
    if spec == "zeros":
        return constant_sequence(params.T, 0)
    if spec == "ones":
        return constant_sequence(params.T, 1)
    if spec == "bernoulli":
        return bernoulli_sequence(
            SequenceDistribution(p=cfg.p, seed=cfg.seed), params.T
        )
    if spec == "worst":
        if cfg.policy == "clairvoyant":
            raise ValidationError(
                "the clairvoyant policy cannot target the 'worst' adversary"
            )
        schedule = resolve_policy(cfg, params)
        sigma, _ = worst_sequence(schedule, params)
        return sigma
    if set(spec) <= {"0", "1"}:
        sigma = AdversarySequence.from_text(spec)
        if len(sigma) != params.T:
            raise ValidationError(
                f"adversary bitstring length {len(sigma)} != T={params.T}"
            )
        return sigma
    raise ValidationError(
        f"unknown adversary {spec!r}; use zeros/ones/bernoulli/worst or a "
        "0/1 bitstring"
    )


def _meta(cfg: ExperimentConfig) -> dict[str, Any]:
    """Everything needed to reproduce a run; deliberately no wall-clock data
    and no worker count."""
    return {
        "tool": "cachestomp",
        "version": __version__,
        "kernel_backend": BACKEND,
        "rng": RNG_NAME,
        "mode": cfg.mode,
        "T": cfg.T,
        "T1": cfg.T1,
        "T2": cfg.T2,
        "policy": cfg.policy,
        "adversary": cfg.adversary,
        "p": str(cfg.p),
        "seed": cfg.seed,
        "method": cfg.method,
        "n": cfg.n,
        "enumeration_cap": cfg.enumeration_cap,
        "dp_cap": cfg.dp_cap,
        "single_update_constraint": cfg.single_update,
    }


def _frac_fields(value: Fraction, prefix: str) -> dict[str, int]:
    return {
        f"{prefix}_num": value.numerator,
        f"{prefix}_den": value.denominator,
    }


def _write_json(out: str | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _show(value: Fraction | float) -> str:
    return f"{float(value):.6g}"


def run(cfg: ExperimentConfig) -> int:
    """Dispatch a parsed configuration; returns the process exit code."""
    if cfg.mode == "simulate":
        params = cfg.params()
        sigma = resolve_adversary(cfg, params)
        schedule = resolve_policy(cfg, params)
        validate = cfg.policy != "uniform"  # the bound witness is exempt
        trace = simulate(schedule, sigma, params if validate else None)
        avg = trace.average_age
        print(
            f"average age = {_show(avg)} "
            f"(exact {avg.numerator}/{avg.denominator})"
        )
        if cfg.out:
            with open(cfg.out, "w") as fh:
                write_trace_csv(fh, trace, schedule, sigma)
        return 0

    if cfg.mode == "expect":
        params = cfg.params()
        schedule = resolve_policy(cfg, params)
        method = cfg.method or "propagation"
        if method == "propagation":
            res = exact_expected_age(schedule, params, cfg.p)
        elif method == "enumeration":
            res = exact_expected_age_enumeration(
                schedule, params, cfg.p, cfg.enumeration_cap
            )
        elif method == "monte-carlo":
            res = mc_expected_age(
                schedule,
                params,
                SequenceDistribution(p=cfg.p, seed=cfg.seed),
                cfg.n,
                cfg.workers,
            )
        else:
            raise ValidationError(f"unknown expect method {method!r}")
        result: dict[str, Any] = {"method": res.method}
        if isinstance(res.mean, Fraction):
            result.update(_frac_fields(res.mean, "mean"))
            result["mean"] = float(res.mean)
        else:
            result["mean"] = res.mean
            result["stderr"] = res.stderr
            result["samples"] = res.samples
        print(f"expected average age = {_show(res.mean)} [{res.method}]")
        _write_json(cfg.out, {"meta": _meta(cfg), "result": result})
        return 0

    if cfg.mode == "ratio":
        params = cfg.params()
        schedule = resolve_policy(cfg, params)
        rep = exact_competitive_ratio(
            schedule,
            params,
            cfg.single_update,
            cfg.enumeration_cap,
            policy_name=cfg.policy or "schedule",
        )
        print(
            f"competitive ratio = {_show(rep.ratio)} "
            f"(argmax sigma {rep.argmax_sigma})"
        )
        result = {
            "policy": rep.policy_name,
            "argmax_sigma": rep.argmax_sigma,
            "ratio": float(rep.ratio),
            **_frac_fields(rep.ratio, "ratio"),
        }
        _write_json(cfg.out, {"meta": _meta(cfg), "result": result})
        return 0

    if cfg.mode == "worst":
        params = cfg.params()
        schedule = resolve_policy(cfg, params)
        sigma, value = worst_sequence(schedule, params)
        print(
            f"worst-case average age = {_show(value)} "
            f"(exact {value.numerator}/{value.denominator}) "
            f"sigma {sigma.to_text()}"
        )
        result = {
            "sigma": sigma.to_text(),
            "value": float(value),
            **_frac_fields(value, "value"),
        }
        _write_json(cfg.out, {"meta": _meta(cfg), "result": result})
        return 0

    if cfg.mode == "oracle":
        params = cfg.params()
        sigma = resolve_adversary(cfg, params)
        solver = (
            offline_optimal_bruteforce
            if cfg.method == "brute-force"
            else offline_optimal
        )
        res = solver(sigma, params, cfg.single_update)
        value = res.value
        print(
            f"offline optimum = {_show(value)} "
            f"(exact {value.numerator}/{value.denominator}) "
            f"schedule {res.best_schedule.to_text()}"
        )
        _write_json(
            cfg.out,
            {
                "sigma": sigma.to_text(),
                "value_num": value.numerator,
                "value_den": value.denominator,
                "schedule": res.best_schedule.to_text(),
            },
        )
        return 0

    if cfg.mode == "yao":
        params = cfg.params()
        method = cfg.method or "enumeration"
        rep = yao_bound_empirical(
            params,
            method,
            cfg.single_update,
            cfg.enumeration_cap,
            cfg.seed,
            cfg.n,
            cfg.workers,
        )
        print(f"minimax ratio lower bound = {_show(rep.ratio)} [{rep.method}]")
        result = {"method": rep.method, "ratio": float(rep.ratio)}
        if isinstance(rep.ratio, Fraction):
            result.update(_frac_fields(rep.ratio, "ratio"))
            result.update(_frac_fields(rep.numerator, "numerator"))
            result.update(_frac_fields(rep.denominator, "denominator"))
        _write_json(cfg.out, {"meta": _meta(cfg), "result": result})
        return 0

    if cfg.mode == "audit":
        grid = None  # the default grid; --method could select others later
        rows = audit_formulas(grid, cfg.single_update)
        findings = sum(1 for r in rows if r.verdict == "finding")
        if cfg.out:
            with open(cfg.out, "w") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(AUDIT_CSV_HEADER)
                writer.writerows(r.csv_fields() for r in rows)
        else:
            writer = csv.writer(sys.stdout, lineterminator="\n")
            writer.writerow(AUDIT_CSV_HEADER)
            writer.writerows(r.csv_fields() for r in rows)
        print(
            f"audit: {len(rows)} rows, {findings} findings",
            file=sys.stderr,
        )
        return 0

    if cfg.mode == "search-best":
        params = cfg.params()
        schedule, res = best_deterministic_under_P1(params, cfg.single_update)
        mean = res.mean
        print(
            f"best schedule {schedule.to_text()} with expected average age "
            f"{_show(mean)} (exact {mean.numerator}/{mean.denominator})"
        )
        result = {
            "schedule": schedule.to_text(),
            "mean": float(mean),
            **_frac_fields(mean, "mean"),
        }
        try:
            reference = build_check_policy(params)
        except ValidationError:
            reference = None
        if reference is not None:
            ref_mean = exact_expected_age(reference, params, Fraction(1, 2)).mean
            result["reference_schedule"] = reference.to_text()
            result.update(_frac_fields(ref_mean, "reference_mean"))
            result["improves_on_reference"] = mean < ref_mean
        _write_json(cfg.out, {"meta": _meta(cfg), "result": result})
        return 0

    raise ValidationError(f"unknown mode {cfg.mode!r}")


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--T", type=int)
    sub.add_argument("--T1", type=int)
    sub.add_argument("--T2", type=int)
    sub.add_argument("--policy", help="policy name or explicit .CU string")
    sub.add_argument(
        "--user-slots",
        help="comma-separated direct-update slots for the bar policy",
    )
    sub.add_argument(
        "--adversary", help="zeros | ones | bernoulli | worst | 0/1 bitstring"
    )
    sub.add_argument("--p", help="forward probability, e.g. 1/2")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--method")
    sub.add_argument("--n", type=int, help="Monte Carlo sample count")
    sub.add_argument("--workers", type=int, help="parallel workers for sweeps")
    sub.add_argument(
        "--cap", type=int, help="enumeration cap as a power-of-two exponent"
    )
    sub.add_argument("--dp-cap", type=int, help="offline-DP horizon cap")
    sub.add_argument(
        "--no-single-update-constraint",
        action="store_true",
        help="drop the one-direct-update-per-cache-span rule",
    )
    sub.add_argument("--out", help="output file (CSV for traces/audit, JSON else)")


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        cfg = parse_config(args.config)
        if cfg.mode != args.mode:
            raise ValidationError(
                f"config mode {cfg.mode!r} does not match subcommand {args.mode!r}"
            )
    else:
        cfg = ExperimentConfig(mode=args.mode)
    for key in ("T", "T1", "T2", "policy", "adversary", "seed", "method", "n", "workers", "out"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if args.p is not None:
        cfg.p = _parse_fraction(args.p)
    if args.user_slots is not None:
        cfg.user_slots = [int(v) for v in args.user_slots.split(",") if v != ""]
    if args.cap is not None:
        cfg.enumeration_cap = args.cap
    if args.dp_cap is not None:
        cfg.dp_cap = args.dp_cap
    if args.no_single_update_constraint:
        cfg.single_update = False
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cachestomp",
        description=(
            "Simulate and analyze slotted cache updating against a "
            "timestamp-forging adversary."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sub = subs.add_parser(mode)
        _add_common(sub)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return run(cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
