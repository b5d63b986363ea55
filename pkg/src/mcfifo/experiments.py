"""The six benchmark cases and the bound-versus-simulation harness.

Cases 1-2 are periodic constant-size pairs (worst-case bounds apply),
cases 3-4 replace arrivals with independent Poisson processes (constant
then exponential sizes), case 5 couples the Poisson streams, and case 6
mixes a periodic class with a Poisson/exponential class. run_comparison
simulates a case, evaluates every applicable bound, and reports where the
empirical tail exceeds a bound beyond statistical slack.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import analytic
from .analytic import StabilityReport, step_bound_curve
from .errors import InvalidInputError, InvalidSpecError
from .simulator import RunResult, empirical_ccdf, merge_streams, run_fifo
from .traffic import (
    ArrivalSequence,
    ClassSpec,
    Constant,
    CoupledPoisson,
    DeterministicEnvelope,
    ExponentialMean,
    Periodic,
    Poisson,
    deterministic_envelope,
    generate_sequences,
    proportional_counts,
)
from .units import bits_from_bytes, bps_from_mbps, seconds_from_ms

DEFAULT_SEED = 1
DEFAULT_CUSTOMERS = 1_000_000
DEFAULT_GRID_POINTS = 2000
DEFAULT_WARMUP = 0.1

#: Absolute slack absorbing accumulated double rounding when simulated
#: delays are compared against deterministic bounds they can attain exactly.
FLOAT_SLACK_S = 1e-12

#: Grid points with empirical tail below 10/samples are inside shot noise
#: and excluded from stochastic violation checks.
NOISE_FLOOR_COUNT = 10.0


@dataclass(frozen=True)
class CaseConfig:
    """Everything needed to run one experiment."""

    case_id: int | str
    specs: tuple[ClassSpec, ...]
    customers: int = DEFAULT_CUSTOMERS
    seed: int = DEFAULT_SEED
    tau_max_s: float = 1e-3
    grid_points: int = DEFAULT_GRID_POINTS
    warmup_fraction: float = DEFAULT_WARMUP
    bounds: tuple[str, ...] = ()
    replications: int = 1
    explicit_sequences: tuple[ArrivalSequence, ...] | None = None

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.tau_max_s, self.grid_points)

    def rates(self) -> dict[int, float]:
        return {s.class_id: s.service_rate_bps for s in self.specs}


@dataclass(frozen=True)
class CurveEntry:
    """One curve of a comparison, empirical or analytical, with its metadata."""

    label: str
    kind: str  # "empirical" | "bound"
    metric: str  # "delay" | "waiting"
    class_id: int | None  # None = aggregate over classes
    grid_s: np.ndarray
    probs: np.ndarray
    guaranteed: bool = False  # violations of guaranteed bounds are failures
    approximate: bool = False
    note: str = ""
    samples: int = 0  # sample count behind empirical curves


@dataclass(frozen=True)
class ViolationPoint:
    tau_s: float
    empirical: float
    bound: float
    slack: float


@dataclass(frozen=True)
class ViolationReport:
    bound_label: str
    target_label: str
    guaranteed: bool
    checked_points: int
    points: tuple[ViolationPoint, ...]

    @property
    def count(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ComparisonResult:
    case_id: int | str
    stability: StabilityReport
    values: dict
    curves: tuple[CurveEntry, ...]
    violations: tuple[ViolationReport, ...]

    @property
    def guaranteed_violations(self) -> int:
        return sum(v.count for v in self.violations if v.guaranteed)

    def curve(self, label: str) -> CurveEntry:
        for entry in self.curves:
            if entry.label == label:
                return entry
        raise KeyError(label)

    def write_curves_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["curve_label", "tau_s", "prob"])
            for entry in self.curves:
                for tau, p in zip(entry.grid_s, entry.probs):
                    writer.writerow([entry.label, repr(float(tau)), repr(float(p))])

    def summary_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "stability": {
                "rho": self.stability.rho,
                "multiclass_rate_condition": self.stability.multiclass_rate_condition,
                "cruz_condition": self.stability.cruz_condition,
            },
            "values": self.values,
            "curves": [
                {
                    "label": c.label,
                    "kind": c.kind,
                    "metric": c.metric,
                    "class_id": c.class_id,
                    "guaranteed": c.guaranteed,
                    "approximate": c.approximate,
                    "note": c.note,
                }
                for c in self.curves
            ],
            "violations": [
                {
                    "bound_label": v.bound_label,
                    "target_label": v.target_label,
                    "guaranteed": v.guaranteed,
                    "checked_points": v.checked_points,
                    "count": v.count,
                }
                for v in self.violations
            ],
            "guaranteed_violations": self.guaranteed_violations,
        }

    def write_summary_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _case12_specs(c1_mbps: float) -> tuple[ClassSpec, ClassSpec]:
    return (
        ClassSpec(
            class_id=1,
            arrival=Periodic(seconds_from_ms(0.1)),
            size=Constant(bits_from_bytes(100)),
            service_rate_bps=bps_from_mbps(c1_mbps),
        ),
        ClassSpec(
            class_id=2,
            arrival=Periodic(seconds_from_ms(1.0)),
            size=Constant(bits_from_bytes(1250)),
            service_rate_bps=bps_from_mbps(100),
        ),
    )


def preset(case_id: int) -> CaseConfig:
    """Benchmark case presets; parameters are golden data frozen by tests."""
    if case_id == 1:
        return CaseConfig(1, _case12_specs(20), tau_max_s=2.0e-4, bounds=("deterministic",))
    if case_id == 2:
        return CaseConfig(2, _case12_specs(10), tau_max_s=2.5e-4, bounds=("deterministic",))
    if case_id == 3:
        specs = (
            ClassSpec(1, Poisson(1e4), Constant(bits_from_bytes(100)), bps_from_mbps(10)),
            ClassSpec(2, Poisson(1e3), Constant(bits_from_bytes(1250)), bps_from_mbps(100)),
        )
        return CaseConfig(3, specs, tau_max_s=6.0e-3, bounds=("md1",))
    if case_id == 4:
        specs = (
            ClassSpec(
                1, Poisson(1e4), ExponentialMean(bits_from_bytes(100)), bps_from_mbps(10)
            ),
            ClassSpec(
                2, Poisson(1e3), ExponentialMean(bits_from_bytes(1250)), bps_from_mbps(100)
            ),
        )
        return CaseConfig(4, specs, tau_max_s=1.2e-2, bounds=("mm1",))
    if case_id == 5:
        # same rates as case 3 with the arrival streams coupled; the
        # synchronized mechanism keeps Poisson marginals while making class-2
        # arrivals coincide with class-1 arrivals, which is what defeats the
        # independence-based bound
        specs = (
            ClassSpec(
                1,
                CoupledPoisson(1e4, coupling_group=1, mechanism="synchronized"),
                Constant(bits_from_bytes(100)),
                bps_from_mbps(10),
            ),
            ClassSpec(
                2,
                CoupledPoisson(1e3, coupling_group=1, mechanism="synchronized"),
                Constant(bits_from_bytes(1250)),
                bps_from_mbps(100),
            ),
        )
        return CaseConfig(
            5, specs, tau_max_s=6.0e-3, bounds=("md1_independent", "split_constant")
        )
    if case_id == 6:
        specs = (
            ClassSpec(
                1,
                Periodic(seconds_from_ms(0.1)),
                Constant(bits_from_bytes(100)),
                bps_from_mbps(10),
            ),
            ClassSpec(
                2,
                Poisson(1e3),
                ExponentialMean(bits_from_bytes(1250)),
                bps_from_mbps(100),
            ),
        )
        return CaseConfig(6, specs, tau_max_s=3.5e-3, bounds=("mixed_pair",))
    raise InvalidSpecError(f"unknown case id {case_id!r}")


def tightness_scenario(
    envelopes: Sequence[DeterministicEnvelope], rates_bps: Sequence[float]
) -> CaseConfig:
    """Arrival pattern attaining the worst-case deterministic delay.

    Every class emits its full burst at time 0; the burst customer served
    last leaves exactly sum_n burst_n/C_n later. Sequences are explicit, so
    the run bypasses the generators and their first-arrival phase convention.
    """
    specs = []
    seqs = []
    for i, (env, capacity) in enumerate(zip(envelopes, rates_bps), start=1):
        if env.burst_bits <= 0 or env.rate_bps <= 0:
            raise InvalidInputError("tightness needs positive rate and burst")
        specs.append(
            ClassSpec(
                class_id=i,
                arrival=Periodic(env.burst_bits / env.rate_bps),
                size=Constant(env.burst_bits),
                service_rate_bps=capacity,
            )
        )
        seqs.append(
            ArrivalSequence(i, np.array([0.0]), np.array([env.burst_bits]))
        )
    bound = sum(e.burst_bits / c for e, c in zip(envelopes, rates_bps))
    return CaseConfig(
        case_id="tightness",
        specs=tuple(specs),
        customers=len(specs),
        tau_max_s=1.5 * bound,
        grid_points=200,
        warmup_fraction=0.0,
        bounds=("deterministic",),
        explicit_sequences=tuple(seqs),
    )


def simulate_case(config: CaseConfig) -> RunResult:
    """Generate (or take) the case's arrivals and run them through the queue."""
    if config.explicit_sequences is not None:
        seqs = list(config.explicit_sequences)
    else:
        counts = proportional_counts(config.specs, config.customers)
        seqs = generate_sequences(config.specs, counts, config.seed)
    result = run_fifo(merge_streams(seqs), config.rates())
    if len(seqs) > 1:
        # keep only the span where every class is still arriving, so the
        # tail of the run is not a partially-loaded system
        horizon = min(seq.times_s[-1] for seq in seqs)
        keep = result.arrival_s <= horizon
        result = RunResult(
            result.class_ids[keep],
            result.class_index[keep],
            result.arrival_s[keep],
            result.waiting_s[keep],
            result.service_s[keep],
        )
    return result


def _empirical_entries(config: CaseConfig, result: RunResult) -> list[CurveEntry]:
    grid = config.grid()
    entries = []
    per_metric = {"delay": result.delay_s, "waiting": result.waiting_s}
    for metric, values in per_metric.items():
        ccdf = empirical_ccdf(values, grid, config.warmup_fraction)
        entries.append(
            CurveEntry(
                f"sim_{metric}",
                "empirical",
                metric,
                None,
                grid,
                ccdf.fractions,
                samples=ccdf.sample_count,
            )
        )
        for cid in sorted(set(int(c) for c in result.class_ids)):
            mask = result.class_ids == cid
            ccdf_c = empirical_ccdf(values[mask], grid, config.warmup_fraction)
            entries.append(
                CurveEntry(
                    f"sim_{metric}_c{cid}",
                    "empirical",
                    metric,
                    cid,
                    grid,
                    ccdf_c.fractions,
                    samples=ccdf_c.sample_count,
                )
            )
    return entries


def case_bound_entries(config: CaseConfig) -> tuple[list[CurveEntry], dict]:
    """Analytical curves for the case plus the scalar summary values."""
    grid = config.grid()
    specs = config.specs
    entries: list[CurveEntry] = []
    values: dict = {}

    for name in config.bounds:
        if name == "deterministic":
            envelopes = [deterministic_envelope(s) for s in specs]
            rates = [s.service_rate_bps for s in specs]
            dd1 = analytic.bound_dd1(envelopes, rates)
            values["dd1_bound_s"] = dd1
            entries.append(
                CurveEntry(
                    "det_multiclass",
                    "bound",
                    "delay",
                    None,
                    grid,
                    step_bound_curve(dd1, grid, "det_multiclass").probs,
                    guaranteed=True,
                )
            )
            cruz = analytic.bound_cruz_aggregate(envelopes, rates)
            values["cruz_bound_s"] = cruz if cruz is not None else "N.A."
            if cruz is not None:
                entries.append(
                    CurveEntry(
                        "det_aggregate",
                        "bound",
                        "delay",
                        None,
                        grid,
                        step_bound_curve(cruz, grid, "det_aggregate").probs,
                        guaranteed=True,
                    )
                )
        elif name in ("md1", "md1_independent"):
            exact, approx = analytic.theta_md1(specs)
            values["md1_theta_exact_per_s"] = exact.theta_star
            values["md1_theta_approx_per_s"] = approx.theta_star
            independent = name == "md1"
            note = "" if independent else "assumes independent classes"
            entries.append(
                CurveEntry(
                    "md1_waiting_exact",
                    "bound",
                    "waiting",
                    None,
                    grid,
                    analytic.waiting_bound_curve(exact, grid).probs,
                    guaranteed=independent,
                    note=note,
                )
            )
            entries.append(
                CurveEntry(
                    "md1_waiting_approx",
                    "bound",
                    "waiting",
                    None,
                    grid,
                    analytic.waiting_bound_curve(approx, grid).probs,
                    approximate=True,
                    note=note,
                )
            )
            if independent:
                # delay form: constant service shifts the waiting tail
                for s in specs:
                    curve = analytic.delay_bound_convolve(
                        s.mean_service_s,
                        analytic.waiting_bound_curve(exact, grid),
                        label=f"md1_delay_exact_c{s.class_id}",
                    )
                    entries.append(
                        CurveEntry(
                            curve.label,
                            "bound",
                            "delay",
                            s.class_id,
                            grid,
                            curve.probs,
                            guaranteed=True,
                        )
                    )
        elif name == "mm1":
            exact, approx = analytic.theta_mm1(specs)
            values["mm1_theta_exact_per_s"] = exact.theta_star
            values["mm1_theta_approx_per_s"] = approx.theta_star
            entries.append(
                CurveEntry(
                    "mm1_waiting_exact",
                    "bound",
                    "waiting",
                    None,
                    grid,
                    analytic.waiting_bound_curve(exact, grid).probs,
                    guaranteed=True,
                )
            )
            entries.append(
                CurveEntry(
                    "mm1_waiting_approx",
                    "bound",
                    "waiting",
                    None,
                    grid,
                    analytic.waiting_bound_curve(approx, grid).probs,
                    approximate=True,
                )
            )
        elif name == "split_constant":
            curve = analytic.bound_mstar_d1(specs, grid)
            rho = sum(s.utilization for s in specs)
            curvature = sum(s.arrival_rate_hz * s.mean_service_s**2 for s in specs)
            values["split_theta_per_s"] = 2.0 * (1.0 - rho) / curvature
            entries.append(
                CurveEntry(
                    curve.label,
                    "bound",
                    "waiting",
                    None,
                    grid,
                    curve.probs,
                    approximate=True,
                    note="valid under any cross-class dependence",
                )
            )
        elif name == "mixed_pair":
            theta = analytic.theta_dmdm(specs)
            values["theta_star_per_s"] = theta.theta_star
            for s in specs:
                curve = analytic.bound_dmdm(specs, grid, s.class_id)
                entries.append(
                    CurveEntry(
                        curve.label,
                        "bound",
                        "waiting",
                        s.class_id,
                        grid,
                        curve.probs,
                        guaranteed=True,
                    )
                )
        else:
            raise InvalidSpecError(f"unknown bound name {name!r}")

    if "theta_star_per_s" not in values:
        for key in ("md1_theta_exact_per_s", "mm1_theta_exact_per_s"):
            if key in values:
                values["theta_star_per_s"] = values[key]
                break
    return entries, values


def _is_deterministic(config: CaseConfig) -> bool:
    return all(isinstance(s.arrival, Periodic) for s in config.specs)


def _check_violations(
    bound: CurveEntry,
    target: CurveEntry,
    deterministic: bool,
) -> ViolationReport:
    points = []
    checked = 0
    n_samples = max(1, target.samples)
    floor = 0.0 if deterministic else NOISE_FLOOR_COUNT / n_samples
    for tau, emp, b in zip(target.grid_s, target.probs, bound.probs):
        if emp <= floor:
            continue
        checked += 1
        slack = 0.0 if deterministic else 3.0 * math.sqrt(emp * (1.0 - emp) / n_samples)
        if emp > b + slack:
            points.append(ViolationPoint(float(tau), float(emp), float(b), slack))
    return ViolationReport(
        bound.label, target.label, bound.guaranteed, checked, tuple(points)
    )


def run_comparison(config: CaseConfig) -> ComparisonResult:
    """Simulate a case, compute its bounds, and flag empirical exceedances.

    Deterministic cases additionally compare every delay against the
    worst-case value directly (no grid, no statistical slack, only the
    double-rounding allowance).
    """
    result = simulate_case(config)
    stability = analytic.stability(config.specs)
    empirical = _empirical_entries(config, result)
    bound_entries, values = case_bound_entries(config)
    deterministic = _is_deterministic(config)

    violations = []
    for bound in bound_entries:
        target_label = (
            f"sim_{bound.metric}"
            if bound.class_id is None
            else f"sim_{bound.metric}_c{bound.class_id}"
        )
        target = next((e for e in empirical if e.label == target_label), None)
        if target is None:
            continue
        violations.append(_check_violations(bound, target, deterministic))

    if deterministic and "dd1_bound_s" in values:
        bound_s = values["dd1_bound_s"]
        delays = result.delay_s
        over = delays > bound_s + FLOAT_SLACK_S
        values["max_delay_s"] = float(delays.max())
        values["delays_above_dd1"] = int(np.count_nonzero(over))

    return ComparisonResult(
        case_id=config.case_id,
        stability=stability,
        values=values,
        curves=tuple(empirical + bound_entries),
        violations=tuple(violations),
    )
