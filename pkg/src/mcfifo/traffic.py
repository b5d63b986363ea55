"""Traffic classes, arrival-sequence generators and envelope characterizations.

A traffic class couples an arrival process (periodic, Poisson, or Poisson
coupled to other classes through a shared random-number stream), a customer
size distribution, and the constant service rate its customers receive.
Generators are pure functions of (spec, count, seed): the same seed always
reproduces the same sequence, and every class draws from its own substream
of a single 64-bit seed, so adding or reordering classes does not perturb
the others.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidSpecError, NoDecayError, UnsupportedEnvelopeError

# Substream roles for splittable seeding.
_ROLE_ARRIVALS = 0
_ROLE_SIZES = 1
_ROLE_GROUP = 2

#: Coupling mechanisms for classes sharing a random-number stream.
#: "scaled": class n's j-th interarrival is -ln(u_j)/rate_n, all classes
#: reading the same uniforms, so interarrival sequences are comonotone
#: (elementwise proportional).
#: "synchronized": the fastest class's arrival instants form a master
#: stream and each slower class keeps each instant with probability
#: rate_n/rate_max, so its arrivals coincide with master arrivals.
#: Both keep exact Poisson marginals per class.
COUPLING_MECHANISMS = ("scaled", "synchronized")


@dataclass(frozen=True)
class Periodic:
    """Arrivals at period, 2*period, 3*period, ... (empty system at time 0)."""

    period_s: float


@dataclass(frozen=True)
class Poisson:
    """Independent Poisson arrivals at the given rate."""

    rate_hz: float


@dataclass(frozen=True)
class CoupledPoisson:
    """Poisson arrivals sharing a random-number stream with a coupling group."""

    rate_hz: float
    coupling_group: int
    mechanism: str = "scaled"


@dataclass(frozen=True)
class Constant:
    """Every customer carries the same number of bits."""

    bits: float


@dataclass(frozen=True)
class ExponentialMean:
    """Customer sizes are i.i.d. exponential with the given mean (bits)."""

    mean_bits: float


ArrivalKind = Periodic | Poisson | CoupledPoisson
SizeKind = Constant | ExponentialMean


@dataclass(frozen=True)
class ClassSpec:
    """One traffic class: arrival process, size distribution, service rate."""

    class_id: int
    arrival: ArrivalKind
    size: SizeKind
    service_rate_bps: float

    def __post_init__(self):
        if isinstance(self.arrival, Periodic):
            if self.arrival.period_s <= 0:
                raise InvalidSpecError(f"class {self.class_id}: period must be > 0")
        elif isinstance(self.arrival, (Poisson, CoupledPoisson)):
            if self.arrival.rate_hz <= 0:
                raise InvalidSpecError(f"class {self.class_id}: rate must be > 0")
            if isinstance(self.arrival, CoupledPoisson):
                if self.arrival.mechanism not in COUPLING_MECHANISMS:
                    raise InvalidSpecError(
                        f"class {self.class_id}: unknown coupling mechanism "
                        f"{self.arrival.mechanism!r}"
                    )
        else:
            raise InvalidSpecError(f"class {self.class_id}: unknown arrival kind")
        if isinstance(self.size, Constant):
            if self.size.bits <= 0:
                raise InvalidSpecError(f"class {self.class_id}: size must be > 0")
        elif isinstance(self.size, ExponentialMean):
            if self.size.mean_bits <= 0:
                raise InvalidSpecError(f"class {self.class_id}: mean size must be > 0")
        else:
            raise InvalidSpecError(f"class {self.class_id}: unknown size kind")
        if self.service_rate_bps <= 0:
            raise InvalidSpecError(f"class {self.class_id}: service rate must be > 0")

    @property
    def arrival_rate_hz(self) -> float:
        """Mean customer arrival rate (1/period for periodic classes)."""
        if isinstance(self.arrival, Periodic):
            return 1.0 / self.arrival.period_s
        return self.arrival.rate_hz

    @property
    def mean_size_bits(self) -> float:
        if isinstance(self.size, Constant):
            return self.size.bits
        return self.size.mean_bits

    @property
    def mean_service_s(self) -> float:
        """Mean time a customer of this class occupies the server."""
        return self.mean_size_bits / self.service_rate_bps

    @property
    def service_completion_rate_hz(self) -> float:
        return 1.0 / self.mean_service_s

    @property
    def mean_rate_bps(self) -> float:
        """Long-run traffic rate of the class in bits/second."""
        return self.arrival_rate_hz * self.mean_size_bits

    @property
    def utilization(self) -> float:
        """Fraction of the class's dedicated rate it consumes on average."""
        return self.arrival_rate_hz * self.mean_service_s


@dataclass(frozen=True)
class ArrivalSequence:
    """Ordered arrival events (time in seconds, size in bits) of one class."""

    class_id: int
    times_s: np.ndarray
    sizes_bits: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times_s, dtype=float)
        sizes = np.asarray(self.sizes_bits, dtype=float)
        object.__setattr__(self, "times_s", times)
        object.__setattr__(self, "sizes_bits", sizes)
        if times.shape != sizes.shape or times.ndim != 1:
            raise InvalidSpecError("times and sizes must be 1-d arrays of equal length")
        if len(times) and np.any(np.diff(times) < 0):
            raise InvalidSpecError("arrival times must be nondecreasing")
        if np.any(sizes <= 0):
            raise InvalidSpecError("sizes must be positive")

    def __len__(self) -> int:
        return len(self.times_s)

    def traffic_bits(self, start_s: float, end_s: float) -> float:
        """Total bits arriving in the half-open window [start, end)."""
        lo = np.searchsorted(self.times_s, start_s, side="left")
        hi = np.searchsorted(self.times_s, end_s, side="left")
        return float(np.sum(self.sizes_bits[lo:hi]))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["class_id", "arrival_time_s", "size_bits"])
            for t, b in zip(self.times_s, self.sizes_bits):
                writer.writerow([self.class_id, repr(float(t)), repr(float(b))])


@dataclass(frozen=True)
class DeterministicEnvelope:
    """Token-bucket style constraint: traffic in any window <= rate*t + burst."""

    rate_bps: float
    burst_bits: float

    def __post_init__(self):
        if self.rate_bps < 0 or self.burst_bits < 0:
            raise InvalidSpecError("envelope rate and burst must be nonnegative")


@dataclass(frozen=True)
class ExponentialTail:
    """Probabilistic envelope with tail prefactor * exp(-decay_per_bit * sigma)."""

    rate_bps: float
    prefactor: float
    decay_per_bit: float

    def __post_init__(self):
        if self.prefactor < 0 or self.decay_per_bit <= 0:
            raise InvalidSpecError("need prefactor >= 0 and decay > 0")

    def tail(self, sigma_bits):
        """Probability that the backlog-like supremum exceeds sigma bits."""
        sigma = np.asarray(sigma_bits, dtype=float)
        out = np.clip(self.prefactor * np.exp(-self.decay_per_bit * sigma), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DegenerateTail:
    """Deterministic envelope as a tail: certain below the burst, zero at/above."""

    rate_bps: float
    burst_bits: float

    def tail(self, sigma_bits):
        sigma = np.asarray(sigma_bits, dtype=float)
        out = np.where(sigma >= self.burst_bits, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out


GsbbTail = ExponentialTail | DegenerateTail


def _substream(seed: int, role: int, key: int) -> np.random.Generator:
    """Deterministic per-(role, key) generator derived from one 64-bit seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(role, key)))


def _exponential_from_uniforms(u: np.ndarray, rate_hz: float) -> np.ndarray:
    # -ln(u)/rate; u == 0 has probability 2**-53 per draw but would give inf
    u = np.where(u == 0.0, np.finfo(float).tiny, u)
    return -np.log(u) / rate_hz


def _draw_sizes(size: SizeKind, count: int, seed: int, class_id: int) -> np.ndarray:
    if isinstance(size, Constant):
        return np.full(count, size.bits, dtype=float)
    u = _substream(seed, _ROLE_SIZES, class_id).random(count)
    u = np.where(u == 0.0, np.finfo(float).tiny, u)
    return -size.mean_bits * np.log(u)


def gen_periodic(spec: ClassSpec, count: int) -> ArrivalSequence:
    """Arrivals at period, 2*period, ..., count*period, all of constant size.

    The first arrival is strictly after time 0 so the system starts empty.
    """
    if not isinstance(spec.arrival, Periodic):
        raise InvalidSpecError(f"class {spec.class_id} is not periodic")
    if not isinstance(spec.size, Constant):
        raise InvalidSpecError("periodic generation requires constant sizes")
    if count < 1:
        raise InvalidSpecError("count must be >= 1")
    times = np.arange(1, count + 1, dtype=float) * spec.arrival.period_s
    sizes = np.full(count, spec.size.bits, dtype=float)
    return ArrivalSequence(spec.class_id, times, sizes)


def gen_poisson(spec: ClassSpec, count: int, seed: int) -> ArrivalSequence:
    """Poisson arrivals with sizes drawn from the class's size distribution."""
    if not isinstance(spec.arrival, Poisson):
        raise InvalidSpecError(f"class {spec.class_id} is not an independent Poisson class")
    if count < 1:
        raise InvalidSpecError("count must be >= 1")
    u = _substream(seed, _ROLE_ARRIVALS, spec.class_id).random(count)
    times = np.cumsum(_exponential_from_uniforms(u, spec.arrival.rate_hz))
    sizes = _draw_sizes(spec.size, count, seed, spec.class_id)
    return ArrivalSequence(spec.class_id, times, sizes)


def gen_coupled_poisson(
    specs: Sequence[ClassSpec],
    count: int | Sequence[int],
    seed: int,
) -> list[ArrivalSequence]:
    """Generate one coupling group's arrival sequences from a shared stream.

    With the "scaled" mechanism every class applies -ln(u_j)/rate to the same
    uniform u_j, so interarrival sequences are elementwise proportional. With
    "synchronized", slower classes keep a random subset of the fastest class's
    arrival instants. Size draws always come from per-class substreams, so the
    coupling affects interarrival times only.
    """
    if len(specs) < 2:
        raise InvalidSpecError("a coupling group needs at least 2 classes")
    groups = {s.arrival.coupling_group for s in specs if isinstance(s.arrival, CoupledPoisson)}
    if len(groups) != 1 or len(specs) != sum(
        isinstance(s.arrival, CoupledPoisson) for s in specs
    ):
        raise InvalidSpecError("all specs must share one coupling group")
    mechanisms = {s.arrival.mechanism for s in specs}
    if len(mechanisms) != 1:
        raise InvalidSpecError("all specs in a group must use the same mechanism")
    group = groups.pop()
    mechanism = mechanisms.pop()

    counts = [count] * len(specs) if isinstance(count, int) else list(count)
    if len(counts) != len(specs) or any(c < 1 for c in counts):
        raise InvalidSpecError("need one positive count per class")

    rng = _substream(seed, _ROLE_GROUP, group)
    out = []
    if mechanism == "scaled":
        u = rng.random(max(counts))
        for spec, n in zip(specs, counts):
            gaps = _exponential_from_uniforms(u[:n], spec.arrival.rate_hz)
            sizes = _draw_sizes(spec.size, n, seed, spec.class_id)
            out.append(ArrivalSequence(spec.class_id, np.cumsum(gaps), sizes))
    else:
        fastest = max(range(len(specs)), key=lambda i: specs[i].arrival.rate_hz)
        rate_max = specs[fastest].arrival.rate_hz
        n_master = counts[fastest]
        u = rng.random(n_master)
        master = np.cumsum(_exponential_from_uniforms(u, rate_max))
        for i, spec in enumerate(specs):
            if i == fastest:
                times = master
            else:
                # thinning keeps the Poisson marginal at the class rate
                keep = rng.random(n_master) < spec.arrival.rate_hz / rate_max
                times = master[keep]
                if len(times) == 0:
                    times = master[-1:]
            sizes = _draw_sizes(spec.size, len(times), seed, spec.class_id)
            out.append(ArrivalSequence(spec.class_id, times, sizes))
    return out


def generate_sequences(
    specs: Sequence[ClassSpec],
    counts: dict[int, int],
    seed: int,
) -> list[ArrivalSequence]:
    """Generate all classes' sequences, dispatching per arrival kind.

    Coupling groups are generated together so they share their stream; the
    result is ordered like `specs`.
    """
    by_id: dict[int, ArrivalSequence] = {}
    grouped: dict[int, list[ClassSpec]] = {}
    for spec in specs:
        if isinstance(spec.arrival, CoupledPoisson):
            grouped.setdefault(spec.arrival.coupling_group, []).append(spec)
        elif isinstance(spec.arrival, Periodic):
            by_id[spec.class_id] = gen_periodic(spec, counts[spec.class_id])
        else:
            by_id[spec.class_id] = gen_poisson(spec, counts[spec.class_id], seed)
    for members in grouped.values():
        seqs = gen_coupled_poisson(members, [counts[s.class_id] for s in members], seed)
        for seq in seqs:
            by_id[seq.class_id] = seq
    return [by_id[s.class_id] for s in specs]


def proportional_counts(specs: Sequence[ClassSpec], total: int) -> dict[int, int]:
    """Split a total customer budget across classes in proportion to their rates."""
    rates = np.array([s.arrival_rate_hz for s in specs])
    weights = rates / rates.sum()
    counts = {
        s.class_id: max(1, int(round(total * w))) for s, w in zip(specs, weights)
    }
    return counts


def deterministic_envelope(spec: ClassSpec) -> DeterministicEnvelope:
    """Rate/burst envelope of a periodic constant-size class: (size/period, size)."""
    if not (isinstance(spec.arrival, Periodic) and isinstance(spec.size, Constant)):
        raise UnsupportedEnvelopeError(
            f"class {spec.class_id}: only periodic constant-size classes have a "
            "deterministic envelope"
        )
    return DeterministicEnvelope(
        rate_bps=spec.size.bits / spec.arrival.period_s, burst_bits=spec.size.bits
    )


def gsbb_tail_from_mgf(
    spec: ClassSpec, reference_rate_bps: float, method: str = "exact"
) -> GsbbTail:
    """Probabilistic burst tail of one class relative to a reference rate.

    For a periodic constant-size class the tail is degenerate: the backlog
    supremum never exceeds one customer's bits. For Poisson classes the tail
    is exponential, with decay rate the largest theta satisfying the per-class
    condition E[exp(theta*(A(1)/C - R/C))] <= 1. With constant sizes that root
    has no closed form; method "exact" solves it numerically and "approx" uses
    the second-order expansion 2*(R/C - utilization)/(rate*Y^2). Exponential
    sizes admit the closed form mu - rate/(R/C), which is always exact.
    """
    if method not in ("exact", "approx"):
        raise InvalidSpecError(f"unknown method {method!r}")
    capacity = spec.service_rate_bps
    if isinstance(spec.arrival, Periodic):
        if not isinstance(spec.size, Constant):
            raise UnsupportedEnvelopeError("periodic classes need constant sizes")
        if reference_rate_bps < spec.mean_rate_bps:
            raise NoDecayError(
                "reference rate below the class's long-run rate: no finite burst"
            )
        return DegenerateTail(rate_bps=reference_rate_bps, burst_bits=spec.size.bits)

    lam = spec.arrival_rate_hz
    omega = reference_rate_bps / capacity
    rho_n = spec.utilization
    if omega <= rho_n:
        raise NoDecayError(
            f"class {spec.class_id}: reference rate share {omega:.6g} does not "
            f"exceed the class utilization {rho_n:.6g}"
        )
    y = spec.mean_service_s
    if isinstance(spec.size, Constant):
        if method == "approx":
            theta = 2.0 * (omega - rho_n) / (lam * y * y)
        else:
            from .analytic import theta_exact

            def mgf_excess(theta: float) -> float:
                return math.exp(lam * math.expm1(theta * y) - theta * omega)

            theta = theta_exact(mgf_excess).theta_star
    else:
        # exponential sizes: rate/(mu - theta) = omega solves exactly
        mu = spec.service_completion_rate_hz
        theta = mu - lam / omega
    return ExponentialTail(
        rate_bps=reference_rate_bps, prefactor=1.0, decay_per_bit=theta / capacity
    )


def coupling_groups(specs: Iterable[ClassSpec]) -> dict[int, list[ClassSpec]]:
    """Map coupling-group id to its member specs."""
    groups: dict[int, list[ClassSpec]] = {}
    for spec in specs:
        if isinstance(spec.arrival, CoupledPoisson):
            groups.setdefault(spec.arrival.coupling_group, []).append(spec)
    return groups
