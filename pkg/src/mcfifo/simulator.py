"""Event-driven multiclass FIFO queue.

FIFO with known arrival order needs no event calendar: after merging the
per-class sequences, departures follow the single-pass recursion
d_j = max(a_j, d_{j-1}) + service_j. The recursion runs sequentially in
plain floats so rounding stays at the scale of one addition per customer.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, Mapping, Sequence

import numpy as np

from .errors import InvalidInputError
from .traffic import ArrivalSequence, ClassSpec, Periodic, generate_sequences

if TYPE_CHECKING:  # pragma: no cover
    from .experiments import CaseConfig


@dataclass(frozen=True)
class CustomerRecord:
    """One served customer."""

    class_id: int
    class_index: int  # 1-based index within the class
    aggregate_index: int  # 0-based position in arrival order
    arrival_s: float
    departure_s: float
    service_s: float

    @property
    def delay_s(self) -> float:
        return self.departure_s - self.arrival_s

    @property
    def waiting_s(self) -> float:
        return self.delay_s - self.service_s


@dataclass(frozen=True)
class MergedArrivals:
    """Aggregate arrival stream, ordered by time with deterministic tie-breaks."""

    times_s: np.ndarray
    sizes_bits: np.ndarray
    class_ids: np.ndarray
    class_index: np.ndarray  # 1-based per-class customer number

    def __len__(self) -> int:
        return len(self.times_s)


@dataclass
class RunResult:
    """All per-customer outcomes of one simulation run, as parallel arrays.

    Waiting is the stored quantity; delay and departure derive from it, so
    waiting >= 0 and delay = waiting + service hold exactly in floats.
    """

    class_ids: np.ndarray
    class_index: np.ndarray
    arrival_s: np.ndarray
    waiting_s: np.ndarray
    service_s: np.ndarray

    def __len__(self) -> int:
        return len(self.arrival_s)

    @property
    def delay_s(self) -> np.ndarray:
        return self.waiting_s + self.service_s

    @property
    def departure_s(self) -> np.ndarray:
        return self.arrival_s + self.delay_s

    def record(self, i: int) -> CustomerRecord:
        return CustomerRecord(
            class_id=int(self.class_ids[i]),
            class_index=int(self.class_index[i]),
            aggregate_index=i,
            arrival_s=float(self.arrival_s[i]),
            departure_s=float(self.departure_s[i]),
            service_s=float(self.service_s[i]),
        )

    def iter_records(self) -> Iterator[CustomerRecord]:
        return (self.record(i) for i in range(len(self)))

    def for_class(self, class_id: int) -> "RunResult":
        mask = self.class_ids == class_id
        return RunResult(
            self.class_ids[mask],
            self.class_index[mask],
            self.arrival_s[mask],
            self.waiting_s[mask],
            self.service_s[mask],
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["class_id", "j", "arrival_s", "departure_s", "delay_s", "waiting_s"]
            )
            delay = self.delay_s
            waiting = self.waiting_s
            for i in range(len(self)):
                writer.writerow(
                    [
                        int(self.class_ids[i]),
                        int(self.class_index[i]),
                        repr(float(self.arrival_s[i])),
                        repr(float(self.departure_s[i])),
                        repr(float(delay[i])),
                        repr(float(waiting[i])),
                    ]
                )


@dataclass(frozen=True)
class EmpiricalCCDF:
    """Tail fractions of a sample over a tau grid."""

    grid_s: np.ndarray
    fractions: np.ndarray
    sample_count: int
    discarded: int

    def at(self, tau_s: float) -> float:
        return float(np.interp(tau_s, self.grid_s, self.fractions, left=1.0))


def merge_streams(sequences: Sequence[ArrivalSequence]) -> MergedArrivals:
    """Stable time-ordered merge; ties go to the lower class id, then lower j."""
    times = np.concatenate([s.times_s for s in sequences])
    sizes = np.concatenate([s.sizes_bits for s in sequences])
    cids = np.concatenate(
        [np.full(len(s), s.class_id, dtype=np.int64) for s in sequences]
    )
    jidx = np.concatenate(
        [np.arange(1, len(s) + 1, dtype=np.int64) for s in sequences]
    )
    order = np.lexsort((jidx, cids, times))
    return MergedArrivals(times[order], sizes[order], cids[order], jidx[order])


def run_fifo(merged: MergedArrivals, rates_bps: Mapping[int, float]) -> RunResult:
    """Apply the FIFO departure recursion to a merged arrival stream.

    Service times are size/rate of the customer's own class; the server is
    empty before the first arrival.
    """
    times = merged.times_s
    if len(times) and np.any(np.diff(times) < 0):
        raise InvalidInputError("aggregate arrivals must be time-ordered")
    rate_per_customer = np.array([rates_bps[cid] for cid in merged.class_ids])
    if np.any(rate_per_customer <= 0) or np.any(merged.sizes_bits <= 0):
        raise InvalidInputError("sizes and rates must be positive")
    service = merged.sizes_bits / rate_per_customer

    # plain-float loop: lists are much faster to iterate than ndarrays and
    # the recursion cannot be vectorized without changing its rounding
    a_list = times.tolist()
    s_list = service.tolist()
    w_list = [0.0] * len(a_list)
    d_prev = 0.0
    for i in range(len(a_list)):
        a_i = a_list[i]
        w = d_prev - a_i
        if w < 0.0:
            w = 0.0
        w_list[i] = w
        d_prev = a_i + (w + s_list[i])

    return RunResult(
        class_ids=merged.class_ids.copy(),
        class_index=merged.class_index.copy(),
        arrival_s=times.copy(),
        waiting_s=np.asarray(w_list),
        service_s=service,
    )


def empirical_ccdf(
    values_s: Sequence[float] | np.ndarray,
    grid_s: np.ndarray,
    warmup_discard: float = 0.1,
) -> EmpiricalCCDF:
    """Tail fraction (# values > tau)/kept after discarding a leading fraction.

    Values must be in arrival order for the discard to mean warmup. Use
    warmup_discard=0 for transient studies.
    """
    values = np.asarray(values_s, dtype=float)
    if not 0.0 <= warmup_discard < 1.0:
        raise InvalidInputError("warmup_discard must be in [0, 1)")
    discard = int(len(values) * warmup_discard)
    kept = np.sort(values[discard:])
    if len(kept) == 0:
        raise InvalidInputError("no values left after warmup discard")
    grid = np.asarray(grid_s, dtype=float)
    above = len(kept) - np.searchsorted(kept, grid, side="right")
    return EmpiricalCCDF(grid, above / len(kept), len(kept), discard)


def replication_seed(base_seed: int, replication: int) -> int:
    """Independent 64-bit seed for one replication, stable across platforms."""
    ss = np.random.SeedSequence(entropy=[base_seed, replication])
    return int(ss.generate_state(1, np.uint64)[0])


def _simulate_prefix(
    specs: Sequence[ClassSpec], target_class: int, j_max: int, seed: int
) -> RunResult:
    """Simulate until the target class has served at least j_max customers."""
    rates = {s.class_id: s.service_rate_bps for s in specs}
    target = next(s for s in specs if s.class_id == target_class)
    factor = 1.25
    while True:
        counts = {}
        for s in specs:
            expected = j_max * s.arrival_rate_hz / target.arrival_rate_hz
            counts[s.class_id] = max(4, int(factor * expected) + 8)
        counts[target_class] = max(counts[target_class], j_max)
        seqs = generate_sequences(specs, counts, seed)
        horizon = {s.class_id: seq.times_s[-1] for s, seq in zip(specs, seqs)}
        t_needed = next(
            seq for s, seq in zip(specs, seqs) if s.class_id == target_class
        ).times_s[j_max - 1]
        if all(h >= t_needed for cid, h in horizon.items() if cid != target_class):
            return run_fifo(merge_streams(seqs), rates)
        factor *= 2.0  # other classes ran out before the target's j-th arrival


def _transient_worker(args) -> list[float]:
    specs, class_id, js, seed = args
    result = _simulate_prefix(specs, class_id, max(js), seed)
    delays = result.for_class(class_id).delay_s
    return [float(delays[j - 1]) for j in js]


def transient_delays(
    case: "CaseConfig",
    js: Sequence[int],
    class_id: int,
    replications: int,
    jobs: int = 1,
) -> dict[int, np.ndarray]:
    """Delay of the j-th class customer across independent replications.

    One simulation per replication serves every requested j, so the returned
    arrays are sampled from the same runs. Replication seeds depend only on
    (case seed, replication index), so results are identical for any jobs
    count.
    """
    if replications < 1:
        raise InvalidInputError("replications must be >= 1")
    js = sorted(set(int(j) for j in js))
    if any(j < 1 for j in js):
        raise InvalidInputError("customer indices are 1-based")
    if all(isinstance(s.arrival, Periodic) for s in case.specs):
        if replications > 1:
            warnings.warn(
                "all classes are deterministic: replications are identical",
                stacklevel=2,
            )
    tasks = [
        (case.specs, class_id, js, replication_seed(case.seed, r))
        for r in range(replications)
    ]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_transient_worker, tasks, chunksize=64))
    else:
        rows = [_transient_worker(t) for t in tasks]
    out = {j: np.empty(replications) for j in js}
    for r, row in enumerate(rows):
        for j, value in zip(js, row):
            out[j][r] = value
    return out


def transient_distribution(
    case: "CaseConfig",
    j: int,
    class_id: int,
    replications: int,
    grid_s: np.ndarray,
) -> EmpiricalCCDF:
    """CCDF of the j-th class customer's delay across independent replications."""
    values = transient_delays(case, [j], class_id, replications)[j]
    return empirical_ccdf(values, grid_s, warmup_discard=0.0)
