"""Analytical delay and waiting-time bounds for the multiclass FIFO queue.

Deterministic bounds come straight from rate/burst envelopes. Stochastic
bounds hinge on a decay rate: the largest theta for which the excess-work
condition E[exp(theta*(sum_n A_n(1)/C_n - 1))] <= 1 holds, where A_n(1)/C_n
is the service time brought by class n per unit time. The waiting-time tail
is then bounded by exp(-theta*tau), and delay tails follow by convolving
with the service-time distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import signal

from .errors import (
    ConditionNotMetError,
    InvalidInputError,
    InvalidSpecError,
    NoPositiveRootError,
)
from .traffic import (
    ClassSpec,
    Constant,
    CoupledPoisson,
    DegenerateTail,
    DeterministicEnvelope,
    ExponentialMean,
    ExponentialTail,
    GsbbTail,
    Periodic,
    Poisson,
)

#: Relative width at which the decay-rate bisection stops.
ROOT_REL_TOL = 1e-12
#: Golden-section tolerance for the two-class split search.
SPLIT_TOL = 1e-8
#: Default refinement factor of the internal convolution grid.
CONV_REFINE = 32

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ThetaSolution:
    """A waiting-time decay rate with how it was obtained.

    residual is the excess-work condition value at theta_star minus one for
    exact roots (zero by convention for second-order approximations); bracket
    is the final bisection interval for exact roots.
    """

    theta_star: float
    method: str  # "exact-root" | "taylor-approx"
    residual: float
    bracket: tuple[float, float] | None = None

    def __post_init__(self):
        if self.theta_star <= 0:
            raise InvalidInputError("decay rate must be positive")


@dataclass(frozen=True)
class BoundCurve:
    """Tail probabilities over a tau grid, from a bound or an empirical source."""

    grid_s: np.ndarray
    probs: np.ndarray
    label: str
    approximate: bool = False

    def __post_init__(self):
        grid = np.asarray(self.grid_s, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "grid_s", grid)
        object.__setattr__(self, "probs", probs)
        if grid.ndim != 1 or grid.shape != probs.shape:
            raise InvalidInputError("grid and probs must be 1-d arrays of equal length")
        if len(grid) > 1 and np.any(np.diff(grid) <= 0):
            raise InvalidInputError("grid must be strictly increasing")
        if np.any(probs < -1e-12) or np.any(probs > 1 + 1e-12):
            raise InvalidInputError("probabilities must lie in [0, 1]")
        if np.any(np.diff(probs) > 1e-12):
            raise InvalidInputError("tail probabilities must be nonincreasing")

    def at(self, tau_s: float) -> float:
        """Curve value at tau, interpolated; 1 left of the grid, last value right."""
        return float(np.interp(tau_s, self.grid_s, self.probs, left=1.0))


@dataclass(frozen=True)
class StabilityReport:
    """Utilization and the applicability conditions of the deterministic bounds."""

    rho: float
    multiclass_rate_condition: bool  # sum_n r_n/C_n <= 1
    cruz_condition: bool  # sum_n r_n <= min_n C_n


def stability(specs: Sequence[ClassSpec]) -> StabilityReport:
    """Utilization report; rates of stochastic classes are their mean rates."""
    rho = sum(s.mean_rate_bps / s.service_rate_bps for s in specs)
    total_rate = sum(s.mean_rate_bps for s in specs)
    min_capacity = min(s.service_rate_bps for s in specs)
    return StabilityReport(
        rho=rho,
        multiclass_rate_condition=rho <= 1.0,
        cruz_condition=total_rate <= min_capacity,
    )


def bound_dd1(
    envelopes: Sequence[DeterministicEnvelope], rates_bps: Sequence[float]
) -> float:
    """Worst-case delay sum_n burst_n / C_n, valid when sum_n r_n/C_n <= 1."""
    if len(envelopes) != len(rates_bps):
        raise InvalidInputError("need one rate per envelope")
    if sum(e.rate_bps / c for e, c in zip(envelopes, rates_bps)) > 1.0:
        raise ConditionNotMetError("sum of per-class rate shares exceeds 1")
    return sum(e.burst_bits / c for e, c in zip(envelopes, rates_bps))


def bound_cruz_aggregate(
    envelopes: Sequence[DeterministicEnvelope], rates_bps: Sequence[float]
) -> float | None:
    """Aggregate single-queue delay bound, or None when its condition fails.

    Treating the aggregate as one flow served at the slowest class rate gives
    sum_n burst_n / min_n C_n, but only under the much stronger condition
    sum_n r_n <= min_n C_n. None is the explicit not-applicable marker.
    """
    if len(envelopes) != len(rates_bps):
        raise InvalidInputError("need one rate per envelope")
    min_capacity = min(rates_bps)
    if sum(e.rate_bps for e in envelopes) > min_capacity:
        return None
    return sum(e.burst_bits for e in envelopes) / min_capacity


def theta_exact(
    mgf_excess: Callable[[float], float], domain_hi: float | None = None
) -> ThetaSolution:
    """Largest theta with mgf_excess(theta) <= 1, by bracketing and bisection.

    mgf_excess must be the excess-work MGF: value 1 at theta=0, initial slope
    negative exactly when the load is below 1, convex, and eventually above 1
    (possibly +inf past a domain edge, which is treated as condition violated).
    The search doubles a bracket starting from theta=1, capped just below
    domain_hi when given, then bisects to relative width ROOT_REL_TOL. The
    returned theta is the feasible bracket end, so the residual is <= 0.
    """
    cap = None if domain_hi is None else domain_hi * (1.0 - 1e-12)

    def value(theta: float) -> float:
        try:
            v = mgf_excess(theta)
        except OverflowError:
            return math.inf
        return v if math.isfinite(v) else math.inf

    # Find a theta where the condition visibly holds; if none exists down to
    # an absurdly small theta, the load is at or above 1.
    lo = 1.0 if cap is None else min(1.0, cap / 2.0)
    for _ in range(2000):
        if value(lo) < 1.0 - 1e-12:
            break
        lo /= 2.0
        if lo < 1e-290:
            raise NoPositiveRootError("no positive decay rate: load at or above 1")
    else:
        raise NoPositiveRootError("no positive decay rate: load at or above 1")

    hi = 2.0 * lo
    if cap is not None:
        hi = min(hi, cap)
    while value(hi) <= 1.0:
        if cap is not None and hi >= cap:
            # condition holds all the way to the domain edge
            return ThetaSolution(hi, "exact-root", value(hi) - 1.0, (lo, hi))
        lo = hi
        hi = 2.0 * hi if cap is None else min(2.0 * hi, cap)
        if hi > 1e300:
            raise NoPositiveRootError("excess-work MGF never exceeds 1")

    while hi - lo > ROOT_REL_TOL * hi:
        mid = 0.5 * (lo + hi)
        if value(mid) <= 1.0:
            lo = mid
        else:
            hi = mid
    return ThetaSolution(lo, "exact-root", value(lo) - 1.0, (lo, hi))


def _require_poisson_family(specs: Sequence[ClassSpec], size_kind: type) -> None:
    for s in specs:
        if not isinstance(s.arrival, (Poisson, CoupledPoisson)):
            raise InvalidSpecError(f"class {s.class_id}: Poisson arrivals required")
        if not isinstance(s.size, size_kind):
            raise InvalidSpecError(
                f"class {s.class_id}: size kind {size_kind.__name__} required"
            )


def _check_stable(specs: Sequence[ClassSpec]) -> float:
    rho = sum(s.utilization for s in specs)
    if rho >= 1.0:
        raise NoPositiveRootError(f"utilization {rho:.6g} is not below 1")
    return rho


def mgf_excess_constant_sizes(specs: Sequence[ClassSpec]) -> Callable[[float], float]:
    """Excess-work MGF for Poisson arrivals with constant sizes.

    Per class the unit-time work is compound Poisson, so the log-MGF is
    rate*(exp(theta*Y)-1); the aggregate excess adds -theta.
    """
    params = [(s.arrival_rate_hz, s.mean_service_s) for s in specs]

    def mgf(theta: float) -> float:
        return math.exp(
            sum(lam * math.expm1(theta * y) for lam, y in params) - theta
        )

    return mgf


def mgf_excess_exponential_sizes(specs: Sequence[ClassSpec]) -> Callable[[float], float]:
    """Excess-work MGF for Poisson arrivals with exponential sizes.

    Finite only for theta below every class's service completion rate; larger
    theta returns +inf so the root search treats it as condition violated.
    """
    params = [(s.arrival_rate_hz, s.service_completion_rate_hz) for s in specs]

    def mgf(theta: float) -> float:
        if any(theta >= mu for _, mu in params):
            return math.inf
        return math.exp(sum(lam * theta / (mu - theta) for lam, mu in params) - theta)

    return mgf


def theta_md1(specs: Sequence[ClassSpec]) -> tuple[ThetaSolution, ThetaSolution]:
    """Exact and second-order decay rates for Poisson/constant-size classes.

    The exact rate is the root of sum_n rate_n*(exp(theta*Y_n)-1) = theta.
    Expanding the exponential to second order gives the closed form
    2*(1-rho)/sum_n rate_n*Y_n^2, which always overestimates the exact root.
    """
    _require_poisson_family(specs, Constant)
    rho = _check_stable(specs)
    exact = theta_exact(mgf_excess_constant_sizes(specs))
    curvature = sum(s.arrival_rate_hz * s.mean_service_s**2 for s in specs)
    approx = ThetaSolution(2.0 * (1.0 - rho) / curvature, "taylor-approx", 0.0)
    return exact, approx


def theta_mm1(specs: Sequence[ClassSpec]) -> tuple[ThetaSolution, ThetaSolution]:
    """Exact and first-order decay rates for Poisson/exponential-size classes.

    The exact rate is the root of sum_n rate_n/(mu_n - theta) = 1 on
    (0, min_n mu_n); the geometric-series expansion gives the closed form
    (1-rho)/sum_n rate_n*Y_n^2.
    """
    _require_poisson_family(specs, ExponentialMean)
    rho = _check_stable(specs)
    domain_hi = min(s.service_completion_rate_hz for s in specs)
    exact = theta_exact(mgf_excess_exponential_sizes(specs), domain_hi=domain_hi)
    curvature = sum(s.arrival_rate_hz * s.mean_service_s**2 for s in specs)
    approx = ThetaSolution((1.0 - rho) / curvature, "taylor-approx", 0.0)
    return exact, approx


def waiting_bound_curve(
    theta: ThetaSolution | float,
    grid_s: np.ndarray,
    prefactor: float = 1.0,
    label: str | None = None,
) -> BoundCurve:
    """Waiting-time tail bound prefactor * exp(-theta*tau), clamped to [0, 1].

    The default prefactor 1 is the continuous-time form; discrete-time
    analyses may pass the excess-work MGF value at theta instead.
    """
    if isinstance(theta, ThetaSolution):
        rate, approximate = theta.theta_star, theta.method == "taylor-approx"
    else:
        rate, approximate = float(theta), False
    if rate <= 0:
        raise InvalidInputError("decay rate must be positive")
    grid = np.asarray(grid_s, dtype=float)
    probs = np.clip(prefactor * np.exp(-rate * grid), 0.0, 1.0)
    if label is None:
        label = f"waiting_exp_decay_{rate:.6g}"
    return BoundCurve(grid, probs, label, approximate=approximate)


def step_bound_curve(bound_s: float, grid_s: np.ndarray, label: str) -> BoundCurve:
    """Deterministic bound as a tail curve: 1 below the bound, 0 at and above."""
    grid = np.asarray(grid_s, dtype=float)
    probs = np.where(grid >= bound_s, 0.0, 1.0)
    return BoundCurve(grid, probs, label)


def _uniform_step(grid: np.ndarray) -> float:
    if len(grid) < 2:
        raise InvalidInputError("grid needs at least 2 points")
    steps = np.diff(grid)
    h = steps[0]
    if not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        raise InvalidInputError("convolution requires a uniform grid")
    return float(h)


def _convolve_cdfs_fine(cdf_a: np.ndarray, cdf_b: np.ndarray) -> np.ndarray:
    """CDF of the sum of two nonnegative variables tabulated on one uniform grid.

    cdf_b's probability mass is assigned to the right end of each grid cell,
    which can only understate the convolution, keeping 1 - result a valid
    upper bound on the tail of the sum. Mass beyond the grid is dropped,
    which errs the same direction.
    """
    mass_b = np.diff(cdf_b, prepend=0.0)
    out = signal.fftconvolve(cdf_a, mass_b)[: len(cdf_a)]
    out = np.clip(out, 0.0, 1.0)
    return np.maximum.accumulate(out)


def delay_bound_convolve(
    service_cdf: float | Callable[[np.ndarray], np.ndarray],
    waiting_curve: BoundCurve,
    refine: int = CONV_REFINE,
    label: str | None = None,
) -> BoundCurve:
    """Delay tail bound 1 - F_service conv F_waiting on the waiting curve's grid.

    A float service_cdf means a constant service time, which shifts the
    waiting curve right by that amount exactly instead of smearing it through
    the grid. A callable is taken as the service-time CDF and convolved
    numerically on an internally refined uniform grid; the discretization is
    one-sided so the result stays a valid upper bound.
    """
    grid = waiting_curve.grid_s
    h = _uniform_step(grid)
    wait_tail = waiting_curve.probs
    if label is None:
        label = waiting_curve.label + "_delay"

    if isinstance(service_cdf, (int, float)):
        y = float(service_cdf)
        if y < 0:
            raise InvalidInputError("constant service time must be >= 0")
        if y == 0.0:
            return BoundCurve(grid, wait_tail, label, waiting_curve.approximate)
        shift = y / h
        if abs(shift - round(shift)) < 1e-9:
            k = int(round(shift))
            probs = np.ones_like(wait_tail)
            if k < len(wait_tail):
                probs[k:] = wait_tail[: len(wait_tail) - k]
        else:
            # off-grid shift: chords of the convex tail overestimate, so the
            # interpolated curve stays a valid bound
            probs = np.interp(
                grid - y, grid, wait_tail, left=1.0, right=float(wait_tail[-1])
            )
        return BoundCurve(grid, probs, label, waiting_curve.approximate)

    if not callable(service_cdf):
        raise InvalidInputError("service_cdf must be a constant or a callable CDF")
    if grid[0] != 0.0:
        raise InvalidInputError("convolution grid must start at 0")
    if refine < 1:
        raise InvalidInputError("refine must be >= 1")
    n_fine = (len(grid) - 1) * refine + 1
    fine = np.linspace(grid[0], grid[-1], n_fine)
    f_service = np.asarray(service_cdf(fine), dtype=float)
    if np.any(np.diff(f_service) < -1e-12) or f_service[0] < -1e-12:
        raise InvalidInputError("service_cdf is not a valid CDF")
    f_service = np.clip(f_service, 0.0, 1.0)
    f_wait = 1.0 - np.interp(fine, grid, wait_tail)
    f_delay = _convolve_cdfs_fine(f_wait, f_service)
    probs = 1.0 - f_delay[::refine]
    return BoundCurve(grid, probs, label, waiting_curve.approximate)


def _check_gsbb_rates(tails: Sequence[GsbbTail], rates_bps: Sequence[float]) -> None:
    if len(tails) != len(rates_bps):
        raise InvalidInputError("need one service rate per tail")
    share = sum(t.rate_bps / c for t, c in zip(tails, rates_bps))
    if share > 1.0 + 1e-12:
        raise ConditionNotMetError(
            f"sum of reference-rate shares {share:.6g} exceeds 1"
        )


def _golden_min(fun: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Golden-section minimizer for unimodal fun on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def _equalized_exponential_split(
    coeffs: Sequence[tuple[float, float]], budget: float
) -> list[float]:
    """Minimize sum_i M_i*exp(-b_i*p_i) over p_i >= 0 summing to budget.

    The interior stationary point equalizes M_i*b_i*exp(-b_i*p_i); classes
    whose allocation would go negative are pinned to zero and the rest
    re-solved. Zero-prefactor terms vanish identically and get no share.
    """
    active = [i for i in range(len(coeffs)) if coeffs[i][0] > 0.0]
    alloc = [0.0] * len(coeffs)
    while active:
        inv_b = sum(1.0 / coeffs[i][1] for i in active)
        log_nu = (
            sum(math.log(coeffs[i][0] * coeffs[i][1]) / coeffs[i][1] for i in active)
            - budget
        ) / inv_b
        negative = []
        for i in active:
            m, b = coeffs[i]
            alloc[i] = (math.log(m * b) - log_nu) / b
            if alloc[i] < 0:
                negative.append(i)
        if not negative:
            break
        for i in negative:
            alloc[i] = 0.0
            active.remove(i)
    return alloc


def gsbb_bound_split(
    tails: Sequence[GsbbTail], rates_bps: Sequence[float], tau_s: float
) -> float:
    """Delay tail bound by the best split of tau across classes.

    The delay is bounded by the sum of per-class backlog terms, each of which
    exceeds its share p_n*C_n*tau with probability tail_n(p_n*C_n*tau); the
    infimum runs over the probability simplex. Degenerate tails take exactly
    the share that zeroes them; the remaining budget is split across
    exponential tails by golden section (two classes) or the closed-form
    exponent equalization.
    """
    _check_gsbb_rates(tails, rates_bps)
    if tau_s <= 0.0:
        return 1.0

    budget = 1.0
    exps: list[tuple[ExponentialTail, float]] = []
    for tail, capacity in zip(tails, rates_bps):
        if isinstance(tail, DegenerateTail):
            budget -= tail.burst_bits / (capacity * tau_s)
        else:
            exps.append((tail, capacity))
    if budget < 0.0:
        return 1.0
    if not exps:
        return 0.0

    # exponent of each term as a function of its share: M*exp(-b*p)
    coeffs = [(t.prefactor, t.decay_per_bit * c * tau_s) for t, c in exps]

    if len(coeffs) == 1:
        m, b = coeffs[0]
        value = m * math.exp(-b * budget)
    elif len(coeffs) == 2:
        (m1, b1), (m2, b2) = coeffs

        def objective(x: float) -> float:
            return m1 * math.exp(-b1 * x * budget) + m2 * math.exp(
                -b2 * (1.0 - x) * budget
            )

        x_star = _golden_min(objective, 0.0, 1.0, SPLIT_TOL)
        value = min(objective(x_star), objective(0.0), objective(1.0))
    else:
        alloc = _equalized_exponential_split(coeffs, budget)
        value = sum(m * math.exp(-b * p) for (m, b), p in zip(coeffs, alloc))
    return min(1.0, max(0.0, value))


def gsbb_split_curve(
    tails: Sequence[GsbbTail],
    rates_bps: Sequence[float],
    grid_s: np.ndarray,
    label: str = "gsbb_split",
    approximate: bool = False,
) -> BoundCurve:
    """gsbb_bound_split evaluated over a grid."""
    grid = np.asarray(grid_s, dtype=float)
    probs = np.array([gsbb_bound_split(tails, rates_bps, t) for t in grid])
    return BoundCurve(grid, probs, label, approximate=approximate)


def gsbb_bound_convolution(
    tails: Sequence[GsbbTail],
    rates_bps: Sequence[float],
    grid_s: np.ndarray,
    independent: bool = True,
    refine: int = CONV_REFINE,
    label: str = "gsbb_convolution",
) -> BoundCurve:
    """Delay tail bound for independent classes by convolving per-class CDFs.

    Each class contributes a backlog term with CDF 1 - tail_n(C_n*tau) in the
    delay variable; independence lets the sum's CDF be their convolution.
    Degenerate tails are exact shifts; exponential tails are tabulated on an
    internally refined grid. Refuses dependent inputs, where only the split
    bound applies.
    """
    if not independent:
        raise ConditionNotMetError(
            "classes are not independent: use the split bound instead"
        )
    _check_gsbb_rates(tails, rates_bps)
    grid = np.asarray(grid_s, dtype=float)
    _uniform_step(grid)
    if grid[0] != 0.0:
        raise InvalidInputError("convolution grid must start at 0")
    n_fine = (len(grid) - 1) * refine + 1
    fine = np.linspace(grid[0], grid[-1], n_fine)

    shift = 0.0
    f_total: np.ndarray | None = None
    for tail, capacity in zip(tails, rates_bps):
        if isinstance(tail, DegenerateTail):
            shift += tail.burst_bits / capacity
            continue
        f_n = 1.0 - tail.tail(fine * capacity)
        f_total = f_n if f_total is None else _convolve_cdfs_fine(f_total, f_n)

    if f_total is None:
        return step_bound_curve(shift, grid, label)
    if shift > 0.0:
        # evaluate the shifted CDF at grid points, flooring to the fine grid
        # so the CDF is never overstated
        idx = np.floor((grid - shift) / (fine[1] - fine[0]) + 1e-9).astype(int)
        probs = np.where(idx < 0, 1.0, 1.0 - f_total[np.clip(idx, 0, n_fine - 1)])
    else:
        probs = 1.0 - f_total[::refine]
    probs = np.minimum.accumulate(np.clip(probs, 0.0, 1.0))
    return BoundCurve(grid, probs, label)


def equalized_weights(specs: Sequence[ClassSpec], theta: float) -> np.ndarray:
    """Reference-rate shares that equalize all per-class decay rates.

    Each class's second-order decay rate is 2*(w_n - rho_n)/(rate_n*Y_n^2);
    setting w_n = rho_n + theta*rate_n*Y_n^2/2 makes every class decay at
    theta, and the shares sum to 1 exactly when theta is the second-order
    aggregate decay rate.
    """
    return np.array(
        [
            s.utilization + 0.5 * theta * s.arrival_rate_hz * s.mean_service_s**2
            for s in specs
        ]
    )


def bound_mstar_d1(specs: Sequence[ClassSpec], grid_s: np.ndarray) -> BoundCurve:
    """Dependence-free waiting bound N*exp(-theta*tau/N) for constant sizes.

    Valid for any dependence between the Poisson classes: each class's
    backlog term is bounded on its own with an equalized reference-rate
    share, and the equal split of tau across the N terms gives the curve.
    Marked approximate because the per-class decay uses the second-order
    form.
    """
    _require_poisson_family(specs, Constant)
    rho = _check_stable(specs)
    curvature = sum(s.arrival_rate_hz * s.mean_service_s**2 for s in specs)
    theta = 2.0 * (1.0 - rho) / curvature
    weights = equalized_weights(specs, theta)
    if not math.isclose(float(weights.sum()), 1.0, rel_tol=1e-9):
        raise InvalidInputError("equalized shares do not sum to 1")
    n = len(specs)
    grid = np.asarray(grid_s, dtype=float)
    probs = np.clip(n * np.exp(-theta * grid / n), 0.0, 1.0)
    return BoundCurve(grid, probs, "split_equal_constant_sizes", approximate=True)


def _split_periodic_mm(specs: Sequence[ClassSpec]) -> tuple[ClassSpec, ClassSpec]:
    if len(specs) != 2:
        raise InvalidSpecError("exactly two classes required")
    periodic = [s for s in specs if isinstance(s.arrival, Periodic)]
    stochastic = [
        s
        for s in specs
        if isinstance(s.arrival, (Poisson, CoupledPoisson))
        and isinstance(s.size, ExponentialMean)
    ]
    if len(periodic) != 1 or len(stochastic) != 1:
        raise InvalidSpecError(
            "need one periodic constant-size class and one Poisson "
            "exponential-size class"
        )
    if not isinstance(periodic[0].size, Constant):
        raise InvalidSpecError("the periodic class must have constant sizes")
    return periodic[0], stochastic[0]


def theta_dmdm(specs: Sequence[ClassSpec]) -> ThetaSolution:
    """Decay rate for the mixed periodic/constant + Poisson/exponential pair.

    Folding the periodic class into the envelope leaves the stochastic class a
    reduced rate share 1 - rho_periodic, whose per-class condition solves in
    closed form to mu - rate/(1 - rho_periodic).
    """
    det, mm = _split_periodic_mm(specs)
    margin = 1.0 - det.utilization
    if margin <= 0.0:
        raise ConditionNotMetError("the periodic class alone saturates its rate")
    theta = mm.service_completion_rate_hz - mm.arrival_rate_hz / margin
    if theta <= 0.0:
        raise ConditionNotMetError(
            "no positive decay: the stochastic class overfills the leftover share"
        )
    residual = mm.arrival_rate_hz / (mm.service_completion_rate_hz - theta) - margin
    return ThetaSolution(theta, "exact-root", residual)


def bound_dmdm(
    specs: Sequence[ClassSpec], grid_s: np.ndarray, class_id: int
) -> BoundCurve:
    """Per-class waiting bound for the periodic + Poisson/exponential pair.

    The periodic class's waiting tail is bounded by exp(-theta*tau) directly.
    The stochastic class additionally waits out one periodic service time, so
    its curve is the same exponential shifted right by that service time,
    reported as a bound on the plain waiting tail.
    """
    det, mm = _split_periodic_mm(specs)
    theta = theta_dmdm(specs).theta_star
    grid = np.asarray(grid_s, dtype=float)
    if class_id == det.class_id:
        probs = np.clip(np.exp(-theta * grid), 0.0, 1.0)
        label = f"mixed_pair_waiting_c{class_id}"
    elif class_id == mm.class_id:
        probs = np.clip(np.exp(-theta * (grid - det.mean_service_s)), 0.0, 1.0)
        label = f"mixed_pair_waiting_c{class_id}"
    else:
        raise InvalidSpecError(f"unknown class_id {class_id}")
    return BoundCurve(grid, probs, label)


def kingman_reference(
    interarrival_mgf: Callable[[float], float],
    service_mgf: Callable[[float], float],
    grid_s: np.ndarray,
    domain_hi: float | None = None,
) -> tuple[ThetaSolution, BoundCurve]:
    """Single-class waiting bound from the service-minus-interarrival MGF.

    The decay rate is the largest theta with
    E[exp(theta*service)] * E[exp(-theta*interarrival)] <= 1, found with the
    same bracketing bisection; the curve is exp(-theta*tau). Provided for
    single-class comparison against the multiclass machinery.
    """

    def mgf_excess(theta: float) -> float:
        return service_mgf(theta) * interarrival_mgf(-theta)

    solution = theta_exact(mgf_excess, domain_hi=domain_hi)
    curve = waiting_bound_curve(solution, grid_s, label="single_class_reference")
    return solution, curve
