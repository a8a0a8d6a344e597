"""Lockdown-threshold SIR: piecewise-constant contact rate and sliding motion.

The contact rate is beta while the infected fraction y stays below a
policy threshold k and drops to beta_bar <= beta once y >= k. The switch
makes the vector field discontinuous across the line y = k. On the
segment of that line with rho < x < min(rho_bar, 1) (rho = gamma/beta,
rho_bar = gamma/beta_bar) both one-sided fields push the state toward the
line, so trajectories that reach it stay on it: y is pinned at k while x
drifts left at the constant speed gamma*k until x reaches rho, after
which the uncontrolled dynamics take over and the infection decays.

Seeded runs from (1-eps, eps, 0) fall into one of three regimes:

  A: the free peak stays below k, the policy never engages;
  B: the free orbit would cross k below its peak, the run plateaus at k
     (sliding) and the maximum equals k;
  C: the orbit crosses k so early (x still right of rho_bar) that it
     punches through, follows the controlled beta_bar dynamics to a peak
     above k, and may slide only on the way back down.

All regime analytics (entry abscissa, plateau duration, controlled peak,
segment times) are closed forms or one-dimensional quadratures along the
conserved orbits, so every simulated run can be checked against an
independent prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .integrate import EventSpec, StepControl, Trajectory, Event, integrate
from .roots import bisect
from .scalar import (
    DEFAULT_EXTINCTION,
    RateFunction,
    ScalarModel,
    SirState,
    classical_peak,
    orbit_infected,
)

__all__ = [
    "ThresholdPolicy",
    "SlidingManifold",
    "RegimeReport",
    "BoundaryRegimeError",
    "NoCrossingError",
    "ModeChatterError",
    "threshold_rate",
    "entry_level",
    "classify_regime",
    "crossing_abscissa",
    "controlled_peak",
    "sliding_time",
    "sliding_duration",
    "simulate_threshold",
]

BOUNDARY_TOL = 1e-12


class BoundaryRegimeError(ValueError):
    """k coincides with a regime boundary; the classification is undefined."""


class NoCrossingError(ValueError):
    """The rising orbit never reaches the requested level."""


class ModeChatterError(RuntimeError):
    """More mode switches than the chattering guard allows."""


@dataclass(frozen=True)
class ThresholdPolicy:
    """Piecewise-constant contact policy: beta below k, beta_bar at/above."""

    beta: float
    beta_bar: float
    threshold: float
    gamma: float

    def __post_init__(self):
        if self.beta <= 0 or self.beta_bar <= 0:
            raise ValueError("contact rates must be positive")
        if self.beta_bar >= self.beta:
            raise ValueError("beta_bar must be smaller than beta")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    @property
    def rho(self) -> float:
        return self.gamma / self.beta

    @property
    def rho_bar(self) -> float:
        return self.gamma / self.beta_bar

    def rate(self, y: float) -> float:
        # The controlled branch owns the boundary: y == threshold uses beta_bar.
        return self.beta if y < self.threshold else self.beta_bar

    def manifold(self) -> "SlidingManifold":
        return SlidingManifold(
            x_low=self.rho,
            x_high=min(self.rho_bar, 1.0),
            level=self.threshold,
        )


@dataclass(frozen=True)
class SlidingManifold:
    """Segment {(x, k) : x_low <= x <= x_high} that traps trajectories."""

    x_low: float
    x_high: float
    level: float

    def contains(self, x: float) -> bool:
        return self.x_low < x < self.x_high


@dataclass(frozen=True)
class RegimeReport:
    """Outcome of the seeded-run classification.

    Regime "B" carries the sliding window [t_star, t_star_star]; regime
    "C" carries the crossing abscissa and the peak time t_star; regime
    "A" carries the free peak only.
    """

    regime: str
    predicted_peak: float
    t_star: float | None = None
    t_star_star: float | None = None
    crossing_x: float | None = None
    sliding_duration: float | None = None


def threshold_rate(y: float, policy: ThresholdPolicy) -> float:
    """Contact rate in force at infected fraction y."""
    return policy.rate(y)


def entry_level(eps: float, rho: float, rho_bar: float) -> float:
    """Infected level of the free orbit when x first reaches rho_bar.

    For rho < rho_bar < 1-eps this is the orbit value
    1 - rho_bar + rho*ln(rho_bar/(1-eps)); when rho_bar >= 1-eps the
    abscissa rho_bar is never visited and the level collapses to eps (the
    two branches agree in the limit rho_bar -> 1-eps).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if rho >= rho_bar:
        raise ValueError("need rho < rho_bar")
    if rho_bar >= 1.0 - eps:
        return eps
    return 1.0 - rho_bar + rho * math.log(rho_bar / (1.0 - eps))


def crossing_abscissa(eps: float, rho: float, k: float) -> float:
    """Abscissa x at which the rising free orbit first reaches level k.

    Root of x - rho*ln(x) + rho*ln(1-eps) + k - 1 = 0 on the increasing
    branch x in (rho, 1-eps], found by bisection to 1e-12; equivalently
    orbit_infected(x) == k there.
    """
    peak = classical_peak(eps, rho)
    if k >= peak:
        raise NoCrossingError(f"level {k} is not below the free peak {peak}")
    if k < eps:
        raise ValueError(f"level {k} < eps={eps}: the run starts above the threshold")
    if k == eps:
        return 1.0 - eps

    def f(x: float) -> float:
        return x - rho * math.log(x) + rho * math.log(1.0 - eps) + k - 1.0

    return bisect(f, rho, 1.0 - eps, xtol=1e-12)


def sliding_time(x_entry: float, policy: ThresholdPolicy) -> float:
    """Duration of a slide entered at abscissa x_entry.

    On the sliding segment y is pinned at k, so x' = -gamma*k and the
    slide lasts (x_entry - rho) / (gamma*k).
    """
    return (x_entry - policy.rho) / (policy.gamma * policy.threshold)


def sliding_duration(eps: float, policy: ThresholdPolicy) -> float:
    """Plateau duration of a seeded regime-B run."""
    report = classify_regime(eps, policy)
    if report.regime != "B":
        raise ValueError(f"no sliding interval: regime is {report.regime}")
    assert report.sliding_duration is not None
    return report.sliding_duration


def controlled_peak(eps: float, policy: ThresholdPolicy) -> float:
    """Peak infected fraction of a regime-C run.

    classical_peak(eps, rho_bar) plus the catch-up term
    (rho_bar - rho) * ln((1-eps)/x_c) accounting for the uncontrolled
    growth before the orbit crossed the threshold at x_c. Equals
    classical_peak(eps, rho_bar) when k = eps (control active from the
    start) and is never below k.
    """
    x_c = crossing_abscissa(eps, policy.rho, policy.threshold)
    return classical_peak(eps, policy.rho_bar) + (policy.rho_bar - policy.rho) * math.log(
        (1.0 - eps) / x_c
    )


def _travel_time(beta: float, y_of_x: Callable[[float], float], x_from: float, x_to: float) -> float:
    """Time for x to drift from x_from down to x_to along a known orbit.

    x' = -beta*x*y gives dt = dx / (beta*x*y(x)); the integrand is smooth
    because y stays positive on the orbits used here.
    """
    if x_to >= x_from:
        return 0.0
    value, _ = quad(lambda x: 1.0 / (beta * x * y_of_x(x)), x_to, x_from, limit=200)
    return value


def classify_regime(eps: float, policy: ThresholdPolicy) -> RegimeReport:
    """Classify the seeded run and fill its analytics without simulating.

    Requires the outbreak condition (1-eps)/rho > 1. A threshold equal to
    either regime boundary (within 1e-12) raises BoundaryRegimeError.
    Segment times come from quadrature along the closed-form orbits.
    """
    rho, rho_bar, k = policy.rho, policy.rho_bar, policy.threshold
    if (1.0 - eps) / rho <= 1.0:
        raise ValueError("outbreak condition (1-eps)/rho > 1 is required")
    peak_free = classical_peak(eps, rho)
    level = entry_level(eps, rho, rho_bar)
    if abs(k - peak_free) <= BOUNDARY_TOL or abs(k - level) <= BOUNDARY_TOL:
        raise BoundaryRegimeError(
            f"threshold {k} sits on a regime boundary (peak {peak_free}, entry level {level})"
        )

    if k > peak_free:
        return RegimeReport(regime="A", predicted_peak=peak_free)

    free_orbit = lambda x: orbit_infected(x, eps, rho)

    if k > level:
        x_c = crossing_abscissa(eps, rho, k)
        t_star = _travel_time(policy.beta, free_orbit, 1.0 - eps, x_c)
        duration = sliding_time(x_c, policy)
        return RegimeReport(
            regime="B",
            predicted_peak=k,
            t_star=t_star,
            t_star_star=t_star + duration,
            crossing_x=x_c,
            sliding_duration=duration,
        )

    if k < eps:
        raise ValueError(f"threshold {k} below initial infection {eps}")
    x_c = crossing_abscissa(eps, rho, k) if k > eps else 1.0 - eps
    t_cross = _travel_time(policy.beta, free_orbit, 1.0 - eps, x_c)
    controlled_orbit = lambda x: k + (x_c - x) + rho_bar * math.log(x / x_c)
    t_peak = t_cross + _travel_time(policy.beta_bar, controlled_orbit, x_c, rho_bar)
    return RegimeReport(
        regime="C",
        predicted_peak=controlled_peak(eps, policy),
        t_star=t_peak,
        crossing_x=x_c,
    )


def _free_segment_events(policy: ThresholdPolicy, model: ScalarModel, below: bool, extinction: float):
    k = policy.threshold
    return [
        EventSpec(
            lambda t, s: s[1] - k,
            direction="rising" if below else "falling",
            terminal=True,
            label="threshold",
        ),
        EventSpec(lambda t, s: model.rhs(t, s)[1], direction="falling", label="peak"),
        EventSpec(
            lambda t, s: s[1] - extinction,
            direction="falling",
            terminal=True,
            label="extinction",
        ),
    ]


def simulate_threshold(
    policy: ThresholdPolicy,
    eps: float,
    horizon: float,
    control: StepControl | None = None,
    extinction: float = DEFAULT_EXTINCTION,
    max_mode_switches: int = 64,
    initial: tuple[float, float] | None = None,
) -> Trajectory:
    """Simulate the threshold policy from (1-eps, eps, 0).

    The run alternates explicit modes: free dynamics with rate beta while
    y < k, free dynamics with rate beta_bar while y > k, and exact sliding
    (y = k, x' = -gamma*k, z' = gamma*k) whenever the state lands on the
    trapping segment of the threshold line. Mode transitions are located
    by event bisection and annotated as "threshold-hit", "sliding-entry"
    and "sliding-exit"; interior maxima of free segments as "peak". A
    keyword `initial=(x0, y0)` replaces the seeded start; the regime
    analytics elsewhere in this module still assume the seeded one.

    Raises ModeChatterError after max_mode_switches transitions.
    """
    control = control or StepControl()
    k = policy.threshold
    manifold = policy.manifold()
    low_model = ScalarModel(RateFunction.constant(policy.beta), policy.gamma)
    high_model = ScalarModel(RateFunction.constant(policy.beta_bar), policy.gamma)

    if initial is None:
        state = SirState.seeded(eps).as_array()
    else:
        state = SirState(initial[0], initial[1], 1.0 - initial[0] - initial[1]).as_array()

    def mode_of(s: np.ndarray) -> str:
        if s[1] < k:
            return "low"
        if s[1] > k:
            return "high"
        if manifold.contains(s[0]):
            return "sliding"
        return "high" if s[0] >= manifold.x_high else "low"

    mode = mode_of(state)
    t = 0.0
    times = [0.0]
    states = [state.copy()]
    events: list[Event] = []
    switches = 0

    def extend(seg_times, seg_states):
        times.extend(float(v) for v in seg_times[1:])
        states.extend(np.asarray(s, dtype=float).copy() for s in seg_states[1:])

    while t < horizon:
        if mode == "sliding":
            duration = sliding_time(state[0], policy)
            t_end = min(t + duration, horizon)
            n = max(2, math.ceil((t_end - t) / control.max_step) + 1)
            ts = np.linspace(t, t_end, n)
            xs = state[0] - policy.gamma * k * (ts - t)
            completed = t + duration <= horizon
            if completed:
                xs[-1] = manifold.x_low  # land exactly on the exit point
            seg_states = np.column_stack([xs, np.full(n, k), 1.0 - xs - k])
            extend(ts, seg_states)
            t = float(ts[-1])
            state = seg_states[-1].copy()
            if not completed:
                break
            events.append(Event("sliding-exit", t, state.copy()))
            switches += 1
            if switches > max_mode_switches:
                raise ModeChatterError(f"more than {max_mode_switches} mode switches")
            mode = "low"
            continue

        model = low_model if mode == "low" else high_model
        seg = integrate(
            model.rhs,
            state,
            (t, horizon),
            control,
            events=_free_segment_events(policy, model, mode == "low", extinction),
        )
        extend(seg.times, seg.states)
        for e in seg.events:
            if e.label in ("peak", "extinction"):
                events.append(e)
        t = float(seg.times[-1])
        state = seg.states[-1].copy()

        hit = seg.first_event("threshold")
        if hit is None:
            break  # extinction or horizon ended the run
        switches += 1
        if switches > max_mode_switches:
            raise ModeChatterError(f"more than {max_mode_switches} mode switches")
        # Snap exactly onto the threshold line before restarting.
        state = np.array([state[0], k, 1.0 - state[0] - k])
        states[-1] = state.copy()
        events.append(Event("threshold-hit", t, state.copy()))
        if manifold.contains(state[0]):
            events.append(Event("sliding-entry", t, state.copy()))
            mode = "sliding"
        else:
            mode = "high" if mode == "low" else "low"

    events.sort(key=lambda e: e.time)
    return Trajectory(np.array(times), np.array(states), events)
