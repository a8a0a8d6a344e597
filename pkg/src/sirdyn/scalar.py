"""Single-population SIR dynamics with a state-dependent contact rate.

The model evolves fractions (x, y, z) = (susceptible, infected, removed)
on the unit simplex:

    x' = -x * y * f(x, y)
    y' =  x * y * f(x, y) - gamma * y
    z' =  gamma * y

with f the contact rate. Two smooth rate families are supported: constant
f = beta, and the damped-contact family f = beta * (1 - y)**p in which
contacts drop as infection becomes visible. The state-dependent
reproduction number R = x * f(x, y) / gamma extends the classical beta/gamma
threshold: R(0) < 1 means the infected fraction only decays, R(0) > 1 means
a single rise to a peak followed by decay.

For the constant-rate model with rho = gamma/beta the quantity
rho*ln(x) + z is conserved, which pins the orbit in the (x, y) plane and
yields the closed-form peak infected fraction used throughout as an
analytic cross-check on the integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .integrate import EventSpec, StepControl, Trajectory, integrate

DEFAULT_EXTINCTION = 1e-8

__all__ = [
    "RateFunction",
    "SirState",
    "ScalarModel",
    "ShapeReport",
    "DEFAULT_EXTINCTION",
    "scalar_rhs",
    "reproduction_number",
    "simulate_scalar",
    "motion_invariant",
    "orbit_infected",
    "classical_peak",
    "peak_at_start",
    "peak_infected",
    "classify_series",
    "classify_shape",
]


@dataclass(frozen=True)
class RateFunction:
    """Contact-rate family: constant beta, or beta * (1 - y)**exponent.

    exponent None marks the constant family; exponent 0.0 gives the same
    values as constant through the power branch.
    """

    beta: float
    exponent: float | None = None

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.exponent is not None and self.exponent < 0:
            raise ValueError("exponent must be >= 0")

    @classmethod
    def constant(cls, beta: float) -> "RateFunction":
        return cls(beta)

    @classmethod
    def power(cls, beta: float, exponent: float) -> "RateFunction":
        return cls(beta, exponent)

    @property
    def family(self) -> str:
        return "constant" if self.exponent is None else "power"

    def __call__(self, x: float, y: float) -> float:
        if self.exponent is None:
            return self.beta
        return self.beta * max(1.0 - y, 0.0) ** self.exponent


@dataclass(frozen=True)
class SirState:
    """One point on the simplex x + y + z = 1 (tolerance 1e-9).

    Components down to -1e-12 are treated as round-off and clamped to 0.
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = getattr(self, name)
            if v < -1e-12:
                raise ValueError(f"{name}={v} is negative beyond round-off")
            if v < 0.0:
                object.__setattr__(self, name, 0.0)
        if abs(self.x + self.y + self.z - 1.0) > 1e-9:
            raise ValueError(f"state ({self.x}, {self.y}, {self.z}) is off the simplex")

    @classmethod
    def seeded(cls, eps: float) -> "SirState":
        """Outbreak seed (1 - eps, eps, 0)."""
        return cls(1.0 - eps, eps, 0.0)

    @classmethod
    def from_array(cls, s) -> "SirState":
        return cls(float(s[0]), float(s[1]), float(s[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class ScalarModel:
    rate: RateFunction
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    @property
    def rho(self) -> float:
        """gamma/beta, defined for the constant-rate family only."""
        if self.rate.family != "constant":
            raise ValueError("rho is only meaningful for a constant contact rate")
        return self.gamma / self.rate.beta

    def rhs(self, t: float, s: np.ndarray) -> np.ndarray:
        # Clamp round-off negatives before the rate sees them.
        x = s[0] if s[0] > 0.0 else 0.0
        y = s[1] if s[1] > 0.0 else 0.0
        w = self.rate(x, y) * y
        inf = x * w
        rec = self.gamma * y
        return np.array([-inf, inf - rec, rec])


def scalar_rhs(state: SirState, model: ScalarModel) -> np.ndarray:
    """Time derivative (x', y', z') at a simplex state."""
    return model.rhs(0.0, state.as_array())


def reproduction_number(state: SirState, model: ScalarModel) -> float:
    """State-dependent reproduction number x * f(x, y) / gamma."""
    return state.x * model.rate(state.x, state.y) / model.gamma


def motion_invariant(state: SirState, rho: float) -> float:
    """Conserved quantity rho*ln(x) + z of the constant-rate model."""
    if state.x <= 0.0:
        raise ValueError("invariant undefined at x=0")
    return rho * math.log(state.x) + state.z


def orbit_infected(x: float, eps: float, rho: float) -> float:
    """Infected fraction on the constant-rate orbit seeded at (1-eps, eps, 0).

    y = 1 - x + rho*ln(x) - rho*ln(1-eps). The value goes negative past
    extinction; callers decide what that means.
    """
    if x <= 0.0:
        raise ValueError("orbit undefined for x <= 0")
    return 1.0 - x + rho * math.log(x) - rho * math.log(1.0 - eps)


def classical_peak(eps: float, rho: float) -> float:
    """Peak infected fraction 1 - rho + rho*ln(rho) - rho*ln(1-eps).

    This is the orbit value at x = rho, where y' changes sign. It is the
    run maximum only in the outbreak case (1-eps)/rho > 1; when
    rho >= 1-eps the infection peaks at t=0 with maximum eps (see
    peak_at_start), though the formula itself still evaluates.
    """
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    return 1.0 - rho + rho * math.log(rho) - rho * math.log(1.0 - eps)


def peak_at_start(eps: float, rho: float) -> bool:
    """True when the seeded run has no interior peak ((1-eps)/rho <= 1)."""
    return (1.0 - eps) / rho <= 1.0


def simulate_scalar(
    model: ScalarModel,
    x0: float,
    y0: float,
    horizon: float,
    control: StepControl | None = None,
    extinction: float = DEFAULT_EXTINCTION,
    extra_events: Sequence[EventSpec] = (),
) -> Trajectory:
    """Integrate the scalar model from (x0, y0, 1-x0-y0).

    The run stops at the horizon or when y falls below the extinction
    threshold (terminal "extinction" event). Interior maxima of y are
    annotated as non-terminal "peak" events located where y' crosses zero
    downward.
    """
    state0 = SirState(x0, y0, 1.0 - x0 - y0)
    events = [
        EventSpec(lambda t, s: model.rhs(t, s)[1], direction="falling", label="peak"),
        EventSpec(
            lambda t, s: s[1] - extinction,
            direction="falling",
            terminal=True,
            label="extinction",
        ),
        *extra_events,
    ]
    return integrate(model.rhs, state0.as_array(), (0.0, horizon), control, events=events)


def peak_infected(traj: Trajectory) -> float:
    """Largest infected fraction seen: stored grid plus located peak events."""
    best = float(np.max(traj.states[:, 1]))
    for e in traj.events_labeled("peak"):
        best = max(best, float(e.state[1]))
    return best


@dataclass(frozen=True)
class ShapeReport:
    """Shape of an infected-fraction time series.

    shape is one of "monotone-decreasing", "single-peak", "plateau-peak",
    "multimodal". peak_times/peak_values list the surviving local maxima
    (an initial-point maximum marks a monotone-decreasing series).
    """

    shape: str
    peak_times: tuple[float, ...]
    peak_values: tuple[float, ...]
    plateaus: tuple[tuple[float, float, float], ...] = ()  # (t_start, t_end, level)


def _hysteresis_peaks(values: np.ndarray, tol: float) -> list[int]:
    """Indices of local maxima surviving a +-tol oscillation deadband."""
    peaks: list[int] = []
    direction = 0  # 0 unknown, +1 rising, -1 falling
    cur_max = cur_min = values[0]
    imax = 0
    for i in range(1, values.size):
        v = values[i]
        if direction == 0:
            if v > cur_max:
                cur_max, imax = v, i
            if v < cur_min:
                cur_min = v
            if cur_max - v > tol:
                peaks.append(imax)
                direction = -1
                cur_min = v
            elif v - cur_min > tol:
                direction = 1
                if v > cur_max:
                    cur_max, imax = v, i
        elif direction > 0:
            if v > cur_max:
                cur_max, imax = v, i
            elif cur_max - v > tol:
                peaks.append(imax)
                direction = -1
                cur_min = v
        else:
            if v < cur_min:
                cur_min = v
            elif v - cur_min > tol:
                direction = 1
                cur_max, imax = v, i
    if direction > 0:
        peaks.append(imax)  # series ends on a rise
    return peaks


def _plateau_runs(times: np.ndarray, values: np.ndarray, tol: float):
    """Maximal runs of >= 4 points whose values span at most tol.

    Returns (t_start, t_end, level, top) with level the mid-span value and
    top the run maximum.
    """
    runs = []
    n = values.size
    i = 0
    while i < n - 3:
        lo = hi = values[i]
        j = i
        while j + 1 < n:
            v = values[j + 1]
            lo, hi = min(lo, v), max(hi, v)
            if hi - lo > tol:
                break
            j += 1
        if j - i >= 3:
            level = 0.5 * (lo + hi)
            runs.append((float(times[i]), float(times[j]), float(level), float(hi)))
            i = j + 1
        else:
            i += 1
    return runs


def classify_series(
    times: np.ndarray,
    values: np.ndarray,
    value_tol: float = 1e-6,
    plateau_tol: float = 1e-6,
) -> ShapeReport:
    """Classify a scalar time series by its surviving local maxima.

    Oscillations smaller than value_tol are suppressed before counting
    maxima. A run of at least four points spanning no more than
    plateau_tol counts as a plateau; a plateau sitting at the global
    maximum (and above plateau_tol, so a flatline at zero stays
    monotone-decreasing) yields "plateau-peak".
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        raise ValueError("insufficient data: need at least 3 points")

    peak_idx = _hysteresis_peaks(values, value_tol)
    runs = _plateau_runs(times, values, plateau_tol)
    global_max = float(np.max(values))
    plateau_at_max = any(
        top > plateau_tol and top >= global_max - plateau_tol
        for _, _, _, top in runs
    )
    plateaus = [(t0, t1, level) for t0, t1, level, _ in runs]

    if plateau_at_max:
        shape = "plateau-peak"
    elif len(peak_idx) >= 2:
        shape = "multimodal"
    elif len(peak_idx) == 1 and peak_idx[0] > 0:
        shape = "single-peak"
    else:
        shape = "monotone-decreasing"

    return ShapeReport(
        shape=shape,
        peak_times=tuple(float(times[i]) for i in peak_idx),
        peak_values=tuple(float(values[i]) for i in peak_idx),
        plateaus=tuple(plateaus),
    )


def classify_shape(
    traj: Trajectory,
    component: int = 1,
    value_tol: float = 1e-6,
    plateau_tol: float = 1e-6,
) -> ShapeReport:
    """classify_series applied to one stored component (default: infected)."""
    return classify_series(traj.times, traj.states[:, component], value_tol, plateau_tol)
