"""Explicit Runge-Kutta integration with sign-change event location.

Two steppers are provided: a classic fixed-step RK4 (used as a plain
workhorse and as the re-integration kernel for event refinement) and an
embedded Cash-Karp 5(4) pair with proportional step-size control for the
production runs. Dense output is the sequence of accepted steps; nothing
is interpolated. Event times are refined by bisection, with the state at
each trial time recomputed by integrating from the left end of the
bracketing step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

RHS = Callable[[float, np.ndarray], np.ndarray]

DEFAULT_EVENT_TOL = 1e-10

__all__ = [
    "StepControl",
    "EventSpec",
    "Event",
    "Trajectory",
    "integrate",
    "integrate_fixed",
    "locate_event",
    "BudgetExceededError",
    "DivergenceError",
    "NoEventError",
    "EventToleranceError",
    "DEFAULT_EVENT_TOL",
]


class DivergenceError(RuntimeError):
    """A proposed state picked up a non-finite component."""


class BudgetExceededError(RuntimeError):
    """Step budget ran out before reaching the end of the span.

    Carries the partial trajectory accumulated so far in ``partial``.
    """

    def __init__(self, message: str, partial: "Trajectory"):
        super().__init__(message)
        self.partial = partial


class NoEventError(ValueError):
    """The event function does not change sign (respecting direction)."""


class EventToleranceError(RuntimeError):
    """Bisection exhausted its iterations above the event tolerance."""


@dataclass(frozen=True)
class StepControl:
    """Step-size policy for the adaptive integrator.

    abs_tol/rel_tol enter the per-step error test componentwise as
    ``scale_i = abs_tol + rel_tol * |y_i|``; a trial step is accepted when
    ``max_i |err_i| / scale_i <= 1``.
    """

    initial_step: float = 1e-3
    max_step: float = 0.25
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        if self.max_step < self.initial_step:
            raise ValueError("max_step must be >= initial_step")
        if self.abs_tol < 0 or self.rel_tol < 0 or self.abs_tol + self.rel_tol <= 0:
            raise ValueError("abs_tol + rel_tol must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")

    def scaled(self, factor: float) -> "StepControl":
        """Same policy with both tolerances multiplied by ``factor``."""
        return StepControl(
            initial_step=self.initial_step,
            max_step=self.max_step,
            abs_tol=self.abs_tol * factor,
            rel_tol=self.rel_tol * factor,
            max_steps=self.max_steps,
        )


@dataclass(frozen=True)
class EventSpec:
    """A scalar event function g(t, y) watched for sign changes.

    direction selects the admissible crossing: "rising" (- to +),
    "falling" (+ to -) or "any". A terminal event truncates the run at
    the located time.
    """

    fn: Callable[[float, np.ndarray], float]
    direction: str = "any"
    terminal: bool = False
    label: str = "event"

    def __post_init__(self):
        if self.direction not in ("rising", "falling", "any"):
            raise ValueError(f"unknown event direction {self.direction!r}")


@dataclass(frozen=True)
class Event:
    label: str
    time: float
    state: np.ndarray


@dataclass
class Trajectory:
    """Accepted integration steps plus located events.

    times are strictly increasing and aligned with the state rows.
    """

    times: np.ndarray
    states: np.ndarray
    events: list[Event] = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("times and states must have matching length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def component(self, i: int) -> np.ndarray:
        return self.states[:, i]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def events_labeled(self, label: str) -> list[Event]:
        return [e for e in self.events if e.label == label]

    def first_event(self, label: str) -> Event | None:
        for e in self.events:
            if e.label == label:
                return e
        return None


# Cash-Karp tableau (5th order solution propagated, 4th order embedded).
_CK_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (3 / 10, -9 / 10, 6 / 5),
    (-11 / 54, 5 / 2, -70 / 27, 35 / 27),
    (1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096),
)
_CK_C = (0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8)
_CK_B5 = (37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771)
_CK_B4 = (2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4)
_CK_ERR = tuple(b5 - b4 for b5, b4 in zip(_CK_B5, _CK_B4))

_SAFETY = 0.9
_MAX_GROW = 5.0
_MIN_SHRINK = 0.1


def _ck_step(rhs: RHS, t: float, y: np.ndarray, h: float):
    """One Cash-Karp trial step: returns (y5, error_estimate)."""
    k = [rhs(t, y)]
    for i in range(1, 6):
        yi = y.copy()
        for a, kj in zip(_CK_A[i], k):
            if a != 0.0:
                yi += (h * a) * kj
        k.append(rhs(t + _CK_C[i] * h, yi))
    y5 = y.copy()
    err = np.zeros_like(y)
    for b, e, ki in zip(_CK_B5, _CK_ERR, k):
        if b != 0.0:
            y5 += (h * b) * ki
        if e != 0.0:
            err += (h * e) * ki
    return y5, err


def _rk4_step(rhs: RHS, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_span(rhs: RHS, t0: float, y0: np.ndarray, t1: float, n_steps: int) -> np.ndarray:
    """Integrate t0 -> t1 with n_steps fixed RK4 steps; returns the end state."""
    if t1 == t0:
        return y0.copy()
    h = (t1 - t0) / n_steps
    y = y0.copy()
    t = t0
    for _ in range(n_steps):
        y = _rk4_step(rhs, t, y, h)
        t += h
    return y


def integrate_fixed(rhs: RHS, y0, t_span, step: float) -> Trajectory:
    """Fixed-step RK4 over the span, storing every step.

    The step is shrunk slightly if needed so the span divides evenly.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0:
        raise ValueError("t_span must satisfy t1 > t0")
    if step <= 0:
        raise ValueError("step must be positive")
    n = max(1, math.ceil((t1 - t0) / step))
    h = (t1 - t0) / n
    y = np.asarray(y0, dtype=float).copy()
    times = [t0]
    states = [y.copy()]
    t = t0
    for _ in range(n):
        y = _rk4_step(rhs, t, y, h)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(f"non-finite state at t={t + h}")
        t += h
        times.append(t)
        states.append(y.copy())
    return Trajectory(np.array(times), np.array(states))


def _crossed(direction: str, g0: float, g1: float) -> bool:
    # A strict sign on the departure side avoids re-triggering on an
    # event the segment starts at (g0 == 0 never triggers).
    if direction == "rising":
        return g0 < 0.0 <= g1
    if direction == "falling":
        return g0 > 0.0 >= g1
    return (g0 < 0.0 <= g1) or (g0 > 0.0 >= g1)


def locate_event(
    rhs: RHS,
    t_a: float,
    y_a: np.ndarray,
    t_b: float,
    y_b: np.ndarray,
    event: EventSpec,
    event_tol: float = DEFAULT_EVENT_TOL,
    max_iter: int = 200,
) -> tuple[float, np.ndarray]:
    """Refine an event inside the bracketing step [t_a, t_b].

    The event function must change sign across the bracket (respecting
    the event's direction). Bisection on time; the state at each trial
    time is recomputed by fixed-step RK4 from (t_a, y_a), never by
    interpolation. Returns (t_e, state) with |g(t_e, state)| <= event_tol.
    """
    y_a = np.asarray(y_a, dtype=float)
    g_a = float(event.fn(t_a, y_a))
    g_b = float(event.fn(t_b, np.asarray(y_b, dtype=float)))
    if not _crossed(event.direction, g_a, g_b):
        raise NoEventError(
            f"event {event.label!r}: no {event.direction} sign change in "
            f"[{t_a}, {t_b}] (g={g_a:.3e} .. {g_b:.3e})"
        )
    if abs(g_b) <= event_tol:
        return t_b, np.asarray(y_b, dtype=float).copy()

    # Substep count keeps the re-integration error well below event_tol
    # for bracket widths up to a typical max_step.
    n_sub = 32
    lo, g_lo = t_a, g_a
    hi = t_b
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        y_mid = _rk4_span(rhs, t_a, y_a, mid, n_sub)
        g_mid = float(event.fn(mid, y_mid))
        if abs(g_mid) <= event_tol:
            return mid, y_mid
        if (g_mid < 0.0) == (g_lo < 0.0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    raise EventToleranceError(
        f"event {event.label!r}: |g| still above {event_tol} after {max_iter} bisections"
    )


def integrate(
    rhs: RHS,
    y0,
    t_span,
    control: StepControl | None = None,
    events: Sequence[EventSpec] = (),
    event_tol: float = DEFAULT_EVENT_TOL,
) -> Trajectory:
    """Adaptive Cash-Karp integration of a smooth vector field.

    Parameters
    ----------
    rhs : callable(t, y) -> dy/dt
    y0 : initial state (any 1-d array-like)
    t_span : (t0, t1) with t1 > t0
    control : StepControl, default tolerances 1e-10/1e-10
    events : EventSpecs scanned across every accepted step; located events
        are recorded, and a terminal event truncates the trajectory at the
        located state.
    event_tol : tolerance on |event function| at located times

    Raises BudgetExceededError (with the partial trajectory attached) when
    max_steps trial steps are spent, and DivergenceError on non-finite
    states.
    """
    control = control or StepControl()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0:
        raise ValueError("t_span must satisfy t1 > t0")
    y = np.asarray(y0, dtype=float).copy()
    if y.ndim != 1:
        raise ValueError("y0 must be one-dimensional")

    times = [t0]
    states = [y.copy()]
    collected: list[Event] = []
    g_prev = [float(ev.fn(t0, y)) for ev in events]

    t = t0
    h = min(control.initial_step, control.max_step, t1 - t0)
    attempts = 0
    while t < t1:
        attempts += 1
        if attempts > control.max_steps:
            raise BudgetExceededError(
                f"step budget {control.max_steps} exhausted at t={t}",
                Trajectory(np.array(times), np.array(states), collected),
            )
        h = min(h, control.max_step, t1 - t)
        y_new, err = _ck_step(rhs, t, y, h)
        if not np.all(np.isfinite(y_new)):
            raise DivergenceError(f"non-finite state in trial step at t={t}")
        scale = control.abs_tol + control.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.max(np.abs(err) / scale))
        if err_norm > 1.0:
            h *= max(_MIN_SHRINK, _SAFETY * err_norm ** -0.25)
            continue

        t_new = t + h
        terminal_hit: tuple[float, np.ndarray, str] | None = None
        for idx, ev in enumerate(events):
            g_new = float(ev.fn(t_new, y_new))
            if _crossed(ev.direction, g_prev[idx], g_new):
                t_e, y_e = locate_event(rhs, t, y, t_new, y_new, ev, event_tol)
                if ev.terminal:
                    if terminal_hit is None or t_e < terminal_hit[0]:
                        terminal_hit = (t_e, y_e, ev.label)
                else:
                    collected.append(Event(ev.label, t_e, y_e))
            g_prev[idx] = g_new

        if terminal_hit is not None:
            t_e, y_e, label = terminal_hit
            # Drop non-terminal events located past the cut.
            collected = [e for e in collected if e.time <= t_e]
            collected.append(Event(label, t_e, y_e))
            if t_e > times[-1]:
                times.append(t_e)
                states.append(y_e.copy())
            break

        t, y = t_new, y_new
        times.append(t)
        states.append(y.copy())
        if err_norm == 0.0:
            h *= _MAX_GROW
        else:
            h *= min(_MAX_GROW, _SAFETY * err_norm ** -0.2)

    collected.sort(key=lambda e: e.time)
    return Trajectory(np.array(times), np.array(states), collected)
