"""Canned invariant suite behind the `verify` CLI command.

Every check pairs an analytic prediction (closed form, conserved
quantity, structural property) with a simulated run and reports the
measured discrepancy against its bound. The suite is deterministic; a
loosened StepControl makes the drift checks report proportionally larger
numbers, and the eps_bar_value hook exists so a deliberately corrupted
constant fails its fixed-point check (negative control for the harness
itself).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrate import EventSpec, StepControl, integrate
from .network import (
    NetworkState,
    aggregate_invariants,
    bimodality_threshold,
    detect_multimodality,
    reproduction_series,
    simulate_network,
    spectral_radius,
    uniform_two_population,
)
from .scalar import (
    RateFunction,
    ScalarModel,
    SirState,
    classical_peak,
    classify_shape,
    motion_invariant,
    orbit_infected,
    peak_infected,
    reproduction_number,
    simulate_scalar,
)
from .threshold import ThresholdPolicy, classify_regime, crossing_abscissa, simulate_threshold

__all__ = ["CheckResult", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float
    detail: str = ""


def _peak_of(traj) -> float:
    return max(
        float(np.max(traj.states[:, 1])),
        max((float(e.state[1]) for e in traj.events if e.label == "peak"), default=0.0),
    )


def run_checks(control: StepControl | None = None, eps_bar_value: float | None = None):
    """Run the full invariant suite; returns a list of CheckResult."""
    control = control or StepControl()
    results: list[CheckResult] = []

    def check(name, measured, bound, detail="", larger_is_fail=True):
        measured = float(measured)
        passed = measured <= bound if larger_is_fail else measured >= bound
        results.append(CheckResult(name, passed, measured, float(bound), detail))

    # --- integrator on linear fields -----------------------------------
    worst = 0.0
    for lam in (-1.0, 0.0, 1.0):
        traj = integrate(lambda t, y: lam * y, np.array([1.0]), (0.0, 1.0), control)
        worst = max(worst, abs(traj.final_state[0] - math.exp(lam)) / math.exp(lam))
    check(
        "linear-field-accuracy",
        worst,
        10.0 * (control.abs_tol + control.rel_tol),
        "max relative error at t=1 over y'=lam*y, lam in {-1,0,1}",
    )

    # --- classical constant-rate run ------------------------------------
    eps, beta, gamma = 0.01, 2.0, 0.4
    model = ScalarModel(RateFunction.constant(beta), gamma)
    rho = model.rho
    run = simulate_scalar(model, 1.0 - eps, eps, 100.0, control)
    check(
        "classical-peak",
        abs(_peak_of(run) - classical_peak(eps, rho)),
        1e-3,
        "simulated max infected vs closed-form peak",
    )
    check("simplex-drift", np.max(np.abs(run.states.sum(axis=1) - 1.0)), 1e-9)
    gam = np.array([motion_invariant(SirState.from_array(s), rho) for s in run.states])
    check("motion-invariant-drift", np.max(np.abs(gam - gam[0])), 1e-6)
    orbit_gap = max(
        abs(s[1] - orbit_infected(s[0], eps, rho)) for s in run.states
    )
    check("orbit-agreement", orbit_gap, 1e-6)
    check(
        "susceptible-monotone",
        float(np.max(np.diff(run.states[:, 0]))),
        0.0,
        "max increase of x between stored points",
    )

    # --- outbreak dichotomy across rate families -------------------------
    ok = True
    max_sub_R = 0.0
    for fam in (
        RateFunction.constant(2.0),
        RateFunction.power(2.0, 1.0),
        RateFunction.power(2.0, 2.0),
    ):
        m = ScalarModel(fam, gamma)
        tr = simulate_scalar(m, 1.0 - eps, eps, 100.0, control)
        ok = ok and classify_shape(tr).shape == "single-peak"
    for fam in (
        RateFunction.constant(0.3),
        RateFunction.power(0.3, 1.0),
        RateFunction.power(0.3, 2.0),
    ):
        m = ScalarModel(fam, gamma)
        tr = simulate_scalar(m, 1.0 - eps, eps, 100.0, control)
        ok = ok and classify_shape(tr).shape == "monotone-decreasing"
        ok = ok and bool(np.all(np.diff(tr.states[:, 1]) <= 0.0))
        max_sub_R = max(
            max_sub_R,
            max(reproduction_number(SirState.from_array(s), m) for s in tr.states),
        )
    check("outbreak-dichotomy", 0.0 if ok else 1.0, 0.0, "shape labels across 6 runs")
    check("subcritical-R-below-one", max_sub_R, 1.0, "max R(t) on the three R(0)<1 runs")

    # --- threshold policy: sliding regime --------------------------------
    pol_b = ThresholdPolicy(beta=2.0, beta_bar=0.38, threshold=0.35, gamma=0.4)
    rep_b = classify_regime(eps, pol_b)
    run_b = simulate_threshold(pol_b, eps, 100.0, control)
    entry = run_b.first_event("sliding-entry")
    exit_ = run_b.first_event("sliding-exit")
    if entry is None or exit_ is None:
        check("sliding-plateau", math.inf, 1e-6, "no sliding segment found")
    else:
        k = pol_b.threshold
        on = (run_b.times >= entry.time) & (run_b.times <= exit_.time)
        check("sliding-plateau", np.max(np.abs(run_b.states[on, 1] - k)), 1e-6)
        check(
            "sliding-duration",
            abs((exit_.time - entry.time) - rep_b.sliding_duration),
            0.05,
            "event-measured vs closed-form plateau length",
        )
        check("sliding-exit-x", abs(exit_.state[0] - pol_b.rho), 1e-4)
        slope = np.polyfit(run_b.times[on], run_b.states[on, 0], 1)[0]
        check(
            "sliding-slope",
            abs(slope + pol_b.gamma * k) / (pol_b.gamma * k),
            0.01,
            "relative error of fitted dx/dt against -gamma*k",
        )

    # --- threshold policy: overshoot regime -------------------------------
    pol_c = ThresholdPolicy(beta=2.0, beta_bar=1.0, threshold=0.35, gamma=0.4)
    rep_c = classify_regime(eps, pol_c)
    run_c = simulate_threshold(pol_c, eps, 100.0, control)
    labels_ok = rep_b.regime == "B" and rep_c.regime == "C"
    check("regime-labels-fig-pair", 0.0 if labels_ok else 1.0, 0.0)
    check(
        "controlled-peak",
        abs(_peak_of(run_c) - rep_c.predicted_peak),
        1e-3,
        "simulated overshoot max vs closed form",
    )
    check(
        "crossing-backsubstitution",
        abs(orbit_infected(crossing_abscissa(eps, 0.2, 0.35), eps, 0.2) - 0.35),
        1e-10,
    )

    # --- threshold never engaged: trajectories coincide -------------------
    pol_a = ThresholdPolicy(beta=2.0, beta_bar=0.38, threshold=0.6, gamma=0.4)
    run_a = simulate_threshold(pol_a, eps, 100.0, control)
    free = simulate_scalar(model, 1.0 - eps, eps, 100.0, control)
    if run_a.times.shape == free.times.shape and np.array_equal(run_a.times, free.times):
        gap = float(np.max(np.abs(run_a.states - free.states)))
    else:
        gap = math.inf
    check("inactive-policy-coincidence", gap, 1e-9)

    # --- spectral machinery ------------------------------------------------
    x3 = np.array([0.3, 0.7, 0.55])
    check(
        "rank-one-spectral-identity",
        abs(spectral_radius(x3, np.ones((3, 3))).lambda_max - x3.sum()),
        1e-12,
    )
    rng = np.random.default_rng(20240915)
    worst = 0.0
    for _ in range(100):
        A = rng.uniform(0.05, 2.0, (2, 2))
        x = rng.uniform(0.0, 1.0, 2)
        M = x[:, None] * A
        tr_ = M[0, 0] + M[1, 1]
        disc = (M[0, 0] - M[1, 1]) ** 2 + 4.0 * M[0, 1] * M[1, 0]
        lam_closed = 0.5 * (tr_ + math.sqrt(max(disc, 0.0)))
        worst = max(worst, abs(spectral_radius(x, A).lambda_max - lam_closed))
    check("power-iteration-vs-closed-form", worst, 1e-10, "100 random 2x2 matrices")

    # --- two-population network ---------------------------------------------
    net = uniform_two_population()
    agg_event = EventSpec(
        lambda t, s: s[0] + s[1] - 1.0, direction="falling", label="aggregate-peak"
    )
    run_n = simulate_network(net, NetworkState.seeded(eps), 100.0, control, extra_events=[agg_event])
    drift = aggregate_invariants(net, run_n)
    check("network-motion-drift", drift.motion_drift, 1e-6)
    check("network-ratio-drift", drift.ratio_drift, 1e-6)
    peak_ev = run_n.first_event("aggregate-peak")
    if peak_ev is None:
        check("aggregate-peak-values", math.inf, 1e-3, "aggregate peak event not found")
    else:
        ybar = peak_ev.state[2] + peak_ev.state[3]
        gap = max(
            abs(ybar - (1.0 - math.log(2.0 - eps))),
            abs(peak_ev.state[1] - 1.0 / (2.0 - eps)),
        )
        check("aggregate-peak-values", gap, 1e-3)
    min_peaks = min(
        detect_multimodality(
            simulate_network(net, NetworkState.seeded(e), 100.0, control), 0
        ).n_peaks
        for e in (0.005, 0.01, 0.05, 0.1, 0.17)
    )
    check(
        "seeded-node-bimodality",
        min_peaks,
        2,
        "min peak count over eps in {0.005..0.17}",
        larger_is_fail=False,
    )
    R = reproduction_series(net, run_n)
    check("network-R-monotone", float(np.max(np.diff(R))), 1e-9, "max per-step increase of R(t)")

    # --- bimodality threshold constant ---------------------------------------
    ebar = bimodality_threshold() if eps_bar_value is None else eps_bar_value
    residual = abs(ebar - (1.0 - ebar) * (1.0 - math.log(2.0 - ebar)) / (2.0 - ebar))
    check("bimodality-threshold-fixed-point", residual, 1e-12)

    # --- n=1 network reduces to the scalar model ------------------------------
    one = simulate_network(
        type(net)(
            graph=type(net.graph)(np.array([[2.0]])), beta=1.0, gamma=0.4
        ),
        NetworkState(np.array([0.99]), np.array([0.01]), np.array([0.0])),
        100.0,
        control,
    )
    if one.times.shape == free.times.shape and np.array_equal(one.times, free.times):
        gap = float(np.max(np.abs(one.states - free.states)))
    else:
        gap = math.inf
    check("single-node-scalar-equivalence", gap, 1e-9)

    return results
