"""Lockdown thresholds: the three regimes, including the sliding plateau.

A policy watches the infected fraction y and cuts the contact rate from
beta to beta_bar the moment y reaches a threshold k. Depending on how
strong the cut is, a seeded outbreak does one of three things:

  A. never reaches k (the policy is irrelevant);
  B. reaches k and gets pinned there: the cut is strong enough that the
     two regimes fight, and the state slides along y = k while the
     susceptible pool drains at the constant rate gamma*k, after which
     the epidemic decays on its own;
  C. punches through k (the cut is too weak to hold the line), peaks
     above it on the reduced-rate dynamics, and often slides on the way
     back down.

Every number printed by the simulation is checked against a closed form:
the plateau height (k itself), the plateau length, the crossing abscissa,
and the overshoot peak.

Run:  python3 demos/lockdown_regimes.py
Out:  demos/output/lockdown_regimes.png
"""

import pathlib

import numpy as np

import sirdyn as sd

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

EPS = 0.01
CASES = {
    "B: strong cut, plateau": sd.ThresholdPolicy(beta=2.0, beta_bar=0.38, threshold=0.35, gamma=0.4),
    "C: weak cut, overshoot": sd.ThresholdPolicy(beta=2.0, beta_bar=1.0, threshold=0.35, gamma=0.4),
    "A: threshold never hit": sd.ThresholdPolicy(beta=2.0, beta_bar=0.38, threshold=0.60, gamma=0.4),
}

traces = {}
for label, policy in CASES.items():
    report = sd.classify_regime(EPS, policy)
    traj = sd.simulate_threshold(policy, EPS, 100.0)
    traces[label] = (policy, traj)
    sim_peak = sd.peak_infected(traj)
    print(f"{label}")
    print(f"  regime={report.regime}  predicted peak={report.predicted_peak:.5f}  "
          f"simulated={sim_peak:.5f}  |diff|={abs(report.predicted_peak - sim_peak):.1e}")
    if report.regime == "B":
        entry = traj.first_event("sliding-entry")
        exit_ = traj.first_event("sliding-exit")
        print(f"  plateau [{entry.time:.3f}, {exit_.time:.3f}] "
              f"(closed form [{report.t_star:.3f}, {report.t_star_star:.3f}]), "
              f"exit at x={exit_.state[0]:.4f} (= gamma/beta)")
    if report.crossing_x is not None:
        print(f"  crosses y=k at x={report.crossing_x:.5f}")
    print()

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the figure")
else:
    fig, (ax_t, ax_xy) = plt.subplots(1, 2, figsize=(11, 4))
    for label, (policy, traj) in traces.items():
        ax_t.plot(traj.times, traj.states[:, 1], label=label)
        ax_xy.plot(traj.states[:, 0], traj.states[:, 1], label=label)
    ax_t.axhline(0.35, color="grey", lw=0.8, ls="--")
    ax_t.set_xlim(0, 25)
    ax_t.set_xlabel("time")
    ax_t.set_ylabel("infected fraction y")
    ax_t.set_title("Infection curves under a lockdown threshold")
    ax_t.legend(fontsize=8)

    # The trapping segment of the threshold line for the strong-cut policy.
    strong = CASES["B: strong cut, plateau"].manifold()
    ax_xy.plot([strong.x_low, strong.x_high], [strong.level, strong.level],
               color="black", lw=3, alpha=0.6, label="trapping segment")
    ax_xy.set_xlabel("susceptible fraction x")
    ax_xy.set_ylabel("infected fraction y")
    ax_xy.set_title("Phase plane: slide along y=k, exit at x=gamma/beta")
    ax_xy.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(OUT / "lockdown_regimes.png", dpi=150)
    print(f"wrote {OUT / 'lockdown_regimes.png'}")
