"""Two coupled populations: the seeded city's infection curve peaks twice.

Two identical subpopulations mix uniformly (all contact weights equal,
unit infection and recovery rates). City 1 starts with a small infected
fraction eps, city 2 starts clean. Early on, city 1 exports infection
faster than it grows it, so its own curve dips; once city 2 ignites, the
aggregate outbreak pulls city 1 back up to a second, higher peak. A
single well-mixed population can never do this.

The dip-then-rebound is guaranteed for any eps below a threshold that
solves a one-line fixed-point equation; above it the effect fades. The
script also probes how far the double peak survives when the rates and
weights are perturbed: the narrow direction is the seeded city's
self-contact inflow, which must stay below its recovery outflow.

Run:  python3 demos/two_city_double_peak.py
Out:  demos/output/two_city_double_peak.png
"""

import math
import pathlib

import numpy as np

import sirdyn as sd

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

EPS = 0.01
model = sd.uniform_two_population()
ebar = sd.bimodality_threshold()
print(f"bimodality threshold on the seed: eps_bar = {ebar:.6f}\n")

aggregate_peak = sd.EventSpec(
    lambda t, s: s[0] + s[1] - 1.0, direction="falling", label="aggregate-peak"
)
traj = sd.simulate_network(
    model, sd.NetworkState.seeded(EPS), 100.0, extra_events=[aggregate_peak]
)

for node in (0, 1):
    found = sd.detect_multimodality(traj, node)
    times = ", ".join(f"{t:.2f}" for t in found.peak_times)
    print(f"city {node + 1}: {found.n_peaks} peak(s) at t = {times}  [{found.shape}]")

hit = traj.first_event("aggregate-peak")
ybar = hit.state[2] + hit.state[3]
print(f"\naggregate peak at t={hit.time:.3f}: total infected {ybar:.6f} "
      f"(closed form {1.0 - math.log(2.0 - EPS):.6f}), "
      f"city-2 susceptible {hit.state[1]:.6f} (closed form {1.0 / (2.0 - EPS):.6f})")

drift = sd.aggregate_invariants(model, traj)
print(f"conserved-quantity drifts along the run: motion {drift.motion_drift:.1e}, "
      f"susceptible ratio {drift.ratio_drift:.1e}")

# How robust is the double peak to model perturbations?
print("\nperturbation sweep (27 cells each):")
for r in (0.002, 0.02):
    cells = sd.perturbation_sweep(
        beta_radius=r, gamma_radius=r, weight_radius=r, eps_values=(EPS,)
    )
    frac = sd.fraction_multimodal(cells)
    print(f"  +-{r:.3f} on rates and weights -> {frac:.0%} of cells keep the double peak")
print("  (the losing cells are exactly those whose seeded-city self-contact "
      "inflow (1-eps)*beta*A11 exceeds the recovery rate gamma)")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the figure")
else:
    fig, (ax, ax_zoom) = plt.subplots(1, 2, figsize=(11, 4))
    for axis in (ax, ax_zoom):
        axis.plot(traj.times, traj.states[:, 2], label="city 1 (seeded)")
        axis.plot(traj.times, traj.states[:, 3], label="city 2")
        axis.plot(traj.times, traj.states[:, 2] + traj.states[:, 3], "--",
                  color="grey", label="total")
        axis.set_xlabel("time")
        axis.set_ylabel("infected fraction")
    ax.set_xlim(0, 15)
    ax.legend(fontsize=8)
    ax.set_title("Two coupled cities, one seeded")
    ax_zoom.set_xlim(0, 0.35)
    ax_zoom.set_ylim(0.0094, 0.0106)
    ax_zoom.set_title("Zoom: the seeded city dips before it rebounds")
    fig.tight_layout()
    fig.savefig(OUT / "two_city_double_peak.png", dpi=150)
    print(f"wrote {OUT / 'two_city_double_peak.png'}")
