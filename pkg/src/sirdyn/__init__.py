"""SIR epidemic dynamics: feedback contact rates, lockdown thresholds, networks.

Three model families share one integration core:

- `sirdyn.scalar`: single-population SIR with constant or infection-damped
  contact rates, closed-form orbits and peak formulas;
- `sirdyn.threshold`: piecewise-constant lockdown policies, sliding-mode
  simulation and full regime analytics;
- `sirdyn.network`: metapopulation SIR on weighted digraphs with a
  spectral reproduction number and multimodality diagnostics.

`sirdyn.integrate` provides the shared Runge-Kutta steppers and event
location; `sirdyn.cli` the scenario-driven command line.
"""

from .integrate import (
    BudgetExceededError,
    DivergenceError,
    Event,
    EventSpec,
    EventToleranceError,
    NoEventError,
    StepControl,
    Trajectory,
    integrate,
    integrate_fixed,
    locate_event,
)
from .scalar import (
    RateFunction,
    ScalarModel,
    ShapeReport,
    SirState,
    classical_peak,
    classify_series,
    classify_shape,
    motion_invariant,
    orbit_infected,
    peak_at_start,
    peak_infected,
    reproduction_number,
    scalar_rhs,
    simulate_scalar,
)
from .threshold import (
    BoundaryRegimeError,
    ModeChatterError,
    NoCrossingError,
    RegimeReport,
    SlidingManifold,
    ThresholdPolicy,
    classify_regime,
    controlled_peak,
    crossing_abscissa,
    entry_level,
    simulate_threshold,
    sliding_duration,
    sliding_time,
    threshold_rate,
)
from .network import (
    ContactGraph,
    DriftReport,
    MultimodalityReport,
    NetworkModel,
    NetworkState,
    PerturbationCell,
    SpectralIterationError,
    SpectralReport,
    aggregate_invariants,
    bimodality_threshold,
    charpoly_radius,
    detect_multimodality,
    fraction_multimodal,
    network_R,
    network_rhs,
    perturbation_sweep,
    reproduction_series,
    simulate_network,
    spectral_radius,
    uniform_two_population,
)

__version__ = "0.1.0"
