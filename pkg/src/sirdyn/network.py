"""Metapopulation SIR on a weighted contact digraph.

Each node i carries fractions (x_i, y_i, z_i) coupled through the weight
matrix A (A_ij = contact frequency of subpopulation i with j):

    x_i' = -x_i * beta * sum_j A_ij y_j
    y_i' =  x_i * beta * sum_j A_ij y_j - gamma * y_i
    z_i' =  gamma * y_i

The outbreak indicator is R(t) = (beta/gamma) * lambda_max(diag(x) A),
with lambda_max the dominant (Perron) eigenvalue of the nonnegative
matrix diag(x) A, computed by power iteration with a small dense
characteristic-polynomial fallback.

Unlike the single-population model, per-node infection curves need not be
unimodal. The canonical two-population example (uniform all-ones
coupling, beta = gamma = 1, one node seeded with eps, the other clean)
produces a double-peaked curve in the seeded node whenever eps is below
the bimodality threshold computed by `bimodality_threshold`: the seeded
node's infection first dips (it exports infection faster than it grows),
then rises with the aggregate outbreak, then decays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .integrate import EventSpec, StepControl, Trajectory, integrate
from .roots import bisect
from .scalar import DEFAULT_EXTINCTION, classify_series

__all__ = [
    "ContactGraph",
    "NetworkModel",
    "NetworkState",
    "SpectralReport",
    "SpectralIterationError",
    "DriftReport",
    "MultimodalityReport",
    "PerturbationCell",
    "network_rhs",
    "spectral_radius",
    "charpoly_radius",
    "network_R",
    "simulate_network",
    "reproduction_series",
    "aggregate_invariants",
    "uniform_two_population",
    "bimodality_threshold",
    "detect_multimodality",
    "perturbation_sweep",
    "fraction_multimodal",
]


class SpectralIterationError(RuntimeError):
    """Power iteration failed to converge (reducible matrix with tied moduli)."""


@dataclass(frozen=True)
class ContactGraph:
    """Nonnegative weight matrix with strictly positive diagonal."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if np.any(np.diag(w) <= 0):
            raise ValueError("diagonal weights must be strictly positive")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class NetworkModel:
    graph: ContactGraph
    beta: float
    gamma: float

    def __post_init__(self):
        if self.beta <= 0 or self.gamma <= 0:
            raise ValueError("beta and gamma must be positive")

    def rhs(self, t: float, s: np.ndarray) -> np.ndarray:
        n = self.graph.n
        x = np.maximum(s[:n], 0.0)
        y = np.maximum(s[n : 2 * n], 0.0)
        w = self.beta * (self.graph.weights @ y)
        inf = x * w
        rec = self.gamma * y
        out = np.empty(3 * n)
        out[:n] = -inf
        out[n : 2 * n] = inf - rec
        out[2 * n :] = rec
        return out


@dataclass(frozen=True)
class NetworkState:
    """Per-node fractions; each (x_i, y_i, z_i) sums to 1 within 1e-9."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).copy()
        y = np.asarray(self.y, dtype=float).copy()
        z = np.asarray(self.z, dtype=float).copy()
        if not (x.shape == y.shape == z.shape) or x.ndim != 1:
            raise ValueError("x, y, z must be 1-d arrays of equal length")
        for name, v in (("x", x), ("y", y), ("z", z)):
            if np.any(v < -1e-12) or np.any(v > 1.0 + 1e-12):
                raise ValueError(f"{name} entries must lie in [0, 1]")
            np.clip(v, 0.0, 1.0, out=v)
        if np.max(np.abs(x + y + z - 1.0)) > 1e-9:
            raise ValueError("per-node fractions must sum to 1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @classmethod
    def seeded(cls, eps: float, n: int = 2, node: int = 0) -> "NetworkState":
        """All nodes clean except `node`, seeded with infected fraction eps."""
        x = np.ones(n)
        y = np.zeros(n)
        x[node] = 1.0 - eps
        y[node] = eps
        return cls(x, y, np.zeros(n))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def pack(self) -> np.ndarray:
        return np.concatenate([self.x, self.y, self.z])

    @classmethod
    def unpack(cls, s: np.ndarray) -> "NetworkState":
        n = s.shape[0] // 3
        return cls(s[:n], s[n : 2 * n], s[2 * n :])


@dataclass(frozen=True)
class SpectralReport:
    """Dominant-eigenpair report for diag(x) A.

    v is the nonnegative leading eigenvector normalized to unit sum and
    R = (beta/gamma) * lambda_max.
    """

    lambda_max: float
    v: np.ndarray
    R: float
    iterations: int


def network_rhs(state: NetworkState, model: NetworkModel):
    """Per-node derivatives (dx, dy, dz)."""
    out = model.rhs(0.0, state.pack())
    n = state.n
    return out[:n], out[n : 2 * n], out[2 * n :]


def spectral_radius(
    x,
    A,
    beta: float = 1.0,
    gamma: float = 1.0,
    tol: float = 1e-12,
    max_iter: int = 20000,
) -> SpectralReport:
    """Dominant eigenvalue of diag(x) A by power iteration.

    Converged when successive Rayleigh-quotient estimates differ by less
    than tol and the residual |M v - lambda v|_inf is at most
    1e-10 * lambda. Raises SpectralIterationError when the iteration
    stalls (possible for reducible matrices with tied dominant moduli);
    charpoly_radius is the dense fallback for n <= 3.
    """
    x = np.asarray(x, dtype=float)
    A = np.asarray(A, dtype=float)
    if np.any(x < 0) or np.any(A < 0):
        raise ValueError("x and A must be nonnegative")
    n = A.shape[0]
    M = x[:, None] * A
    if not M.any():
        return SpectralReport(0.0, np.full(n, 1.0 / n), 0.0, 0)

    v = np.full(n, 1.0 / n)
    lam_prev = math.inf
    for it in range(1, max_iter + 1):
        w = M @ v
        lam = float(v @ w) / float(v @ v)
        total = w.sum()
        if total > 0.0:
            v = w / total
        if abs(lam - lam_prev) < tol * max(1.0, abs(lam)):
            residual = float(np.max(np.abs(M @ v - lam * v)))
            if lam > 0.0 and residual <= 1e-10 * lam:
                return SpectralReport(lam, v, (beta / gamma) * lam, it)
        lam_prev = lam
    raise SpectralIterationError(
        f"power iteration did not converge in {max_iter} iterations"
    )


def charpoly_radius(x, A) -> float:
    """Spectral radius of diag(x) A from its characteristic polynomial (n <= 3)."""
    x = np.asarray(x, dtype=float)
    A = np.asarray(A, dtype=float)
    M = x[:, None] * A
    n = M.shape[0]
    if n == 1:
        return float(M[0, 0])
    if n == 2:
        tr = M[0, 0] + M[1, 1]
        disc = (M[0, 0] - M[1, 1]) ** 2 + 4.0 * M[0, 1] * M[1, 0]
        return float(0.5 * (tr + math.sqrt(max(disc, 0.0))))
    if n == 3:
        c2 = float(np.trace(M))
        minors = (
            M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1]
            + M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]
            + M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        )
        c0 = float(np.linalg.det(M))
        roots = np.roots([1.0, -c2, float(minors), -c0])
        return float(np.max(np.abs(roots)))
    raise ValueError("characteristic-polynomial fallback only covers n <= 3")


def network_R(state: NetworkState, model: NetworkModel) -> float:
    """Reproduction number (beta/gamma) * lambda_max(diag(x) A)."""
    try:
        report = spectral_radius(state.x, model.graph.weights, model.beta, model.gamma)
        return report.R
    except SpectralIterationError:
        if state.n <= 3:
            lam = charpoly_radius(state.x, model.graph.weights)
            return (model.beta / model.gamma) * lam
        raise


def simulate_network(
    model: NetworkModel,
    initial: NetworkState,
    horizon: float,
    control: StepControl | None = None,
    extinction: float = DEFAULT_EXTINCTION,
    extra_events: Sequence[EventSpec] = (),
) -> Trajectory:
    """Integrate the network model; states are packed as [x..., y..., z...].

    The run stops at the horizon or when every node's infected fraction
    drops below the extinction threshold (terminal "extinction" event on
    max_i y_i). Pair with reproduction_series for R(t) on the stored grid.
    """
    n = model.graph.n
    if initial.n != n:
        raise ValueError("initial state size does not match the graph")
    events = [
        EventSpec(
            lambda t, s: float(np.max(s[n : 2 * n])) - extinction,
            direction="falling",
            terminal=True,
            label="extinction",
        ),
        *extra_events,
    ]
    return integrate(model.rhs, initial.pack(), (0.0, horizon), control, events=events)


def reproduction_series(model: NetworkModel, traj: Trajectory) -> np.ndarray:
    """R(t) evaluated at every stored state of a network trajectory."""
    n = model.graph.n
    return np.array(
        [network_R(NetworkState.unpack(s), model) for s in traj.states]
    ) if n else np.array([])


def uniform_two_population() -> NetworkModel:
    """Two subpopulations, all-ones coupling, unit infection and recovery rates."""
    return NetworkModel(ContactGraph(np.ones((2, 2))), beta=1.0, gamma=1.0)


@dataclass(frozen=True)
class DriftReport:
    """Worst-case drifts of the two-population conserved quantities."""

    motion_drift: float  # xbar + ybar - ln(xbar) along the run
    ratio_drift: float   # cross-differences x_i(t) xbar(0) - x_i(0) xbar(t)


def aggregate_invariants(model: NetworkModel, traj: Trajectory) -> DriftReport:
    """Drift of the uniform-coupling invariants along a simulated run.

    Only valid for the rank-one setup of `uniform_two_population`: there
    the aggregates follow a closed SIR system, xbar + ybar - ln(xbar) is
    conserved, and the susceptible fractions keep a constant ratio.
    """
    w = model.graph.weights
    if model.graph.n != 2 or model.beta != 1.0 or model.gamma != 1.0 or not np.array_equal(
        w, np.ones((2, 2))
    ):
        raise ValueError("invariants valid only for the rank-one, beta=gamma=1 case")
    x = traj.states[:, 0:2]
    y = traj.states[:, 2:4]
    xbar = x.sum(axis=1)
    ybar = y.sum(axis=1)
    motion = xbar + ybar - np.log(xbar)
    motion_drift = float(np.max(np.abs(motion - motion[0])))
    ratio_drift = float(
        np.max(np.abs(x * xbar[0] - x[0] * xbar[:, None]))
    )
    return DriftReport(motion_drift, ratio_drift)


def bimodality_threshold(xtol: float = 1e-12) -> float:
    """Least positive eps with eps = (1-eps)(1 - ln(2-eps))/(2-eps).

    Seeding the uniform two-population model below this level guarantees
    the seeded node's infection curve changes monotonicity at least
    twice. Located by bisection on [0, 1]; the map's value at 0 is
    positive and at 1 is zero, so the bracket always holds a root.
    """
    def gap(e: float) -> float:
        return e - (1.0 - e) * (1.0 - math.log(2.0 - e)) / (2.0 - e)

    return bisect(gap, 0.0, 1.0, xtol=xtol)


@dataclass(frozen=True)
class MultimodalityReport:
    n_peaks: int
    peak_times: tuple[float, ...]
    peak_values: tuple[float, ...]
    shape: str


def detect_multimodality(
    traj: Trajectory, node: int, value_tol: float = 1e-8
) -> MultimodalityReport:
    """Count surviving local maxima of one node's infected fraction.

    The default suppression scale sits two decades above the integrator
    ripple (~1e-10 at default tolerances) but below the seeded node's
    genuine initial dip, whose depth scales like eps**3/2 and reaches
    ~6e-8 already at eps = 0.005.
    """
    n = traj.states.shape[1] // 3
    if not 0 <= node < n:
        raise ValueError(f"node {node} out of range for {n} nodes")
    report = classify_series(traj.times, traj.states[:, n + node], value_tol=value_tol)
    return MultimodalityReport(
        n_peaks=len(report.peak_times),
        peak_times=report.peak_times,
        peak_values=report.peak_values,
        shape=report.shape,
    )


@dataclass(frozen=True)
class PerturbationCell:
    beta: float
    gamma: float
    weight_delta: float
    eps: float
    n_peaks: int
    multimodal: bool


def _offsets(radius: float) -> tuple[float, ...]:
    return (0.0,) if radius == 0.0 else (-radius, 0.0, radius)


def perturbation_sweep(
    beta_radius: float = 0.0,
    gamma_radius: float = 0.0,
    weight_radius: float = 0.0,
    eps_values: Sequence[float] = (0.01,),
    horizon: float = 100.0,
    control: StepControl | None = None,
    value_tol: float = 1e-8,
) -> list[PerturbationCell]:
    """Probe how robust the seeded node's double peak is to model changes.

    Perturbs the uniform two-population setup on a deterministic grid:
    beta and gamma take values 1 +- radius, every coupling weight is
    shifted by +- weight_radius, and each eps in eps_values seeds node 0.
    Records the surviving peak count per cell; summarize with
    fraction_multimodal.
    """
    for name, r in (
        ("beta_radius", beta_radius),
        ("gamma_radius", gamma_radius),
        ("weight_radius", weight_radius),
    ):
        if not 0.0 <= r <= 0.1:
            raise ValueError(f"{name} must lie in [0, 0.1]")
    cells = []
    for db in _offsets(beta_radius):
        for dg in _offsets(gamma_radius):
            for dw in _offsets(weight_radius):
                graph = ContactGraph(np.ones((2, 2)) + dw)
                model = NetworkModel(graph, beta=1.0 + db, gamma=1.0 + dg)
                for eps in eps_values:
                    traj = simulate_network(
                        model, NetworkState.seeded(eps), horizon, control
                    )
                    found = detect_multimodality(traj, 0, value_tol)
                    cells.append(
                        PerturbationCell(
                            beta=model.beta,
                            gamma=model.gamma,
                            weight_delta=dw,
                            eps=eps,
                            n_peaks=found.n_peaks,
                            multimodal=found.n_peaks >= 2,
                        )
                    )
    return cells


def fraction_multimodal(cells: Sequence[PerturbationCell]) -> float:
    """Fraction of sweep cells whose seeded node kept at least two peaks."""
    if not cells:
        return 0.0
    return sum(c.multimodal for c in cells) / len(cells)
