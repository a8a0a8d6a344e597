"""Network SIR: coupling dynamics, spectral radius, two-population analytics."""

import math

import numpy as np
import pytest

import sirdyn as sd
from sirdyn.scalar import classify_series

EPS = 0.01
YBAR_AT_AGGREGATE_PEAK = 1.0 - math.log(2.0 - EPS)   # 0.311865...
X2_AT_AGGREGATE_PEAK = 1.0 / (2.0 - EPS)             # 0.502512...


def closed_form_2x2(x, A):
    """Dominant eigenvalue of diag(x)A for n=2, written out independently."""
    M = x[:, None] * A
    tr = M[0, 0] + M[1, 1]
    disc = (M[0, 0] - M[1, 1]) ** 2 + 4.0 * M[0, 1] * M[1, 0]
    return 0.5 * (tr + math.sqrt(max(disc, 0.0)))


class TestTypes:
    def test_graph_requires_square(self):
        with pytest.raises(ValueError):
            sd.ContactGraph(np.ones((2, 3)))

    def test_graph_requires_positive_diagonal(self):
        with pytest.raises(ValueError):
            sd.ContactGraph(np.array([[1.0, 1.0], [1.0, 0.0]]))

    def test_graph_rejects_negative_weights(self):
        with pytest.raises(ValueError):
            sd.ContactGraph(np.array([[1.0, -0.1], [0.2, 1.0]]))

    def test_state_simplex_checked_per_node(self):
        with pytest.raises(ValueError):
            sd.NetworkState(np.array([0.5, 1.0]), np.array([0.4, 0.0]), np.array([0.0, 0.0]))

    def test_seeded(self):
        s = sd.NetworkState.seeded(0.01, n=3, node=1)
        np.testing.assert_allclose(s.x, [1.0, 0.99, 1.0])
        np.testing.assert_allclose(s.y, [0.0, 0.01, 0.0])

    def test_pack_unpack_roundtrip(self):
        s = sd.NetworkState.seeded(0.05)
        again = sd.NetworkState.unpack(s.pack())
        np.testing.assert_array_equal(again.x, s.x)
        np.testing.assert_array_equal(again.y, s.y)


class TestNetworkRhs:
    def test_seeded_two_population_values(self, two_city_model):
        """Seeded-node derivative is -eps**2; clean node grows at x2*ybar."""
        dx, dy, dz = sd.network_rhs(sd.NetworkState.seeded(EPS), two_city_model)
        assert dy[0] == pytest.approx(-1e-4, abs=1e-12)
        assert dy[1] == pytest.approx(0.01, abs=1e-15)
        assert dz[0] == pytest.approx(0.01, abs=1e-15)

    def test_disease_free_equilibrium(self, two_city_model):
        state = sd.NetworkState(np.ones(2), np.zeros(2), np.zeros(2))
        dx, dy, dz = sd.network_rhs(state, two_city_model)
        assert not dx.any() and not dy.any() and not dz.any()

    def test_single_node_reduces_to_scalar(self):
        model = sd.NetworkModel(sd.ContactGraph(np.array([[1.0]])), beta=2.0, gamma=0.4)
        state = sd.NetworkState(np.array([0.99]), np.array([0.01]), np.array([0.0]))
        dx, dy, dz = sd.network_rhs(state, model)
        scalar = sd.ScalarModel(sd.RateFunction.constant(2.0), 0.4)
        expected = sd.scalar_rhs(sd.SirState(0.99, 0.01, 0.0), scalar)
        np.testing.assert_allclose([dx[0], dy[0], dz[0]], expected, rtol=1e-15)

    def test_per_node_conservation(self, two_city_model):
        state = sd.NetworkState.seeded(0.2)
        dx, dy, dz = sd.network_rhs(state, two_city_model)
        np.testing.assert_allclose(dx + dy + dz, 0.0, atol=1e-16)
        assert np.all(dx <= 0.0) and np.all(dz >= 0.0)


class TestSpectralRadius:
    def test_all_ones(self):
        rep = sd.spectral_radius(np.ones(2), np.ones((2, 2)))
        assert rep.lambda_max == pytest.approx(2.0, abs=1e-12)
        np.testing.assert_allclose(rep.v, [0.5, 0.5], atol=1e-12)

    def test_half_susceptible(self):
        rep = sd.spectral_radius(np.array([0.5, 1.0]), np.ones((2, 2)))
        assert rep.lambda_max == pytest.approx(1.5, abs=1e-12)

    def test_zero_susceptibles(self):
        rep = sd.spectral_radius(np.zeros(2), np.ones((2, 2)))
        assert rep.lambda_max == 0.0 and rep.R == 0.0

    def test_report_invariants(self):
        rep = sd.spectral_radius(np.array([0.7, 0.3]), np.ones((2, 2)), beta=2.0, gamma=0.5)
        assert rep.v.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(rep.v >= 0.0)
        assert rep.R == pytest.approx((2.0 / 0.5) * rep.lambda_max, rel=1e-15)
        assert rep.iterations >= 1

    def test_eigen_residual(self):
        rng = np.random.default_rng(7)
        A = rng.uniform(0.1, 1.5, (3, 3))
        x = rng.uniform(0.1, 1.0, 3)
        rep = sd.spectral_radius(x, A)
        M = x[:, None] * A
        residual = np.max(np.abs(M @ rep.v - rep.lambda_max * rep.v))
        assert residual <= 1e-10 * rep.lambda_max

    def test_hundred_random_against_closed_form(self):
        rng = np.random.default_rng(20240915)
        worst = 0.0
        for _ in range(100):
            A = rng.uniform(0.05, 2.0, (2, 2))
            x = rng.uniform(0.0, 1.0, 2)
            worst = max(
                worst, abs(sd.spectral_radius(x, A).lambda_max - closed_form_2x2(x, A))
            )
        assert worst <= 1e-10

    def test_rank_one_identity(self):
        """For all-ones coupling the radius is exactly the sum of x."""
        rng = np.random.default_rng(3)
        for n in (2, 3, 5):
            x = rng.uniform(0.0, 1.0, n)
            rep = sd.spectral_radius(x, np.ones((n, n)))
            assert abs(rep.lambda_max - x.sum()) <= 1e-12

    def test_defective_tie_raises_then_charpoly_covers(self):
        """A defective dominant block stalls power iteration; the dense
        fallback still returns the radius."""
        A = np.array([[2.0, 1.0], [1e-300, 2.0]])
        x = np.ones(2)
        with pytest.raises(sd.SpectralIterationError):
            sd.spectral_radius(x, A, max_iter=3000)
        assert sd.charpoly_radius(x, A) == pytest.approx(2.0, abs=1e-9)

    def test_charpoly_three_nodes(self):
        rng = np.random.default_rng(11)
        A = rng.uniform(0.1, 1.0, (3, 3))
        x = rng.uniform(0.1, 1.0, 3)
        assert sd.charpoly_radius(x, A) == pytest.approx(
            sd.spectral_radius(x, A).lambda_max, abs=1e-9
        )

    def test_rejects_negative_input(self):
        with pytest.raises(ValueError):
            sd.spectral_radius(np.array([-0.1, 1.0]), np.ones((2, 2)))


class TestNetworkR:
    def test_single_node_matches_scalar(self):
        model = sd.NetworkModel(sd.ContactGraph(np.array([[2.0]])), beta=1.0, gamma=0.4)
        state = sd.NetworkState(np.array([0.99]), np.array([0.01]), np.array([0.0]))
        assert sd.network_R(state, model) == pytest.approx(4.95, abs=1e-12)

    def test_zero_state(self, two_city_model):
        state = sd.NetworkState(np.zeros(2), np.zeros(2), np.ones(2))
        assert sd.network_R(state, two_city_model) == 0.0

    def test_seeded_rank_one(self, two_city_model):
        state = sd.NetworkState.seeded(EPS)
        assert sd.network_R(state, two_city_model) == pytest.approx(1.99, abs=1e-12)


class TestSimulateNetwork:
    def test_per_node_simplex(self, two_city_run):
        x, y, z = two_city_run.states[:, :2], two_city_run.states[:, 2:4], two_city_run.states[:, 4:]
        assert np.max(np.abs(x + y + z - 1.0)) <= 1e-9

    def test_susceptible_monotone_and_extinction(self, two_city_run):
        assert np.all(np.diff(two_city_run.states[:, 0]) <= 0.0)
        assert np.all(np.diff(two_city_run.states[:, 1]) <= 0.0)
        assert np.max(two_city_run.final_state[2:4]) <= 1e-8 + 1e-10

    def test_seeded_node_is_multimodal(self, two_city_run):
        found = sd.detect_multimodality(two_city_run, 0)
        assert found.n_peaks >= 2
        assert found.shape == "multimodal"

    def test_clean_node_single_peak(self, two_city_run):
        assert sd.detect_multimodality(two_city_run, 1).n_peaks == 1

    def test_aggregate_single_peak(self, two_city_run):
        total = two_city_run.states[:, 2] + two_city_run.states[:, 3]
        assert classify_series(two_city_run.times, total).shape == "single-peak"

    def test_aggregate_peak_values(self, two_city_run):
        """At the x1+x2=1 crossing the closed forms give ybar and x2."""
        hit = two_city_run.first_event("aggregate-peak")
        ybar = hit.state[2] + hit.state[3]
        assert ybar == pytest.approx(YBAR_AT_AGGREGATE_PEAK, abs=1e-3)
        assert hit.state[1] == pytest.approx(X2_AT_AGGREGATE_PEAK, abs=1e-3)

    def test_single_node_matches_scalar_pointwise(self):
        model = sd.NetworkModel(sd.ContactGraph(np.array([[2.0]])), beta=1.0, gamma=0.4)
        initial = sd.NetworkState(np.array([0.99]), np.array([0.01]), np.array([0.0]))
        net = sd.simulate_network(model, initial, 100.0)
        scalar = sd.simulate_scalar(
            sd.ScalarModel(sd.RateFunction.constant(2.0), 0.4), 0.99, 0.01, 100.0
        )
        assert np.array_equal(net.times, scalar.times)
        assert np.max(np.abs(net.states - scalar.states)) <= 1e-9

    def test_R_monotone_along_runs(self, two_city_model, two_city_run):
        """R(t) never rises by more than the per-step slack on connected graphs."""
        series = sd.reproduction_series(two_city_model, two_city_run)
        assert np.max(np.diff(series)) <= 1e-9
        rng = np.random.default_rng(5)
        A = rng.uniform(0.2, 1.0, (3, 3))
        model = sd.NetworkModel(sd.ContactGraph(A), beta=1.5, gamma=0.8)
        run = sd.simulate_network(model, sd.NetworkState.seeded(0.02, n=3), 100.0)
        series = sd.reproduction_series(model, run)
        assert np.max(np.diff(series)) <= 1e-9

    def test_size_mismatch_rejected(self, two_city_model):
        with pytest.raises(ValueError):
            sd.simulate_network(two_city_model, sd.NetworkState.seeded(0.01, n=3), 10.0)


class TestAggregateInvariants:
    def test_drifts_small(self, two_city_model, two_city_run):
        drift = sd.aggregate_invariants(two_city_model, two_city_run)
        assert drift.motion_drift <= 1e-6
        assert drift.ratio_drift <= 1e-6

    def test_second_seed_point(self, two_city_model):
        run = sd.simulate_network(two_city_model, sd.NetworkState.seeded(0.1), 100.0)
        drift = sd.aggregate_invariants(two_city_model, run)
        assert drift.motion_drift <= 1e-6
        assert drift.ratio_drift <= 1e-6

    def test_setup_mismatch_rejected(self, two_city_run):
        wrong = sd.NetworkModel(sd.ContactGraph(np.ones((2, 2))), beta=2.0, gamma=1.0)
        with pytest.raises(ValueError, match="rank-one"):
            sd.aggregate_invariants(wrong, two_city_run)


class TestBimodalityThreshold:
    def test_value(self):
        assert sd.bimodality_threshold() == pytest.approx(0.1809, abs=1e-3)

    def test_fixed_point_residual(self):
        e = sd.bimodality_threshold()
        h = (1.0 - e) * (1.0 - math.log(2.0 - e)) / (2.0 - e)
        assert abs(e - h) <= 1e-12

    def test_fixed_point_iteration_agrees(self):
        """Iterating the map from 0.1 converges to the bisection root."""
        e = 0.1
        for _ in range(200):
            e = (1.0 - e) * (1.0 - math.log(2.0 - e)) / (2.0 - e)
        assert abs(e - sd.bimodality_threshold()) <= 1e-12

    def test_bracket_signs(self):
        gap = lambda e: e - (1.0 - e) * (1.0 - math.log(2.0 - e)) / (2.0 - e)
        assert gap(0.0) == pytest.approx(-(1.0 - math.log(2.0)) / 2.0, abs=1e-15)
        assert gap(1.0) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("eps", [0.005, 0.05, 0.1, 0.17])
    def test_below_threshold_seeds_stay_bimodal(self, eps, two_city_model):
        traj = sd.simulate_network(two_city_model, sd.NetworkState.seeded(eps), 100.0)
        assert sd.detect_multimodality(traj, 0).n_peaks >= 2


class TestPerturbationSweep:
    def test_zero_radii_reproduce_base_case(self):
        cells = sd.perturbation_sweep(eps_values=(EPS,), horizon=100.0)
        assert len(cells) == 1
        assert cells[0].multimodal and cells[0].n_peaks >= 2
        assert sd.fraction_multimodal(cells) == 1.0

    def test_tiny_perturbations_keep_double_peak(self):
        """Every cell in a +-0.2% neighborhood keeps the double peak."""
        cells = sd.perturbation_sweep(
            beta_radius=0.002, gamma_radius=0.002, weight_radius=0.002, eps_values=(EPS,)
        )
        assert len(cells) == 27
        assert sd.fraction_multimodal(cells) == 1.0

    def test_two_percent_grid_measured_persistence(self):
        """At +-2% the dip survives in exactly the cells with
        (1-eps)*beta*A11 < gamma; the initial descent of the seeded node
        needs its self-contact inflow to stay below its recovery outflow,
        so the persistence region is narrow in that direction."""
        cells = sd.perturbation_sweep(
            beta_radius=0.02, gamma_radius=0.02, weight_radius=0.02, eps_values=(EPS,)
        )
        assert len(cells) == 27
        for c in cells:
            dips = (1.0 - c.eps) * c.beta * (1.0 + c.weight_delta) < c.gamma
            assert c.multimodal == dips
        assert sd.fraction_multimodal(cells) == pytest.approx(17 / 27)

    def test_large_seed_recorded_without_assertion(self):
        cells = sd.perturbation_sweep(eps_values=(0.5,))
        assert len(cells) == 1  # outcome recorded; no bimodality requirement

    def test_radius_cap(self):
        with pytest.raises(ValueError):
            sd.perturbation_sweep(beta_radius=0.5)

    def test_fraction_of_empty(self):
        assert sd.fraction_multimodal([]) == 0.0
