"""Tests for support detection, SD, OMP and SMD channel estimation."""

import numpy as np
import pytest

from components.analysis import empirical_power_ratio
from components.channel import BeamspaceChannel, offgrid_component
from components.estimators import (SingularSystemError, SupportSet, detect_peak, detect_support,
                                   least_squares, nmse, omp_estimate, peak_statistic, perfect_estimate,
                                   sd_estimate, smd_estimate)
from components.measurement import generate_combiner, hadamard_combiner


def _spikes(rng, N, positions):
    """Equal-magnitude spikes with random phases at 0-based positions."""
    h = np.zeros(N, dtype=complex)
    h[positions] = np.exp(2j * np.pi * rng.uniform(size=len(positions)))
    return h


class TestSupportSet:
    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="duplicate"):
            SupportSet((1, 2, 2), 8)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            SupportSet((0, 1), 8)

    def test_union_is_sorted_set(self):
        merged = SupportSet((5, 6, 7), 8).union(SupportSet((7, 8, 1), 8))
        assert merged.indices == (1, 5, 6, 7, 8)
        assert 6 in merged and len(merged) == 5


class TestDetectSupport:
    def test_even_window(self):
        assert detect_support(128, 8, 256).indices == tuple(range(124, 132))

    def test_even_window_wraps(self):
        assert detect_support(2, 8, 256).indices == (254, 255, 256, 1, 2, 3, 4, 5)

    def test_odd_window_wraps(self):
        assert detect_support(1, 3, 8).indices == (8, 1, 2)

    @pytest.mark.parametrize("n_star", [1, 5, 16])
    @pytest.mark.parametrize("V", [1, 2, 5, 16])
    def test_cardinality_and_range(self, n_star, V):
        window = detect_support(n_star, V, 16)
        assert len(window) == V
        assert all(1 <= n <= 16 for n in window)
        assert n_star in window

    def test_rejects_window_wider_than_grid(self):
        with pytest.raises(ValueError, match="exceeds"):
            detect_support(1, 9, 8)


class TestPeakDetection:
    def test_statistic_matches_column_scan(self, rng):
        W = generate_combiner(16, 32, rng)
        z = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        brute = [abs(np.vdot(W.column(n), z)) for n in range(1, 33)]
        np.testing.assert_allclose(peak_statistic(z, W), brute)

    def test_lowest_index_wins_ties(self):
        W = np.eye(4)
        assert detect_peak(np.array([0.0, 2.0, 2.0, 1.0]), W) == 2


class TestLeastSquares:
    def test_exact_system(self, rng):
        A = rng.standard_normal((10, 3)) + 1j * rng.standard_normal((10, 3))
        x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        np.testing.assert_allclose(least_squares(A, A @ x), x, atol=1e-10)

    def test_underdetermined(self):
        with pytest.raises(SingularSystemError, match="unknowns"):
            least_squares(np.ones((2, 3)), np.ones(2))

    def test_rank_deficient(self):
        A = np.ones((4, 2))
        with pytest.raises(SingularSystemError, match="singular"):
            least_squares(A, np.ones(4))

    def test_all_zero_matrix(self):
        with pytest.raises(SingularSystemError, match="singular"):
            least_squares(np.zeros((4, 2)), np.ones(4))


class TestSDEstimate:
    def test_single_on_grid_path(self, rng):
        N, Q = 64, 32
        h = np.zeros(N, dtype=complex)
        h[10] = 3 - 2j
        W = generate_combiner(Q, N, rng)
        estimate = sd_estimate(W.matrix @ h, W, L=0, V=4)
        np.testing.assert_allclose(estimate.vector, h, atol=1e-8)
        assert estimate.per_component_peaks == [11]

    def test_on_grid_los_exact(self):
        N, Q, V = 256, 96, 8
        hits = 0
        for trial in range(100):
            rng = np.random.default_rng(trial)
            h = offgrid_component(N, int(rng.integers(1, N + 1)), 0.0, gain=complex(rng.standard_normal(), 1.0))
            W = generate_combiner(Q, N, rng)
            hits += nmse(sd_estimate(W.matrix @ h, W, L=0, V=V).vector, h) < 1e-10
        assert hits == 100

    def test_distinct_grid_paths_recovered(self):
        N, Q, V, L = 256, 96, 8, 2
        successes = 0
        for trial in range(200):
            rng = np.random.default_rng(1000 + trial)
            h = _spikes(rng, N, rng.choice(N, size=L + 1, replace=False))
            W = generate_combiner(Q, N, rng)
            successes += nmse(sd_estimate(W.matrix @ h, W, L=L, V=V).vector, h) < 1e-6
        assert successes / 200 >= 0.99

    def test_offgrid_error_within_tail(self, rng):
        N, Q, V = 256, 96, 8
        h = offgrid_component(N, 77, 1 / (4 * N), gain=1.5)
        W = generate_combiner(Q, N, rng)
        error = nmse(sd_estimate(W.matrix @ h, W, L=0, V=V).vector, h)
        assert error >= 1 - empirical_power_ratio(h, V) - 1e-12
        assert error <= 0.051

    def test_support_is_union_of_windows(self, rng):
        N, Q = 64, 48
        h = _spikes(rng, N, [5, 30])
        W = generate_combiner(Q, N, rng)
        estimate = sd_estimate(W.matrix @ h, W, L=1, V=4)
        union = set().union(*(set(window) for window in estimate.component_supports))
        assert set(estimate.support) == union
        assert np.all(estimate.vector[[n for n in range(N) if n + 1 not in union]] == 0)
        assert len(estimate.support) <= 4 * 2

    def test_overlapping_components(self):
        N, V = 64, 4
        h = offgrid_component(N, 20, 0.2 / N) + offgrid_component(N, 20, 0.2 / N, gain=0.5j)
        W = hadamard_combiner(N)
        estimate = sd_estimate(W.matrix @ h, W, L=1, V=V)
        assert len(estimate.support) < 2 * V

    def test_final_estimate_is_ls_on_support(self, rng):
        N, Q = 64, 32
        h = _spikes(rng, N, [3, 40, 41])
        W = generate_combiner(Q, N, rng)
        z = W.matrix @ h + 0.05 * (rng.standard_normal(Q) + 1j * rng.standard_normal(Q))
        estimate = sd_estimate(z, W, L=2, V=4)
        cols = estimate.support.zero_based()
        A = W.matrix[:, cols]
        normal = np.linalg.solve(A.conj().T @ A, A.conj().T @ z)
        np.testing.assert_allclose(estimate.vector[cols], normal, atol=1e-9)

    def test_rejects_oversized_windows(self, rng):
        W = generate_combiner(16, 16, rng)
        with pytest.raises(ValueError, match="exceeds"):
            sd_estimate(np.zeros(16), W, L=2, V=8)

    def test_window_larger_than_q(self, rng):
        N, Q = 64, 4
        h = _spikes(rng, N, [2, 30, 50])
        W = generate_combiner(Q, N, rng)
        with pytest.raises(SingularSystemError):
            sd_estimate(W.matrix @ h, W, L=2, V=8)


class TestOMPEstimate:
    def test_one_sparse(self, rng):
        N, Q = 64, 16
        h = np.zeros(N, dtype=complex)
        h[33] = -1 + 1j
        W = generate_combiner(Q, N, rng)
        np.testing.assert_allclose(omp_estimate(W.matrix @ h, W, 1).vector, h, atol=1e-10)

    def test_zero_sparsity(self, rng):
        W = generate_combiner(8, 16, rng)
        estimate = omp_estimate(np.ones(8), W, 0)
        assert not estimate.vector.any()
        assert len(estimate.support) == 0

    def test_four_sparse_recovery_rate(self):
        N, Q, s = 128, 64, 4
        successes = 0
        for trial in range(500):
            rng = np.random.default_rng(5000 + trial)
            h = np.zeros(N, dtype=complex)
            h[rng.choice(N, size=s, replace=False)] = rng.standard_normal(s) + 1j * rng.standard_normal(s)
            W = generate_combiner(Q, N, rng)
            successes += nmse(omp_estimate(W.matrix @ h, W, s).vector, h) < 1e-10
        assert successes / 500 > 0.99

    def test_selects_distinct_atoms(self, rng):
        W = generate_combiner(32, 64, rng)
        z = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        estimate = omp_estimate(z, W, 12)
        assert len(set(estimate.per_component_peaks)) == 12

    def test_rejects_sparsity_above_q(self, rng):
        with pytest.raises(ValueError, match="exceeds"):
            omp_estimate(np.ones(4), generate_combiner(4, 16, rng), 5)


class TestSMDEstimate:
    def test_full_mask_is_exact(self, rng):
        h = BeamspaceChannel(vector=offgrid_component(32, 9, 0.013))
        np.testing.assert_allclose(smd_estimate(h, 0.0, 32, rng).vector, h.vector)

    def test_error_is_discarded_energy(self, rng):
        vector = offgrid_component(256, 100, 0.4 / 256)
        keep = 24
        error = nmse(smd_estimate(BeamspaceChannel(vector=vector), 0.0, keep, rng).vector, vector)
        assert error == pytest.approx(1 - empirical_power_ratio(vector, keep), rel=1e-10)

    def test_deterministic_under_seed(self):
        h = BeamspaceChannel(vector=offgrid_component(64, 9, 0.1 / 64))
        a = smd_estimate(h, 0.1, 12, np.random.default_rng(4))
        b = smd_estimate(h, 0.1, 12, np.random.default_rng(4))
        np.testing.assert_array_equal(a.vector, b.vector)
        assert a.support == b.support

    def test_rejects_bad_keep(self, rng):
        with pytest.raises(ValueError, match="keep"):
            smd_estimate(BeamspaceChannel(vector=np.ones(8, dtype=complex)), 0.0, 9, rng)


class TestNMSE:
    def test_reference_values(self, rng):
        h = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        assert nmse(np.zeros(16), h) == pytest.approx(1.0)
        assert nmse(h, h) == 0.0
        assert nmse(2 * h, h) == pytest.approx(1.0)

    def test_zero_truth(self):
        with pytest.raises(ValueError, match="zero-norm"):
            nmse(np.ones(4), np.zeros(4))

    def test_perfect_estimate(self, rng):
        h = BeamspaceChannel(vector=offgrid_component(32, 4, 0.01))
        assert nmse(perfect_estimate(h).vector, h.vector) == 0.0
