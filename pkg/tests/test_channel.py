"""Tests for steering vectors, the lens transform and channel generation."""

import numpy as np
import pytest

from components.channel import (ChannelGenConfig, DimensionError, PathComponent, PathKind,
                                assemble_channel, build_beamspace_transform, complex_normal,
                                component_closed_form, dirichlet_kernel, generate_spatial_channel,
                                generate_user_channels, grid_directions, offgrid_component,
                                steering_vector, to_beamspace)


class TestSteeringVector:
    def test_broadside_is_flat(self):
        np.testing.assert_allclose(steering_vector(0.0, 4), 0.5 * np.ones(4))

    def test_unit_norm(self):
        assert np.linalg.norm(steering_vector(0.3, 64)) == pytest.approx(1.0, abs=1e-12)

    def test_grid_directions_are_orthogonal(self):
        dirs = grid_directions(16)
        inner = np.vdot(steering_vector(dirs[0], 16), steering_vector(dirs[1], 16))
        assert abs(inner) < 1e-12

    def test_rejects_zero_antennas(self):
        with pytest.raises(ValueError, match="antennas"):
            steering_vector(0.1, 0)


class TestDirichletKernel:
    def test_limit_at_zero(self):
        assert dirichlet_kernel(0.0, 256) == pytest.approx(1.0)

    def test_half_beam_offset(self):
        N = 256
        expected = 1.0 / (N * np.sin(np.pi / (2 * N)))
        assert dirichlet_kernel(1 / (2 * N), N) == pytest.approx(expected, rel=1e-12)

    def test_zero_at_neighbouring_grid_point(self):
        assert abs(dirichlet_kernel(1 / 16, 16)) < 1e-12

    def test_sign_at_integer_argument(self):
        # (-1)^(x (N - 1)): even N flips sign at x = 1
        assert dirichlet_kernel(1.0, 16) == pytest.approx(-1.0)
        assert dirichlet_kernel(1.0, 15) == pytest.approx(1.0)

    def test_array_input(self):
        x = np.array([0.0, 0.01, 0.25])
        values = dirichlet_kernel(x, 32)
        assert values.shape == (3,)
        assert values[0] == pytest.approx(1.0)
        assert values[1] == pytest.approx(np.sin(32 * np.pi * 0.01) / (32 * np.sin(np.pi * 0.01)))


class TestBeamspaceTransform:
    @pytest.mark.parametrize("N", [4, 16, 64, 256])
    def test_unitary(self, N):
        U = build_beamspace_transform(N).matrix
        assert np.linalg.norm(U @ U.conj().T - np.eye(N)) < 1e-9

    def test_grid_for_four_antennas(self):
        np.testing.assert_allclose(grid_directions(4), [-3 / 8, -1 / 8, 1 / 8, 3 / 8])

    def test_rows_are_conjugate_steering_vectors(self):
        T = build_beamspace_transform(8)
        for n, psi in enumerate(T.grid_directions):
            np.testing.assert_allclose(T.matrix[n], steering_vector(psi, 8).conj(), atol=1e-12)

    def test_on_grid_direction_maps_to_single_beam(self):
        N = 16
        T = build_beamspace_transform(N)
        paths = [PathComponent(1.0, float(grid_directions(N)[2]), PathKind.LOS)]
        beamspace = to_beamspace(assemble_channel(paths, N), T)
        expected = np.zeros(N)
        expected[2] = np.sqrt(N)
        np.testing.assert_allclose(beamspace.vector, expected, atol=1e-12)
        assert beamspace.strongest_beam() == 3


class TestChannelGeneration:
    def test_deterministic_under_seed(self):
        cfg = ChannelGenConfig(num_antennas=256, num_nlos=2)
        a = generate_spatial_channel(cfg, np.random.default_rng(11))
        b = generate_spatial_channel(cfg, np.random.default_rng(11))
        np.testing.assert_array_equal(a.vector, b.vector)
        assert a.paths == b.paths

    def test_path_structure(self, rng):
        h = generate_spatial_channel(ChannelGenConfig(num_antennas=64, num_nlos=2), rng)
        assert len(h.paths) == 3
        assert h.num_nlos == 2
        assert h.paths[0].kind == PathKind.LOS
        assert all(p.kind == PathKind.NLOS for p in h.paths[1:])
        assert all(-0.5 <= p.spatial_direction < 0.5 for p in h.paths)

    def test_los_only_channel(self, rng):
        N = 256
        h = generate_spatial_channel(ChannelGenConfig(num_antennas=N, num_nlos=0), rng)
        path = h.paths[0]
        expected = np.sqrt(N) * path.gain * steering_vector(path.spatial_direction, N)
        np.testing.assert_allclose(h.vector, expected, atol=1e-12)

    def test_vector_is_scaled_component_sum(self, rng):
        N = 64
        h = generate_spatial_channel(ChannelGenConfig(num_antennas=N, num_nlos=2), rng)
        beamspace = to_beamspace(h, build_beamspace_transform(N))
        np.testing.assert_allclose(beamspace.vector, np.sqrt(N / 3) * sum(beamspace.components), atol=1e-10)

    def test_parseval(self, rng):
        T = build_beamspace_transform(64)
        for h in generate_user_channels(ChannelGenConfig(num_antennas=64), 200, rng):
            beamspace = to_beamspace(h, T)
            assert np.linalg.norm(beamspace.vector) == pytest.approx(np.linalg.norm(h.vector), rel=1e-10)

    def test_component_closed_form(self, rng):
        N = 128
        h = generate_spatial_channel(ChannelGenConfig(num_antennas=N, num_nlos=2), rng)
        beamspace = to_beamspace(h, build_beamspace_transform(N))
        for path, component in zip(h.paths, beamspace.components):
            np.testing.assert_allclose(component, component_closed_form(path.gain, path.spatial_direction, N),
                                       atol=1e-10)

    def test_gain_variance(self, rng):
        gains = complex_normal(rng, 1.0, 100_000)
        assert np.mean(np.abs(gains) ** 2) == pytest.approx(1.0, abs=0.02)

    def test_rejects_negative_nlos(self, rng):
        with pytest.raises(ValueError, match="num_nlos"):
            generate_spatial_channel(ChannelGenConfig(num_nlos=-1), rng)

    def test_rejects_direction_at_aliasing_point(self):
        with pytest.raises(ValueError, match="outside"):
            PathComponent(1.0, 0.5)

    def test_needs_los_first(self):
        with pytest.raises(ValueError, match="LoS"):
            assemble_channel([PathComponent(1.0, 0.1, PathKind.NLOS)], 8)

    def test_dimension_mismatch(self, rng):
        h = generate_spatial_channel(ChannelGenConfig(num_antennas=32), rng)
        with pytest.raises(DimensionError):
            to_beamspace(h, build_beamspace_transform(16))


class TestOffgridComponent:
    def test_on_grid_is_one_hot(self):
        c = offgrid_component(32, 5, 0.0, gain=2.0)
        expected = np.zeros(32)
        expected[4] = 2.0
        np.testing.assert_allclose(c, expected, atol=1e-12)

    def test_half_beam_offset_has_two_equal_peaks(self):
        N = 256
        power = np.sort(np.abs(offgrid_component(N, 100, 1 / (2 * N))) ** 2)[::-1]
        assert power[0] == pytest.approx(power[1], rel=1e-10)
        assert power[2] < power[1]

    def test_rejects_bad_index(self):
        with pytest.raises(ValueError, match="grid index"):
            offgrid_component(16, 17, 0.0)
