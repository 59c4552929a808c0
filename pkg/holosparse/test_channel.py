import json
import math

import numpy as np
import pytest

from holosparse.channel import (
    ChannelInstance,
    apply_coupling,
    point_response,
    realize_channel,
    sample_wavenumber_channel,
    spatial_entry_oracle,
    synthesize_spatial,
)
from holosparse.errors import InvalidParameterError
from holosparse.geometry import BasisCache, BasisKind, SystemConfig, UpaGeometry, antenna_position, grid_for
from holosparse.rng import complex_normal
from holosparse.scattering import Side, VarianceVector, sample_profile, variance_vector
from holosparse.validate import check_statistical_law
from holosparse.vec3 import Vec3

K = 2 * math.pi


@pytest.fixture
def desk_variances(desk_receive, desk_transmit):
    profile = sample_profile(2, 140.0, 5)
    return (
        variance_vector(profile, grid_for(desk_receive, 1.0), K),
        variance_vector(profile, grid_for(desk_transmit, 1.0), K),
    )


class TestWavenumberChannel:
    def test_deterministic_per_seed(self, desk_variances):
        a = sample_wavenumber_channel(*desk_variances, 42)
        b = sample_wavenumber_channel(*desk_variances, 42)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, sample_wavenumber_channel(*desk_variances, 43))

    def test_zero_variance_row(self, desk_variances):
        sigma_r, sigma_s = desk_variances
        values = sigma_r.values.copy()
        values[3] = 0.0
        H_a = sample_wavenumber_channel(VarianceVector(values, sigma_r.grid), sigma_s, 1)
        assert np.all(H_a[3] == 0)
        assert np.all(H_a[np.flatnonzero(values)] != 0)

    def test_zero_mean(self, desk_variances):
        mean = sum(sample_wavenumber_channel(*desk_variances, seed) for seed in range(2000)) / 2000
        sigma = np.sqrt(np.outer(*(v.values for v in desk_variances)))
        assert np.all(np.abs(mean) < 5 * sigma / math.sqrt(2000) + 1e-15)

    @pytest.mark.slow
    def test_entry_variances_follow_product_law(self):
        check_statistical_law()


class TestSynthesis:
    def test_zero_in_zero_out(self, desk_bases):
        psi_r, psi_s = desk_bases
        H = synthesize_spatial(psi_r, np.zeros((psi_r.n_atoms, psi_s.n_atoms)), psi_s)
        assert H.shape == (289, 25)
        assert np.all(H == 0)

    def test_single_entry_is_rank_one(self, desk_bases):
        psi_r, psi_s = desk_bases
        H_a = np.zeros((psi_r.n_atoms, psi_s.n_atoms), dtype=complex)
        H_a[7, 2] = 1.0
        H = synthesize_spatial(psi_r, H_a, psi_s)
        np.testing.assert_allclose(H, np.outer(psi_r.matrix[:, 7], psi_s.matrix[:, 2].conj()), atol=1e-14)
        assert np.linalg.norm(H) == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.matrix_rank(H) == 1

    def test_energy_preserved(self, desk_bases, rng):
        psi_r, psi_s = desk_bases
        H_a = complex_normal(rng, (psi_r.n_atoms, psi_s.n_atoms))
        assert np.linalg.norm(synthesize_spatial(psi_r, H_a, psi_s)) == pytest.approx(np.linalg.norm(H_a), abs=1e-9)

    def test_shape_mismatch(self, desk_bases):
        psi_r, psi_s = desk_bases
        with pytest.raises(InvalidParameterError):
            synthesize_spatial(psi_r, np.zeros((3, 3)), psi_s)


class TestSpatialOracle:
    def test_matches_synthesis_on_three_by_three(self, rng):
        geom = UpaGeometry(3, 3, 0.25)
        grid = grid_for(geom, 1.0)
        psi = BasisCache.get(geom, BasisKind.WAVENUMBER, 1.0)
        for _ in range(20):
            H_a = complex_normal(rng, (grid.cardinality, grid.cardinality))
            H = synthesize_spatial(psi, H_a, psi) * geom.n_elements
            for r in range(1, 10):
                for s in range(1, 10):
                    assert spatial_entry_oracle((geom, geom), (grid, grid), H_a, r, s) == pytest.approx(H[r - 1, s - 1], abs=1e-10)

    def test_matches_synthesis_with_nontrivial_lattices(self, rng, desk_transmit):
        receive = UpaGeometry(7, 5, 0.25)
        grids = (grid_for(receive, 1.0), grid_for(desk_transmit, 1.0))
        psi_r = BasisCache.get(receive, BasisKind.WAVENUMBER, 1.0)
        psi_s = BasisCache.get(desk_transmit, BasisKind.WAVENUMBER, 1.0)
        H_a = complex_normal(rng, (grids[0].cardinality, grids[1].cardinality))
        H = synthesize_spatial(psi_r, H_a, psi_s) * math.sqrt(receive.n_elements * desk_transmit.n_elements)
        for r, s in [(1, 1), (5, 13), (35, 25), (18, 7)]:
            expected = spatial_entry_oracle((receive, desk_transmit), grids, H_a, r, s)
            assert expected == pytest.approx(H[r - 1, s - 1], abs=1e-10)

    def test_zero_and_unit(self, desk_transmit):
        grid = grid_for(desk_transmit, 1.0)
        zero = np.zeros((grid.cardinality, grid.cardinality))
        assert spatial_entry_oracle((desk_transmit, desk_transmit), (grid, grid), zero, 4, 9) == 0
        unit = zero.astype(complex)
        unit[grid.column_of(0, 0), grid.column_of(0, 0)] = 1.0
        assert spatial_entry_oracle((desk_transmit, desk_transmit), (grid, grid), unit, 4, 9) == pytest.approx(1.0)


class TestPointResponse:
    def test_in_plane_elements_match_oracle(self, rng, desk_transmit):
        grid = grid_for(desk_transmit, 1.0)
        H_a = complex_normal(rng, (grid.cardinality, grid.cardinality))
        for r, s in [(1, 1), (7, 19), (25, 3)]:
            value = point_response(
                H_a, grid, grid, antenna_position(desk_transmit, r), antenna_position(desk_transmit, s)
            )
            expected = spatial_entry_oracle((desk_transmit, desk_transmit), (grid, grid), H_a, r, s)
            assert value == pytest.approx(expected, abs=1e-10)

    def test_receiver_offset_is_a_row_phase_rotation(self, rng, desk_transmit):
        offset = Vec3(3.0, -1.5, 40.0)
        receive = UpaGeometry(5, 5, 0.25, offset)
        grid = grid_for(desk_transmit, 1.0)
        H_a = complex_normal(rng, (grid.cardinality, grid.cardinality))
        rotation = np.exp(1j * (grid.k_x * offset.x + grid.k_y * offset.y + grid.k_z * offset.z))
        rotated = rotation[:, None] * H_a
        for r, s in [(1, 1), (12, 20), (25, 8)]:
            value = point_response(
                H_a, grid, grid, antenna_position(receive, r), antenna_position(desk_transmit, s)
            )
            expected = spatial_entry_oracle((receive, desk_transmit), (grid, grid), rotated, r, s)
            assert value == pytest.approx(expected, abs=1e-9)


class TestCoupling:
    def test_identity(self, rng):
        H = complex_normal(rng, (6, 4))
        np.testing.assert_array_equal(apply_coupling(H), H)
        np.testing.assert_allclose(apply_coupling(H, np.eye(6), np.eye(4)), H)

    def test_scaling(self, rng):
        H = complex_normal(rng, (6, 4))
        np.testing.assert_allclose(apply_coupling(H, 2 * np.eye(6)), 2 * H)

    def test_unit_modulus_diagonal_preserves_norm(self, rng):
        H = complex_normal(rng, (6, 4))
        M_R = np.diag(np.exp(1j * rng.uniform(0, 2 * math.pi, 6)))
        M_S = np.diag(np.exp(1j * rng.uniform(0, 2 * math.pi, 4)))
        assert np.linalg.norm(apply_coupling(H, M_R, M_S)) == pytest.approx(np.linalg.norm(H))

    def test_mismatch(self, rng):
        with pytest.raises(InvalidParameterError):
            apply_coupling(complex_normal(rng, (6, 4)), np.eye(4))


class TestRealizeChannel:
    def test_spatial_matches_wavenumber(self):
        receive_profile = sample_profile(2, 140.0, 1)
        transmit_profile = sample_profile(2, 140.0, 2, Side.TRANSMIT)
        system = SystemConfig(30e9)
        wavelength = system.wavelength
        receive = UpaGeometry(17, 17, 0.25 * wavelength)
        transmit = UpaGeometry(5, 5, 0.25 * wavelength)
        instance, sigma_r, sigma_s = realize_channel(receive, transmit, receive_profile, transmit_profile, system, 11)
        psi_r = BasisCache.get(receive, BasisKind.WAVENUMBER, wavelength)
        psi_s = BasisCache.get(transmit, BasisKind.WAVENUMBER, wavelength)
        np.testing.assert_allclose(instance.H, psi_r.matrix @ instance.H_a @ psi_s.matrix.conj().T, atol=1e-10)
        assert instance.H_a.shape == (sigma_r.values.size, sigma_s.values.size)
        assert np.linalg.norm(instance.H) == pytest.approx(np.linalg.norm(instance.H_a), abs=1e-9)
        assert instance.seed == 11
        assert instance.receive_profile.side is Side.RECEIVE
        assert instance.transmit_profile.side is Side.TRANSMIT

    def test_export_and_load(self, tmp_path):
        system = SystemConfig(30e9)
        wavelength = system.wavelength
        receive = UpaGeometry(5, 5, 0.25 * wavelength, Vec3(0.1, 0.0, 2.0))
        transmit = UpaGeometry(3, 3, 0.25 * wavelength)
        instance, _, _ = realize_channel(
            receive, transmit, sample_profile(2, 140.0, 3), sample_profile(1, 50.0, 4), system, 5
        )
        paths = instance.export(tmp_path / "trial0")
        assert [p.name for p in paths] == ["trial0.json", "trial0_wavenumber.csv", "trial0_spatial.csv"]
        header = json.loads(paths[0].read_text())
        assert header["wavenumber_shape"] == list(instance.H_a.shape)
        assert header["spatial_shape"] == [25, 9]
        loaded = ChannelInstance.load(tmp_path / "trial0")
        np.testing.assert_array_equal(loaded.H_a, instance.H_a)
        np.testing.assert_array_equal(loaded.H, instance.H)
        assert loaded.receive_geometry == receive
        assert loaded.seed == 5
        assert loaded.transmit_profile.n_clusters == 1
