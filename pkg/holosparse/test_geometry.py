import math

import numpy as np
import pytest

from holosparse.errors import EvanescentWaveError, InvalidParameterError
from holosparse.geometry import (
    BasisCache,
    BasisKind,
    SystemConfig,
    UpaGeometry,
    antenna_position,
    build_ad_basis,
    build_wd_basis,
    enumerate_wavenumber_set,
    fourier_harmonic,
    grid_for,
    kz,
    nearest_odd,
    rayleigh_distance,
    symmetric_range,
    unitary_dft,
)
from holosparse.vec3 import Vec3


class TestSystemConfig:
    def test_wavelength_at_30ghz(self):
        system = SystemConfig(30e9)
        assert system.wavelength == pytest.approx(0.00999308193, rel=1e-9)
        assert system.wavenumber * system.wavelength == pytest.approx(2 * math.pi, rel=1e-12)

    def test_rejects_non_positive_frequency(self):
        with pytest.raises(InvalidParameterError):
            SystemConfig(0.0)


class TestUpaGeometry:
    def test_symmetric_range(self):
        np.testing.assert_array_equal(symmetric_range(5), [-2, -1, 0, 1, 2])
        np.testing.assert_array_equal(symmetric_range(1), [0])

    def test_even_count_rejected(self):
        with pytest.raises(InvalidParameterError):
            UpaGeometry(4, 5, 0.25)
        with pytest.raises(ValueError):
            UpaGeometry(5, 0, 0.25)

    def test_aperture_is_count_times_spacing(self, desk_receive):
        assert desk_receive.aperture_x == pytest.approx(4.25)
        assert desk_receive.n_elements == 289

    def test_linear_index_round_trip(self):
        geom = UpaGeometry(3, 5, 0.5)
        seen = set()
        for n_x in symmetric_range(3):
            for n_y in symmetric_range(5):
                n = geom.linear_index(int(n_x), int(n_y))
                assert geom.decode(n) == (n_x, n_y)
                seen.add(n)
        assert seen == set(range(1, 16))
        assert geom.decode(1) == (-1, -2)

    def test_out_of_range_index(self):
        geom = UpaGeometry(3, 3, 0.5)
        with pytest.raises(InvalidParameterError):
            geom.decode(10)
        with pytest.raises(InvalidParameterError):
            geom.linear_index(2, 0)

    def test_element_indices_follow_linear_order(self):
        geom = UpaGeometry(3, 5, 0.5)
        ix, iy = geom.element_indices()
        for n in range(1, geom.n_elements + 1):
            assert (ix[n - 1], iy[n - 1]) == geom.decode(n)

    @pytest.mark.parametrize(
        "value, expected",
        [(8.0, 7), (9.0, 9), (10.0, 9), (7.9, 7), (8.1, 9), (32.0, 31), (32.5, 33), (130.0, 129), (2.0, 1), (0.3, 1)],
    )
    def test_nearest_odd(self, value, expected):
        assert nearest_odd(value) == expected

    def test_from_aperture(self):
        assert UpaGeometry.from_aperture(4.125, 4.125, 0.125).n_x == 33
        assert UpaGeometry.from_aperture(4.5, 1.5, 0.5).n_elements == 9 * 3
        assert UpaGeometry.from_aperture(16.25, 16.25, 0.25).n_x == 65

    @pytest.mark.parametrize("spacing", [0.5, 0.25, 0.125])
    def test_from_aperture_never_overhangs_on_ties(self, spacing):
        receive = UpaGeometry.from_aperture(4.0, 4.0, spacing)
        transmit = UpaGeometry.from_aperture(1.0, 1.0, spacing)
        assert receive.aperture_x == pytest.approx(4.0 - spacing)
        assert transmit.aperture_y == pytest.approx(1.0 - spacing)

    def test_fixed_aperture_grows_toward_request(self):
        apertures = [UpaGeometry.from_aperture(1.0, 1.0, d).aperture_x for d in (0.5, 0.25, 0.125)]
        assert apertures == sorted(apertures)
        assert all(a <= 1.0 for a in apertures)


class TestAntennaPosition:
    def test_first_element(self):
        origin = Vec3(1.0, 2.0, 3.0)
        geom = UpaGeometry(3, 3, 0.5, origin)
        assert antenna_position(geom, 1) == origin + 0.5 * Vec3(-1, -1, 0)

    def test_center_element_sits_on_origin(self):
        geom = UpaGeometry(5, 5, 0.25)
        assert antenna_position(geom, geom.linear_index(0, 0)) == Vec3()

    def test_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            antenna_position(UpaGeometry(3, 3, 0.5), 0)


def test_rayleigh_distances():
    wavelength = SystemConfig(30e9).wavelength
    receive = UpaGeometry(65, 65, wavelength / 4)
    transmit = UpaGeometry(5, 5, wavelength / 4)
    assert rayleigh_distance(receive, wavelength) == pytest.approx(10.24, abs=0.01)
    assert rayleigh_distance(transmit, wavelength) == pytest.approx(0.04, abs=1e-3)


class TestWavenumberSet:
    def test_small_aperture_has_five_points(self):
        grid = enumerate_wavenumber_set(1.25, 1.25, 1.0)
        assert grid.cardinality == 5
        assert [tuple(p) for p in grid.indices] == [(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)]

    def test_half_wavelength_aperture_only_origin(self):
        grid = enumerate_wavenumber_set(0.5, 0.5, 1.0)
        assert [tuple(p) for p in grid.indices] == [(0, 0)]

    def test_large_aperture_matches_brute_force(self):
        radius = 16.25
        grid = enumerate_wavenumber_set(radius, radius, 1.0)
        brute = [
            (lx, ly) for lx in range(-17, 18) for ly in range(-17, 18) if lx * lx + ly * ly <= radius * radius
        ]
        assert [tuple(p) for p in grid.indices] == brute
        assert abs(grid.cardinality - math.pi * radius**2) <= 4 * radius

    def test_every_index_inside_ellipse(self):
        grid = enumerate_wavenumber_set(3.3, 1.7, 1.0)
        assert np.all((grid.l_x / 3.3) ** 2 + (grid.l_y / 1.7) ** 2 <= 1.0 + 1e-9)

    def test_invariant_under_spacing_at_fixed_aperture(self):
        a = grid_for(UpaGeometry(5, 5, 0.25), 1.0)
        b = grid_for(UpaGeometry(25, 25, 0.05), 1.0)
        assert a.same_lattice(b)

    def test_rejects_non_positive(self):
        with pytest.raises(InvalidParameterError):
            enumerate_wavenumber_set(0.0, 1.0, 1.0)

    def test_column_of(self):
        grid = enumerate_wavenumber_set(1.25, 1.25, 1.0)
        assert grid.column_of(0, 0) == 2
        with pytest.raises(InvalidParameterError):
            grid.column_of(2, 0)


class TestKz:
    def test_broadside(self):
        assert kz(0.0, 0.0, 2.0) == pytest.approx(2.0)

    def test_grazing(self):
        k = 2 * math.pi
        assert kz(k, 0.0, k) == pytest.approx(0.0, abs=1e-6 * k)
        assert kz(k / math.sqrt(2), k / math.sqrt(2), k) == pytest.approx(0.0, abs=1e-6 * k)

    def test_evanescent(self):
        with pytest.raises(EvanescentWaveError):
            kz(1.1, 0.0, 1.0)

    def test_vectorised(self):
        np.testing.assert_allclose(kz(np.array([0.0, 0.6]), np.array([0.0, 0.8]), 1.0), [1.0, 0.0], atol=1e-7)


class TestWavenumberBasis:
    def test_zero_column_is_flat(self, desk_transmit):
        grid = grid_for(desk_transmit, 1.0)
        psi = build_wd_basis(desk_transmit, grid).matrix
        np.testing.assert_allclose(psi[:, grid.column_of(0, 0)], 1 / 5.0, atol=1e-15)

    def test_orthonormal_small(self, desk_transmit):
        psi = build_wd_basis(desk_transmit, grid_for(desk_transmit, 1.0)).matrix
        assert psi.shape == (25, 5)
        assert np.abs(psi.conj().T @ psi - np.eye(5)).max() < 1e-10

    def test_orthonormal_desk_receiver(self, desk_receive):
        psi = build_wd_basis(desk_receive, grid_for(desk_receive, 1.0)).matrix
        assert np.abs(psi.conj().T @ psi - np.eye(psi.shape[1])).max() < 1e-10

    def test_single_entry_phase(self, desk_transmit):
        grid = grid_for(desk_transmit, 1.0)
        psi = build_wd_basis(desk_transmit, grid).matrix
        row = desk_transmit.linear_index(1, 0) - 1
        assert psi[row, grid.column_of(1, 0)] == pytest.approx(np.exp(2j * math.pi / 5) / 5, abs=1e-14)

    def test_unit_columns_for_wide_spacing(self):
        geom = UpaGeometry(5, 3, 0.7)
        psi = build_wd_basis(geom, grid_for(geom, 1.0)).matrix
        np.testing.assert_allclose(np.linalg.norm(psi, axis=0), 1.0, atol=1e-12)

    def test_conjugate_column_is_mirrored_index(self, desk_receive):
        grid = grid_for(desk_receive, 1.0)
        psi = build_wd_basis(desk_receive, grid).matrix
        for l_x, l_y in [(1, 0), (2, -3), (-4, 1)]:
            np.testing.assert_allclose(
                psi[:, grid.column_of(l_x, l_y)].conj(), psi[:, grid.column_of(-l_x, -l_y)], atol=1e-12
            )

    def test_aperture_mismatch(self, desk_transmit):
        with pytest.raises(InvalidParameterError):
            build_wd_basis(desk_transmit, enumerate_wavenumber_set(1.0, 1.0, 1.0))


class TestAngularBasis:
    def test_single_element(self):
        np.testing.assert_allclose(build_ad_basis(UpaGeometry(1, 1, 0.5)).matrix, [[1.0]])

    def test_three_point_magnitudes(self):
        F = build_ad_basis(UpaGeometry(3, 1, 0.5)).matrix
        np.testing.assert_allclose(np.abs(F), 1 / math.sqrt(3))

    def test_unitary(self):
        F = build_ad_basis(UpaGeometry(5, 3, 0.25)).matrix
        assert np.abs(F.conj().T @ F - np.eye(15)).max() < 1e-12
        assert np.abs(unitary_dft(65).conj().T @ unitary_dft(65) - np.eye(65)).max() < 1e-12


def test_fourier_harmonic_includes_kz():
    grid = enumerate_wavenumber_set(1.25, 1.25, 1.0)
    np.testing.assert_allclose(fourier_harmonic(grid, Vec3()), 1.0)
    h = fourier_harmonic(grid, Vec3(0.0, 0.0, 0.3))
    np.testing.assert_allclose(h, np.exp(1j * grid.k_z * 0.3))


def test_basis_cache_reuses_bases(desk_transmit):
    BasisCache.clear()
    first = BasisCache.get(desk_transmit, BasisKind.WAVENUMBER, 1.0)
    assert BasisCache.get(desk_transmit, BasisKind.WAVENUMBER, 1.0) is first
    BasisCache.get(desk_transmit, BasisKind.ANGULAR, 1.0)
    assert BasisCache.size() == 2
    BasisCache.clear()
    assert BasisCache.size() == 0
