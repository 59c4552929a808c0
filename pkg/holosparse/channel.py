"""
Stochastic wavenumber-domain channels and their spatial images.

The spatial channel is H = Ψ_R H_a Ψ_Sᴴ with H_a[l, m] ~ CN(0, σ_R²(l) σ_S²(m)).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import InvalidParameterError
from .geometry import (
    BasisCache,
    BasisKind,
    SparsifyingBasis,
    SystemConfig,
    UpaGeometry,
    WavenumberGrid,
    fourier_harmonic,
    grid_for,
)
from .rng import Seed, as_generator, complex_normal
from .scattering import ScatteringProfile, Side, VarianceVector, variance_vector
from .vec3 import Vec3

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ChannelInstance:
    """One channel realisation in both domains."""

    H_a: np.ndarray
    H: np.ndarray
    seed: int | None
    receive_profile: ScatteringProfile
    transmit_profile: ScatteringProfile
    receive_geometry: UpaGeometry
    transmit_geometry: UpaGeometry

    def export(self, stem: str | Path) -> list[Path]:
        """
        Write `<stem>.json` (dims, seed, profiles, geometries) and two CSVs,
        `<stem>_wavenumber.csv` for H_a and `<stem>_spatial.csv` for H, each
        row-major with interleaved real/imaginary columns.
        """
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        header = {
            "wavenumber_shape": list(self.H_a.shape),
            "spatial_shape": list(self.H.shape),
            "seed": self.seed,
            "receive_profile": self.receive_profile.to_dict(),
            "transmit_profile": self.transmit_profile.to_dict(),
            "receive_geometry": _geometry_dict(self.receive_geometry),
            "transmit_geometry": _geometry_dict(self.transmit_geometry),
        }
        paths = [stem.with_suffix(".json"), _csv_path(stem, "wavenumber"), _csv_path(stem, "spatial")]
        paths[0].write_text(json.dumps(header, indent=2))
        _interleaved_frame(self.H_a).to_csv(paths[1], index=False, float_format="%.17g")
        _interleaved_frame(self.H).to_csv(paths[2], index=False, float_format="%.17g")
        logger.info("exported channel to %s", ", ".join(str(p) for p in paths))
        return paths

    @classmethod
    def load(cls, stem: str | Path) -> ChannelInstance:
        stem = Path(stem)
        header = json.loads(stem.with_suffix(".json").read_text())
        return cls(
            _from_interleaved(pd.read_csv(_csv_path(stem, "wavenumber"))),
            _from_interleaved(pd.read_csv(_csv_path(stem, "spatial"))),
            header["seed"],
            ScatteringProfile.from_dict(header["receive_profile"]),
            ScatteringProfile.from_dict(header["transmit_profile"]),
            _geometry_from_dict(header["receive_geometry"]),
            _geometry_from_dict(header["transmit_geometry"]),
        )


def _csv_path(stem: Path, part: str) -> Path:
    return stem.with_name(f"{stem.name}_{part}.csv")


def _geometry_dict(geom: UpaGeometry) -> dict:
    return {"n_x": geom.n_x, "n_y": geom.n_y, "spacing": geom.spacing, "origin": list(geom.origin)}


def _geometry_from_dict(data: dict) -> UpaGeometry:
    return UpaGeometry(int(data["n_x"]), int(data["n_y"]), float(data["spacing"]), Vec3.from_array(data["origin"]))


def _interleaved_frame(matrix: np.ndarray) -> pd.DataFrame:
    interleaved = np.empty((matrix.shape[0], 2 * matrix.shape[1]))
    interleaved[:, 0::2] = matrix.real
    interleaved[:, 1::2] = matrix.imag
    columns = [f"{part}{j}" for j in range(matrix.shape[1]) for part in ("re", "im")]
    return pd.DataFrame(interleaved, columns=columns)


def _from_interleaved(frame: pd.DataFrame) -> np.ndarray:
    values = frame.to_numpy(dtype=float)
    return values[:, 0::2] + 1j * values[:, 1::2]


def sample_wavenumber_channel(sigma_r: VarianceVector, sigma_s: VarianceVector, seed: Seed) -> np.ndarray:
    """
    H_a = diag(σ_R) W diag(σ_S) with W i.i.d. CN(0, 1).

    The diagonal factors are standard deviations, so entry (l, m) has
    variance σ_R²(l) σ_S²(m).
    """
    rng = as_generator(seed)
    w = complex_normal(rng, (sigma_r.values.size, sigma_s.values.size))
    return sigma_r.std[:, None] * w * sigma_s.std[None, :]


def synthesize_spatial(psi_r: SparsifyingBasis, H_a: np.ndarray, psi_s: SparsifyingBasis) -> np.ndarray:
    """H = Ψ_R H_a Ψ_Sᴴ."""
    H_a = np.asarray(H_a)
    if H_a.shape != (psi_r.n_atoms, psi_s.n_atoms):
        raise InvalidParameterError(
            f"H_a has shape {H_a.shape}, bases expect ({psi_r.n_atoms}, {psi_s.n_atoms})"
        )
    return psi_r.matrix @ H_a @ psi_s.matrix.conj().T


def spatial_entry_oracle(
    geometries: tuple[UpaGeometry, UpaGeometry],
    grids: tuple[WavenumberGrid, WavenumberGrid],
    H_a: np.ndarray,
    n_r: int,
    n_s: int,
) -> complex:
    """
    Entry (n_r, n_s) of the spatial channel by the direct double sum over
    receive and transmit harmonics (1-based antenna indices).

    The harmonics carry no 1/√N factor, so the value is √(N_R N_S) times the
    matrix synthesis.
    """
    geom_r, geom_s = geometries
    grid_r, grid_s = grids
    rx, ry = geom_r.decode(n_r)
    sx, sy = geom_s.decode(n_s)
    total = 0j
    for l, (l_x, l_y) in enumerate(grid_r.indices):
        receive_phase = 2 * math.pi * (l_x * rx * geom_r.spacing / grid_r.aperture_x + l_y * ry * geom_r.spacing / grid_r.aperture_y)
        for m, (m_x, m_y) in enumerate(grid_s.indices):
            transmit_phase = 2 * math.pi * (
                m_x * sx * geom_s.spacing / grid_s.aperture_x + m_y * sy * geom_s.spacing / grid_s.aperture_y
            )
            total += H_a[l, m] * np.exp(1j * (receive_phase - transmit_phase))
    return complex(total)


def point_response(
    H_a: np.ndarray, receive_grid: WavenumberGrid, transmit_grid: WavenumberGrid, r: Vec3, s: Vec3
) -> complex:
    """
    Point-to-point response h(s, r) = Σ_l Σ_m H_a[l, m] a_R(l, r) a_S(m, s)^*,
    with the full harmonics including the k_z z term.
    """
    return complex(fourier_harmonic(receive_grid, r) @ H_a @ fourier_harmonic(transmit_grid, s).conj())


def apply_coupling(H: np.ndarray, coupling_receive: np.ndarray | None = None, coupling_transmit: np.ndarray | None = None) -> np.ndarray:
    """M_R H M_S; a missing coupling matrix is the identity."""
    H = np.asarray(H)
    n_r, n_s = H.shape
    if coupling_receive is not None:
        if coupling_receive.shape != (n_r, n_r):
            raise InvalidParameterError(f"receive coupling must be {n_r}x{n_r}, got {coupling_receive.shape}")
        H = coupling_receive @ H
    if coupling_transmit is not None:
        if coupling_transmit.shape != (n_s, n_s):
            raise InvalidParameterError(f"transmit coupling must be {n_s}x{n_s}, got {coupling_transmit.shape}")
        H = H @ coupling_transmit
    return H


def realize_channel(
    receive: UpaGeometry,
    transmit: UpaGeometry,
    receive_profile: ScatteringProfile,
    transmit_profile: ScatteringProfile,
    system: SystemConfig,
    seed: Seed,
    quadrature_points: int = 8,
) -> tuple[ChannelInstance, VarianceVector, VarianceVector]:
    """Variances for both sides, one H_a draw and its spatial image."""
    wavelength = system.wavelength
    sigma_r = variance_vector(receive_profile, grid_for(receive, wavelength), system.wavenumber, quadrature_points)
    sigma_s = variance_vector(transmit_profile, grid_for(transmit, wavelength), system.wavenumber, quadrature_points)
    H_a = sample_wavenumber_channel(sigma_r, sigma_s, seed)
    psi_r = BasisCache.get(receive, BasisKind.WAVENUMBER, wavelength)
    psi_s = BasisCache.get(transmit, BasisKind.WAVENUMBER, wavelength)
    H = synthesize_spatial(psi_r, H_a, psi_s)
    instance = ChannelInstance(
        H_a,
        H,
        seed if isinstance(seed, int) else None,
        _with_side(receive_profile, Side.RECEIVE),
        _with_side(transmit_profile, Side.TRANSMIT),
        receive,
        transmit,
    )
    return instance, sigma_r, sigma_s


def _with_side(profile: ScatteringProfile, side: Side) -> ScatteringProfile:
    return profile if profile.side is side else ScatteringProfile(profile.clusters, side)
