"""
Clustered angular power spectra and their wavenumber-domain variances.

A side of the link sees power arriving (or leaving) around a few cluster
directions, each shaped as a von Mises-Fisher density on the unit sphere. The
mixture is projected onto the wavenumber lattice by integrating it over the
solid angle that maps into each lattice cell.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from .errors import DegenerateProfileError, InvalidParameterError, OutOfValidityError
from .geometry import WavenumberGrid
from .rng import Seed, as_generator

logger = logging.getLogger(__name__)

TWO_SIGMA_ENERGY = 0.9544
AS_CONSTANT_DEG = 212.9
AS_LIMIT_DEG = 21.0

# above this concentration the density is evaluated in the log domain
_LOG_DOMAIN_ALPHA = 30.0
# quadrature nodes closer than this (relative to k) to the horizon are dropped
_HORIZON_KZ = 1e-3
_ANGLE_TOL = 1e-12


class Side(Enum):
    TRANSMIT = "transmit"
    RECEIVE = "receive"


@dataclass(frozen=True)
class Cluster:
    """One VMF lobe: weight, mean zenith/azimuth (radians) and concentration."""

    weight: float
    zenith: float
    azimuth: float
    concentration: float

    def __post_init__(self):
        if not 0.0 < self.weight <= 1.0:
            raise InvalidParameterError(f"cluster weight must lie in (0, 1], got {self.weight}")
        if not -_ANGLE_TOL <= self.zenith <= math.pi / 2 + _ANGLE_TOL:
            raise InvalidParameterError(f"zenith must lie in [0, pi/2], got {self.zenith}")
        if not -_ANGLE_TOL <= self.azimuth < 2 * math.pi + _ANGLE_TOL:
            raise InvalidParameterError(f"azimuth must lie in [0, 2pi), got {self.azimuth}")
        if not self.concentration > 0:
            raise InvalidParameterError(f"concentration must be positive, got {self.concentration}")

    @classmethod
    def from_degrees(cls, weight: float, zenith_deg: float, azimuth_deg: float, concentration: float) -> Cluster:
        return cls(weight, math.radians(zenith_deg), math.radians(azimuth_deg), concentration)

    @property
    def mean_direction(self) -> np.ndarray:
        s = math.sin(self.zenith)
        return np.array([s * math.cos(self.azimuth), s * math.sin(self.azimuth), math.cos(self.zenith)])


@dataclass(frozen=True)
class ScatteringProfile:
    """A VMF mixture with weights summing to one."""

    clusters: tuple[Cluster, ...]
    side: Side = Side.RECEIVE

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(self.clusters))
        if not self.clusters:
            raise InvalidParameterError("a scattering profile needs at least one cluster")
        total = math.fsum(c.weight for c in self.clusters)
        if abs(total - 1.0) > 1e-9:
            raise InvalidParameterError(f"cluster weights must sum to 1, got {total}")

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def to_dict(self) -> dict:
        return {
            "side": self.side.value,
            "clusters": [
                {
                    "w": c.weight,
                    "theta_deg": math.degrees(c.zenith),
                    "phi_deg": math.degrees(c.azimuth),
                    "alpha": c.concentration,
                }
                for c in self.clusters
            ],
        }

    @classmethod
    def from_dict(cls, data: dict, side: Side | None = None) -> ScatteringProfile:
        try:
            clusters = tuple(
                Cluster.from_degrees(float(c["w"]), float(c["theta_deg"]), float(c["phi_deg"]), float(c["alpha"]))
                for c in data["clusters"]
            )
        except KeyError as e:
            raise InvalidParameterError(f"scattering profile is missing key {e}") from e
        if side is None:
            side = Side(data.get("side", Side.RECEIVE.value))
        return cls(clusters, side)

    @classmethod
    def from_json(cls, text: str, side: Side | None = None) -> ScatteringProfile:
        return cls.from_dict(json.loads(text), side)


@dataclass(frozen=True, eq=False)
class VarianceVector:
    """Per-cell variances σ² on a wavenumber grid, normalised to unit sum."""

    values: np.ndarray
    grid: WavenumberGrid

    @property
    def std(self) -> np.ndarray:
        """Standard deviations, the diagonal factors of the wavenumber channel."""
        return np.sqrt(self.values)

    def significant_count(self, energy_fraction: float = TWO_SIGMA_ENERGY) -> int:
        return significant_count(self.values, energy_fraction)

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"l_x": self.grid.l_x, "l_y": self.grid.l_y, "sigma2": self.values})


def concentration_from_as(angular_spread: float) -> float:
    """
    VMF concentration for an angular spread in degrees, α = 212.9²/AS².

    Raises:
        OutOfValidityError: the relation only holds for 0° < AS < 21°.
    """
    if not 0.0 < angular_spread < AS_LIMIT_DEG:
        raise OutOfValidityError(f"angular spread {angular_spread} deg outside (0, {AS_LIMIT_DEG}) deg")
    return AS_CONSTANT_DEG**2 / angular_spread**2


def _vmf_from_cosine(cos_gamma, alpha: float):
    if alpha > _LOG_DOMAIN_ALPHA:
        # 4π sinh α = 2π e^α (1 - e^{-2α}); the dropped factor is below e^{-60}
        return np.exp(math.log(alpha) - math.log(2 * math.pi) + alpha * (np.asarray(cos_gamma) - 1.0))
    return alpha / (4 * math.pi * math.sinh(alpha)) * np.exp(alpha * np.asarray(cos_gamma))


def vmf_pdf(theta, phi, cluster: Cluster):
    """Three-dimensional von Mises-Fisher density at (θ, φ), in sr⁻¹."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    cos_gamma = np.sin(theta) * math.sin(cluster.zenith) * np.cos(phi - cluster.azimuth) + np.cos(theta) * math.cos(
        cluster.zenith
    )
    result = _vmf_from_cosine(cos_gamma, cluster.concentration)
    return float(result) if result.ndim == 0 else result


def spectral_factor(theta, phi, profile: ScatteringProfile):
    """The mixture A²(θ, φ) = Σ w_i p_i(θ, φ)."""
    if not profile.clusters:
        raise InvalidParameterError("a scattering profile needs at least one cluster")
    total = sum(c.weight * np.asarray(vmf_pdf(theta, phi, c)) for c in profile.clusters)
    return float(total) if np.ndim(total) == 0 else total


def _spectral_factor_directions(directions: np.ndarray, profile: ScatteringProfile) -> np.ndarray:
    total = np.zeros(directions.shape[:-1])
    for c in profile.clusters:
        total += c.weight * _vmf_from_cosine(directions @ c.mean_direction, c.concentration)
    return total


def variance_vector(
    profile: ScatteringProfile, grid: WavenumberGrid, k: float | None = None, subdivisions: int = 8
) -> VarianceVector:
    """
    Integrate the spectral factor over every lattice cell.

    Each cell is the rectangle of width (2π/L_x, 2π/L_y) around (k_x, k_y),
    clipped to the propagating disk. The solid-angle measure pulled back to the
    wavenumber plane is dk_x dk_y / (k k_z). A midpoint rule on a
    subdivisions × subdivisions sub-grid is used, skipping nodes within
    k_z < 1e-3 k of the horizon. The result is normalised to unit sum.

    Raises:
        DegenerateProfileError: if no power lands on the upper hemisphere.
    """
    if grid.cardinality == 0:
        raise InvalidParameterError("empty wavenumber grid")
    if subdivisions < 1:
        raise InvalidParameterError("subdivisions must be at least 1")
    k = grid.wavenumber if k is None else float(k)
    dkx, dky = grid.cell_width
    offsets = (np.arange(subdivisions) + 0.5) / subdivisions - 0.5
    kx = grid.k_x[:, None, None] + dkx * offsets[None, :, None]
    ky = grid.k_y[:, None, None] + dky * offsets[None, None, :]
    kx, ky = np.broadcast_arrays(kx, ky)
    kz2 = k**2 - kx**2 - ky**2
    valid = kz2 >= (_HORIZON_KZ * k) ** 2
    kz_valid = np.sqrt(kz2[valid])
    directions = np.column_stack([kx[valid], ky[valid], kz_valid]) / k
    density = _spectral_factor_directions(directions, profile)
    weights = np.zeros(kx.shape)
    weights[valid] = density * (dkx * dky / subdivisions**2) / (k * kz_valid)
    values = weights.sum(axis=(1, 2))
    total = values.sum()
    if not (np.isfinite(total) and total > 0):
        raise DegenerateProfileError("spectral factor integrates to zero over the propagating disk")
    values = values / total
    values.setflags(write=False)
    return VarianceVector(values, grid)


def significant_count(values, energy_fraction: float = TWO_SIGMA_ENERGY) -> int:
    """Fewest largest entries whose sum reaches energy_fraction of the total."""
    values = np.asarray(values, dtype=float).ravel()
    if not 0.0 < energy_fraction <= 1.0:
        raise InvalidParameterError("energy_fraction must lie in (0, 1]")
    if np.any(values < 0):
        raise InvalidParameterError("values must be nonnegative")
    total = values.sum()
    if not total > 0:
        raise InvalidParameterError("values sum to zero")
    cumulative = np.cumsum(np.sort(values)[::-1])
    count = int(np.searchsorted(cumulative, energy_fraction * total * (1.0 - 1e-12), side="left")) + 1
    return min(count, values.size)


def sample_vmf(cluster: Cluster, n: int, seed: Seed) -> np.ndarray:
    """
    Draw n unit vectors from one VMF lobe.

    On the 2-sphere the cosine w to the mean direction has the closed-form
    inverse CDF w = 1 + log(u + (1 - u) e^{-2α}) / α.
    """
    rng = as_generator(seed)
    alpha = cluster.concentration
    mu = cluster.mean_direction
    u = 1.0 - rng.random(n)
    w = 1.0 + np.log(u + (1.0 - u) * np.exp(-2.0 * alpha)) / alpha
    w = np.clip(w, -1.0, 1.0)
    helper = np.array([1.0, 0.0, 0.0]) if abs(mu[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(mu, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(mu, e1)
    psi = rng.uniform(0.0, 2 * math.pi, n)
    radial = np.sqrt(1.0 - w**2)
    return (
        radial[:, None] * (np.cos(psi)[:, None] * e1 + np.sin(psi)[:, None] * e2)
        + w[:, None] * mu
    )


def sample_profile(
    n_clusters: int,
    concentration: float,
    seed: Seed,
    side: Side = Side.RECEIVE,
    zenith_range: tuple[float, float] = (0.0, math.pi / 2),
    azimuth_range: tuple[float, float] = (0.0, 2 * math.pi),
    weights: tuple[float, ...] | None = None,
) -> ScatteringProfile:
    """Clusters with uniformly drawn zenith and azimuth (radians); equal weights unless given."""
    if n_clusters < 1:
        raise InvalidParameterError("n_clusters must be at least 1")
    if weights is None:
        weights = (1.0 / n_clusters,) * n_clusters
    if len(weights) != n_clusters:
        raise InvalidParameterError("one weight per cluster is required")
    rng = as_generator(seed)
    zeniths = rng.uniform(*zenith_range, n_clusters)
    azimuths = rng.uniform(*azimuth_range, n_clusters)
    return ScatteringProfile(
        tuple(Cluster(w, float(t), float(p), concentration) for w, t, p in zip(weights, zeniths, azimuths)),
        side,
    )
