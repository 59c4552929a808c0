"""
Planar array geometry, the propagating wavenumber lattice and the two
sparsifying bases built on them.

Both arrays lie in the xOy plane. Element indices along each axis run over the
symmetric range (1-N)/2 … (N-1)/2, and the linear antenna index walks x in the
outer loop and y in the inner loop.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EvanescentWaveError, InvalidParameterError
from .vec3 import Vec3

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299792458.0

# relative slack on the lattice ellipse and the propagating disk
_BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class SystemConfig:
    """Carrier description shared by both ends of the link."""

    carrier_frequency: float
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.carrier_frequency > 0:
            raise InvalidParameterError("carrier_frequency must be positive")

    @property
    def wavelength(self) -> float:
        return self.speed_of_light / self.carrier_frequency

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi * self.carrier_frequency / self.speed_of_light


def symmetric_range(n: int) -> np.ndarray:
    """Integers (1-n)/2 … (n-1)/2 for odd n."""
    half = (n - 1) // 2
    return np.arange(-half, half + 1)


def nearest_odd(value: float) -> int:
    """Nearest odd integer to value; exact even values round down, never below 1."""
    return max(1, 2 * math.ceil(value / 2.0 - _BOUNDARY_TOL) - 1)


@dataclass(frozen=True)
class UpaGeometry:
    """
    A uniform planar array of n_x × n_y elements at pitch `spacing` (metres).

    The aperture along each axis is n·spacing.
    """

    n_x: int
    n_y: int
    spacing: float
    origin: Vec3 = field(default_factory=Vec3)

    def __post_init__(self):
        for name in ("n_x", "n_y"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 1 or n % 2 == 0:
                raise InvalidParameterError(f"{name} must be an odd positive integer, got {n!r}")
        if not self.spacing > 0:
            raise InvalidParameterError("spacing must be positive")
        if not isinstance(self.origin, Vec3):
            raise InvalidParameterError("origin must be a Vec3")

    @classmethod
    def from_aperture(cls, aperture_x: float, aperture_y: float, spacing: float, origin: Vec3 | None = None) -> UpaGeometry:
        """
        Array that best fills a fixed aperture at the given spacing.

        Element counts are the nearest odd integers to aperture/spacing. On a tie
        the smaller count wins, so the array never overhangs the requested
        aperture; the effective aperture n·spacing can differ slightly from it.
        """
        if not (aperture_x > 0 and aperture_y > 0 and spacing > 0):
            raise InvalidParameterError("apertures and spacing must be positive")
        geom = cls(
            nearest_odd(aperture_x / spacing),
            nearest_odd(aperture_y / spacing),
            spacing,
            origin if origin is not None else Vec3(),
        )
        logger.debug(
            "fixed-aperture array %dx%d at spacing %.4g m: aperture %.6g x %.6g m (requested %.6g x %.6g m)",
            geom.n_x,
            geom.n_y,
            spacing,
            geom.aperture_x,
            geom.aperture_y,
            aperture_x,
            aperture_y,
        )
        return geom

    @property
    def n_elements(self) -> int:
        return self.n_x * self.n_y

    @property
    def aperture_x(self) -> float:
        return self.n_x * self.spacing

    @property
    def aperture_y(self) -> float:
        return self.n_y * self.spacing

    def linear_index(self, n_x: int, n_y: int) -> int:
        """1-based linear index of the element with signed indices (n_x, n_y)."""
        half_x, half_y = (self.n_x - 1) // 2, (self.n_y - 1) // 2
        if abs(n_x) > half_x or abs(n_y) > half_y:
            raise InvalidParameterError(f"element index ({n_x}, {n_y}) outside the array")
        return 1 + (n_x + half_x) * self.n_y + n_y + half_y

    def decode(self, n: int) -> tuple[int, int]:
        """Signed element indices for a 1-based linear index."""
        if not 1 <= n <= self.n_elements:
            raise InvalidParameterError(f"linear index {n} outside 1..{self.n_elements}")
        row, col = divmod(n - 1, self.n_y)
        return row - (self.n_x - 1) // 2, col - (self.n_y - 1) // 2

    def element_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """Signed (n_x, n_y) index arrays in linear-index order."""
        ix = np.repeat(symmetric_range(self.n_x), self.n_y)
        iy = np.tile(symmetric_range(self.n_y), self.n_x)
        return ix, iy


def antenna_position(geom: UpaGeometry, n: int) -> Vec3:
    """Location of the n-th antenna (1-based): origin + spacing·[n_x, n_y, 0]."""
    n_x, n_y = geom.decode(n)
    return geom.origin + geom.spacing * Vec3(n_x, n_y, 0)


def rayleigh_distance(geom: UpaGeometry, wavelength: float) -> float:
    """2D²/λ with D the diagonal of the physical element extent."""
    if not wavelength > 0:
        raise InvalidParameterError("wavelength must be positive")
    diagonal = geom.spacing * math.hypot(geom.n_x - 1, geom.n_y - 1)
    return 2.0 * diagonal**2 / wavelength


def kz(k_x, k_y, k: float):
    """
    Wavenumber along z for a propagating plane wave.

    Raises:
        EvanescentWaveError: if k_x² + k_y² > k² for any input.
    """
    if not k > 0:
        raise InvalidParameterError("k must be positive")
    k_x = np.asarray(k_x, dtype=float)
    k_y = np.asarray(k_y, dtype=float)
    remainder = k**2 - k_x**2 - k_y**2
    if np.any(remainder < -_BOUNDARY_TOL * k**2):
        raise EvanescentWaveError("k_x^2 + k_y^2 exceeds k^2: evanescent component")
    result = np.sqrt(np.clip(remainder, 0.0, None))
    return float(result) if result.ndim == 0 else result


@dataclass(frozen=True, eq=False)
class WavenumberGrid:
    """Integer wavenumber indices (l_x, l_y) inside the propagating ellipse."""

    indices: np.ndarray
    aperture_x: float
    aperture_y: float
    wavelength: float

    @property
    def cardinality(self) -> int:
        return int(self.indices.shape[0])

    def __len__(self):
        return self.cardinality

    @property
    def l_x(self) -> np.ndarray:
        return self.indices[:, 0]

    @property
    def l_y(self) -> np.ndarray:
        return self.indices[:, 1]

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def cell_width(self) -> tuple[float, float]:
        return 2.0 * math.pi / self.aperture_x, 2.0 * math.pi / self.aperture_y

    @property
    def k_x(self) -> np.ndarray:
        return 2.0 * math.pi * self.l_x / self.aperture_x

    @property
    def k_y(self) -> np.ndarray:
        return 2.0 * math.pi * self.l_y / self.aperture_y

    @property
    def k_z(self) -> np.ndarray:
        return kz(self.k_x, self.k_y, self.wavenumber)

    def column_of(self, l_x: int, l_y: int) -> int:
        """0-based column of (l_x, l_y) in any basis built on this grid."""
        hits = np.flatnonzero((self.l_x == l_x) & (self.l_y == l_y))
        if hits.size == 0:
            raise InvalidParameterError(f"({l_x}, {l_y}) is not a propagating index")
        return int(hits[0])

    def same_lattice(self, other: WavenumberGrid) -> bool:
        return self.indices.shape == other.indices.shape and bool(np.all(self.indices == other.indices))


def enumerate_wavenumber_set(aperture_x: float, aperture_y: float, wavelength: float) -> WavenumberGrid:
    """
    All integer pairs with (l_x λ/L_x)² + (l_y λ/L_y)² ≤ 1, ordered by l_x then l_y.
    """
    if not (aperture_x > 0 and aperture_y > 0 and wavelength > 0):
        raise InvalidParameterError("apertures and wavelength must be positive")
    rx = aperture_x / wavelength
    ry = aperture_y / wavelength
    lx = np.arange(-math.floor(rx + _BOUNDARY_TOL), math.floor(rx + _BOUNDARY_TOL) + 1)
    ly = np.arange(-math.floor(ry + _BOUNDARY_TOL), math.floor(ry + _BOUNDARY_TOL) + 1)
    gx, gy = np.meshgrid(lx, ly, indexing="ij")
    inside = (gx / rx) ** 2 + (gy / ry) ** 2 <= 1.0 + _BOUNDARY_TOL
    indices = np.column_stack([gx[inside], gy[inside]]).astype(np.int64)
    indices.setflags(write=False)
    return WavenumberGrid(indices, float(aperture_x), float(aperture_y), float(wavelength))


def grid_for(geom: UpaGeometry, wavelength: float) -> WavenumberGrid:
    return enumerate_wavenumber_set(geom.aperture_x, geom.aperture_y, wavelength)


class BasisKind(Enum):
    WAVENUMBER = "wavenumber"
    ANGULAR = "angular"


@dataclass(frozen=True, eq=False)
class SparsifyingBasis:
    """A dictionary matrix [N × atoms] with unit-norm columns."""

    matrix: np.ndarray
    kind: BasisKind
    grid: WavenumberGrid | None = None

    @property
    def n_rows(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def n_atoms(self) -> int:
        return int(self.matrix.shape[1])


def build_wd_basis(geom: UpaGeometry, grid: WavenumberGrid) -> SparsifyingBasis:
    """
    Wavenumber-domain basis: entry (n, (l_x, l_y)) is
    exp{j(2π l_x n_x δ/L_x + 2π l_y n_y δ/L_y)}/√N.
    """
    if not (
        math.isclose(grid.aperture_x, geom.aperture_x, rel_tol=_BOUNDARY_TOL)
        and math.isclose(grid.aperture_y, geom.aperture_y, rel_tol=_BOUNDARY_TOL)
    ):
        raise InvalidParameterError(
            f"grid aperture ({grid.aperture_x}, {grid.aperture_y}) does not match "
            f"array aperture ({geom.aperture_x}, {geom.aperture_y})"
        )
    ix, iy = geom.element_indices()
    phase = 2.0 * math.pi * (
        np.outer(ix * geom.spacing / grid.aperture_x, grid.l_x)
        + np.outer(iy * geom.spacing / grid.aperture_y, grid.l_y)
    )
    matrix = np.exp(1j * phase) / math.sqrt(geom.n_elements)
    matrix.setflags(write=False)
    return SparsifyingBasis(matrix, BasisKind.WAVENUMBER, grid)


def unitary_dft(n: int) -> np.ndarray:
    """Unitary 1-D DFT over the symmetric index range, positive exponent."""
    idx = symmetric_range(n)
    return np.exp(2j * math.pi * np.outer(idx, idx) / n) / math.sqrt(n)


def build_ad_basis(geom: UpaGeometry) -> SparsifyingBasis:
    """Angular-domain basis: the N×N unitary 2-D spatial DFT F_x ⊗ F_y."""
    matrix = np.kron(unitary_dft(geom.n_x), unitary_dft(geom.n_y))
    matrix.setflags(write=False)
    return SparsifyingBasis(matrix, BasisKind.ANGULAR)


def fourier_harmonic(grid: WavenumberGrid, position: Vec3) -> np.ndarray:
    """Scalar harmonics exp{j(k_x r_x + k_y r_y + k_z r_z)} at `position`, one per grid index."""
    r_x, r_y, r_z = position
    return np.exp(1j * (grid.k_x * r_x + grid.k_y * r_y + grid.k_z * r_z))


class BasisCache:
    """
    Lazily built bases shared by every trial on the same geometry.

    Each worker process holds its own cache.
    """

    _bases: dict[tuple, SparsifyingBasis] = {}

    @classmethod
    def get(cls, geom: UpaGeometry, kind: BasisKind, wavelength: float) -> SparsifyingBasis:
        key = (geom.n_x, geom.n_y, geom.spacing, kind, wavelength)
        if key not in cls._bases:
            logger.debug("building %s basis for %dx%d array", kind.value, geom.n_x, geom.n_y)
            if kind is BasisKind.WAVENUMBER:
                cls._bases[key] = build_wd_basis(geom, grid_for(geom, wavelength))
            else:
                cls._bases[key] = build_ad_basis(geom)
        return cls._bases[key]

    @classmethod
    def clear(cls) -> None:
        cls._bases.clear()

    @classmethod
    def size(cls) -> int:
        return len(cls._bases)
