"""
Self-checks run by `holosparse validate`.

Each check is a plain function registered with @invariant(name). A check
passes by returning and fails by raising; run_invariants collects the outcome
of every registered check.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .bench import aggregate, collect_trials, results_frame
from .channel import sample_wavenumber_channel, spatial_entry_oracle, synthesize_spatial
from .config import ExperimentConfig
from .estimators import nmse, solve_weights, wd_omp
from .geometry import (
    BasisCache,
    BasisKind,
    UpaGeometry,
    WavenumberGrid,
    build_wd_basis,
    grid_for,
    unitary_dft,
)
from .measurement import gen_combiner, gen_pilots
from .presets import PRESET_CATALOG
from .rng import complex_normal
from .scattering import Cluster, sample_profile, significant_count, variance_vector, vmf_pdf

logger = logging.getLogger(__name__)

INVARIANTS: dict[str, Callable[[], None]] = {}

_WAVELENGTH = 1.0
_K = 2.0 * math.pi


def invariant(name: str) -> Callable[[Callable[[], None]], Callable[[], None]]:
    """Register a check under `name`; the function itself is returned unchanged."""

    def register(func: Callable[[], None]) -> Callable[[], None]:
        if name in INVARIANTS:
            raise ValueError(f"invariant {name!r} registered twice")
        INVARIANTS[name] = func
        return func

    return register


class InvariantViolation(AssertionError):
    pass


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvariantViolation(message)


@dataclass
class ValidationReport:
    passed: list[str] = field(default_factory=list)
    failed: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failed


def run_invariants(names: list[str] | None = None) -> ValidationReport:
    report = ValidationReport()
    for name in names or list(INVARIANTS):
        if name not in INVARIANTS:
            report.failed.append((name, "no such invariant"))
            continue
        start = time.perf_counter()
        try:
            INVARIANTS[name]()
        except Exception as e:
            logger.error("%s FAILED: %s", name, e)
            report.failed.append((name, str(e)))
        else:
            logger.info("%s passed (%.2f s)", name, time.perf_counter() - start)
            report.passed.append(name)
    return report


def _preset_geometries() -> set[UpaGeometry]:
    geometries = set()
    for factory in PRESET_CATALOG.values():
        config = factory()
        for index in range(len(config.sweep)):
            point = config.point(index)
            # rescale to unit wavelength so every preset shares one lattice convention
            scale = 1.0 / config.system.wavelength
            for geom in (point.receive, point.transmit):
                geometries.add(UpaGeometry(geom.n_x, geom.n_y, geom.spacing * scale))
    return geometries


def _wd_gram_deviation(geom: UpaGeometry, grid: WavenumberGrid, chunk: int = 512) -> float:
    """max |ΨᴴΨ - I| using the separable x/y structure of the wavenumber basis."""

    def kernel(n: int, aperture: float, span: int) -> np.ndarray:
        d = np.arange(-span, span + 1)
        idx = np.arange(-(n - 1) // 2, (n - 1) // 2 + 1)
        return np.exp(2j * math.pi * np.outer(d, idx) * geom.spacing / aperture).sum(axis=1)

    l_x, l_y = grid.l_x, grid.l_y
    span_x = int(np.ptp(l_x))
    span_y = int(np.ptp(l_y))
    dx = kernel(geom.n_x, grid.aperture_x, span_x)
    dy = kernel(geom.n_y, grid.aperture_y, span_y)
    worst = 0.0
    for start in range(0, grid.cardinality, chunk):
        rows = slice(start, start + chunk)
        gram = dx[l_x[None, :] - l_x[rows, None] + span_x] * dy[l_y[None, :] - l_y[rows, None] + span_y]
        gram /= geom.n_elements
        gram[np.arange(gram.shape[0]), np.arange(start, start + gram.shape[0])] -= 1.0
        worst = max(worst, float(np.abs(gram).max()))
    return worst


@invariant("basis-identity")
def check_basis_identity() -> None:
    for geom in sorted(_preset_geometries(), key=lambda g: (g.n_x, g.n_y, g.spacing)):
        grid = grid_for(geom, _WAVELENGTH)
        deviation = _wd_gram_deviation(geom, grid)
        _require(deviation < 1e-10, f"{geom.n_x}x{geom.n_y} wavenumber basis off identity by {deviation:.2e}")
        if geom.n_elements <= 1200:
            psi = build_wd_basis(geom, grid).matrix
            direct = np.abs(psi.conj().T @ psi - np.eye(grid.cardinality)).max()
            _require(direct < 1e-10, f"{geom.n_x}x{geom.n_y} dense Gram off identity by {direct:.2e}")
        for n in {geom.n_x, geom.n_y}:
            F = unitary_dft(n)
            deviation = np.abs(F.conj().T @ F - np.eye(n)).max()
            _require(deviation < 1e-12, f"{n}-point DFT off unitary by {deviation:.2e}")


@invariant("synthesis-oracle")
def check_synthesis_oracle() -> None:
    geom = UpaGeometry(3, 3, 0.25)
    grid = grid_for(geom, _WAVELENGTH)
    psi = BasisCache.get(geom, BasisKind.WAVENUMBER, _WAVELENGTH)
    rng = np.random.default_rng(1)
    scale = math.sqrt(geom.n_elements * geom.n_elements)
    for _ in range(100):
        H_a = complex_normal(rng, (grid.cardinality, grid.cardinality))
        H = synthesize_spatial(psi, H_a, psi) * scale
        for r in range(1, geom.n_elements + 1):
            for s in range(1, geom.n_elements + 1):
                expected = spatial_entry_oracle((geom, geom), (grid, grid), H_a, r, s)
                _require(abs(H[r - 1, s - 1] - expected) < 1e-10, f"entry ({r}, {s}) differs from the double sum")


def planted_recovery_rate(instances: int, sparsity: int = 4, seed: int = 7) -> float:
    """Fraction of noiseless planted instances WD-OMP recovers exactly (desk geometry)."""
    receive = UpaGeometry(17, 17, 0.25)
    transmit = UpaGeometry(5, 5, 0.25)
    psi_r = BasisCache.get(receive, BasisKind.WAVENUMBER, _WAVELENGTH)
    psi_s = BasisCache.get(transmit, BasisKind.WAVENUMBER, _WAVELENGTH)
    rng = np.random.default_rng(seed)
    recovered = 0
    for _ in range(instances):
        flat = rng.choice(psi_r.n_atoms * psi_s.n_atoms, size=sparsity, replace=False)
        rows, cols = np.divmod(flat, psi_s.n_atoms)
        H_a = np.zeros((psi_r.n_atoms, psi_s.n_atoms), dtype=complex)
        H_a[rows, cols] = complex_normal(rng, sparsity)
        H = synthesize_spatial(psi_r, H_a, psi_s)
        X = gen_pilots(transmit.n_elements, 32, rng)
        C = gen_combiner(16, receive.n_elements, rng)
        result = wd_omp(C @ H @ X, X, C, psi_r, psi_s, sparsity)
        support = {(e.i, e.j) for e in result.support}
        if support == set(zip(rows.tolist(), cols.tolist())) and nmse(result.H_hat, H) < 1e-8:
            recovered += 1
    return recovered / instances


@invariant("exact-recovery")
def check_exact_recovery() -> None:
    rate = planted_recovery_rate(100)
    _require(rate >= 0.95, f"WD-OMP recovered only {rate:.0%} of planted 4-sparse channels")


@invariant("weight-solve")
def check_weight_solve() -> None:
    rng = np.random.default_rng(3)
    for trial in range(50):
        u = 1 + trial % 8
        A = complex_normal(rng, (16, u))
        B = complex_normal(rng, (u, 32))
        Y = complex_normal(rng, (16, 32))
        design = np.column_stack([np.outer(A[:, n], B[n]).ravel() for n in range(u)])
        expected = scipy.linalg.lstsq(design, Y.ravel())[0]
        weights = solve_weights(list(zip(A.T, B)), Y).weights
        error = np.abs(weights - expected).max() / max(1.0, np.abs(expected).max())
        _require(error < 1e-9, f"weight solve differs from dense least squares by {error:.2e} (u={u})")


@invariant("statistical-law")
def check_statistical_law() -> None:
    receive = grid_for(UpaGeometry(17, 17, 0.25), _WAVELENGTH)
    transmit = grid_for(UpaGeometry(5, 5, 0.25), _WAVELENGTH)
    profile = sample_profile(2, 140.0, 11)
    sigma_r = variance_vector(profile, receive, _K)
    sigma_s = variance_vector(profile, transmit, _K)
    draws = 10_000
    power = np.zeros((receive.cardinality, transmit.cardinality))
    for seed in range(draws):
        power += np.abs(sample_wavenumber_channel(sigma_r, sigma_s, seed)) ** 2
    empirical = power / draws
    expected = np.outer(sigma_r.values, sigma_s.values)
    mask = expected > 1e-3
    error = np.abs(empirical[mask] / expected[mask] - 1.0).max()
    _require(error < 0.05, f"empirical variance deviates by {error:.1%} from the product law")


def mixture_mass(clusters: list[Cluster], nodes: int = 600) -> float:
    """Gauss-Legendre in cos θ times a uniform φ rule of the density over the sphere."""
    u, wu = np.polynomial.legendre.leggauss(nodes)
    phi = np.linspace(0.0, 2 * math.pi, 2 * nodes, endpoint=False)
    theta = np.arccos(u)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    density = sum(c.weight * vmf_pdf(T, P, c) for c in clusters)
    return float((wu[:, None] * density).sum() * (2 * math.pi / phi.size))


@invariant("vmf-normalization")
def check_vmf_normalization() -> None:
    rng = np.random.default_rng(5)
    for alpha in (1.0, 140.0, 500.0):
        clusters = [
            Cluster(w, float(rng.uniform(0, math.pi / 2)), float(rng.uniform(0, 2 * math.pi)), alpha)
            for w in (0.5, 0.3, 0.2)
        ]
        mass = mixture_mass(clusters)
        _require(abs(mass - 1.0) < 1e-3, f"mixture at alpha={alpha} integrates to {mass:.6f}")


def mean_sparsity_ratio(draws: int, seed: int = 13) -> float:
    """Average significant fraction of σ_R σ_Sᵀ on the 65×65 / 5×5 grids at α = 140."""
    receive = grid_for(UpaGeometry(65, 65, 0.25), _WAVELENGTH)
    transmit = grid_for(UpaGeometry(5, 5, 0.25), _WAVELENGTH)
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(draws):
        sigma_r = variance_vector(sample_profile(2, 140.0, rng), receive, _K)
        sigma_s = variance_vector(sample_profile(2, 140.0, rng), transmit, _K)
        count = significant_count(np.outer(sigma_r.values, sigma_s.values).ravel())
        ratios.append(count / (receive.cardinality * transmit.cardinality))
    return float(np.mean(ratios))


@invariant("sparsity")
def check_sparsity() -> None:
    ratio = mean_sparsity_ratio(50)
    _require(ratio < 0.10, f"significant entries cover {ratio:.1%} of the wavenumber channel")


def _small_config() -> ExperimentConfig:
    return ExperimentConfig(
        name="determinism",
        receive_nx=9,
        receive_ny=9,
        transmit_nx=3,
        transmit_ny=3,
        n_rf=4,
        pilot_length=8,
        sweep_variable="snr_db",
        sweep_values=(0.0, 10.0),
        trials=3,
        master_seed=99,
    )


@invariant("determinism")
def check_determinism() -> None:
    config = _small_config()
    first = collect_trials(config, progress=False)
    second = collect_trials(config, progress=False)
    columns = ["sweep", "estimator", "nmse", "nmse_db", "trials"]
    a = results_frame(aggregate(config, first))[columns].to_csv(index=False)
    b = results_frame(aggregate(config, second))[columns].to_csv(index=False)
    _require(a == b, "two runs with the same master seed disagree")
    for row in aggregate(config, first):
        terms = [o.terms[row.estimator] for o in first if config.sweep[o.sweep_index] == row.sweep and not o.failed]
        recomputed = math.fsum(t[0] for t in terms) / math.fsum(t[1] for t in terms)
        _require(math.isclose(row.nmse, recomputed, rel_tol=1e-12), "aggregate differs from per-trial terms")
