"""
Channel estimators: least squares and greedy sparse recovery over rank-one atoms.

With A = C Φ_R and B = Φ_Sᴴ X, the observation is Y ≈ A H_a B, so every
entry (i, j) of H_a contributes the rank-one atom a_i b_jᵀ (a_i a column of A,
b_jᵀ a row of B). OMP and CoSaMP select such atoms and refit their weights
jointly by least squares.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import InvalidParameterError
from .geometry import SparsifyingBasis
from .measurement import PilotObservation
from .scattering import TWO_SIGMA_ENERGY, VarianceVector

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
RIDGE_SCALE = 1e-10


@dataclass(frozen=True)
class SupportEntry:
    i: int
    j: int
    weight: complex


@dataclass(frozen=True, eq=False)
class EstimateResult:
    H_a_hat: scipy.sparse.coo_array
    H_hat: np.ndarray
    support: tuple[SupportEntry, ...]
    iterations_used: int
    residual_norm: float
    residual_history: tuple[float, ...] = ()
    regularized: bool = False


@dataclass(frozen=True, eq=False)
class WeightFit:
    weights: np.ndarray
    regularized: bool = False


def _fit(A_sel: np.ndarray, B_sel: np.ndarray, Y: np.ndarray) -> WeightFit:
    """
    Joint least-squares weights for atoms a_n b_nᵀ (columns of A_sel, rows of B_sel).

    f[n] = tr(a_n b_nᵀ Yᴴ), F[m, n] = (a_nᴴ a_m)(b_mᵀ b_n*), w = (F⁻¹ f)*.
    """
    u = A_sel.shape[1]
    f = np.einsum("rn,rp,np->n", A_sel, Y.conj(), B_sel)
    F = (A_sel.conj().T @ A_sel).T * (B_sel @ B_sel.conj().T)
    condition = np.linalg.cond(F)
    if np.isfinite(condition) and condition <= CONDITION_LIMIT:
        return WeightFit(scipy.linalg.solve(F, f, assume_a="her").conj())
    ridge = RIDGE_SCALE * np.trace(F).real / u
    logger.warning("weight system ill-conditioned (cond %.3g); ridge %.3g applied", condition, ridge)
    try:
        solution = scipy.linalg.solve(F + ridge * np.eye(u), f, assume_a="her")
    except np.linalg.LinAlgError:
        solution = scipy.linalg.lstsq(F + ridge * np.eye(u), f)[0]
    return WeightFit(solution.conj(), regularized=True)


def solve_weights(atoms: Sequence[tuple[np.ndarray, np.ndarray]], Y: np.ndarray) -> WeightFit:
    """
    Weights minimising ‖Y - Σ w_n a_n b_nᵀ‖_F² for the given (a, b) atom pairs.

    Args:
        atoms: distinct (a, b) pairs, a of length N_RF and b of length P.
        Y: received block [N_RF × P].

    Returns:
        The weights, flagged if the normal equations needed a ridge.
    """
    if len(atoms) == 0:
        raise InvalidParameterError("at least one atom is required")
    A_sel = np.column_stack([np.asarray(a) for a, _ in atoms])
    B_sel = np.vstack([np.asarray(b) for _, b in atoms])
    if A_sel.shape[0] != Y.shape[0] or B_sel.shape[1] != Y.shape[1]:
        raise InvalidParameterError("atom dimensions do not match Y")
    return _fit(A_sel, B_sel, np.asarray(Y))


class _AtomProblem:
    """Measurement-side view of a pair of bases: A = C Φ_R, B = Φ_Sᴴ X."""

    def __init__(self, Y: np.ndarray, X: np.ndarray, C: np.ndarray, phi_r: SparsifyingBasis, phi_s: SparsifyingBasis):
        if C.shape[1] != phi_r.n_rows or X.shape[0] != phi_s.n_rows:
            raise InvalidParameterError("basis heights do not match the combiner and pilot")
        if Y.shape != (C.shape[0], X.shape[1]):
            raise InvalidParameterError(f"Y has shape {Y.shape}, expected {(C.shape[0], X.shape[1])}")
        self.Y = Y
        self.phi_r = phi_r
        self.phi_s = phi_s
        self.A = C @ phi_r.matrix
        self.B = phi_s.matrix.conj().T @ X
        norm_a = np.linalg.norm(self.A, axis=0)
        norm_b = np.linalg.norm(self.B, axis=1)
        with np.errstate(divide="ignore"):
            inv_a = np.where(norm_a > 0, 1.0 / norm_a, 0.0)
            inv_b = np.where(norm_b > 0, 1.0 / norm_b, 0.0)
        self._scale = np.outer(inv_a, inv_b)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape[1], self.B.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.shape[0] * self.shape[1]

    def correlation(self, Y_res: np.ndarray) -> np.ndarray:
        """|⟨a_i b_jᵀ, Y_res⟩| / (‖a_i‖ ‖b_j‖) for every pair, as one matrix product."""
        return np.abs(self.A.conj().T @ Y_res @ self.B.conj().T) * self._scale

    def fit(self, rows: np.ndarray, cols: np.ndarray) -> WeightFit:
        return _fit(self.A[:, rows], self.B[cols, :], self.Y)

    def residual(self, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray) -> np.ndarray:
        return self.Y - (self.A[:, rows] * weights) @ self.B[cols, :]

    def result(
        self,
        rows: np.ndarray,
        cols: np.ndarray,
        weights: np.ndarray,
        history: list[float],
        regularized: bool,
    ) -> EstimateResult:
        H_a_hat = scipy.sparse.coo_array((weights, (rows, cols)), shape=self.shape)
        dense = np.zeros(self.shape, dtype=complex)
        dense[rows, cols] = weights
        H_hat = self.phi_r.matrix @ dense @ self.phi_s.matrix.conj().T
        support = tuple(SupportEntry(int(i), int(j), complex(w)) for i, j, w in zip(rows, cols, weights))
        return EstimateResult(
            H_a_hat,
            H_hat,
            support,
            len(history),
            history[-1] if history else float(np.linalg.norm(self.Y)),
            tuple(history),
            regularized,
        )


def basis_omp(
    Y: np.ndarray, X: np.ndarray, C: np.ndarray, phi_r: SparsifyingBasis, phi_s: SparsifyingBasis, n_iter: int
) -> EstimateResult:
    """
    OMP over rank-one atoms a_i b_jᵀ for an arbitrary pair of bases.

    Each iteration picks the unused pair with the largest normalised
    correlation (lowest linear index i·|Φ_S| + j on ties), refits all weights
    jointly and recomputes the residual from Y.
    """
    problem = _AtomProblem(Y, X, C, phi_r, phi_s)
    if not 1 <= n_iter <= problem.n_atoms:
        raise InvalidParameterError(f"n_iter must lie in 1..{problem.n_atoms}, got {n_iter}")
    n_cols = problem.shape[1]
    used = np.zeros(problem.shape, dtype=bool)
    rows: list[int] = []
    cols: list[int] = []
    Y_res = Y
    history: list[float] = []
    regularized = False
    fit = WeightFit(np.zeros(0, dtype=complex))
    for _ in range(n_iter):
        score = problem.correlation(Y_res)
        score[used] = -1.0
        i, j = divmod(int(np.argmax(score)), n_cols)
        used[i, j] = True
        rows.append(i)
        cols.append(j)
        fit = problem.fit(np.array(rows), np.array(cols))
        regularized |= fit.regularized
        Y_res = problem.residual(np.array(rows), np.array(cols), fit.weights)
        history.append(float(np.linalg.norm(Y_res)))
    logger.debug("OMP finished %d iterations, residual %.3e", n_iter, history[-1])
    return problem.result(np.array(rows), np.array(cols), fit.weights, history, regularized)


def wd_omp(
    Y: np.ndarray, X: np.ndarray, C: np.ndarray, psi_r: SparsifyingBasis, psi_s: SparsifyingBasis, n_iter: int
) -> EstimateResult:
    """Wavenumber-domain OMP: basis_omp on the wavenumber bases Ψ_R, Ψ_S."""
    return basis_omp(Y, X, C, psi_r, psi_s, n_iter)


def basis_cosamp(
    Y: np.ndarray,
    X: np.ndarray,
    C: np.ndarray,
    phi_r: SparsifyingBasis,
    phi_s: SparsifyingBasis,
    sparsity: int,
    max_iter: int = 30,
    tol: float = 1e-6,
) -> EstimateResult:
    """
    CoSaMP over rank-one atoms.

    Per iteration: take the 2K best new pairs by normalised correlation, merge
    with the current support, fit, prune to the K largest weights, refit and
    update the residual. Stops after max_iter or once the residual norm falls
    by no more than tol (relative).
    """
    problem = _AtomProblem(Y, X, C, phi_r, phi_s)
    if sparsity < 1 or 3 * sparsity > problem.n_atoms:
        raise InvalidParameterError(f"sparsity must satisfy 1 <= 3K <= {problem.n_atoms}, got K={sparsity}")
    if max_iter < 1:
        raise InvalidParameterError("max_iter must be at least 1")
    n_cols = problem.shape[1]
    support = np.zeros(0, dtype=np.int64)
    weights = np.zeros(0, dtype=complex)
    previous = float(np.linalg.norm(Y))
    history: list[float] = []
    regularized = False
    Y_res = Y
    for it in range(max_iter):
        score = problem.correlation(Y_res).ravel()
        score[support] = -1.0
        candidates = np.argsort(-score, kind="stable")[: 2 * sparsity]
        merged = np.union1d(support, candidates)
        merged_fit = problem.fit(merged // n_cols, merged % n_cols)
        keep = np.argsort(-np.abs(merged_fit.weights), kind="stable")[:sparsity]
        pruned = np.sort(merged[keep])
        fit = problem.fit(pruned // n_cols, pruned % n_cols)
        candidate_res = problem.residual(pruned // n_cols, pruned % n_cols, fit.weights)
        current = float(np.linalg.norm(candidate_res))
        if it == 0 or current < previous:
            support, weights, Y_res = pruned, fit.weights, candidate_res
            regularized |= merged_fit.regularized or fit.regularized
            history.append(current)
        if previous - current <= tol * previous:
            break
        previous = current
    logger.debug("CoSaMP stopped after %d iterations, residual %.3e", len(history), history[-1])
    return problem.result(support // n_cols, support % n_cols, weights, history, regularized)


def ls_estimate(Y: np.ndarray, X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Minimum-norm least squares Ĥ = C⁺ Y X⁺."""
    return scipy.linalg.pinv(C) @ Y @ scipy.linalg.pinv(X)


def nmse(H_hat: np.ndarray, H: np.ndarray) -> float:
    """‖Ĥ - H‖_F² / ‖H‖_F² for one trial."""
    denominator = np.linalg.norm(H) ** 2
    if denominator == 0:
        raise InvalidParameterError("NMSE is undefined for a zero channel")
    return float(np.linalg.norm(H_hat - H) ** 2 / denominator)


def to_db(value: float) -> float:
    return 10.0 * math.log10(value) if value > 0 else -math.inf


def nmse_db(H_hat: np.ndarray, H: np.ndarray) -> float:
    return to_db(nmse(H_hat, H))


class NmseAccumulator:
    """Ratio of expectations: Σ‖Ĥ - H‖² / Σ‖H‖² over trials."""

    def __init__(self):
        self.numerator = 0.0
        self.denominator = 0.0
        self.count = 0
        self.excluded = 0

    def add_terms(self, numerator: float, denominator: float) -> bool:
        if denominator <= 0:
            self.excluded += 1
            logger.warning("zero-energy channel excluded from NMSE")
            return False
        self.numerator += numerator
        self.denominator += denominator
        self.count += 1
        return True

    def add(self, H_hat: np.ndarray, H: np.ndarray) -> bool:
        return self.add_terms(float(np.linalg.norm(H_hat - H) ** 2), float(np.linalg.norm(H) ** 2))

    @property
    def value(self) -> float:
        return self.numerator / self.denominator if self.denominator > 0 else math.nan

    @property
    def db(self) -> float:
        return to_db(self.value)


def default_sparsity(
    sigma_r: VarianceVector,
    sigma_s: VarianceVector,
    pilot_length: int,
    n_rf: int,
    energy_fraction: float = TWO_SIGMA_ENERGY,
) -> int:
    """Product of the per-side significant counts, capped at P·N_RF/4."""
    level = sigma_r.significant_count(energy_fraction) * sigma_s.significant_count(energy_fraction)
    return max(1, min(level, pilot_length * n_rf // 4))


@dataclass(frozen=True, eq=False)
class EstimationContext:
    """Per-trial side information shared by every estimator."""

    wd_receive: SparsifyingBasis
    wd_transmit: SparsifyingBasis
    ad_receive: SparsifyingBasis | None
    ad_transmit: SparsifyingBasis | None
    sparsity: int
    cosamp_max_iter: int = 30


class Estimator(ABC):
    """Common interface for every channel estimator."""

    name: str = ""

    @abstractmethod
    def estimate(self, observation: PilotObservation, context: EstimationContext) -> np.ndarray:
        """Return the spatial channel estimate Ĥ [N_R × N_S]."""


class LeastSquaresEstimator(Estimator):
    name = "LS"

    def estimate(self, observation: PilotObservation, context: EstimationContext) -> np.ndarray:
        return ls_estimate(observation.Y, observation.X, observation.C)


class _OmpEstimator(Estimator):
    domain = "wavenumber"

    def _bases(self, context: EstimationContext) -> tuple[SparsifyingBasis, SparsifyingBasis]:
        if self.domain == "wavenumber":
            return context.wd_receive, context.wd_transmit
        if context.ad_receive is None or context.ad_transmit is None:
            raise InvalidParameterError(f"{self.name} needs angular-domain bases in the estimation context")
        return context.ad_receive, context.ad_transmit

    def estimate(self, observation: PilotObservation, context: EstimationContext) -> np.ndarray:
        phi_r, phi_s = self._bases(context)
        n_iter = min(context.sparsity, phi_r.n_atoms * phi_s.n_atoms)
        return basis_omp(observation.Y, observation.X, observation.C, phi_r, phi_s, n_iter).H_hat


class WavenumberOmpEstimator(_OmpEstimator):
    name = "WD-OMP"
    domain = "wavenumber"


class AngularOmpEstimator(_OmpEstimator):
    name = "AD-OMP"
    domain = "angular"


class _CosampEstimator(_OmpEstimator):
    def estimate(self, observation: PilotObservation, context: EstimationContext) -> np.ndarray:
        phi_r, phi_s = self._bases(context)
        limit = phi_r.n_atoms * phi_s.n_atoms // 3
        sparsity = min(context.sparsity, limit)
        if sparsity < context.sparsity:
            logger.debug("%s sparsity clipped from %d to %d", self.name, context.sparsity, sparsity)
        result = basis_cosamp(
            observation.Y, observation.X, observation.C, phi_r, phi_s, max(1, sparsity), context.cosamp_max_iter
        )
        return result.H_hat


class WavenumberCosampEstimator(_CosampEstimator):
    name = "WD-CoSaMP"
    domain = "wavenumber"


class AngularCosampEstimator(_CosampEstimator):
    name = "AD-CoSaMP"
    domain = "angular"


ESTIMATOR_CATALOG: dict[str, type[Estimator]] = {
    cls.name: cls
    for cls in (
        LeastSquaresEstimator,
        WavenumberOmpEstimator,
        AngularOmpEstimator,
        WavenumberCosampEstimator,
        AngularCosampEstimator,
    )
}


def estimator_factory(kind: str) -> Estimator:
    """
    Create an estimator by its catalog name.

    Raises:
        InvalidParameterError: if `kind` is not in ESTIMATOR_CATALOG.
    """
    if kind in ESTIMATOR_CATALOG:
        return ESTIMATOR_CATALOG[kind]()
    raise InvalidParameterError(f"Unknown estimator kind: {kind}")
