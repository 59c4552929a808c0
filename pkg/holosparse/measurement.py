"""
Pilot transmission through a dimension-reducing combiner: Y = C H X + N.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSignalError, InvalidParameterError
from .rng import Seed, as_generator, complex_normal

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PilotObservation:
    """
    Everything an estimator sees for one channel use.

    X and C are the effective pilot and combiner, with any mutual coupling
    already folded in (X' = M_S X, C' = C M_R).
    """

    X: np.ndarray
    C: np.ndarray
    Y: np.ndarray
    noise_variance: float
    snr_db: float

    @property
    def pilot_length(self) -> int:
        return int(self.X.shape[1])

    @property
    def n_rf(self) -> int:
        return int(self.C.shape[0])

    @property
    def compression_ratio(self) -> float:
        n_s = self.X.shape[0]
        n_r = self.C.shape[1]
        return self.pilot_length * self.n_rf / (n_s * n_r)


def gen_pilots(n_s: int, pilot_length: int, seed: Seed) -> np.ndarray:
    """Equiprobable ±1/√N_S entries, one column per time slot."""
    if n_s < 1 or pilot_length < 1:
        raise InvalidParameterError("n_s and pilot_length must be at least 1")
    rng = as_generator(seed)
    signs = rng.integers(0, 2, size=(n_s, pilot_length)) * 2 - 1
    return (signs / math.sqrt(n_s)).astype(complex)


def gen_combiner(n_rf: int, n_r: int, seed: Seed) -> np.ndarray:
    """i.i.d. CN(0, 1/N_R) combining matrix of shape [N_RF × N_R]."""
    if n_rf < 1 or n_r < 1:
        raise InvalidParameterError("n_rf and n_r must be at least 1")
    if n_rf > n_r:
        raise InvalidParameterError(f"n_rf ({n_rf}) cannot exceed n_r ({n_r})")
    return complex_normal(as_generator(seed), (n_rf, n_r), 1.0 / n_r)


def noise_variance_for_snr(C: np.ndarray, H: np.ndarray, X: np.ndarray, snr_db: float) -> float:
    """
    σ_n² such that ‖CHX‖_F² / (P N_RF σ_n²) equals the target SNR.

    Raises:
        DegenerateSignalError: if CHX is zero.
        InvalidParameterError: if snr_db is -inf or NaN.
    """
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise InvalidParameterError(f"snr_db must be finite or +inf, got {snr_db}")
    signal = np.linalg.norm(C @ H @ X) ** 2
    if signal == 0:
        raise DegenerateSignalError("noiseless received signal is zero")
    if snr_db == math.inf:
        return 0.0
    return float(signal / (X.shape[1] * C.shape[0] * 10.0 ** (snr_db / 10.0)))


def observe(H: np.ndarray, X: np.ndarray, C: np.ndarray, noise_variance: float, seed: Seed) -> np.ndarray:
    """Y = C H X + N with N i.i.d. CN(0, σ_n²)."""
    if C.shape[1] != H.shape[0] or H.shape[1] != X.shape[0]:
        raise InvalidParameterError(f"cannot form C{C.shape} H{H.shape} X{X.shape}")
    if not 0 <= noise_variance < math.inf:
        raise InvalidParameterError(f"noise variance must be finite and nonnegative, got {noise_variance}")
    Y = C @ H @ X
    if noise_variance > 0:
        Y = Y + complex_normal(as_generator(seed), Y.shape, noise_variance)
    return Y


def measure(
    H: np.ndarray,
    X: np.ndarray,
    C: np.ndarray,
    snr_db: float,
    seed: Seed,
    coupling_receive: np.ndarray | None = None,
    coupling_transmit: np.ndarray | None = None,
) -> PilotObservation:
    """
    Observe H at a target SNR.

    Couplings act as C' = C M_R and X' = M_S X, so estimators recover the
    uncoupled channel from the effective matrices.
    """
    if coupling_receive is not None:
        if coupling_receive.shape != (C.shape[1], C.shape[1]):
            raise InvalidParameterError("receive coupling does not match the combiner width")
        C = C @ coupling_receive
    if coupling_transmit is not None:
        if coupling_transmit.shape != (X.shape[0], X.shape[0]):
            raise InvalidParameterError("transmit coupling does not match the pilot height")
        X = coupling_transmit @ X
    noise_variance = noise_variance_for_snr(C, H, X, snr_db)
    Y = observe(H, X, C, noise_variance, seed)
    logger.debug("observation at %.1f dB: noise variance %.3e", snr_db, noise_variance)
    return PilotObservation(X, C, Y, noise_variance, snr_db)


def realized_snr_db(observation: PilotObservation, H: np.ndarray) -> float:
    """SNR implied by the noise actually drawn, in dB."""
    signal = observation.C @ H @ observation.X
    noise = observation.Y - signal
    noise_power = np.linalg.norm(noise) ** 2 / noise.size
    if noise_power == 0:
        return math.inf
    return 10.0 * math.log10(np.linalg.norm(signal) ** 2 / (noise.size * noise_power))
