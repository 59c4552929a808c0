"""
Experiment configuration.

Configs are flat JSON objects; lengths are in wavelengths and angles in degrees.
Unknown keys are rejected so a typo never silently falls back to a default.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .estimators import ESTIMATOR_CATALOG
from .geometry import SystemConfig, UpaGeometry

SWEEP_VARIABLES = ("none", "snr_db", "pilot_length", "spacing")
EXPERIMENTS = ("nmse", "variance_map")


@dataclass(frozen=True)
class ExperimentPoint:
    """Everything that varies along a sweep, resolved for one sweep value."""

    sweep_value: float
    snr_db: float
    pilot_length: int
    receive: UpaGeometry
    transmit: UpaGeometry


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "custom"
    experiment: str = "nmse"
    carrier_frequency_hz: float = 30e9
    receive_nx: int = 17
    receive_ny: int = 17
    transmit_nx: int = 5
    transmit_ny: int = 5
    spacing: float = 0.25
    receive_aperture: float | None = None
    transmit_aperture: float | None = None
    n_rf: int = 16
    pilot_length: int = 32
    snr_db: float = 10.0
    n_clusters: int = 2
    cluster_weights: tuple[float, ...] | None = None
    zenith_min_deg: float = 0.0
    zenith_max_deg: float = 90.0
    azimuth_min_deg: float = 0.0
    azimuth_max_deg: float = 360.0
    alpha_receive: float = 140.0
    alpha_transmit: float = 140.0
    sweep_variable: str = "none"
    sweep_values: tuple[float, ...] = ()
    estimators: tuple[str, ...] = ("LS", "WD-OMP", "AD-OMP", "WD-CoSaMP", "AD-CoSaMP")
    trials: int = 200
    master_seed: int = 2024
    n_iter: int | None = None
    cosamp_max_iter: int = 30
    energy_fraction: float = 0.9544
    quadrature_points: int = 8
    long: bool = False

    def __post_init__(self):
        for key in ("cluster_weights", "sweep_values", "estimators"):
            value = getattr(self, key)
            if value is not None and not isinstance(value, tuple):
                object.__setattr__(self, key, tuple(value))
        self._validate()

    def _validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"must be one of {EXPERIMENTS}")
        if not self.carrier_frequency_hz > 0:
            raise ConfigError("carrier_frequency_hz", "must be positive")
        for key in ("receive_nx", "receive_ny", "transmit_nx", "transmit_ny"):
            n = getattr(self, key)
            if not isinstance(n, int) or isinstance(n, bool) or n < 1 or n % 2 == 0:
                raise ConfigError(key, f"must be an odd positive integer, got {n!r}")
        if not self.spacing > 0:
            raise ConfigError("spacing", "must be positive (wavelengths)")
        for key in ("receive_aperture", "transmit_aperture"):
            value = getattr(self, key)
            if value is not None and not value > 0:
                raise ConfigError(key, "must be positive (wavelengths)")
        if self.n_rf < 1:
            raise ConfigError("n_rf", "must be at least 1")
        if self.pilot_length < 1:
            raise ConfigError("pilot_length", "must be at least 1")
        if self.n_clusters < 1:
            raise ConfigError("n_clusters", "must be at least 1")
        if self.cluster_weights is not None:
            if len(self.cluster_weights) != self.n_clusters:
                raise ConfigError("cluster_weights", f"needs {self.n_clusters} entries")
            if any(w <= 0 for w in self.cluster_weights) or abs(math.fsum(self.cluster_weights) - 1.0) > 1e-9:
                raise ConfigError("cluster_weights", "must be positive and sum to 1")
        if not 0.0 <= self.zenith_min_deg <= self.zenith_max_deg <= 90.0:
            raise ConfigError("zenith_max_deg", "zenith range must lie within [0, 90] degrees")
        if not 0.0 <= self.azimuth_min_deg <= self.azimuth_max_deg <= 360.0:
            raise ConfigError("azimuth_max_deg", "azimuth range must lie within [0, 360] degrees")
        for key in ("alpha_receive", "alpha_transmit"):
            if not getattr(self, key) > 0:
                raise ConfigError(key, "must be positive")
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ConfigError("sweep_variable", f"must be one of {SWEEP_VARIABLES}")
        if self.sweep_variable != "none" and not self.sweep_values:
            raise ConfigError("sweep_values", "needs at least one value for a sweep")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ConfigError("snr_db", "must be finite or +inf")
        if self.sweep_variable == "snr_db" and any(math.isnan(v) or v == -math.inf for v in self.sweep_values):
            raise ConfigError("sweep_values", "SNR values must be finite or +inf")
        if self.sweep_variable == "pilot_length" and any(v < 1 or v != int(v) for v in self.sweep_values):
            raise ConfigError("sweep_values", "pilot lengths must be positive integers")
        if self.sweep_variable == "spacing" and any(v <= 0 for v in self.sweep_values):
            raise ConfigError("sweep_values", "spacings must be positive (wavelengths)")
        if self.experiment == "nmse":
            if not self.estimators:
                raise ConfigError("estimators", "at least one estimator is required")
            for name in self.estimators:
                if name not in ESTIMATOR_CATALOG:
                    raise ConfigError("estimators", f"unknown estimator {name!r}; known: {sorted(ESTIMATOR_CATALOG)}")
        if self.trials < 1:
            raise ConfigError("trials", "must be at least 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed", "must be an unsigned 64-bit integer")
        if self.n_iter is not None and self.n_iter < 1:
            raise ConfigError("n_iter", "must be at least 1 when given")
        if self.cosamp_max_iter < 1:
            raise ConfigError("cosamp_max_iter", "must be at least 1")
        if not 0.0 < self.energy_fraction <= 1.0:
            raise ConfigError("energy_fraction", "must lie in (0, 1]")
        if self.quadrature_points < 1:
            raise ConfigError("quadrature_points", "must be at least 1")
        for index in range(len(self.sweep)):
            point = self.point(index)
            if self.n_rf > point.receive.n_elements:
                raise ConfigError("n_rf", f"exceeds the {point.receive.n_elements} receive elements")

    @property
    def system(self) -> SystemConfig:
        return SystemConfig(self.carrier_frequency_hz)

    @property
    def sweep(self) -> tuple[float, ...]:
        """Sweep values; a config without a sweep has the single value of its fixed point."""
        if self.sweep_variable == "none":
            return (self.snr_db,)
        return self.sweep_values

    def point(self, index: int) -> ExperimentPoint:
        value = self.sweep[index]
        wavelength = self.system.wavelength
        snr_db = float(value) if self.sweep_variable == "snr_db" else self.snr_db
        pilot_length = int(value) if self.sweep_variable == "pilot_length" else self.pilot_length
        if self.sweep_variable == "spacing":
            spacing = float(value) * wavelength
            receive_aperture = self.receive_aperture or self.receive_nx * self.spacing
            transmit_aperture = self.transmit_aperture or self.transmit_nx * self.spacing
            receive = UpaGeometry.from_aperture(receive_aperture * wavelength, receive_aperture * wavelength, spacing)
            transmit = UpaGeometry.from_aperture(transmit_aperture * wavelength, transmit_aperture * wavelength, spacing)
        else:
            spacing = self.spacing * wavelength
            receive = UpaGeometry(self.receive_nx, self.receive_ny, spacing)
            transmit = UpaGeometry(self.transmit_nx, self.transmit_ny, spacing)
        return ExperimentPoint(float(value), snr_db, pilot_length, receive, transmit)

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown key")
        kwargs = {}
        for f in fields(cls):
            if f.name in data:
                kwargs[f.name] = _coerce(f.name, data[f.name])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: str | Path) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError("<file>", f"not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("<file>", "top level must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        for key in ("cluster_weights", "sweep_values", "estimators"):
            if data[key] is not None:
                data[key] = list(data[key])
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


_INT_KEYS = {
    "receive_nx",
    "receive_ny",
    "transmit_nx",
    "transmit_ny",
    "n_rf",
    "pilot_length",
    "n_clusters",
    "trials",
    "master_seed",
    "n_iter",
    "cosamp_max_iter",
    "quadrature_points",
}


def _coerce(key: str, value):
    """Check the JSON type of one value against the field it fills."""
    if value is None:
        if key in ("receive_aperture", "transmit_aperture", "n_iter", "cluster_weights"):
            return None
        raise ConfigError(key, "must not be null")
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"must be an integer, got {value!r}")
        return value
    if key in ("name", "experiment", "sweep_variable"):
        if not isinstance(value, str):
            raise ConfigError(key, "must be a string")
        return value
    if key == "long":
        if not isinstance(value, bool):
            raise ConfigError(key, "must be true or false")
        return value
    if key == "estimators":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(key, "must be a list of estimator names")
        return tuple(value)
    if key in ("sweep_values", "cluster_weights"):
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            raise ConfigError(key, "must be a list of numbers")
        return tuple(float(v) for v in value)
    if not _is_number(value):
        raise ConfigError(key, f"must be a number, got {value!r}")
    return float(value)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)
