"""
Built-in experiment configs.

Desk-scale presets shrink the receiver to 17×17 with 16 RF chains so a full
sweep finishes on a laptop; full-scale presets use the 65×65 receiver with 64
RF chains and are marked long.
"""

from __future__ import annotations

from collections.abc import Callable

from .config import ExperimentConfig
from .errors import InvalidParameterError

_DESK = dict(
    receive_nx=17,
    receive_ny=17,
    transmit_nx=5,
    transmit_ny=5,
    spacing=0.25,
    n_rf=16,
    pilot_length=32,
    trials=200,
)

_FULL = dict(
    receive_nx=65,
    receive_ny=65,
    transmit_nx=5,
    transmit_ny=5,
    spacing=0.25,
    n_rf=64,
    pilot_length=32,
    trials=100,
    long=True,
)

_SNR_SWEEP = dict(sweep_variable="snr_db", sweep_values=(0.0, 5.0, 10.0, 15.0, 20.0))
_SPACING_SWEEP = dict(sweep_variable="spacing", sweep_values=(0.5, 0.25, 0.125), snr_db=10.0)


def fig2a_desk() -> ExperimentConfig:
    return ExperimentConfig(name="fig2a-desk", **_DESK, **_SNR_SWEEP)


def fig2b_desk() -> ExperimentConfig:
    return ExperimentConfig(
        name="fig2b-desk",
        **_DESK,
        snr_db=10.0,
        sweep_variable="pilot_length",
        sweep_values=(8.0, 16.0, 32.0, 48.0, 64.0),
    )


def fig2c_desk() -> ExperimentConfig:
    return ExperimentConfig(name="fig2c-desk", **_DESK, receive_aperture=4.0, transmit_aperture=1.0, **_SPACING_SWEEP)


def fig2a_paper() -> ExperimentConfig:
    return ExperimentConfig(name="fig2a-paper", **_FULL, **_SNR_SWEEP)


def fig2b_paper() -> ExperimentConfig:
    return ExperimentConfig(
        name="fig2b-paper",
        **_FULL,
        snr_db=10.0,
        sweep_variable="pilot_length",
        sweep_values=(5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0),
    )


def fig2c_paper() -> ExperimentConfig:
    # receive aperture follows L = N·δ at δ = λ/4 (65·λ/4); the transmit aperture is held at λ as in the desk run
    return ExperimentConfig(
        name="fig2c-paper", **_FULL, receive_aperture=16.25, transmit_aperture=1.0, **_SPACING_SWEEP
    )


def fig1_map() -> ExperimentConfig:
    return ExperimentConfig(
        name="fig1-map",
        experiment="variance_map",
        receive_nx=129,
        receive_ny=129,
        transmit_nx=129,
        transmit_ny=129,
        spacing=0.25,
        n_rf=1,
        n_clusters=4,
        alpha_receive=140.0,
        alpha_transmit=140.0,
        trials=1,
    )


PRESET_CATALOG: dict[str, Callable[[], ExperimentConfig]] = {
    "fig2a-desk": fig2a_desk,
    "fig2b-desk": fig2b_desk,
    "fig2c-desk": fig2c_desk,
    "fig2a-paper": fig2a_paper,
    "fig2b-paper": fig2b_paper,
    "fig2c-paper": fig2c_paper,
    "fig1-map": fig1_map,
}


def preset_factory(name: str) -> ExperimentConfig:
    """
    Build a preset config by name.

    Raises:
        InvalidParameterError: if the preset is unknown.
    """
    if name in PRESET_CATALOG:
        return PRESET_CATALOG[name]()
    raise InvalidParameterError(f"Unknown preset: {name}; known: {', '.join(PRESET_CATALOG)}")
