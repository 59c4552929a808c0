"""
Monte-Carlo NMSE experiments and variance-map export.

Every trial is a pure function of (config, sweep index, trial index): all of
its randomness comes from streams keyed by the master seed and the trial, so
trials can run in any order or process. Aggregation sums per-trial NMSE terms
in (sweep, trial) order.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm import tqdm

from .channel import ChannelInstance, realize_channel
from .config import ExperimentConfig
from .errors import HoloSparseError, InvalidParameterError
from .estimators import EstimationContext, NmseAccumulator, default_sparsity, estimator_factory
from .geometry import BasisCache, BasisKind, grid_for
from .measurement import gen_combiner, gen_pilots, measure
from .rng import StreamTag, stream
from .scattering import ScatteringProfile, Side, sample_profile, variance_vector

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["sweep", "estimator", "nmse", "nmse_db", "trials", "seconds"]
TRIAL_LOG_COLUMNS = ["sweep", "estimator", "trial", "numerator", "denominator"]


@dataclass(frozen=True)
class ResultRow:
    sweep: float
    estimator: str
    nmse: float
    nmse_db: float
    trials: int
    numerator: float
    denominator: float
    seconds: float


@dataclass
class TrialOutcome:
    """Per-estimator NMSE terms (‖Ĥ - H‖², ‖H‖²) and wall time for one trial."""

    sweep_index: int
    trial: int
    terms: dict[str, tuple[float, float]] = field(default_factory=dict)
    seconds: dict[str, float] = field(default_factory=dict)
    failed: bool = False


def sample_profiles(config: ExperimentConfig, trial: int) -> tuple[ScatteringProfile, ScatteringProfile]:
    """Receive and transmit cluster draws for one trial, shared by every sweep point."""
    rng = stream(config.master_seed, trial, StreamTag.CLUSTERS)
    zenith = (math.radians(config.zenith_min_deg), math.radians(config.zenith_max_deg))
    azimuth = (math.radians(config.azimuth_min_deg), math.radians(config.azimuth_max_deg))
    receive = sample_profile(
        config.n_clusters, config.alpha_receive, rng, Side.RECEIVE, zenith, azimuth, config.cluster_weights
    )
    transmit = sample_profile(
        config.n_clusters, config.alpha_transmit, rng, Side.TRANSMIT, zenith, azimuth, config.cluster_weights
    )
    return receive, transmit


def trial_channel(config: ExperimentConfig, trial: int, sweep_index: int = 0):
    """The channel realisation of one trial at one sweep point, with its variance vectors."""
    point = config.point(sweep_index)
    receive_profile, transmit_profile = sample_profiles(config, trial)
    return realize_channel(
        point.receive,
        point.transmit,
        receive_profile,
        transmit_profile,
        config.system,
        stream(config.master_seed, trial, StreamTag.CHANNEL),
        config.quadrature_points,
    )


def run_trial(config: ExperimentConfig, trial: int, sweep_index: int = 0) -> TrialOutcome:
    """
    One Monte-Carlo trial: draw clusters and channel, pilots, combiner and
    noise, then run every configured estimator.

    Failures inside the trial are logged and reported through `failed`.
    """
    outcome = TrialOutcome(sweep_index, trial)
    try:
        point = config.point(sweep_index)
        wavelength = config.system.wavelength
        instance, sigma_r, sigma_s = trial_channel(config, trial, sweep_index)
        X = gen_pilots(point.transmit.n_elements, point.pilot_length, stream(config.master_seed, trial, StreamTag.PILOT))
        C = gen_combiner(config.n_rf, point.receive.n_elements, stream(config.master_seed, trial, StreamTag.COMBINER))
        observation = measure(
            instance.H, X, C, point.snr_db, stream(config.master_seed, trial, StreamTag.NOISE, sweep_index)
        )
        sparsity = config.n_iter or default_sparsity(sigma_r, sigma_s, point.pilot_length, config.n_rf, config.energy_fraction)
        needs_angular = any(name.startswith("AD-") for name in config.estimators)
        context = EstimationContext(
            BasisCache.get(point.receive, BasisKind.WAVENUMBER, wavelength),
            BasisCache.get(point.transmit, BasisKind.WAVENUMBER, wavelength),
            BasisCache.get(point.receive, BasisKind.ANGULAR, wavelength) if needs_angular else None,
            BasisCache.get(point.transmit, BasisKind.ANGULAR, wavelength) if needs_angular else None,
            sparsity,
            config.cosamp_max_iter,
        )
        energy = float(np.linalg.norm(instance.H) ** 2)
        for name in config.estimators:
            start = time.perf_counter()
            H_hat = estimator_factory(name).estimate(observation, context)
            outcome.seconds[name] = time.perf_counter() - start
            outcome.terms[name] = (float(np.linalg.norm(H_hat - instance.H) ** 2), energy)
    except (HoloSparseError, np.linalg.LinAlgError) as e:
        logger.warning("trial %d at sweep index %d failed: %s", trial, sweep_index, e)
        outcome.terms.clear()
        outcome.seconds.clear()
        outcome.failed = True
    return outcome


def _run_job(args: tuple[ExperimentConfig, int, int]) -> TrialOutcome:
    config, trial, sweep_index = args
    return run_trial(config, trial, sweep_index)


def collect_trials(config: ExperimentConfig, threads: int = 1, progress: bool = True) -> list[TrialOutcome]:
    """Run every (sweep point, trial) pair, serially or on a process pool."""
    if config.experiment != "nmse":
        raise InvalidParameterError(f"config {config.name!r} is not an NMSE experiment")
    jobs = [(config, trial, s) for s in range(len(config.sweep)) for trial in range(config.trials)]
    for s in range(len(config.sweep)):
        point = config.point(s)
        logger.info(
            "sweep %s=%g: receive %dx%d (aperture %.4g lambda), transmit %dx%d (aperture %.4g lambda)",
            config.sweep_variable,
            point.sweep_value,
            point.receive.n_x,
            point.receive.n_y,
            point.receive.aperture_x / config.system.wavelength,
            point.transmit.n_x,
            point.transmit.n_y,
            point.transmit.aperture_x / config.system.wavelength,
        )
    bar = tqdm(total=len(jobs), desc=config.name, disable=not progress)
    outcomes: list[TrialOutcome] = []
    if threads <= 1:
        for job in jobs:
            outcomes.append(_run_job(job))
            bar.update()
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_job, job) for job in jobs]
            for future in as_completed(futures):
                outcomes.append(future.result())
                bar.update()
    bar.close()
    outcomes.sort(key=lambda o: (o.sweep_index, o.trial))
    return outcomes


def aggregate(config: ExperimentConfig, outcomes: list[TrialOutcome]) -> list[ResultRow]:
    """Ratio-of-expectations NMSE per sweep value and estimator."""
    rows = []
    for s, value in enumerate(config.sweep):
        selected = sorted((o for o in outcomes if o.sweep_index == s), key=lambda o: o.trial)
        failed = [o.trial for o in selected if o.failed]
        if failed:
            logger.warning("sweep %g: %d failed trials excluded: %s", value, len(failed), failed)
        for name in config.estimators:
            accumulator = NmseAccumulator()
            seconds = 0.0
            for outcome in selected:
                if outcome.failed:
                    continue
                accumulator.add_terms(*outcome.terms[name])
                seconds += outcome.seconds[name]
            rows.append(
                ResultRow(
                    float(value),
                    name,
                    accumulator.value,
                    accumulator.db,
                    accumulator.count,
                    accumulator.numerator,
                    accumulator.denominator,
                    seconds,
                )
            )
    return rows


def run_experiment(
    config: ExperimentConfig,
    out: str | Path | None = None,
    threads: int = 1,
    progress: bool = True,
    trial_log: str | Path | None = None,
) -> list[ResultRow]:
    """Run every trial of a config, aggregate, and optionally write the CSVs."""
    outcomes = collect_trials(config, threads, progress)
    rows = aggregate(config, outcomes)
    if out is not None:
        write_results(rows, out)
    if trial_log is not None:
        write_trial_log(config, outcomes, trial_log)
    for row in rows:
        logger.info("%s=%g %-9s NMSE %.4g (%.2f dB) over %d trials", config.sweep_variable, row.sweep, row.estimator, row.nmse, row.nmse_db, row.trials)
    return rows


def results_frame(rows: list[ResultRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [[r.sweep, r.estimator, r.nmse, r.nmse_db, r.trials, r.seconds] for r in rows], columns=RESULT_COLUMNS
    )


def write_results(rows: list[ResultRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    results_frame(rows).to_csv(path, index=False)
    logger.info("wrote %d result rows to %s", len(rows), path)
    return path


def write_trial_log(config: ExperimentConfig, outcomes: list[TrialOutcome], path: str | Path) -> Path:
    records = [
        [config.sweep[o.sweep_index], name, o.trial, *o.terms[name]]
        for o in outcomes
        if not o.failed
        for name in config.estimators
    ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(records, columns=TRIAL_LOG_COLUMNS).to_csv(path, index=False)
    return path


def variance_map_export(
    profile: ScatteringProfile, grid, k: float, path: str | Path | None = None, subdivisions: int = 8
) -> pd.DataFrame:
    """(l_x, l_y, σ²) rows for one side, ready for a heat map."""
    frame = variance_vector(profile, grid, k, subdivisions).as_frame()
    if path is not None:
        frame.to_csv(path, index=False)
    return frame


def run_variance_map(config: ExperimentConfig, out: str | Path | None = None) -> pd.DataFrame:
    """Both sides' variance maps for the first cluster draw of a config, tagged by side."""
    point = config.point(0)
    system = config.system
    receive_profile, transmit_profile = sample_profiles(config, 0)
    frames = []
    for side, profile, geom in (
        (Side.RECEIVE, receive_profile, point.receive),
        (Side.TRANSMIT, transmit_profile, point.transmit),
    ):
        frame = variance_map_export(profile, grid_for(geom, system.wavelength), system.wavenumber, None, config.quadrature_points)
        frame.insert(0, "side", side.value)
        frames.append(frame)
    result = pd.concat(frames, ignore_index=True)
    if out is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        result.to_csv(out, index=False)
        logger.info("wrote variance map (%d cells) to %s", len(result), out)
    return result


def export_channel(config: ExperimentConfig, trial: int, sweep_index: int, stem: str | Path) -> ChannelInstance:
    """Write the channel of one trial in the portable JSON + CSV format."""
    instance, _, _ = trial_channel(config, trial, sweep_index)
    instance.export(stem)
    return instance
