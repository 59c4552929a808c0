"""
Wavenumber-domain channel synthesis and sparse channel estimation for
holographic MIMO links.
"""

from .channel import ChannelInstance, point_response, realize_channel, sample_wavenumber_channel, synthesize_spatial
from .config import ExperimentConfig
from .errors import (
    ConfigError,
    DegenerateProfileError,
    DegenerateSignalError,
    EvanescentWaveError,
    HoloSparseError,
    InvalidParameterError,
    OutOfValidityError,
)
from .estimators import (
    ESTIMATOR_CATALOG,
    EstimateResult,
    Estimator,
    basis_cosamp,
    basis_omp,
    estimator_factory,
    ls_estimate,
    nmse,
    nmse_db,
    solve_weights,
    wd_omp,
)
from .geometry import (
    BasisCache,
    BasisKind,
    SparsifyingBasis,
    SystemConfig,
    UpaGeometry,
    WavenumberGrid,
    build_ad_basis,
    build_wd_basis,
    enumerate_wavenumber_set,
    kz,
    rayleigh_distance,
)
from .measurement import PilotObservation, gen_combiner, gen_pilots, measure, noise_variance_for_snr, observe
from .presets import PRESET_CATALOG, preset_factory
from .scattering import Cluster, ScatteringProfile, VarianceVector, concentration_from_as, vmf_pdf, variance_vector
from .vec3 import Vec3

__version__ = "0.1.0"
