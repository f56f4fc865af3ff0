"""Photon-number statistics, phase-sensitive amplification and NC/NG witnesses."""

__version__ = "0.1.0"

from .errors import DomainError, EstimationError, OpaWitnessError, PulseFormatError, ValidationError
from .fock_core import (
    IntensityDistribution,
    MomentSummary,
    PhotonNumberDistribution,
    PulseRecordSet,
    SampleMoments,
    VerdictCategory,
    WitnessVerdict,
    estimate_moments,
    moments,
    validate,
)
from .states import (
    HeraldedSourceConfig,
    apply_loss,
    heralded_spdc,
    make_coherent,
    make_fock,
    make_thermal,
    make_vacuum,
    mix,
)
from .opa import GainSetting, amplified_mean, asymptotic_moments, intensity_distribution, sample_pulses
from .witnesses import (
    boundary_curve,
    classify_moments,
    classify_probabilities,
    nc_bound_post,
    ng_bound_post,
    floor_post,
)
from .hbt import HbtConfig, ClickStatistics, correct_loss, heralding_efficiency, infer_probabilities, simulate_clicks
from .pipeline import analyze, sweep_brightness
