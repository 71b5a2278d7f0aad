"""Scene-specific channel modelling: statistics extraction, dataset regeneration, CSI feedback scoring."""

from .channel import (
    AngleDomainChannel,
    CarrierConfig,
    ChannelDims,
    ChannelSample,
    PowerProfile,
    TimeDomainChannel,
    power_angle_spectrum,
    power_delay_profile,
    steering_vector,
    to_angle_domain,
    to_frequency_domain,
    to_time_domain,
)
from .extract import ChannelStats, ExtractConfig, circular_spread, extract_stats, rms_spread
from .feedback import CodecModel, CsiTarget, DftCodebook, EvalReport, compute_csi_targets, evaluate, sgcs
from .fit import SubScenarioCatalog, build_catalog, build_sscm, catalog_match, load_baseline
from .generate import GenConfig, LspSet, generate_dataset, synthesize_channel

__version__ = "0.1.0"
