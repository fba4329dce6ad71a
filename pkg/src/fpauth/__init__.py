"""Fingerprint-embedded physical-layer authentication for a multi-user mmWave
downlink with artificial noise: channels, precoders, detection and
key-guessing probabilities, power allocation and a Monte Carlo engine."""

from .authentication import (
    AuthDecision,
    HypothesisStats,
    TagKey,
    detection_probability,
    detection_threshold,
    eve_hypothesis_stats,
    generate_tag,
    key_detection_probability,
    ml_decode_key,
    user_hypothesis_stats,
)
from .channel import ChannelRealization, ConfigError, Geometry, SystemConfig, noise_variance, sample_realization
from .montecarlo import MetricsRecord, TrialPlan, run_trials
from .numerics import RngStream
from .powerctl import (
    InfeasibleError,
    InfeasibleSplit,
    PowerSplit,
    Strategy,
    allocate_from_factors,
    omega_factor,
    psi_factor,
    strategy_splits,
)
from .precoding import PrecoderSet, build_precoders, sum_rate

__version__ = "0.1.0"
