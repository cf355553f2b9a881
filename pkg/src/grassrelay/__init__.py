"""Quantized transmit/relay/receive beamforming for MIMO amplify-and-forward relay channels."""

__version__ = "0.1.0"

from .channels import ChannelSet, CoherenceSchedule, LinkGains, SystemDims, sample_channel_set
from .codebooks import Codebook, generate_grassmannian, generate_random_codebook, load_codebook, save_codebook
from .numerics import RngStream
from .schemes import BeamformingSolution, SnrBreakdown
from .simulator import CurveSpec, FeedbackBudget, GainSweep, SchemeId, feedback_bits, simulate_ber

__all__ = [
    "BeamformingSolution", "ChannelSet", "Codebook", "CoherenceSchedule", "CurveSpec", "FeedbackBudget",
    "GainSweep", "LinkGains", "RngStream", "SchemeId", "SnrBreakdown", "SystemDims", "feedback_bits",
    "generate_grassmannian", "generate_random_codebook", "load_codebook", "sample_channel_set",
    "save_codebook", "simulate_ber",
]
