"""Posterior matching over the constrained channel."""

from .codec import (
    Decoder,
    Encoder,
    InvariantReport,
    PmsTrace,
    SharedRandomness,
    decoder_collect_list,
    default_message_count,
    encoder_select_bit,
    phase2_decode,
    phase2_encode,
    phase2_layout,
    ratio_bound,
    run_pms,
    s_min,
)
from .engine import Child, IntervalState, MessageInterval

__all__ = [
    "Child", "Decoder", "Encoder", "IntervalState", "InvariantReport", "MessageInterval",
    "PmsTrace", "SharedRandomness", "decoder_collect_list", "default_message_count",
    "encoder_select_bit", "phase2_decode", "phase2_encode", "phase2_layout", "ratio_bound",
    "run_pms", "s_min",
]
