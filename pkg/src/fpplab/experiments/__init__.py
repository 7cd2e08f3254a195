"""Experiment drivers: truncation search, good sets, flips, antichains, small balls and scans."""

from .flips import AntichainResult, FlipResult, antichain_extract, flip_delta, pick_split
from .goodset import GoodSetReport, SmallBallResult, good_set_probe, small_ball_scan
from .model import ModelParams
from .scans import ReckoningReport, ScanResult, fluctuation_scan, reckoning_check, reckoning_from_samples
from .truncation import (
    ConditionalMeanEstimate,
    TruncationResult,
    TruncationWindow,
    clamp_truncate,
    estimate_conditional_mean,
    find_truncation,
)

__all__ = [
    "AntichainResult",
    "ConditionalMeanEstimate",
    "FlipResult",
    "GoodSetReport",
    "ModelParams",
    "ReckoningReport",
    "ScanResult",
    "SmallBallResult",
    "TruncationResult",
    "TruncationWindow",
    "antichain_extract",
    "clamp_truncate",
    "estimate_conditional_mean",
    "find_truncation",
    "flip_delta",
    "fluctuation_scan",
    "good_set_probe",
    "pick_split",
    "reckoning_check",
    "reckoning_from_samples",
    "small_ball_scan",
]
