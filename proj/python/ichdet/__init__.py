"""Weakly supervised hemorrhage localization toolkit.

MIL pooling heads (max-pooling and gated attention), h-maxima peak
detection on attention maps, point-in-box evaluation metrics and
Gaussian-process Bayesian optimization of the detector parameters.
"""

from ._core import (
    activation_map_from_features,
    apply_window,
    attention_map_from_weights,
    attention_pool,
    bilinear_resize,
    build_input_channels,
    classify,
    compute_stats,
    detect_peaks,
    expected_improvement,
    gated_attention_weights,
    generate_bags,
    generate_scene,
    gray_dilate,
    h_maxima,
    latin_hypercube,
    match_slice,
    max_pool_score,
    morph_reconstruct_dilation,
    optimize_detector,
    report,
    standardize,
    train_mil_head,
    weighted_cross_entropy,
)

__version__ = "0.1.0"

__all__ = [
    "activation_map_from_features",
    "apply_window",
    "attention_map_from_weights",
    "attention_pool",
    "bilinear_resize",
    "build_input_channels",
    "classify",
    "compute_stats",
    "detect_peaks",
    "expected_improvement",
    "gated_attention_weights",
    "generate_bags",
    "generate_scene",
    "gray_dilate",
    "h_maxima",
    "latin_hypercube",
    "match_slice",
    "max_pool_score",
    "morph_reconstruct_dilation",
    "optimize_detector",
    "report",
    "standardize",
    "train_mil_head",
    "weighted_cross_entropy",
]
