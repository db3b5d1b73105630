from .triplets import TripletEvalReport, make_trace_fn, triplet_accuracy
from .allocentric import AllocentricityResult, allocentricity
from .probes import ProbeResult, linear_probe, zscore_across_layers, PROBE_TARGETS
from .ratemaps import Ratemap, ratemap, RATEMAP_FRAMES
from .lesion import lesion_curve
from .rand_index import ari, fg_ari, SegmentationResult
from .segment import segment, evaluate_segmentation

__all__ = [
    "TripletEvalReport", "make_trace_fn", "triplet_accuracy",
    "AllocentricityResult", "allocentricity",
    "ProbeResult", "linear_probe", "zscore_across_layers", "PROBE_TARGETS",
    "Ratemap", "ratemap", "RATEMAP_FRAMES",
    "lesion_curve",
    "ari", "fg_ari", "SegmentationResult",
    "segment", "evaluate_segmentation",
]
