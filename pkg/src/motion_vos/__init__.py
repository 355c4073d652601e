"""Motion-guided prompting and spatial-temporal memory selection for video object tracking."""

from .flow import FlowField, Frame, estimate_flow, masked_flow, warp_mask_forward
from .masks import Box, EmptyMaskError, Mask, Point, ProbMap, bounding_box, centroid, iou
from .memory import FrameScores, MemoryBank, SelectionConfig, temporal_select, update_memory
from .metrics import MetricsReport, evaluate_sequence, f_score, j_score
from .pipeline import RunConfig, run_pipeline, sweep
from .simulator import Scenario, generate_scenario, scenario_suite
from .sparse import extract_keypoints, extrapolate_keypoints

__version__ = "0.1.0"
