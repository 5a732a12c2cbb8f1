"""Motion-prior key-content selection for long videos.

Pipeline: split frames into temporal events (HSV differencing refined by
optical-flow windows), pick the smallest significant event set for a query,
prune per-frame tokens by camera-compensated motion, and emit a serializable
selection plan for a downstream multimodal model.
"""

from .des import (ADAPTIVE, DesConfig, EventSegment, coarse_boundaries,
                  frame_difference_series, refine_boundaries, rgb_to_hsv,
                  split_events)
from .ecq import (SelectionResult, SignificanceTable, brute_force_minimal,
                  event_significance, load_embeddings, read_embeddings,
                  select_events_minimal, select_events_topk, write_embeddings)
from .flowkit import (block_matching_flow, flow_magnitude, mean_magnitude,
                      read_flow_file, write_flow_file)
from .homography import (CompensationResult, RansacConfig,
                         compensate_camera_motion, estimate_homography,
                         homography_induced_flow)
from .mtp import (MtpConfig, TokenMask, motion_saliency_map, mtp_frame,
                  patch_mask, pixel_mask, prune_tokens)
from .planner import (BudgetConfig, SelectionPlan, allocate_frames,
                      assemble_plan, build_plan, expand_frame_budget,
                      plan_from_json, plan_to_json, priority_events,
                      sample_within_event)

__version__ = "0.1.0"

__all__ = [
    "ADAPTIVE", "BudgetConfig", "CompensationResult", "DesConfig",
    "EventSegment", "MtpConfig", "RansacConfig", "SelectionPlan",
    "SelectionResult", "SignificanceTable", "TokenMask", "allocate_frames",
    "assemble_plan", "block_matching_flow", "brute_force_minimal",
    "build_plan", "coarse_boundaries", "compensate_camera_motion",
    "estimate_homography", "event_significance", "expand_frame_budget",
    "flow_magnitude", "frame_difference_series", "homography_induced_flow",
    "load_embeddings", "mean_magnitude", "motion_saliency_map", "mtp_frame",
    "patch_mask", "pixel_mask", "plan_from_json", "plan_to_json",
    "priority_events", "prune_tokens", "read_embeddings", "read_flow_file",
    "refine_boundaries", "rgb_to_hsv", "sample_within_event",
    "select_events_minimal", "select_events_topk", "split_events",
    "write_embeddings", "write_flow_file",
]
