"""Object-aware optical flow utilities: instance matching between frames,
translation-field rasterization, pyramid injection, AEE evaluation and a
synthetic rigid-motion scene generator."""

__version__ = "0.1.0"

from .core import (BinaryMask, FlowField, Frame, GroundTruthObject, InstanceCandidate,
                   mask_centroid, mask_iou, rle_decode, rle_encode)
from .errors import ObjflowError
from .evaluation import AeeReport, aee, aggregate_reports, should_exclude
from .flo import load_flo, read_flo, save_flo, write_flo
from .flowfield import (PyramidInjectionConfig, downsample_flow, inject_translation_field,
                        rasterize_translation_field)
from .losses import feature_similarity_losses, feature_triplet_loss, mask_confirmation_loss
from .matching import MatchingParams, MatchSet, hdbscan_cluster, match_instances
from .synthgen import CandidateNoiseSpec, SceneSpec, generate_scene, synthesize_candidates
from .viz import render_flow_png
