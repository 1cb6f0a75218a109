from .hdbscan import NOISE, hdbscan_cluster
from .kmeans import elbow_partition, kmeans
from .pipeline import (
    CLUTTERED_SCENE_PARAMS,
    MatchingParams,
    MatchSet,
    MatchTrace,
    explain_match,
    greedy_match,
    match_instances,
    prune_candidates,
    select_best_instance,
    split_cluster_spatially,
)

__all__ = [
    "NOISE", "hdbscan_cluster", "elbow_partition", "kmeans",
    "CLUTTERED_SCENE_PARAMS", "MatchingParams", "MatchSet", "MatchTrace",
    "explain_match", "greedy_match", "match_instances", "prune_candidates",
    "select_best_instance", "split_cluster_spatially",
]
