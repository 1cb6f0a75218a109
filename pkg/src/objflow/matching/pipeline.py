"""
Instance matching between a reference and a target frame.

Steps, in order:

1. HDBSCAN over the features of all candidates of both frames;
2. quality pruning (objectness, mask score, mask area);
3. per-frame spatial split of each cluster with the k-means elbow rule on
   mask centroids;
4. the largest-mask candidate of every sub-cluster survives;
5. greedy cross-frame assignment on L2 feature distance.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..core import Frame, InstanceCandidate, mask_centroid
from ..errors import ConfigError, EmptyInputError, ObjflowError
from .hdbscan import NOISE, hdbscan_cluster
from .kmeans import elbow_partition


@dataclass(frozen=True)
class MatchingParams:
    """Pruning thresholds and clustering knobs for :func:`match_instances`."""

    min_area: float = 1500
    min_mask_score: float = 0.9
    min_objectness: float = 0.9
    cluster_compactness: float = 4000
    max_feature_distance: float = 2.0
    hdbscan_min_cluster_size: int = 2
    kmeans_max_k: int = 8
    seed: int = 0

    def __post_init__(self):
        for name in ("min_area", "min_mask_score", "min_objectness",
                     "cluster_compactness", "max_feature_distance"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.hdbscan_min_cluster_size < 2:
            raise ConfigError("hdbscan_min_cluster_size must be >= 2")
        if self.kmeans_max_k < 1:
            raise ConfigError("kmeans_max_k must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "MatchingParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown matching parameters: {sorted(unknown)}")
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name in d:
                cast = int if f.type in ("int", int) else float
                try:
                    kwargs[f.name] = cast(d[f.name])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"bad value for {f.name}: {d[f.name]!r}") from exc
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# stricter preset for cluttered scenes with larger objects
CLUTTERED_SCENE_PARAMS = MatchingParams(
    min_area=2500, min_mask_score=0.95, min_objectness=0.95,
    cluster_compactness=2000, max_feature_distance=2.5,
)


@dataclass(frozen=True)
class MatchSet:
    pairs: tuple[tuple[int, int, float], ...] = ()
    unmatched_ref: tuple[int, ...] = ()
    unmatched_tgt: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "pairs": [{"ref": r, "tgt": t, "dist": d} for r, t, d in self.pairs],
            "unmatched_ref": list(self.unmatched_ref),
            "unmatched_tgt": list(self.unmatched_tgt),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MatchSet":
        try:
            pairs = tuple((p["ref"], p["tgt"], float(p["dist"])) for p in d["pairs"])
            return cls(pairs, tuple(d["unmatched_ref"]), tuple(d["unmatched_tgt"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ObjflowError(f"malformed match set: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MatchSet":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ObjflowError(f"malformed match set JSON: {exc}") from exc


def prune_candidates(candidates: Sequence[InstanceCandidate], params: MatchingParams) -> list[InstanceCandidate]:
    # rejection is strict "<", so values exactly at a threshold pass
    return [
        c for c in candidates
        if not (c.objectness < params.min_objectness
                or c.mask_score < params.min_mask_score
                or c.area < params.min_area)
    ]


def split_cluster_spatially(members: Sequence[InstanceCandidate], compactness: float,
                            max_k: int) -> list[list[InstanceCandidate]]:
    """Partition same-frame cluster members whose mask centroids are far apart."""
    if not members:
        return []
    centroids = np.array([mask_centroid(c.mask) for c in members])
    labels, _ = elbow_partition(centroids, compactness, max_k)
    groups: list[list[InstanceCandidate]] = [[] for _ in range(labels.max() + 1)]
    for c, l in zip(members, labels):
        groups[l].append(c)
    return groups


def select_best_instance(sub_cluster: Sequence[InstanceCandidate]) -> InstanceCandidate:
    if not sub_cluster:
        raise EmptyInputError("cannot pick from an empty sub-cluster")
    return min(sub_cluster, key=lambda c: (-c.area, c.id))


def greedy_match(best_ref: Sequence[InstanceCandidate], best_tgt: Sequence[InstanceCandidate],
                 max_distance: float) -> MatchSet:
    """Accept cross-frame pairs in order of increasing feature distance."""
    if not best_ref or not best_tgt:
        return MatchSet((), tuple(sorted(c.id for c in best_ref)), tuple(sorted(c.id for c in best_tgt)))
    fr = np.stack([c.feature for c in best_ref])
    ft = np.stack([c.feature for c in best_tgt])
    dist = np.sqrt(((fr[:, None, :] - ft[None, :, :]) ** 2).sum(axis=2))
    order = sorted(
        ((dist[i, j], best_ref[i].id, best_tgt[j].id, i, j)
         for i in range(len(best_ref)) for j in range(len(best_tgt))),
        key=lambda e: e[:3],
    )
    used_r, used_t = set(), set()
    pairs = []
    limit = min(len(best_ref), len(best_tgt))
    for d, rid, tid, i, j in order:
        if d > max_distance or len(pairs) == limit:
            break
        if i in used_r or j in used_t:
            continue
        used_r.add(i)
        used_t.add(j)
        pairs.append((rid, tid, float(d)))
    return MatchSet(
        tuple(pairs),
        tuple(sorted(c.id for i, c in enumerate(best_ref) if i not in used_r)),
        tuple(sorted(c.id for j, c in enumerate(best_tgt) if j not in used_t)),
    )


@dataclass
class MatchTrace:
    """Intermediate results of one :func:`explain_match` run."""

    labels: np.ndarray
    n_clusters: int
    n_noise: int
    pruned_ids: dict = field(default_factory=dict)
    sub_clusters: list = field(default_factory=list)
    best_ref: list = field(default_factory=list)
    best_tgt: list = field(default_factory=list)

    def summary(self, matches: MatchSet) -> str:
        lines = [
            f"clusters found:   {self.n_clusters} ({self.n_noise} noise candidates)",
            f"pruned:           ref {len(self.pruned_ids.get('ref', []))}, "
            f"tgt {len(self.pruned_ids.get('tgt', []))}",
            f"sub-clusters:     {len(self.sub_clusters)}",
            f"best instances:   ref {len(self.best_ref)}, tgt {len(self.best_tgt)}",
            f"matches:          {len(matches.pairs)}",
            f"unmatched:        ref {list(matches.unmatched_ref)}, tgt {list(matches.unmatched_tgt)}",
        ]
        return "\n".join(lines)


def explain_match(ref: Sequence[InstanceCandidate], tgt: Sequence[InstanceCandidate],
                  params: MatchingParams = MatchingParams()) -> tuple[MatchSet, MatchTrace]:
    """Run the five matching steps and return the match set with a trace."""
    allc = list(ref) + list(tgt)
    if not allc:
        return MatchSet(), MatchTrace(np.zeros(0, dtype=int), 0, 0)
    labels = hdbscan_cluster(np.stack([c.feature for c in allc]), params.hdbscan_min_cluster_size)
    trace = MatchTrace(labels, int(labels.max()) + 1 if labels.size else 0, int((labels == NOISE).sum()))

    kept = {id(c) for c in prune_candidates(allc, params)}
    trace.pruned_ids = {
        "ref": [c.id for c in allc if c.frame is Frame.REF and id(c) not in kept],
        "tgt": [c.id for c in allc if c.frame is Frame.TGT and id(c) not in kept],
    }

    for lab in range(trace.n_clusters):
        members = [c for c, l in zip(allc, labels) if l == lab and id(c) in kept]
        for frame, best in ((Frame.REF, trace.best_ref), (Frame.TGT, trace.best_tgt)):
            part = [c for c in members if c.frame is frame]
            for sub in split_cluster_spatially(part, params.cluster_compactness, params.kmeans_max_k):
                trace.sub_clusters.append(sub)
                best.append(select_best_instance(sub))

    matches = greedy_match(trace.best_ref, trace.best_tgt, params.max_feature_distance)
    return matches, trace


def match_instances(ref: Sequence[InstanceCandidate], tgt: Sequence[InstanceCandidate],
                    params: MatchingParams = MatchingParams()) -> MatchSet:
    return explain_match(ref, tgt, params)[0]
