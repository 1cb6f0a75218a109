"""Single-file JSON run configuration.

Layout::

    {
      "matching":  {MatchingParams fields},
      "injection": {"alphas": {"4": 1.0, "5": 1.0, "6": 1.0}, "mask_aware": false},
      "eval":      {"exclusion_limit": 2000, "bin_edges": [0, 10, 60, 140],
                    "exclusion_mode": "magnitude", "weighting": "pixel"},
      "generator": {"scene": {SceneSpec fields}, "noise": {CandidateNoiseSpec fields}}
    }

Every section and field is optional. A file without a ``"matching"`` key
whose top-level keys are all MatchingParams fields is read as bare
matching parameters.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .evaluation import DEFAULT_BIN_EDGES, DEFAULT_EXCLUSION_LIMIT, _check_edges
from .flowfield import PyramidInjectionConfig
from .matching import MatchingParams
from .synthgen import CandidateNoiseSpec, SceneSpec

SECTIONS = {"matching", "injection", "eval", "generator"}


@dataclass(frozen=True)
class EvalConfig:
    exclusion_limit: float = DEFAULT_EXCLUSION_LIMIT
    bin_edges: tuple = DEFAULT_BIN_EDGES
    exclusion_mode: str = "magnitude"
    weighting: str = "pixel"

    def __post_init__(self):
        object.__setattr__(self, "bin_edges", _check_edges(self.bin_edges))
        if self.exclusion_mode not in ("magnitude", "component"):
            raise ConfigError(f"exclusion_mode must be 'magnitude' or 'component', got {self.exclusion_mode!r}")
        if self.weighting not in ("pixel", "image"):
            raise ConfigError(f"weighting must be 'pixel' or 'image', got {self.weighting!r}")


@dataclass(frozen=True)
class RunConfig:
    matching: MatchingParams = field(default_factory=MatchingParams)
    injection: PyramidInjectionConfig = field(default_factory=PyramidInjectionConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    scene: SceneSpec = field(default_factory=SceneSpec)
    noise: CandidateNoiseSpec = field(default_factory=CandidateNoiseSpec)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        if "matching" not in d and d and set(d) <= {f.name for f in dataclasses.fields(MatchingParams)}:
            return cls(matching=MatchingParams.from_dict(d))
        unknown = set(d) - SECTIONS
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        gen = d.get("generator", {})
        unknown = set(gen) - {"scene", "noise"}
        if unknown:
            raise ConfigError(f"unknown generator keys: {sorted(unknown)}")
        try:
            return cls(
                matching=MatchingParams.from_dict(d.get("matching", {})),
                injection=PyramidInjectionConfig.from_dict(d.get("injection", {})),
                eval=EvalConfig(**d.get("eval", {})),
                scene=SceneSpec.from_dict(gen.get("scene", {})),
                noise=CandidateNoiseSpec.from_dict(gen.get("noise", {})),
            )
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return {
            "matching": self.matching.to_dict(),
            "injection": self.injection.to_dict(),
            "eval": {**dataclasses.asdict(self.eval), "bin_edges": list(self.eval.bin_edges)},
            "generator": {"scene": self.scene.to_dict(), "noise": self.noise.to_dict()},
        }

    def with_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(
            self,
            matching=dataclasses.replace(self.matching, seed=seed),
            scene=dataclasses.replace(self.scene, seed=seed),
            noise=dataclasses.replace(self.noise, seed=seed),
        )


def load_config(path: str | os.PathLike | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return RunConfig.from_dict(data)


def load_matching_params(path: str | os.PathLike) -> MatchingParams:
    return load_config(path).matching
