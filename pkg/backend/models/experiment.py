# backend/models/experiment.py
"""
Per-command experiment parameters. Values come from an INI config file section
and are overridden by command-line flags; the merged record is validated here
and echoed into every artifact.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from exceptions import ConfigError
from models.spaces import SpaceDescriptor


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return value


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    @classmethod
    def build(cls, values: Dict[str, Any]):
        try:
            return cls.model_validate(values)
        except ValidationError as e:
            raise ConfigError(f"invalid {cls.__name__}: {e}") from e

    def effective(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


class SpaceOptions(ExperimentConfig):
    space: str = "circle"
    L: Optional[float] = Field(default=None, gt=0.0)
    r: Optional[float] = Field(default=None, gt=0.0)
    sides: Optional[List[float]] = None

    @field_validator("sides", mode="before")
    @classmethod
    def _split_sides(cls, v: Any) -> Any:
        return _split_list(v)

    @model_validator(mode="after")
    def _space_parameters(self):
        needed = {"circle": "L", "sphere": "r", "torus": "sides", "box": "sides"}
        if self.space not in needed:
            raise ValueError(f"space must be one of {sorted(needed)}, got {self.space!r}")
        if getattr(self, needed[self.space]) is None:
            raise ValueError(f"space {self.space} needs --{needed[self.space]}")
        if self.space == "torus" and len(self.sides) != 2:
            raise ValueError("a torus needs two sides")
        return self

    def descriptor(self) -> SpaceDescriptor:
        if self.space == "circle":
            return SpaceDescriptor.circle(self.L)
        if self.space == "sphere":
            return SpaceDescriptor.sphere(self.r)
        if self.space == "torus":
            return SpaceDescriptor.torus(*self.sides)
        return SpaceDescriptor.box(*self.sides)


class SampleRun(SpaceOptions):
    n: int = Field(ge=0)
    seed: int = 0
    integer_margin: Optional[float] = Field(default=None, ge=0.0, lt=0.5)
    output: Optional[str] = None


class GenRun(SampleRun):
    p: float = Field(default=0.5, gt=0.0, lt=1.0)
    edge_seed: Optional[int] = None
    strip: bool = False


class AlphaRun(ExperimentConfig):
    graph: str
    sizes: List[int]
    delta: Optional[float] = Field(default=None, gt=0.0)
    seed: int = 0
    repeats: Optional[int] = Field(default=None, gt=0)
    mode: str = "graph"
    sentences: Optional[int] = Field(default=None, gt=0)
    csv: Optional[str] = None
    output: Optional[str] = None

    @field_validator("sizes", mode="before")
    @classmethod
    def _split_sizes(cls, v: Any) -> Any:
        return _split_list(v)

    @field_validator("sizes")
    @classmethod
    def _positive_sizes(cls, v: List[int]) -> List[int]:
        if not v or any(s < 1 for s in v):
            raise ValueError("sizes must be a non-empty list of positive integers")
        return v


class RecoverRun(ExperimentConfig):
    graph: str
    loop_mode: str = "adjacency_search"
    triples: int = Field(default=10_000, ge=0)
    seed: int = 0
    band: Optional[float] = Field(default=None, ge=0.0)
    translate_limit: Optional[int] = Field(default=500, gt=0)
    path_checks: int = Field(default=0, ge=0)
    output: Optional[str] = None


class GecRun(ExperimentConfig):
    graph: str
    trials: int = Field(default=200, gt=0)
    max_pattern: int = Field(default=4, ge=0)
    epsilon: float = Field(default=0.05, gt=0.0)
    seed: int = 0
    min_a: int = Field(default=0, ge=0)
    output: Optional[str] = None


class EfRun(ExperimentConfig):
    action: str = "batch"
    graph1: str
    graph2: str
    rounds: int = Field(default=3, gt=0)
    m: int = Field(default=1, ge=0)
    games: int = Field(default=100, gt=0)
    spoiler: str = "random"
    seed: int = 0
    oracle: str = "coordinates"
    interactive: bool = False
    output: Optional[str] = None

    @model_validator(mode="after")
    def _known_choices(self):
        if self.action not in ("play", "batch"):
            raise ValueError(f"ef action must be play or batch, got {self.action!r}")
        if self.oracle not in ("coordinates", "recovery"):
            raise ValueError(f"oracle must be coordinates or recovery, got {self.oracle!r}")
        if self.spoiler not in ("random", "boundary"):
            raise ValueError(f"spoiler must be random or boundary, got {self.spoiler!r}")
        return self


class UrysohnRun(ExperimentConfig):
    action: str = "bnf"
    space1: Optional[str] = None
    space2: Optional[str] = None
    graph1: Optional[str] = None
    graph2: Optional[str] = None
    map: Optional[str] = None
    x0: Optional[str] = None
    side: str = "forth"
    mode: str = "exact"
    rounds: int = Field(default=10, ge=0)
    seed: int = 0
    points: int = Field(default=6, gt=0)
    p: float = Field(default=0.5, gt=0.0, lt=1.0)
    output: Optional[str] = None

    @model_validator(mode="after")
    def _known_choices(self):
        if self.action not in ("extend", "bnf", "rado"):
            raise ValueError(f"urysohn action must be extend, bnf or rado, got {self.action!r}")
        if self.mode not in ("exact", "snap"):
            raise ValueError(f"mode must be exact or snap, got {self.mode!r}")
        if self.action == "extend" and (self.space1 is None or self.space2 is None or self.x0 is None):
            raise ValueError("extend needs --space1, --space2 and --x0")
        return self


SUITES = ("lemma", "alpha", "sentences", "recovery", "ef", "gec", "urysohn", "logic")


class VerifyRun(ExperimentConfig):
    suite: str = "all"
    quick: bool = False
    seed: int = 0
    csv: Optional[str] = None
    output: Optional[str] = None

    @field_validator("suite")
    @classmethod
    def _known_suite(cls, v: str) -> str:
        if v != "all" and v not in SUITES:
            raise ValueError(f"suite must be one of {SUITES + ('all',)}, got {v!r}")
        return v
