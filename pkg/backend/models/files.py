# backend/models/files.py
"""
On-disk schemas for graph, sample and rational-metric files.
"""

from typing import Dict, List, Any, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from config import settings
from exceptions import GraphFormatError


class _FileModel(BaseModel):
    format_version: int = Field(default=settings.FORMAT_VERSION)
    effective_config: Optional[Dict[str, Any]] = None

    @field_validator("format_version")
    @classmethod
    def _known_version(cls, v: int) -> int:
        if v > settings.FORMAT_VERSION:
            raise ValueError(f"format_version {v} is newer than supported {settings.FORMAT_VERSION}")
        return v

    @classmethod
    def parse(cls, data: Dict[str, Any]):
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise GraphFormatError(f"invalid {cls.__name__}: {e}") from e


class GraphFile(_FileModel):
    """Graph file: header, optional coordinates, sorted edge list"""
    space: Optional[Dict[str, Any]] = None
    p: float = Field(gt=0.0, lt=1.0)
    seed: int
    n: int = Field(ge=0)
    integer_margin: Optional[float] = None
    sample_seed: Optional[int] = None
    coords: Optional[List[List[float]]] = None
    edges: List[List[int]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _consistent(self) -> "GraphFile":
        if self.coords is not None:
            if self.space is None:
                raise ValueError("coords present without a space")
            if len(self.coords) != self.n:
                raise ValueError(f"{len(self.coords)} coordinates for n={self.n}")
        for e in self.edges:
            if len(e) != 2 or not 0 <= e[0] < e[1] < self.n:
                raise ValueError(f"bad edge {e}")
        return self


class SampleFile(_FileModel):
    space: Dict[str, Any]
    config: Dict[str, Any]
    rejections: int = 0
    points: List[List[float]]

    @model_validator(mode="after")
    def _consistent(self) -> "SampleFile":
        if self.config.get("n") != len(self.points):
            raise ValueError(f"config n={self.config.get('n')} but {len(self.points)} points")
        return self


class MetricSpaceFile(_FileModel):
    labels: List[str]
    d: List[List[str]]
    integer_distance_free: bool = True


class RationalGraphFile(_FileModel):
    space: MetricSpaceFile
    p: float = 0.5
    edges: List[List[str]] = Field(default_factory=list)
