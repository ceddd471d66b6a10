# backend/models/spaces.py
"""
Space descriptors for the metric spaces graphs are drawn on.
Circle, Sphere and FlatTorus carry a uniformly distributed measure; Box and Finite do not.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Any, Optional, Tuple
import logging

from exceptions import MismatchedSpace, GraphFormatError
from models.metric import RationalMetricSpace

logger = logging.getLogger(__name__)

Point = Tuple[float, ...]

# =============================================================================
# ENUMS
# =============================================================================

class SpaceKind(Enum):
    """Supported metric space families"""
    CIRCLE = "circle"
    SPHERE = "sphere"
    TORUS = "torus"
    BOX = "box"
    FINITE = "finite"


UNIFORM_KINDS = (SpaceKind.CIRCLE, SpaceKind.SPHERE, SpaceKind.TORUS)

# =============================================================================
# DESCRIPTOR
# =============================================================================

@dataclass(frozen=True)
class SpaceDescriptor:
    """Tagged record for one parametric metric space"""
    kind: SpaceKind
    L: Optional[float] = None  # circle length
    r: Optional[float] = None  # sphere radius
    sides: Tuple[float, ...] = ()  # torus (L1, L2) or box side lengths
    metric: Optional[RationalMetricSpace] = None

    def __post_init__(self):
        if self.kind == SpaceKind.CIRCLE:
            if self.L is None or not self.L > 0:
                raise MismatchedSpace(f"circle length must be > 0, got {self.L}")
        elif self.kind == SpaceKind.SPHERE:
            if self.r is None or not self.r > 0:
                raise MismatchedSpace(f"sphere radius must be > 0, got {self.r}")
        elif self.kind == SpaceKind.TORUS:
            if len(self.sides) != 2 or any(not s > 0 for s in self.sides):
                raise MismatchedSpace(f"flat torus needs two positive side lengths, got {self.sides}")
        elif self.kind == SpaceKind.BOX:
            if not self.sides or any(not s > 0 for s in self.sides):
                raise MismatchedSpace(f"box needs positive side lengths, got {self.sides}")
        elif self.kind == SpaceKind.FINITE:
            if self.metric is None:
                raise MismatchedSpace("finite space needs a rational metric space")

    # Constructors
    @classmethod
    def circle(cls, L: float) -> "SpaceDescriptor":
        return cls(SpaceKind.CIRCLE, L=float(L))

    @classmethod
    def sphere(cls, r: float) -> "SpaceDescriptor":
        return cls(SpaceKind.SPHERE, r=float(r))

    @classmethod
    def torus(cls, L1: float, L2: float) -> "SpaceDescriptor":
        return cls(SpaceKind.TORUS, sides=(float(L1), float(L2)))

    @classmethod
    def box(cls, *sides: float) -> "SpaceDescriptor":
        return cls(SpaceKind.BOX, sides=tuple(float(s) for s in sides))

    @classmethod
    def finite(cls, metric: RationalMetricSpace) -> "SpaceDescriptor":
        return cls(SpaceKind.FINITE, metric=metric)

    @property
    def dim(self) -> int:
        """Arity of a point's coordinate tuple"""
        if self.kind == SpaceKind.CIRCLE:
            return 1
        if self.kind == SpaceKind.SPHERE:
            return 3
        if self.kind == SpaceKind.FINITE:
            return 1
        return len(self.sides)

    @property
    def is_uniform(self) -> bool:
        return self.kind in UNIFORM_KINDS

    def describe(self) -> str:
        if self.kind == SpaceKind.CIRCLE:
            return f"circle(L={self.L:g})"
        if self.kind == SpaceKind.SPHERE:
            return f"sphere(r={self.r:g})"
        if self.kind == SpaceKind.TORUS:
            return f"torus({self.sides[0]:g}x{self.sides[1]:g})"
        if self.kind == SpaceKind.BOX:
            return "box(" + "x".join(f"{s:g}" for s in self.sides) + ")"
        return f"finite({len(self.metric)} points)"

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind == SpaceKind.CIRCLE:
            data["L"] = self.L
        elif self.kind == SpaceKind.SPHERE:
            data["r"] = self.r
        elif self.kind == SpaceKind.TORUS:
            data["L1"], data["L2"] = self.sides
        elif self.kind == SpaceKind.BOX:
            data["sides"] = list(self.sides)
        else:
            data["metric"] = self.metric.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SpaceDescriptor":
        try:
            kind = SpaceKind(data["kind"])
        except (KeyError, ValueError) as e:
            raise GraphFormatError(f"unknown space record: {data!r}") from e
        try:
            if kind == SpaceKind.CIRCLE:
                return cls.circle(data["L"])
            if kind == SpaceKind.SPHERE:
                return cls.sphere(data["r"])
            if kind == SpaceKind.TORUS:
                return cls.torus(data["L1"], data["L2"])
            if kind == SpaceKind.BOX:
                return cls.box(*data["sides"])
            return cls.finite(RationalMetricSpace.from_dict(data["metric"]))
        except KeyError as e:
            raise GraphFormatError(f"space record '{kind.value}' lacks field {e}") from e
