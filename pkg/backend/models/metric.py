# backend/models/metric.py
"""
Exact-rational finite metric spaces for the Urysohn back-and-forth.
Distances are fractions.Fraction everywhere; files carry them as "p/q" strings.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Any, Optional, Tuple, Sequence, Iterable
import math

from exceptions import GraphFormatError, MismatchedSpace

Distance = Fraction
Label = str


def parse_fraction(text: Any) -> Fraction:
    """Accept "p/q", integers and decimal strings; floats are rejected to stay exact."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, str):
        try:
            return Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise GraphFormatError(f"not an exact rational: {text!r}") from e
    raise GraphFormatError(f"not an exact rational: {text!r}")


def format_fraction(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def is_integer(value: Fraction) -> bool:
    return value.denominator == 1


def band(value: Fraction) -> int:
    """The n with n-1 < value < n (value non-integer); integers map to themselves."""
    return math.ceil(value)


# =============================================================================
# METRIC SPACE
# =============================================================================

@dataclass(frozen=True)
class MetricViolation:
    """One failed metric axiom"""
    kind: str  # diagonal | symmetry | positivity | triangle | integer_distance
    labels: Tuple[Label, ...]
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "labels": list(self.labels), "detail": self.detail}


@dataclass(frozen=True)
class RationalMetricSpace:
    """Finite metric space with exact rational distances"""
    labels: Tuple[Label, ...]
    d: Tuple[Tuple[Fraction, ...], ...]
    integer_distance_free: bool = True
    _index: Dict[Label, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise MismatchedSpace("metric space labels must be distinct")
        if len(self.d) != len(self.labels) or any(len(row) != len(self.labels) for row in self.d):
            raise MismatchedSpace("distance matrix shape does not match labels")
        self._index.update({label: i for i, label in enumerate(self.labels)})

    @classmethod
    def from_matrix(
        cls,
        labels: Sequence[Label],
        matrix: Sequence[Sequence[Any]],
        integer_distance_free: bool = True,
    ) -> "RationalMetricSpace":
        rows = tuple(tuple(parse_fraction(v) for v in row) for row in matrix)
        return cls(tuple(labels), rows, integer_distance_free)

    @classmethod
    def from_pairs(
        cls,
        labels: Sequence[Label],
        pairs: Dict[Tuple[Label, Label], Any],
        integer_distance_free: bool = True,
    ) -> "RationalMetricSpace":
        """Build from an (unordered) pair -> distance mapping; missing pairs are an error."""
        idx = {label: i for i, label in enumerate(labels)}
        n = len(labels)
        rows = [[Fraction(0)] * n for _ in range(n)]
        for (a, b), value in pairs.items():
            v = parse_fraction(value)
            rows[idx[a]][idx[b]] = v
            rows[idx[b]][idx[a]] = v
        for i in range(n):
            for j in range(i + 1, n):
                if (labels[i], labels[j]) not in pairs and (labels[j], labels[i]) not in pairs:
                    raise MismatchedSpace(f"missing distance for ({labels[i]}, {labels[j]})")
        return cls(tuple(labels), tuple(tuple(r) for r in rows), integer_distance_free)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: object) -> bool:
        return label in self._index

    def index(self, label: Label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise MismatchedSpace(f"unknown point '{label}'") from None

    def dist(self, a: Label, b: Label) -> Fraction:
        return self.d[self.index(a)][self.index(b)]

    def diameter(self) -> Fraction:
        return max((v for row in self.d for v in row), default=Fraction(0))

    def fresh_label(self, stem: str) -> Label:
        label = stem
        k = 0
        while label in self._index:
            k += 1
            label = f"{stem}_{k}"
        return label

    def with_point(self, label: Label, distances: Dict[Label, Fraction]) -> "RationalMetricSpace":
        """Append one point; distances must cover every existing label."""
        missing = [x for x in self.labels if x not in distances]
        if missing:
            raise MismatchedSpace(f"new point '{label}' lacks distances to {missing}")
        rows = [list(row) + [distances[self.labels[i]]] for i, row in enumerate(self.d)]
        rows.append([distances[x] for x in self.labels] + [Fraction(0)])
        return RationalMetricSpace(
            self.labels + (label,),
            tuple(tuple(r) for r in rows),
            self.integer_distance_free,
        )

    def restrict(self, labels: Iterable[Label]) -> "RationalMetricSpace":
        keep = list(labels)
        ids = [self.index(x) for x in keep]
        rows = tuple(tuple(self.d[i][j] for j in ids) for i in ids)
        return RationalMetricSpace(tuple(keep), rows, self.integer_distance_free)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "labels": list(self.labels),
            "integer_distance_free": self.integer_distance_free,
            "d": [[format_fraction(v) for v in row] for row in self.d],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RationalMetricSpace":
        try:
            return cls.from_matrix(
                data["labels"],
                data["d"],
                bool(data.get("integer_distance_free", True)),
            )
        except KeyError as e:
            raise GraphFormatError(f"metric space record lacks field {e}") from e


# =============================================================================
# MAPS AND EXTENSIONS
# =============================================================================

KatetovFunction = Dict[Label, Fraction]


@dataclass(frozen=True)
class CnMap:
    """Finite partial bijection X -> Y given as ordered pairs"""
    pairs: Tuple[Tuple[Label, Label], ...] = ()

    def __post_init__(self):
        left = [a for a, _ in self.pairs]
        right = [b for _, b in self.pairs]
        if len(set(left)) != len(left) or len(set(right)) != len(right):
            raise MismatchedSpace("C_n map must be injective in both directions")

    @property
    def domain(self) -> List[Label]:
        return [a for a, _ in self.pairs]

    @property
    def range(self) -> List[Label]:
        return [b for _, b in self.pairs]

    def image(self, x: Label) -> Optional[Label]:
        for a, b in self.pairs:
            if a == x:
                return b
        return None

    def extended(self, x: Label, y: Label) -> "CnMap":
        return CnMap(self.pairs + ((x, y),))

    def inverse(self) -> "CnMap":
        return CnMap(tuple((b, a) for a, b in self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def to_dict(self) -> Dict[str, Any]:
        return {"pairs": [list(p) for p in self.pairs]}


@dataclass
class ExtensionResult:
    """Outcome of one back-and-forth step"""
    cn_map: CnMap
    X: RationalMetricSpace
    Y: RationalMetricSpace
    x0: Label
    y0: Label
    side: str
    created: bool
    epsilon: Fraction
    assignment: Dict[Label, Fraction]
    sup_error: Optional[Fraction] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x0": self.x0,
            "y0": self.y0,
            "side": self.side,
            "created": self.created,
            "epsilon": format_fraction(self.epsilon),
            "assignment": {k: format_fraction(v) for k, v in self.assignment.items()},
            "sup_error": format_fraction(self.sup_error) if self.sup_error is not None else None,
            "map": self.cn_map.to_dict(),
        }


@dataclass(frozen=True)
class RationalGraph:
    """Graph over a RationalMetricSpace with unit-threshold (C_1) edges"""
    space: RationalMetricSpace
    edges: frozenset = frozenset()
    p: float = 0.5

    def __post_init__(self):
        for e in self.edges:
            a, b = tuple(e)
            if self.space.dist(a, b) >= 1:
                raise MismatchedSpace(f"edge ({a}, {b}) violates the unit threshold")

    def adjacent(self, a: Label, b: Label) -> bool:
        return a != b and frozenset((a, b)) in self.edges

    def neighbors(self, a: Label) -> List[Label]:
        return [x for x in self.space.labels if self.adjacent(a, x)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "space": self.space.to_dict(),
            "p": self.p,
            "edges": sorted(sorted(e) for e in self.edges),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RationalGraph":
        space = RationalMetricSpace.from_dict(data["space"])
        edges = frozenset(frozenset(e) for e in data.get("edges", []))
        return cls(space, edges, float(data.get("p", 0.5)))
