# backend/services/evaluator.py
"""
Finite-domain evaluation of formulas over a StructureView.

A subformula evaluates to a boolean tensor with one axis per free variable not
bound by the environment. Existentials over conjunctions contract with einsum,
universals are negated existentials, and quantifier-free subformulas with at
most two free variables are memoized per structure.
"""

import logging
import string
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Tuple

import numpy as np

from exceptions import IndexOutOfRange, InvalidInput, MissingOracle, UnboundVariable
from models.formula import (
    ATOMS,
    And,
    Ball,
    Const,
    Edge,
    Equals,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Shifted,
    Term,
    constants,
    free_variables,
    is_quantifier_free,
)
from models.graph import GeoGraph

logger = logging.getLogger(__name__)

# (z, t, k, a, b, c) -> bool array; a, b, c are broadcastable int arrays
ShiftedOracle = Callable[[int, int, int, np.ndarray, np.ndarray, np.ndarray], np.ndarray]

MEMO_MAX_FREE = 2

# =============================================================================
# STRUCTURE
# =============================================================================

def _relation(name: str, matrix: np.ndarray, n: int) -> np.ndarray:
    m = np.asarray(matrix, dtype=bool)
    if m.shape != (n, n):
        raise MissingOracle(f"{name} oracle has shape {m.shape}, expected ({n}, {n})")
    if not np.array_equal(m, m.T):
        raise InvalidInput(f"{name} must be symmetric")
    if m.diagonal().any():
        raise InvalidInput(f"{name} must be irreflexive")
    return m


@dataclass(eq=False)
class StructureView:
    """Finite structure: domain 0..n-1, relation oracles and constant assignments"""
    n: int
    E: np.ndarray
    B: Optional[np.ndarray] = None
    C: Optional[ShiftedOracle] = None
    constants: Dict[str, int] = field(default_factory=dict)
    _memo: Dict[tuple, np.ndarray] = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        self.E = _relation("E", self.E, self.n)
        if self.B is not None:
            self.B = _relation("B", self.B, self.n)
        self.constants = {name: int(v) for name, v in self.constants.items()}
        for name, v in self.constants.items():
            if not 0 <= v < self.n:
                raise MissingOracle(f"constant {name} assigned to {v} outside the domain")

    @classmethod
    def from_graph(
        cls,
        graph: GeoGraph,
        B: Optional[np.ndarray] = None,
        C: Optional[ShiftedOracle] = None,
        constants: Optional[Dict[str, int]] = None,
    ) -> "StructureView":
        return cls(n=graph.n, E=graph.adjacency, B=B, C=C, constants=dict(constants or {}))

    def with_constants(self, constants: Mapping[str, int]) -> "StructureView":
        merged = dict(self.constants)
        merged.update(constants)
        view = StructureView(self.n, self.E, self.B, self.C, merged)
        view._memo = self._memo
        view._lock = self._lock
        return view

    def memo_get(self, key: tuple) -> Optional[np.ndarray]:
        return self._memo.get(key)

    def memo_put(self, key: tuple, value: np.ndarray) -> np.ndarray:
        value = value.view()
        value.setflags(write=False)
        with self._lock:
            return self._memo.setdefault(key, value)

# =============================================================================
# TENSORS
# =============================================================================

@dataclass
class _Rel:
    axes: Tuple[str, ...]
    data: np.ndarray


def _align(rel: _Rel, axes: Tuple[str, ...]) -> np.ndarray:
    """Broadcast a relation onto a superset of its axes, in the given order."""
    order = [rel.axes.index(a) for a in axes if a in rel.axes]
    data = np.transpose(rel.data, order) if rel.axes else rel.data
    for i, a in enumerate(axes):
        if a not in rel.axes:
            data = np.expand_dims(data, i)
    return data


def _union(*rels: _Rel) -> Tuple[str, ...]:
    axes: List[str] = []
    for r in rels:
        for a in r.axes:
            if a not in axes:
                axes.append(a)
    return tuple(axes)


def _negate(node: Formula) -> Formula:
    """Push one negation inward so universals become existentials over conjunctions."""
    if isinstance(node, Not):
        return node.body
    if isinstance(node, And):
        return Or(_negate(node.left), _negate(node.right))
    if isinstance(node, Or):
        return And(_negate(node.left), _negate(node.right))
    if isinstance(node, Implies):
        return And(node.left, _negate(node.right))
    if isinstance(node, Exists):
        return Forall(node.var, _negate(node.body))
    if isinstance(node, Forall):
        return Exists(node.var, _negate(node.body))
    return Not(node)


def _conjuncts(node: Formula) -> List[Formula]:
    if isinstance(node, And):
        return _conjuncts(node.left) + _conjuncts(node.right)
    return [node]


class _Evaluator:
    def __init__(self, structure: StructureView):
        self.s = structure

    # -- terms --

    def _resolve(self, t: Term, bound: Dict[str, int]):
        """A fixed vertex (int) or an axis name (str)."""
        if isinstance(t, Const):
            if t.name in bound:
                return bound[t.name]
            if t.name in self.s.constants:
                return self.s.constants[t.name]
            raise MissingOracle(f"constant '{t.name}' has no assignment")
        if t.name in bound:
            return bound[t.name]
        return t.name

    def _binary(self, matrix: np.ndarray, left, right) -> _Rel:
        if isinstance(left, int) and isinstance(right, int):
            return _Rel((), np.asarray(matrix[left, right]))
        if isinstance(left, int):
            return _Rel((right,), matrix[left, :])
        if isinstance(right, int):
            return _Rel((left,), matrix[:, right])
        if left == right:
            return _Rel((left,), np.diagonal(matrix).copy())
        return _Rel((left, right), matrix)

    def _shifted(self, node: Shifted, bound: Dict[str, int]) -> _Rel:
        if self.s.C is None:
            raise MissingOracle("structure has no C[z,t,k] oracle")
        refs = [self._resolve(t, bound) for t in (node.a, node.b, node.c)]
        axes: List[str] = []
        for r in refs:
            if isinstance(r, str) and r not in axes:
                axes.append(r)
        grids = np.meshgrid(*[np.arange(self.s.n)] * len(axes), indexing="ij", sparse=True) if axes else []
        by_axis = dict(zip(axes, grids))
        args = [np.asarray(by_axis[r]) if isinstance(r, str) else np.asarray(r) for r in refs]
        data = np.asarray(self.s.C(node.z, node.t, node.k, *args), dtype=bool)
        shape = (self.s.n,) * len(axes)
        return _Rel(tuple(axes), np.broadcast_to(data, shape).copy() if axes else data)

    # -- formulas --

    def rel(self, node: Formula, bound: Dict[str, int]) -> _Rel:
        memo_key = None
        if isinstance(node, (Not, And, Or, Implies)) or isinstance(node, ATOMS):
            fv = free_variables(node)
            if len(fv - bound.keys()) <= MEMO_MAX_FREE and is_quantifier_free(node):
                names = fv | constants(node)
                fixed = tuple(sorted((k, v) for k, v in bound.items() if k in names))
                consts = tuple(sorted((c, self.s.constants[c]) for c in constants(node) if c in self.s.constants))
                memo_key = (node, fixed, consts)
                hit = self.s.memo_get(memo_key)
                if hit is not None:
                    axes = tuple(sorted(fv - bound.keys()))
                    return _Rel(axes, hit)
        result = self._compute(node, bound)
        if memo_key is not None:
            axes = tuple(sorted(result.axes))
            data = np.transpose(result.data, [result.axes.index(a) for a in axes]) if axes else result.data
            data = np.ascontiguousarray(data)
            return _Rel(axes, self.s.memo_put(memo_key, data))
        return result

    def _compute(self, node: Formula, bound: Dict[str, int]) -> _Rel:
        if isinstance(node, Edge):
            return self._binary(self.s.E, self._resolve(node.left, bound), self._resolve(node.right, bound))
        if isinstance(node, Ball):
            if self.s.B is None:
                raise MissingOracle("structure has no B oracle")
            return self._binary(self.s.B, self._resolve(node.left, bound), self._resolve(node.right, bound))
        if isinstance(node, Equals):
            return self._binary(np.eye(self.s.n, dtype=bool), self._resolve(node.left, bound),
                                self._resolve(node.right, bound))
        if isinstance(node, Shifted):
            return self._shifted(node, bound)
        if isinstance(node, Not):
            inner = self.rel(node.body, bound)
            return _Rel(inner.axes, ~inner.data)
        if isinstance(node, (And, Or, Implies)):
            left = self.rel(node.left, bound)
            right = self.rel(node.right, bound)
            axes = _union(left, right)
            a, b = _align(left, axes), _align(right, axes)
            if isinstance(node, And):
                data = a & b
            elif isinstance(node, Or):
                data = a | b
            else:
                data = ~a | b
            return _Rel(axes, np.broadcast_to(data, (self.s.n,) * len(axes)) if axes else data)
        if isinstance(node, Exists):
            return self._exists(node.var, node.body, bound)
        if isinstance(node, Forall):
            inner = self._exists(node.var, _negate(node.body), bound)
            return _Rel(inner.axes, ~inner.data)
        raise TypeError(f"not a formula node: {node!r}")

    def _exists(self, var: str, body: Formula, bound: Dict[str, int]) -> _Rel:
        inner_bound = {k: v for k, v in bound.items() if k != var}
        if self.s.n == 0:
            axes = tuple(sorted(free_variables(body) - {var} - inner_bound.keys()))
            return _Rel(axes, np.zeros((0,) * len(axes), dtype=bool))
        factors = [self.rel(f, inner_bound) for f in _conjuncts(body)]
        scalars = [f for f in factors if not f.axes]
        if any(not bool(f.data) for f in scalars):
            axes = _union(*factors)
            axes = tuple(a for a in axes if a != var)
            return _Rel(axes, np.zeros((self.s.n,) * len(axes), dtype=bool))
        tensors = [f for f in factors if f.axes]
        if not tensors:
            return _Rel((), np.asarray(True))
        with_var = [f for f in tensors if var in f.axes]
        without = [f for f in tensors if var not in f.axes]
        if not with_var:
            # vacuous quantifier over a nonempty domain
            merged = without[0]
            for f in without[1:]:
                axes = _union(merged, f)
                merged = _Rel(axes, _align(merged, axes) & _align(f, axes))
            return merged
        names = _union(*with_var)
        letters = dict(zip(names, string.ascii_letters))
        out_axes = tuple(a for a in names if a != var)
        spec = ",".join("".join(letters[a] for a in f.axes) for f in with_var)
        spec += "->" + "".join(letters[a] for a in out_axes)
        counts = np.einsum(spec, *[f.data.astype(np.float32) for f in with_var], optimize=True)
        result = _Rel(out_axes, np.asarray(counts > 0))
        for f in without:
            axes = _union(result, f)
            data = _align(result, axes) & _align(f, axes)
            result = _Rel(axes, np.broadcast_to(data, (self.s.n,) * len(axes)) if axes else data)
        return result

# =============================================================================
# ENTRY POINTS
# =============================================================================

def evaluate(structure: StructureView, formula: Formula, env: Optional[Mapping[str, int]] = None) -> bool:
    """Truth of a formula over the finite domain with every free variable bound by env."""
    env = {k: int(v) for k, v in (env or {}).items()}
    missing = sorted(free_variables(formula) - env.keys())
    if missing:
        raise UnboundVariable(missing[0])
    for name, v in env.items():
        if not 0 <= v < structure.n:
            raise IndexOutOfRange(f"variable {name} bound to {v}, outside 0..{structure.n - 1}")
    result = _Evaluator(structure).rel(formula, env)
    return bool(result.data)


def define_set(
    structure: StructureView,
    formula: Formula,
    params: Optional[Mapping[str, int]] = None,
) -> FrozenSet[int]:
    """The vertices satisfying a formula in its single free variable."""
    params = {k: int(v) for k, v in (params or {}).items()}
    view = structure.with_constants(params) if params else structure
    free = sorted(free_variables(formula) - params.keys())
    if len(free) > 1:
        raise UnboundVariable(free[1])
    bound = {k: v for k, v in params.items() if k in free_variables(formula)}
    result = _Evaluator(view).rel(formula, bound)
    if not free:
        return frozenset(range(structure.n)) if bool(result.data) else frozenset()
    return frozenset(int(v) for v in np.flatnonzero(result.data))


def relation_table(structure: StructureView, formula: Formula, order: Tuple[str, ...],
                   params: Optional[Mapping[str, int]] = None) -> np.ndarray:
    """Full boolean table of a formula over the listed free variables, in that axis order."""
    params = {k: int(v) for k, v in (params or {}).items()}
    view = structure.with_constants(params) if params else structure
    free = free_variables(formula) - params.keys()
    if set(order) != set(free):
        raise UnboundVariable(", ".join(sorted(set(free) ^ set(order))))
    bound = {k: v for k, v in params.items() if k in free_variables(formula)}
    result = _Evaluator(view).rel(formula, bound)
    data = _align(result, tuple(order))
    return np.broadcast_to(data, (structure.n,) * len(order)).copy()
