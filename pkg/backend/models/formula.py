# backend/models/formula.py
"""
First-order formula trees over the vertex sort.
Relation symbols: E (edges), B (unit balls), C[z,t,k] (shifted circular order) and equality.
Derived predicates are expanded by the parser, so they never appear here.
"""

from dataclasses import dataclass
from typing import Dict, Any, Tuple, Union, FrozenSet, Iterator

# =============================================================================
# TERMS
# =============================================================================

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


Term = Union[Var, Const]

# =============================================================================
# ATOMS
# =============================================================================

@dataclass(frozen=True)
class Edge:
    left: Term
    right: Term


@dataclass(frozen=True)
class Ball:
    left: Term
    right: Term


@dataclass(frozen=True)
class Equals:
    left: Term
    right: Term


@dataclass(frozen=True)
class Shifted:
    """C[z,t,k](a,b,c): C(a+z, b+t, c+k)"""
    z: int
    t: int
    k: int
    a: Term
    b: Term
    c: Term

# =============================================================================
# CONNECTIVES AND QUANTIFIERS
# =============================================================================

@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


Atom = Union[Edge, Ball, Equals, Shifted]
Formula = Union[Atom, Not, And, Or, Implies, Exists, Forall]
ATOMS = (Edge, Ball, Equals, Shifted)
BINARY = (And, Or, Implies)
QUANTIFIERS = (Exists, Forall)


def terms(atom: Atom) -> Tuple[Term, ...]:
    if isinstance(atom, Shifted):
        return (atom.a, atom.b, atom.c)
    return (atom.left, atom.right)


def children(node: Formula) -> Tuple[Formula, ...]:
    if isinstance(node, Not) or isinstance(node, QUANTIFIERS):
        return (node.body,)
    if isinstance(node, BINARY):
        return (node.left, node.right)
    return ()


def walk(node: Formula) -> Iterator[Formula]:
    yield node
    for child in children(node):
        yield from walk(child)


def free_variables(node: Formula) -> FrozenSet[str]:
    if isinstance(node, ATOMS):
        return frozenset(t.name for t in terms(node) if isinstance(t, Var))
    if isinstance(node, QUANTIFIERS):
        return free_variables(node.body) - {node.var}
    out: FrozenSet[str] = frozenset()
    for child in children(node):
        out |= free_variables(child)
    return out


def constants(node: Formula) -> FrozenSet[str]:
    out = set()
    for sub in walk(node):
        if isinstance(sub, ATOMS):
            out.update(t.name for t in terms(sub) if isinstance(t, Const))
    return frozenset(out)


def is_quantifier_free(node: Formula) -> bool:
    return not any(isinstance(sub, QUANTIFIERS) for sub in walk(node))


def quantifier_rank(node: Formula) -> int:
    if isinstance(node, QUANTIFIERS):
        return 1 + quantifier_rank(node.body)
    return max((quantifier_rank(c) for c in children(node)), default=0)


def to_dict(node: Formula) -> Dict[str, Any]:
    """Tagged tree, mainly for reports"""
    kind = type(node).__name__
    if isinstance(node, ATOMS):
        data: Dict[str, Any] = {"kind": kind, "terms": [t.name for t in terms(node)]}
        if isinstance(node, Shifted):
            data["shifts"] = [node.z, node.t, node.k]
        return data
    if isinstance(node, QUANTIFIERS):
        return {"kind": kind, "var": node.var, "body": to_dict(node.body)}
    return {"kind": kind, "args": [to_dict(c) for c in children(node)]}
