# backend/services/logic_check.py
"""
Reference semantics for the formula evaluator: a plain recursive Tarskian
evaluator and seeded generators of random structures and formulas.
"""

from typing import Mapping

import numpy as np

from models.formula import (
    And,
    Ball,
    Const,
    Edge,
    Equals,
    Exists,
    Formula,
    Implies,
    Not,
    Or,
    Shifted,
    Forall,
    Term,
    Var,
)
from services.evaluator import StructureView

VARIABLES = ("x", "y", "z", "u")


def naive_evaluate(s: StructureView, f: Formula, env: Mapping[str, int]) -> bool:
    def val(t: Term) -> int:
        return env[t.name] if isinstance(t, Var) else s.constants[t.name]

    if isinstance(f, Edge):
        return bool(s.E[val(f.left), val(f.right)])
    if isinstance(f, Ball):
        return bool(s.B[val(f.left), val(f.right)])
    if isinstance(f, Equals):
        return val(f.left) == val(f.right)
    if isinstance(f, Shifted):
        args = [np.asarray(val(t)) for t in (f.a, f.b, f.c)]
        return bool(s.C(f.z, f.t, f.k, *args))
    if isinstance(f, Not):
        return not naive_evaluate(s, f.body, env)
    if isinstance(f, And):
        return naive_evaluate(s, f.left, env) and naive_evaluate(s, f.right, env)
    if isinstance(f, Or):
        return naive_evaluate(s, f.left, env) or naive_evaluate(s, f.right, env)
    if isinstance(f, Implies):
        return (not naive_evaluate(s, f.left, env)) or naive_evaluate(s, f.right, env)
    if isinstance(f, Exists):
        return any(naive_evaluate(s, f.body, {**env, f.var: v}) for v in range(s.n))
    return all(naive_evaluate(s, f.body, {**env, f.var: v}) for v in range(s.n))


def random_structure(rng: np.random.Generator, n: int) -> StructureView:
    """Symmetric E and B at density 0.4, C an arbitrary shift-compatible table."""
    def sym():
        m = np.triu(rng.random((n, n)) < 0.4, k=1)
        return m | m.T

    table = rng.random((n, n, n)) < 0.5

    def C(z, t, k, a, b, c):
        return table[(a + z) % n, (b + t) % n, (c + k) % n]

    return StructureView(n=n, E=sym(), B=sym(), C=C, constants={"c": int(rng.integers(0, n))})


def random_term(rng: np.random.Generator) -> Term:
    if rng.random() < 0.15:
        return Const("c")
    return Var(VARIABLES[rng.integers(0, len(VARIABLES))])


def random_formula(rng: np.random.Generator, depth: int) -> Formula:
    if depth == 0 or rng.random() < 0.25:
        kind = rng.integers(0, 4)
        if kind == 0:
            return Edge(random_term(rng), random_term(rng))
        if kind == 1:
            return Ball(random_term(rng), random_term(rng))
        if kind == 2:
            return Equals(random_term(rng), random_term(rng))
        z, t, k = (int(v) for v in rng.integers(-2, 3, size=3))
        return Shifted(z, t, k, random_term(rng), random_term(rng), random_term(rng))
    kind = rng.integers(0, 6)
    if kind == 0:
        return Not(random_formula(rng, depth - 1))
    if kind in (1, 2, 3):
        cls = (And, Or, Implies)[kind - 1]
        return cls(random_formula(rng, depth - 1), random_formula(rng, depth - 1))
    cls = Exists if kind == 4 else Forall
    return cls(VARIABLES[rng.integers(0, len(VARIABLES))], random_formula(rng, depth - 1))
