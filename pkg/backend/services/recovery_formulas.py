# backend/services/recovery_formulas.py
"""
The recovery formulas written in the formula language, evaluated with the
generic evaluator. Used to cross-check the direct routines in services.recovery.
"""

import logging
from functools import lru_cache
from typing import Dict, FrozenSet, Optional

import numpy as np

from models.formula import Formula
from models.graph import GeoGraph
from services.evaluator import StructureView, define_set, evaluate, relation_table
from services.formula_parser import Definition, parse, parse_definitions
from services.recovery import LoopFrame, RecoveredB

logger = logging.getLogger(__name__)

PRELUDE = """
def N2(v, x) := E(v, x) | exists w (E(v, w) & E(w, x));
def Bdir(v, x) := N2(v, x) & forall z (E(x, z) -> N2(v, z));
def Bq(x, y) := B(x, y) | x = y;
def Int(x, a, b) := forall v ((Bq(v, a) & Bq(v, b)) -> Bq(x, v));
def IntStrict(x, a, b) := forall v ((B(v, a) & B(v, b)) -> B(x, v));
def F0(x, a) := x = a | (B(a, x) & exists w (!Bq(a, w) & C[0,0,0](a, x, w)));
def Fback(x, a) := x = a | (B(a, x) & exists w (!Bq(a, w) & C[0,0,0](w, x, a)));
def F1(x, a) := !F0(x, a) & exists z (F0(z, a) & F0(x, z));
def F2(x, a) := !F1(x, a) & exists z (F1(z, a) & F0(x, z));
"""

B_TEXT = "Bdir(v, x) & Bdir(x, v) & !v = x"
INTERVAL_TEXT = "const a, b; Int(x, a, b)"
STRICT_INTERVAL_TEXT = "const a, b; IntStrict(x, a, b)"
UNI_TEXT = (
    "const a, b, c; B(a, b) & B(b, c) & !a = b & !b = c & "
    "forall x forall y ((Int(x, a, b) & Int(x, b, c) & Int(y, a, b) & Int(y, b, c)) -> x = y)"
)
F_TEXTS = {0: "const a; F0(x, a)", 1: "const a; F1(x, a)", 2: "const a; F2(x, a)", -1: "const a; Fback(x, a) & !x = a"}
TRANSLATE_TEXT = "const a; F1(y, a) & forall u ((F1(u, a) & !u = y) -> C[0,0,0](a, y, u))"


@lru_cache(maxsize=1)
def definitions() -> Dict[str, Definition]:
    return parse_definitions(PRELUDE)


@lru_cache(maxsize=None)
def formula(text: str) -> Formula:
    return parse(text, definitions())


def structure(graph: GeoGraph, B: Optional[RecoveredB] = None, frame: Optional[LoopFrame] = None) -> StructureView:
    return StructureView.from_graph(
        graph,
        B=B.matrix if B is not None else None,
        C=frame.shifted_oracle if frame is not None else None,
    )


def dsl_B(graph: GeoGraph) -> np.ndarray:
    """B relation table by evaluating the unit-ball formula."""
    return relation_table(structure(graph), formula(B_TEXT), ("v", "x"))


def dsl_interval(view: StructureView, a: int, b: int, reflexive: bool = True) -> FrozenSet[int]:
    text = INTERVAL_TEXT if reflexive else STRICT_INTERVAL_TEXT
    return define_set(view, formula(text), {"a": a, "b": b})


def dsl_uni_directional(view: StructureView, a: int, b: int, c: int) -> bool:
    return evaluate(view.with_constants({"a": a, "b": b, "c": c}), formula(UNI_TEXT))


def dsl_F_interval(view: StructureView, a: int, n: int) -> FrozenSet[int]:
    return define_set(view, formula(F_TEXTS[n]), {"a": a})


def dsl_translate(view: StructureView, a: int) -> FrozenSet[int]:
    """Order-minimal members of F[a+1, a+2) seen from a."""
    return define_set(view, formula(TRANSLATE_TEXT), {"a": a})
