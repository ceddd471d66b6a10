# backend/services/formula_parser.py
"""
Tokenizer, recursive-descent parser and printer for the formula language.

    program   := prelude* formula EOF
    prelude   := "const" ID ("," ID)* ";"
               | "def" PRED "(" ID ("," ID)* ")" ":=" formula ";"
    formula   := disj ("->" formula)?
    disj      := conj (("|" | "or") conj)*
    conj      := unary (("&" | "and") unary)*
    unary     := ("!" | "not") unary | ("exists" | "forall") ID unary | primary
    primary   := "(" formula ")" | atom
    atom      := "E" "(" t "," t ")" | "B" "(" t "," t ")"
               | "C" "[" INT "," INT "," INT "]" "(" t "," t "," t ")"
               | PRED "(" t ("," t)* ")" | t "=" t

Derived predicates are expanded at parse time with capture-avoiding renaming.
"""

import logging
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

from exceptions import FormulaSyntaxError, UnknownSymbol
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
    Var,
    constants,
    free_variables,
)

logger = logging.getLogger(__name__)

KEYWORDS = {"exists", "forall", "and", "or", "not", "const", "def"}
RESERVED_PREDICATES = {"E", "B", "C"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<assign>:=)
  | (?P<int>-?\d+)
  | (?P<id>[A-Za-z][A-Za-z0-9_]*)
  | (?P<punct>[()\[\],;!&|=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # arrow | assign | int | id | kw | punct | eof
    text: str
    column: int  # 1-based


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos + 1, text)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "id" and value in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, value, pos + 1))
        pos = m.end()
    tokens.append(Token("eof", "", len(text) + 1))
    return tokens


@dataclass(frozen=True)
class Definition:
    name: str
    params: Tuple[str, ...]
    body: Formula


class _Parser:
    def __init__(self, text: str, definitions: Optional[Dict[str, Definition]] = None,
                 declared: Optional[Set[str]] = None):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.constants: Set[str] = set(declared or ())
        self.definitions: Dict[str, Definition] = dict(definitions or {})
        self._taken = {t.text for t in self.tokens if t.kind == "id"}
        self._fresh = 0

    # -- token helpers --

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, token: Optional[Token] = None) -> FormulaSyntaxError:
        token = token or self.tok
        found = "end of input" if token.kind == "eof" else repr(token.text)
        return FormulaSyntaxError(f"{message}, found {found}", token.column, self.text)

    def accept(self, *texts: str) -> Optional[Token]:
        if self.tok.kind in ("punct", "arrow", "assign", "kw") and self.tok.text in texts:
            token = self.tok
            self.pos += 1
            return token
        return None

    def expect(self, text: str) -> Token:
        token = self.accept(text)
        if token is None:
            raise self.error(f"expected {text!r}")
        return token

    def identifier(self) -> Token:
        if self.tok.kind != "id":
            raise self.error("expected an identifier")
        token = self.tok
        self.pos += 1
        return token

    def integer(self) -> int:
        if self.tok.kind != "int":
            raise self.error("expected an integer")
        value = int(self.tok.text)
        self.pos += 1
        return value

    # -- grammar --

    def program(self) -> Formula:
        while True:
            if self.accept("const"):
                self.const_prelude()
            elif self.accept("def"):
                self.def_prelude()
            else:
                break
        formula = self.formula()
        if self.tok.kind != "eof":
            raise self.error("expected end of input")
        return formula

    def const_prelude(self) -> None:
        while True:
            token = self.identifier()
            if token.text in self.definitions or token.text in RESERVED_PREDICATES:
                raise self.error(f"constant {token.text!r} clashes with a predicate", token)
            self.constants.add(token.text)
            if not self.accept(","):
                break
        self.expect(";")

    def def_prelude(self) -> None:
        name_tok = self.identifier()
        name = name_tok.text
        if not name[0].isupper() or name in RESERVED_PREDICATES:
            raise self.error("derived predicate names start uppercase and avoid E, B, C", name_tok)
        if name in self.definitions:
            raise self.error(f"predicate {name!r} defined twice", name_tok)
        self.expect("(")
        params = [self.identifier().text]
        while self.accept(","):
            params.append(self.identifier().text)
        self.expect(")")
        self.expect(":=")
        # parameters shadow constants inside the body
        saved = self.constants
        self.constants = saved - set(params)
        body = self.formula()
        self.constants = saved
        self.expect(";")
        if len(set(params)) != len(params):
            raise self.error(f"repeated parameter in definition of {name!r}", name_tok)
        loose = free_variables(body) - set(params)
        if loose:
            raise self.error(f"definition of {name!r} uses unbound variables {sorted(loose)}", name_tok)
        self.definitions[name] = Definition(name, tuple(params), body)

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.accept("->"):
            return Implies(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        node = self.conjunction()
        while self.accept("|", "or"):
            node = Or(node, self.conjunction())
        return node

    def conjunction(self) -> Formula:
        node = self.unary()
        while self.accept("&", "and"):
            node = And(node, self.unary())
        return node

    def unary(self) -> Formula:
        if self.accept("!", "not"):
            return Not(self.unary())
        quant = self.accept("exists", "forall")
        if quant is not None:
            var_tok = self.identifier()
            if var_tok.text in self.constants:
                raise self.error(f"cannot quantify over constant {var_tok.text!r}", var_tok)
            body = self.unary()
            return Exists(var_tok.text, body) if quant.text == "exists" else Forall(var_tok.text, body)
        return self.primary()

    def primary(self) -> Formula:
        if self.accept("("):
            node = self.formula()
            self.expect(")")
            return node
        if self.tok.kind != "id":
            raise self.error("expected a formula")
        name_tok = self.tok
        nxt = self.tokens[self.pos + 1]
        if name_tok.text == "C" and nxt.text == "[":
            self.pos += 2
            z = self.integer()
            self.expect(",")
            t = self.integer()
            self.expect(",")
            k = self.integer()
            self.expect("]")
            a, b, c = self.arguments(3, "C")
            return Shifted(z, t, k, a, b, c)
        if nxt.text == "(" and nxt.kind == "punct":
            self.pos += 1
            name = name_tok.text
            if name == "E":
                return Edge(*self.arguments(2, name))
            if name == "B":
                return Ball(*self.arguments(2, name))
            if name in self.definitions:
                definition = self.definitions[name]
                args = self.arguments(len(definition.params), name)
                return self.expand(definition, args)
            raise UnknownSymbol(name, name_tok.column)
        left = self.term()
        self.expect("=")
        return Equals(left, self.term())

    def arguments(self, arity: int, name: str) -> List[Term]:
        open_tok = self.expect("(")
        args = [self.term()]
        while self.accept(","):
            args.append(self.term())
        self.expect(")")
        if len(args) != arity:
            raise FormulaSyntaxError(f"{name} takes {arity} arguments, got {len(args)}", open_tok.column, self.text)
        return args

    def term(self) -> Term:
        token = self.identifier()
        if token.text in self.constants:
            return Const(token.text)
        if token.text[0].isupper():
            raise UnknownSymbol(token.text, token.column)
        return Var(token.text)

    # -- derived predicates --

    def fresh(self, stem: str) -> str:
        while True:
            self._fresh += 1
            name = f"{stem}_{self._fresh}"
            if name not in self._taken:
                self._taken.add(name)
                return name

    def expand(self, definition: Definition, args: List[Term]) -> Formula:
        mapping: Dict[str, Term] = dict(zip(definition.params, args))
        return self._substitute(definition.body, mapping)

    def _substitute(self, node: Formula, mapping: Dict[str, Term]) -> Formula:
        if isinstance(node, ATOMS):
            def sub(t: Term) -> Term:
                return mapping.get(t.name, t) if isinstance(t, Var) else t
            if isinstance(node, Shifted):
                return Shifted(node.z, node.t, node.k, sub(node.a), sub(node.b), sub(node.c))
            return type(node)(sub(node.left), sub(node.right))
        if isinstance(node, Not):
            return Not(self._substitute(node.body, mapping))
        if isinstance(node, (And, Or, Implies)):
            return type(node)(self._substitute(node.left, mapping), self._substitute(node.right, mapping))
        # every bound variable gets a fresh name, so argument variables are never captured
        renamed = self.fresh(node.var)
        inner = dict(mapping)
        inner[node.var] = Var(renamed)
        return type(node)(renamed, self._substitute(node.body, inner))


def parse(text: str, definitions: Optional[Dict[str, Definition]] = None,
          declared: Optional[Set[str]] = None) -> Formula:
    """Parse a program (preludes + formula) into a formula tree."""
    return _Parser(text, definitions, declared).program()


def parse_definitions(text: str) -> Dict[str, Definition]:
    """Parse a prelude-only text ("def ...; def ...;") for reuse across formulas."""
    parser = _Parser(text + " E(x, x)")
    parser.program()
    return parser.definitions

# =============================================================================
# PRINTING
# =============================================================================

def _term(t: Term) -> str:
    return t.name


def format_formula(node: Formula) -> str:
    if isinstance(node, Edge):
        return f"E({_term(node.left)}, {_term(node.right)})"
    if isinstance(node, Ball):
        return f"B({_term(node.left)}, {_term(node.right)})"
    if isinstance(node, Equals):
        return f"{_term(node.left)} = {_term(node.right)}"
    if isinstance(node, Shifted):
        return f"C[{node.z},{node.t},{node.k}]({_term(node.a)}, {_term(node.b)}, {_term(node.c)})"
    if isinstance(node, Not):
        return "!" + format_formula(node.body)
    if isinstance(node, Exists):
        return f"exists {node.var} ({format_formula(node.body)})"
    if isinstance(node, Forall):
        return f"forall {node.var} ({format_formula(node.body)})"
    op = {And: "&", Or: "|", Implies: "->"}[type(node)]
    return f"({format_formula(node.left)} {op} {format_formula(node.right)})"


def format_program(node: Formula) -> str:
    """Formula text with the const prelude it needs to re-parse to the same tree."""
    names = sorted(constants(node))
    prelude = f"const {', '.join(names)}; " if names else ""
    return prelude + format_formula(node)
