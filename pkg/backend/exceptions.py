# backend/exceptions.py
"""
Error types for the geograph toolkit.
Every operation raises a subclass of GeographError; the CLI turns these into exit code 1.
"""

from typing import Any, Optional, Sequence


class GeographError(Exception):
    """Root of all toolkit errors"""


# =============================================================================
# SPACES / SAMPLING / GRAPHS
# =============================================================================

class MismatchedSpace(GeographError):
    """A point has the wrong arity or lies outside the space's domain"""


class DegenerateTriple(GeographError):
    def __init__(self, message: str, triple: Optional[Sequence[Any]] = None):
        super().__init__(message)
        self.triple = tuple(triple) if triple is not None else None


class NotUniform(GeographError):
    """Operation needs a uniformly distributed measure (circle, sphere, flat torus)"""


class RejectionBudgetExceeded(GeographError):
    def __init__(self, message: str, accepted: int = 0, rejections: int = 0):
        super().__init__(message)
        self.accepted = accepted
        self.rejections = rejections


class EmptySample(GeographError):
    pass


class IndexOutOfRange(GeographError):
    pass


class GraphFormatError(GeographError):
    pass


# =============================================================================
# LOGIC
# =============================================================================

class FormulaSyntaxError(GeographError, SyntaxError):
    def __init__(self, message: str, column: int, text: str = ""):
        GeographError.__init__(self, f"{message} at column {column}")
        self.msg = message
        self.column = column
        self.offset = column
        self.text = text

    def __str__(self) -> str:
        return f"{self.msg} at column {self.column}"


class UnknownSymbol(GeographError):
    def __init__(self, symbol: str, column: int = 0):
        super().__init__(f"unknown symbol '{symbol}' at column {column}")
        self.symbol = symbol
        self.column = column


class MissingOracle(GeographError):
    pass


class UnboundVariable(GeographError):
    def __init__(self, name: str):
        super().__init__(f"variable '{name}' is free and unbound")
        self.name = name


# =============================================================================
# G.E.C. / RECOVERY
# =============================================================================

class InvalidProbe(GeographError):
    pass


class NotApplicable(GeographError):
    pass


class NotBAdjacent(GeographError):
    def __init__(self, a: int, b: int):
        super().__init__(f"vertices {a} and {b} are not B-adjacent")
        self.pair = (a, b)


class LoopNotFound(GeographError):
    pass


class ApproximationFailure(GeographError):
    pass


class NotFound(GeographError):
    pass


# =============================================================================
# ALPHA
# =============================================================================

class SnapFailure(GeographError):
    def __init__(self, message: str, source_index: Optional[int] = None):
        super().__init__(message)
        self.source_index = source_index


class EmptyWitnessSet(GeographError):
    pass


class BudgetExceeded(GeographError):
    def __init__(self, message: str, required: int = 0, budget: int = 0):
        super().__init__(message)
        self.required = required
        self.budget = budget


# =============================================================================
# EF GAMES
# =============================================================================

class WitnessNotFound(GeographError):
    pass


class NotElementary(GeographError):
    def __init__(self, message: str, violation: Any = None):
        super().__init__(message)
        self.violation = violation


class InvalidInput(GeographError):
    pass


# =============================================================================
# URYSOHN
# =============================================================================

class NotKatetov(GeographError):
    def __init__(self, message: str, pair: Optional[Sequence[Any]] = None):
        super().__init__(message)
        self.pair = tuple(pair) if pair is not None else None


class NonPositiveEpsilon(GeographError):
    pass


class IntegerDistanceInY(GeographError):
    def __init__(self, message: str, pair: Optional[Sequence[Any]] = None):
        super().__init__(message)
        self.pair = tuple(pair) if pair is not None else None


# =============================================================================
# CLI
# =============================================================================

class ConfigError(GeographError):
    pass
