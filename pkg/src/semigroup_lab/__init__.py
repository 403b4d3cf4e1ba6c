"""Weighted translation semigroups on a discretized half-line.

Symbols and finite-difference class tests, an exact shift-term operator algebra,
commuting tuples with their Cauchy duals, the analytic (reproducing kernel)
model, and spectral bounds.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DualNotCommuting,
    GridMismatch,
    NonGridTranslation,
    NonPositiveSymbol,
    NotCommuting,
    NotJointlyLeftInvertible,
    NotLeftInvertible,
    NotSingleTerm,
    OutOfDomain,
    OutsidePolydisc,
    ParseError,
    SemigroupLabError,
    TooLarge,
    TruncationExceedsGrid,
    ValidationError,
    WindowTooSmall,
)
from .grid import GridSpec  # noqa: E402
from .grid_operator import OperatorExpr, adjoint, compose, make_weighted_translation, to_dense  # noqa: E402
from .symbol import SymbolSpec, classify_symbol, difference_profile  # noqa: E402
from .tuples import (  # noqa: E402
    TranslationTuple,
    classify,
    spherical_cauchy_dual,
    toral_cauchy_dual,
)

__all__ = [
    "DualNotCommuting",
    "GridMismatch",
    "GridSpec",
    "NonGridTranslation",
    "NonPositiveSymbol",
    "NotCommuting",
    "NotJointlyLeftInvertible",
    "NotLeftInvertible",
    "NotSingleTerm",
    "OperatorExpr",
    "OutOfDomain",
    "OutsidePolydisc",
    "ParseError",
    "SemigroupLabError",
    "SymbolSpec",
    "TooLarge",
    "TranslationTuple",
    "TruncationExceedsGrid",
    "ValidationError",
    "WindowTooSmall",
    "adjoint",
    "classify",
    "classify_symbol",
    "compose",
    "difference_profile",
    "make_weighted_translation",
    "spherical_cauchy_dual",
    "to_dense",
    "toral_cauchy_dual",
]
