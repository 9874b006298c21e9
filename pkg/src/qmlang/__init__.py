"""A reference implementation of QML: a first-order functional language with
quantum data and quantum control, its typing, denotations, equational theory
and a normaliser that decides it."""

from .errors import (
    ArityMismatch,
    FinalMismatch,
    NoMatch,
    NotNormalised,
    NotOrthogonal,
    QmlError,
    QmlSyntaxError,
    QmlTypeError,
    ShadowingError,
    SideConditionFailed,
    TypeClash,
    TypeMismatch,
    UnknownIdentifier,
    UnknownVariable,
    UnusedVariable,
)
from .normalize import equiv, nf
from .parser import inline_defs, parse, parse_context, parse_term, parse_type
from .semantics import LinMap, Vector, eval_classical, eval_quantum, is_isometry
from .syntax import Q1, Q2, Context, Tensor, pretty
from .typecheck import DEFAULT_TOL, check, infer

__all__ = [
    "ArityMismatch",
    "Context",
    "DEFAULT_TOL",
    "FinalMismatch",
    "LinMap",
    "NoMatch",
    "NotNormalised",
    "NotOrthogonal",
    "Q1",
    "Q2",
    "QmlError",
    "QmlSyntaxError",
    "QmlTypeError",
    "ShadowingError",
    "SideConditionFailed",
    "Tensor",
    "TypeClash",
    "TypeMismatch",
    "UnknownIdentifier",
    "UnknownVariable",
    "UnusedVariable",
    "Vector",
    "check",
    "equiv",
    "eval_classical",
    "eval_quantum",
    "infer",
    "inline_defs",
    "is_isometry",
    "nf",
    "parse",
    "parse_context",
    "parse_term",
    "parse_type",
    "pretty",
]
