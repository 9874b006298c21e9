"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class QmlError(Exception):
    """Base class. ``span`` is an optional ``(line, column)`` pair."""

    def __init__(self, message: str, span: tuple[int, int] | None = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is not None:
            return f"{self.span[0]}:{self.span[1]}: {self.message}"
        return self.message


# -- syntax / parsing -------------------------------------------------------

class QmlSyntaxError(QmlError):
    def __init__(self, line: int, column: int, expected: str, found: str = ""):
        msg = f"expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg, (line, column))
        self.line = line
        self.column = column
        self.expected = expected


class ShadowingError(QmlError):
    def __init__(self, name: str, span=None):
        super().__init__(f"ShadowingError({name})", span)
        self.name = name


class UnknownIdentifier(QmlError):
    def __init__(self, name: str, span=None):
        super().__init__(f"UnknownIdentifier({name})", span)
        self.name = name


class ArityMismatch(QmlError):
    def __init__(self, name: str, expected: int, got: int, span=None):
        super().__init__(f"ArityMismatch({name}): expected {expected} argument(s), got {got}", span)
        self.name = name


class TypeClash(QmlError):
    def __init__(self, name: str):
        super().__init__(f"TypeClash({name})")
        self.name = name


class ShapeMismatch(QmlError):
    pass


# -- typing -----------------------------------------------------------------

class QmlTypeError(QmlError):
    """Any rejection by the type checker."""


class UnusedVariable(QmlTypeError):
    def __init__(self, name: str, span=None):
        super().__init__(f"UnusedVariable({name})", span)
        self.name = name


class UnknownVariable(QmlTypeError):
    def __init__(self, name: str, span=None):
        super().__init__(f"UnknownVariable({name})", span)
        self.name = name


class TypeMismatch(QmlTypeError):
    pass


class NotOrthogonal(QmlTypeError):
    def __init__(self, left, right, span=None):
        from .syntax import pretty

        super().__init__(f"NotOrthogonal({pretty(left)}, {pretty(right)})", span)
        self.left = left
        self.right = right


class NotNormalised(QmlTypeError):
    def __init__(self, norm2: float, span=None):
        super().__init__(f"NotNormalised({norm2:.12g})", span)
        self.norm2 = norm2


# -- equations --------------------------------------------------------------

class NoMatch(QmlError):
    def __init__(self, rule, path, reason: str = ""):
        p = ".".join(map(str, path)) or "root"
        msg = f"NoMatch({rule.name if hasattr(rule, 'name') else rule}, {p})"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.rule = rule
        self.path = tuple(path)


class SideConditionFailed(QmlError):
    pass


class FinalMismatch(QmlError):
    pass
