"""Types, contexts and terms of QML, plus the purely syntactic algebra on them.

Terms are immutable frozen dataclasses. The ``span`` field carries an optional
``(line, column)`` source position and never takes part in equality.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

from .errors import ShapeMismatch, TypeClash

# ---------------------------------------------------------------------------
# types


class QType:
    __slots__ = ()


@dataclass(frozen=True)
class _Q1(QType):
    def __str__(self) -> str:
        return "Q1"

    def __repr__(self) -> str:
        return "Q1"


@dataclass(frozen=True)
class _Q2(QType):
    def __str__(self) -> str:
        return "Q2"

    def __repr__(self) -> str:
        return "Q2"


Q1 = _Q1()
Q2 = _Q2()


@dataclass(frozen=True)
class Tensor(QType):
    left: QType
    right: QType

    def __str__(self) -> str:
        return pretty_type(self)


@lru_cache(maxsize=None)
def dim(t: QType) -> int:
    if t == Q1:
        return 1
    if t == Q2:
        return 2
    return dim(t.left) * dim(t.right)


def pretty_type(t: QType) -> str:
    if isinstance(t, Tensor):
        right = pretty_type(t.right)
        if isinstance(t.right, Tensor):
            right = f"({right})"
        return f"{pretty_type(t.left)}*{right}"
    return str(t)


# ---------------------------------------------------------------------------
# contexts


@dataclass(frozen=True)
class Context:
    """An ordered typing context; each name occurs at most once."""

    entries: tuple[tuple[str, QType], ...] = ()

    def __post_init__(self):
        names = [n for n, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable in context: {names}")

    @classmethod
    def of(cls, *pairs: tuple[str, QType]) -> "Context":
        return cls(tuple(pairs))

    def __iter__(self) -> Iterator[tuple[str, QType]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, name: object) -> bool:
        return any(n == name for n, _ in self.entries)

    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    def type_of(self, name: str) -> QType:
        for n, t in self.entries:
            if n == name:
                return t
        raise KeyError(name)

    def extend(self, *pairs: tuple[str, QType]) -> "Context":
        return Context(self.entries + tuple(pairs))

    def restrict(self, names: Iterable[str]) -> "Context":
        keep = set(names)
        return Context(tuple((n, t) for n, t in self.entries if n in keep))

    def __str__(self) -> str:
        if not self.entries:
            return "•"
        return ", ".join(f"{n}:{pretty_type(t)}" for n, t in self.entries)


EMPTY = Context()


def merge_contexts(g: Context, d: Context) -> tuple[Context, tuple[str, ...]]:
    """The partial ``⊗`` on contexts.

    Recurses on the left context: ``(Γ,x)⊗Δ = (Γ⊗(Δ∖x)),x``, so right-only
    names come first (in Δ order) followed by Γ in its own order. The second
    component says, per output slot, whether it feeds ``left``, ``right`` or
    ``both``.
    """
    for n, t in g:
        if n in d and d.type_of(n) != t:
            raise TypeClash(n)
    right_only = [(n, t) for n, t in d if n not in g]
    entries = right_only + list(g.entries)
    desc = ["right"] * len(right_only) + ["both" if n in d else "left" for n, _ in g]
    return Context(tuple(entries)), tuple(desc)


def context_as_type(g: Context) -> QType:
    t: QType = Q1
    for _, s in g:
        t = Tensor(t, s)
    return t


# ---------------------------------------------------------------------------
# patterns and terms


@dataclass(frozen=True)
class PVar:
    name: str

    def names(self) -> tuple[str, ...]:
        return (self.name,)


@dataclass(frozen=True)
class PPair:
    left: str
    right: str

    def __post_init__(self):
        if self.left == self.right:
            raise ValueError(f"pair pattern binds {self.left!r} twice")

    def names(self) -> tuple[str, ...]:
        return (self.left, self.right)


Pattern = Union[PVar, PPair]

_span = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    span: tuple[int, int] | None = _span


@dataclass(frozen=True)
class Unit:
    span: tuple[int, int] | None = _span


@dataclass(frozen=True)
class Bool:
    value: bool
    span: tuple[int, int] | None = _span


@dataclass(frozen=True)
class Pair:
    fst: "Term"
    snd: "Term"
    span: tuple[int, int] | None = _span


@dataclass(frozen=True)
class Let:
    pat: Pattern
    bound: "Term"
    body: "Term"
    span: tuple[int, int] | None = _span


@dataclass(frozen=True)
class IfQ:
    cond: "Term"
    then: "Term"
    else_: "Term"
    span: tuple[int, int] | None = _span


@dataclass(frozen=True)
class ZeroVec:
    annot: QType
    span: tuple[int, int] | None = _span


@dataclass(frozen=True)
class Scale:
    amp: complex
    body: "Term"
    span: tuple[int, int] | None = _span

    def __post_init__(self):
        amp = complex(self.amp)
        if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
            raise ValueError(f"non-finite amplitude {amp!r}")
        object.__setattr__(self, "amp", amp)


@dataclass(frozen=True)
class Sup:
    left: "Term"
    right: "Term"
    span: tuple[int, int] | None = _span


@dataclass(frozen=True)
class Call:
    """A use of a global definition; removed by ``inline_defs``."""

    name: str
    args: tuple["Term", ...]
    span: tuple[int, int] | None = _span


Term = Union[Var, Unit, Bool, Pair, Let, IfQ, ZeroVec, Scale, Sup, Call]

UNIT = Unit()
FALSE = Bool(False)
TRUE = Bool(True)


def children(t: Term) -> tuple[Term, ...]:
    match t:
        case Pair(a, b):
            return (a, b)
        case Let(_, a, b):
            return (a, b)
        case IfQ(c, a, b):
            return (c, a, b)
        case Scale(_, a):
            return (a,)
        case Sup(a, b):
            return (a, b)
        case Call(_, args):
            return tuple(args)
    return ()


def with_children(t: Term, kids: Sequence[Term]) -> Term:
    match t:
        case Pair():
            return Pair(kids[0], kids[1], span=t.span)
        case Let(p, _, _):
            return Let(p, kids[0], kids[1], span=t.span)
        case IfQ():
            return IfQ(kids[0], kids[1], kids[2], span=t.span)
        case Scale(k, _):
            return Scale(k, kids[0], span=t.span)
        case Sup():
            return Sup(kids[0], kids[1], span=t.span)
        case Call(n, _):
            return Call(n, tuple(kids), span=t.span)
    return t


def subterm(t: Term, path: Sequence[int]) -> Term:
    for i in path:
        kids = children(t)
        if not 0 <= i < len(kids):
            raise IndexError(f"path step {i} out of range")
        t = kids[i]
    return t


def replace_at(t: Term, path: Sequence[int], new: Term) -> Term:
    if not path:
        return new
    kids = list(children(t))
    i = path[0]
    if not 0 <= i < len(kids):
        raise IndexError(f"path step {i} out of range")
    kids[i] = replace_at(kids[i], path[1:], new)
    return with_children(t, kids)


def all_paths(t: Term, prefix: tuple[int, ...] = ()) -> Iterator[tuple[int, ...]]:
    yield prefix
    for i, k in enumerate(children(t)):
        yield from all_paths(k, prefix + (i,))


def size(t: Term) -> int:
    return 1 + sum(size(k) for k in children(t))


def height(t: Term) -> int:
    """Nodes on the longest root-to-leaf path."""
    return 1 + max((height(k) for k in children(t)), default=0)


def free_vars(t: Term) -> frozenset[str]:
    match t:
        case Var(n):
            return frozenset((n,))
        case Let(p, a, b):
            return free_vars(a) | (free_vars(b) - set(p.names()))
    out: frozenset[str] = frozenset()
    for k in children(t):
        out |= free_vars(k)
    return out


def all_names(t: Term) -> set[str]:
    """Every variable name occurring in ``t``, bound or free."""
    names: set[str] = set()

    def walk(u: Term) -> None:
        match u:
            case Var(n):
                names.add(n)
            case Let(p, _, _):
                names.update(p.names())
        for k in children(u):
            walk(k)

    walk(t)
    return names


def fresh_name(base: str, avoid: set[str] | frozenset[str]) -> str:
    if base not in avoid:
        return base
    i = 1
    while f"{base}_{i}" in avoid:
        i += 1
    return f"{base}_{i}"


def is_cval(t: Term) -> bool:
    match t:
        case Var() | Unit() | Bool():
            return True
        case Pair(a, b):
            return is_cval(a) and is_cval(b)
    return False


def is_quantum(t: Term) -> bool:
    """True if ``t`` contains 0⃗, a scaling or a superposition anywhere."""
    if isinstance(t, (ZeroVec, Scale, Sup)):
        return True
    return any(is_quantum(k) for k in children(t))


# ---------------------------------------------------------------------------
# the category of typed terms: identities and composition


def identity_term(g: Context) -> Term:
    t: Term = UNIT
    for n, _ in g:
        t = Pair(t, Var(n))
    return t


def let_star(g: Context, bound: Term, body: Term) -> Term:
    """Destructure ``bound : con(g)`` into the variables of ``g`` around ``body``.

    Remainder variables are named ``<x>_r``; the innermost remainder has type
    Q1 and is simply dropped.
    """
    if not g.entries:
        return body
    *rest, (x, _) = g.entries
    avoid = all_names(bound) | all_names(body) | set(g.names())
    xr = fresh_name(f"{x}_r", avoid)
    return Let(PPair(xr, x), bound, let_star(Context(tuple(rest)), Var(xr), body))


def compose(d: Term, g: Context, e: Term) -> Term:
    """``e ∘ d`` for ``d ∈ Tm(Δ, Γ)`` and ``e ∈ Tm(Γ, Θ)``."""
    return let_star(g, d, e)


def substitute(body: Term, val: Term, pat: Pattern) -> Term:
    """``body[val/pat]`` for a classical value ``val``."""
    if isinstance(pat, PPair):
        if not isinstance(val, Pair):
            raise ShapeMismatch(f"pair pattern ({pat.left},{pat.right}) meets non-pair value")
        mapping = {pat.left: val.fst, pat.right: val.snd}
    else:
        mapping = {pat.name: val}
    return _subst(body, mapping)


def _subst(t: Term, mapping: dict[str, Term]) -> Term:
    if not mapping:
        return t
    match t:
        case Var(n):
            return mapping.get(n, t)
        case Let(p, a, b):
            inner = {k: v for k, v in mapping.items() if k not in p.names()}
            return Let(p, _subst(a, mapping), _subst(b, inner), span=t.span)
    kids = children(t)
    if not kids:
        return t
    return with_children(t, [_subst(k, mapping) for k in kids])


def rename_free(t: Term, mapping: dict[str, str]) -> Term:
    return _subst(t, {k: Var(v) for k, v in mapping.items()})


# ---------------------------------------------------------------------------
# printing


def format_amp(k: complex, digits: int | None = None) -> str:
    def num(x: float) -> str:
        if digits is None:
            s = repr(float(x))
        else:
            s = f"{x:.{digits}g}"
        return s

    re, im = k.real, k.imag
    if digits is not None:
        # suppress round-off noise on one component
        if abs(im) < 10 ** (-digits) * max(1.0, abs(re)):
            im = 0.0
        if abs(re) < 10 ** (-digits) * max(1.0, abs(im)):
            re = 0.0
    if im == 0.0:
        return num(re)
    if re == 0.0:
        return f"{num(im)}*i"
    sign = "-" if im < 0 or (im == 0.0 and math.copysign(1, im) < 0) else "+"
    return f"{num(re)}{sign}{num(abs(im))}*i"


def pretty(t: Term, digits: int | None = None) -> str:
    """Render ``t`` in the concrete grammar accepted by the parser.

    With ``digits=None`` amplitudes are printed exactly (``repr``), so that
    parsing the output gives back an equal term.
    """

    def term(u: Term) -> str:
        match u:
            case Let(p, a, b):
                return f"let {pat(p)} = {term(a)} in {term(b)}"
            case IfQ(c, a, b):
                return f"qif {term(c)} then {term(a)} else {term(b)}"
        return sum_(u)

    def sum_(u: Term) -> str:
        if isinstance(u, Sup):
            return f"{sum_(u.left)} + {prod(u.right)}"
        return prod(u)

    def prod(u: Term) -> str:
        if isinstance(u, Scale):
            return f"{{{format_amp(u.amp, digits)}}}*{prod(u.body)}"
        return atom(u)

    def atom(u: Term) -> str:
        match u:
            case Var(n):
                return n
            case Unit():
                return "()"
            case Bool(v):
                return "true" if v else "false"
            case Pair(a, b):
                return f"({term(a)}, {term(b)})"
            case ZeroVec(s):
                return f"zero[{pretty_type(s)}]"
            case Call(n, args):
                return " ".join([n] + [atom(a) for a in args])
        return f"({term(u)})"

    def pat(p: Pattern) -> str:
        if isinstance(p, PPair):
            return f"({p.left}, {p.right})"
        return p.name

    return term(t)


def terms_close(a: Term, b: Term, tol: float = 1e-9) -> bool:
    """Structural equality with amplitudes compared within ``tol``."""
    if type(a) is not type(b):
        return False
    match a:
        case Scale(k, x):
            return abs(k - b.amp) <= tol and terms_close(x, b.body, tol)
        case Let(p, _, _):
            if p != b.pat:
                return False
        case Var(n):
            return n == b.name
        case Bool(v):
            return v == b.value
        case ZeroVec(s):
            return s == b.annot
        case Call(n, args):
            if n != b.name or len(args) != len(b.args):
                return False
    ka, kb = children(a), children(b)
    return len(ka) == len(kb) and all(terms_close(x, y, tol) for x, y in zip(ka, kb))
