"""Normalisation by evaluation.

Denotations are turned back into terms by *quoting*: classical basis
elements become values, vectors become value trees (nested superpositions
over first components, then second components), and maps out of a context
become a cascade of ``qif``/``let`` on the context variables with quoted
vectors at the leaves.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import QmlError, TypeMismatch
from .semantics import (
    LinMap,
    Vector,
    eval_classical,
    eval_quantum,
    index_of,
    table_to_linmap,
    value_of,
)
from .syntax import (
    FALSE,
    TRUE,
    UNIT,
    Q1,
    Q2,
    Bool,
    Context,
    IfQ,
    Let,
    Pair,
    PPair,
    QType,
    Scale,
    Sup,
    Tensor,
    Term,
    Unit,
    Var,
    ZeroVec,
    context_as_type,
    dim,
    fresh_name,
    identity_term,
    merge_contexts,
    pretty_type,
    terms_close,
)
from .typecheck import DEFAULT_TOL, infer


class EquivalenceDisagreement(QmlError):
    """Matrix comparison and normal-form comparison gave different answers."""


# ---------------------------------------------------------------------------
# classical quoting


@lru_cache(maxsize=4096)
def quote_classical(t: QType, v) -> Term:
    """The value term for a classical value (or a basis index if ``v`` is an int
    and ``t`` is not Q2)."""
    match t:
        case Tensor(a, b):
            if isinstance(v, int):
                v = value_of(t, v)
            return Pair(quote_classical(a, v[0]), quote_classical(b, v[1]))
    if t == Q1:
        return UNIT
    return TRUE if v else FALSE


def value_of_term(c: Term):
    """Inverse of :func:`quote_classical` on value terms."""
    match c:
        case Unit():
            return ()
        case Bool(b):
            return int(b)
        case Pair(a, b):
            return (value_of_term(a), value_of_term(b))
    raise TypeMismatch(f"not a classical value: {c!r}")


# ---------------------------------------------------------------------------
# probability vectors


@dataclass(frozen=True, eq=False)
class ProbDist:
    type: QType
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (dim(self.type),):
            raise ValueError("distribution length does not match type")
        if np.any(p < 0):
            raise ValueError("negative weight")
        object.__setattr__(self, "probs", p)

    def __getitem__(self, v) -> float:
        return float(self.probs[index_of(self.type, v)])

    def as_vector(self) -> Vector:
        return Vector(self.type, self.probs.astype(complex))


def fst_dist(v: Vector) -> ProbDist:
    """Per-first-component weight ``sqrt(Σ_y |v(x,y)|²)``."""
    if not isinstance(v.type, Tensor):
        raise TypeMismatch(f"fst of non-tensor type {pretty_type(v.type)}")
    s, t = v.type.left, v.type.right
    rows = v.amps.reshape(dim(s), dim(t))
    return ProbDist(s, np.sqrt(np.sum(np.abs(rows) ** 2, axis=1)))


def pinv(p: ProbDist, tol: float = DEFAULT_TOL) -> ProbDist:
    out = np.zeros_like(p.probs)
    keep = np.abs(p.probs) > tol
    out[keep] = 1.0 / p.probs[keep]
    return ProbDist(p.type, out)


# ---------------------------------------------------------------------------
# quantum values as terms


def qval_bind(v: Term, f: Callable[[object], Term], out_type: QType) -> Term:
    """``v >>= f`` on value trees; ``f`` receives classical values."""
    match v:
        case ZeroVec():
            return ZeroVec(out_type)
        case Sup(a, b):
            return Sup(qval_bind(a, f, out_type), qval_bind(b, f, out_type))
        case Scale(k, a):
            return Scale(k, qval_bind(a, f, out_type))
    return f(value_of_term(v))


def quote_quantum(t: QType, v: Vector | ProbDist, tol: float = DEFAULT_TOL) -> Term:
    """The value tree of ``v`` (raw: nothing is pruned)."""
    if isinstance(v, ProbDist):
        v = v.as_vector()
    if v.type != t:
        raise TypeMismatch(f"vector of type {pretty_type(v.type)} quoted at {pretty_type(t)}")
    if t == Q1:
        return Scale(v.amps[0], UNIT)
    if t == Q2:
        return Sup(Scale(v.amps[1], TRUE), Scale(v.amps[0], FALSE))
    s, r = t.left, t.right
    p = fst_dist(v)
    pi = pinv(p, tol)
    rows = v.amps.reshape(dim(s), dim(r))

    def second(x):
        row = Vector(r, rows[index_of(s, x)])
        inner = qval_bind(quote_quantum(r, row, tol), lambda y: quote_classical(t, (x, y)), t)
        return Scale(pi[x], inner)

    return qval_bind(quote_quantum(s, p, tol), second, t)


def prune(t: Term, ty: QType, tol: float = DEFAULT_TOL) -> Term:
    """Display form: fold nested scalings, drop ε-zero summands and unit scalings."""
    match t:
        case Scale(k, body):
            if abs(k) <= tol:
                return ZeroVec(ty)
            b = prune(body, ty, tol)
            if isinstance(b, ZeroVec):
                return b
            if isinstance(b, Scale):
                k, b = k * b.amp, b.body
                if abs(k) <= tol:
                    return ZeroVec(ty)
            return b if abs(k - 1) <= tol else Scale(k, b)
        case Sup(a, b):
            a, b = prune(a, ty, tol), prune(b, ty, tol)
            if isinstance(a, ZeroVec):
                return b
            if isinstance(b, ZeroVec):
                return a
            return Sup(a, b)
        case IfQ(c, a, b):
            return IfQ(c, prune(a, ty, tol), prune(b, ty, tol))
        case Let(p, a, b):
            return Let(p, a, prune(b, ty, tol))
    return t


def prob_scale(p: ProbDist, v: Vector | Term, tol: float = DEFAULT_TOL):
    """``p*v``: entrywise on vectors, by bind on value trees."""
    if isinstance(v, Vector):
        if v.type != p.type:
            raise TypeMismatch("distribution and vector types differ")
        return Vector(v.type, p.probs * v.amps)
    return qval_bind(v, lambda x: Scale(p[x], quote_classical(p.type, x)), p.type)


# ---------------------------------------------------------------------------
# quoting maps out of a context


def _restrict_last(m: np.ndarray, rest_dim: int, last_dim: int, k: int) -> np.ndarray:
    """Columns with the last context slot fixed to basis index ``k``."""
    return m[:, [i * last_dim + k for i in range(rest_dim)]]


def _quote_open(ctx: Context, ty: QType, m: np.ndarray, leaf) -> Term:
    """Last-entry recursion over a context of Q1/Q2 variables."""
    if not ctx.entries:
        return leaf(m[:, 0])
    *rest, (x, s) = ctx.entries
    g = Context(tuple(rest))
    if s == Q1:
        return _quote_open(g, ty, m, leaf)
    rest_dim = dim(context_as_type(g))
    then = _quote_open(g, ty, _restrict_last(m, rest_dim, 2, 1), leaf)
    else_ = _quote_open(g, ty, _restrict_last(m, rest_dim, 2, 0), leaf)
    return IfQ(Var(x), then, else_)


def _flatten(ctx: Context, avoid: set[str]) -> tuple[Context, list[tuple[PPair, str]]]:
    """Split every tensor-typed variable into fresh components, outermost first.

    Basis indices are unchanged: ``a·dim(σ⊗τ) + (b·dim τ + c)`` equals
    ``(a·dim σ + b)·dim τ + c``.
    """
    entries: list[tuple[str, QType]] = []
    lets: list[tuple[PPair, str]] = []

    def go(x: str, s: QType):
        if not isinstance(s, Tensor):
            entries.append((x, s))
            return
        x1 = fresh_name(x, avoid)
        avoid.add(x1)
        x2 = fresh_name(x, avoid)
        avoid.add(x2)
        lets.append((PPair(x1, x2), x))
        go(x1, s.left)
        go(x2, s.right)

    for x, s in ctx:
        go(x, s)
    return Context(tuple(entries)), lets


def _quote_flat(ctx: Context, ty: QType, m: np.ndarray, leaf) -> Term:
    flat, lets = _flatten(ctx, set(ctx.names()))
    t = _quote_open(flat, ty, m, leaf)
    for p, x in reversed(lets):
        t = Let(p, Var(x), t)
    return t


def quote_open(ctx: Context, ty: QType, m: LinMap, tol: float = DEFAULT_TOL, raw: bool = False) -> Term:
    """Invert the meaning of a map ``con(ctx) → ty`` into a term in ``ctx``."""
    if m.in_type != context_as_type(ctx) or m.out_type != ty:
        raise TypeMismatch("map does not match context and type")

    def leaf(col):
        q = quote_quantum(ty, Vector(ty, col), tol)
        return q if raw else prune(q, ty, tol)

    return _quote_flat(ctx, ty, m.matrix, leaf)


def quote_open_classical(ctx: Context, ty: QType, table: dict[int, int]) -> Term:
    in_t = context_as_type(ctx)
    m = np.zeros((dim(ty), dim(in_t)))
    for i, o in table.items():
        m[o, i] = 1

    def leaf(col):
        return quote_classical(ty, value_of(ty, int(np.argmax(col))))

    return _quote_flat(ctx, ty, m, leaf)


def _meaning(ctx: Context, t: Term, classical: bool, tol: float) -> tuple[LinMap, Term]:
    """Denotation and normal form from a single typing and evaluation pass."""
    j = infer(ctx, t, strict=False, classical=classical, tol=tol)
    if classical:
        table = eval_classical(j)
        return table_to_linmap(j, table), quote_open_classical(ctx, j.type, table)
    m = eval_quantum(j)
    return m, quote_open(ctx, j.type, m, tol)


def nf(ctx: Context, t: Term, *, classical: bool = False, tol: float = DEFAULT_TOL) -> Term:
    """Normal form: quote of the denotation."""
    return _meaning(ctx, t, classical, tol)[1]


def denotation(ctx: Context, t: Term, *, classical: bool = False, tol: float = DEFAULT_TOL) -> LinMap:
    j = infer(ctx, t, strict=False, classical=classical, tol=tol)
    if classical:
        return table_to_linmap(j, eval_classical(j))
    return eval_quantum(j)


def equiv(ctx: Context, t: Term, u: Term, *, classical: bool = False, tol: float = DEFAULT_TOL) -> bool:
    """Decide ``ctx ⊢ t ≡ u`` by comparing denotations.

    The verdict is cross-checked against structural comparison of normal
    forms; if the two ever disagree :class:`EquivalenceDisagreement` is raised.
    """
    mt, nt = _meaning(ctx, t, classical, tol)
    mu, nu = _meaning(ctx, u, classical, tol)
    if mt.out_type != mu.out_type:
        raise TypeMismatch(f"terms have types {pretty_type(mt.out_type)} and {pretty_type(mu.out_type)}")
    semantic = mt.allclose(mu, tol)
    structural = terms_close(nt, nu, tol)
    if semantic != structural:
        raise EquivalenceDisagreement(
            f"denotations {'agree' if semantic else 'differ'} but normal forms "
            f"{'agree' if structural else 'differ'}"
        )
    return semantic


# ---------------------------------------------------------------------------
# syntactic diagonal


def delta_hat(g: Context, d: Context) -> tuple[Context, Term]:
    """The term ``(γ, δ)`` in ``Γ⊗Δ`` pairing the two context tuples."""
    merged, _ = merge_contexts(g, d)
    return merged, Pair(identity_term(g), identity_term(d))
