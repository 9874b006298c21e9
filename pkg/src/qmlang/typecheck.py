"""Typing: the classical judgement ``Γ ⊢ t : σ`` and the strict ``Γ ⊢° t : σ``.

Contexts are split syntactically: a variable goes to whichever premise
mentions it, to both if both do (contraction is sharing), and is dropped only
if it has type Q1.

Strict checking adds, for ``qif`` branches and superposition summands, an
orthogonality side condition, and for every maximal block of ``{κ}*``/``+``/
``zero`` nodes a normalisation condition: with summands orthogonal, the
squared norm of the block is ``Σ |path amplitude|²`` over its non-zero leaves,
and it has to be 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import (
    NotNormalised,
    NotOrthogonal,
    QmlError,
    QmlTypeError,
    ShadowingError,
    TypeMismatch,
    UnknownVariable,
    UnusedVariable,
)
from .syntax import (
    Q1,
    Q2,
    Bool,
    Call,
    Context,
    IfQ,
    Let,
    Pair,
    PVar,
    QType,
    Scale,
    Sup,
    Tensor,
    Term,
    Unit,
    Var,
    ZeroVec,
    children,
    free_vars,
    merge_contexts,
    pretty_type,
)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Split:
    """How a node's context was divided between two premises."""

    left: Context
    right: Context
    merged: Context
    sharing: tuple[str, ...]


@dataclass(frozen=True)
class Judgement:
    ctx: Context
    term: Term
    type: QType
    strict: bool
    used: frozenset[str]
    premises: tuple["Judgement", ...] = field(default=(), compare=False, repr=False)
    split: Optional[Split] = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        from .syntax import pretty

        turnstile = "⊢°" if self.strict else "⊢"
        return f"{self.ctx} {turnstile} {pretty(self.term)} : {pretty_type(self.type)}"

    def at(self, path) -> "Judgement":
        """The sub-derivation for the subterm at ``path``."""
        j = self
        for i in path:
            j = j.premises[i]
        return j


# ---------------------------------------------------------------------------
# inner products of terms


class _Unknown:
    __slots__ = ()

    def __repr__(self) -> str:
        return "?"


UNKNOWN = _Unknown()

IPResult = "complex | _Unknown"


def _mul(a, b):
    if a is UNKNOWN or b is UNKNOWN:
        # zero annihilates an unknown factor
        if (a is not UNKNOWN and a == 0) or (b is not UNKNOWN and b == 0):
            return 0j
        return UNKNOWN
    return a * b


def _add(a, b):
    if a is UNKNOWN or b is UNKNOWN:
        return UNKNOWN
    return a + b


def _is_zero_like(t: Term) -> bool:
    match t:
        case ZeroVec():
            return True
        case Scale(_, b):
            return _is_zero_like(b)
        case Sup(a, b):
            return _is_zero_like(a) and _is_zero_like(b)
    return False


def inner_product(t: Term, u: Term):
    """Syntactic inner product ``⟨t|u⟩``: a complex number or ``UNKNOWN``.

    Conjugate-linear on the left. Structural clauses are tried before the
    catch-all. A term equal to itself counts as a unit vector unless its
    norm can be computed from its parts (pairs, scalings, sums and zero).
    """
    if t == u and not isinstance(t, (Pair, Scale, Sup, ZeroVec)):
        return 1 + 0j  # a well-typed strict term has unit norm
    if isinstance(t, Bool) and isinstance(u, Bool):
        return 0j  # t != u here
    if isinstance(t, ZeroVec) or isinstance(u, ZeroVec):
        return 0j
    if isinstance(t, Pair) and isinstance(u, Pair):
        return _mul(inner_product(t.fst, u.fst), inner_product(t.snd, u.snd))
    if isinstance(t, Sup):
        return _add(inner_product(t.left, u), inner_product(t.right, u))
    if isinstance(u, Sup):
        return _add(inner_product(t, u.left), inner_product(t, u.right))
    if isinstance(t, Scale):
        return _mul(t.amp.conjugate(), inner_product(t.body, u))
    if isinstance(u, Scale):
        return _mul(u.amp, inner_product(t, u.body))
    return UNKNOWN


def _orth_struct(t: Term, u: Term, tol: float) -> bool:
    z = inner_product(t, u)
    if z is not UNKNOWN:
        return abs(z) <= tol
    # Descend through constructs whose value at any environment is a linear
    # combination of their sub-results; orthogonality of every piece is
    # sufficient for orthogonality of the whole.
    for a, b, flip in ((t, u, False), (u, t, True)):
        match a:
            case IfQ(_, x, y):
                return _orth(x, b, flip, tol) and _orth(y, b, flip, tol)
            case Let(_, _, body):
                return _orth(body, b, flip, tol)
            case Scale(_, body):
                return _orth(body, b, flip, tol)
            case Sup(x, y):
                return _orth(x, b, flip, tol) and _orth(y, b, flip, tol)
    if isinstance(t, Pair) and isinstance(u, Pair):
        return _orth_struct(t.fst, u.fst, tol) or _orth_struct(t.snd, u.snd, tol)
    return False


def _orth(a: Term, b: Term, flip: bool, tol: float) -> bool:
    return _orth_struct(b, a, tol) if flip else _orth_struct(a, b, tol)


def orthogonal(t: Term, u: Term, ctx: Context | None = None, tol: float = DEFAULT_TOL) -> bool:
    """``t ⊥ u``.

    If the syntactic check fails, retry once on the normal forms of both
    sides (a bounded stand-in for closing the strict judgement under ``≡``).
    ``ctx`` is the context both terms live in; without one only closed terms
    can be normalised.
    """
    if _orth_struct(t, u, tol):
        return True
    from .normalize import nf  # local: normalize depends on this module

    if ctx is None:
        ctx = Context()
    try:
        nt = nf(ctx.restrict(free_vars(t)), t, tol=tol)
        nu = nf(ctx.restrict(free_vars(u)), u, tol=tol)
    except QmlError:
        return False
    return _orth_struct(nt, nu, tol)


# ---------------------------------------------------------------------------
# context splitting


def context_split(ctx: Context, t_free, u_free) -> tuple[Context, Context]:
    """Assign each variable to the premise(s) that mention it."""
    t_free, u_free = set(t_free), set(u_free)
    for n, s in ctx:
        if n not in t_free and n not in u_free and s != Q1:
            raise UnusedVariable(n)
    return ctx.restrict(t_free), ctx.restrict(u_free)


# ---------------------------------------------------------------------------
# inference


def _fv_table(t: Term, table: dict[int, frozenset[str]], known: dict[int, Judgement]) -> frozenset[str]:
    """Free variables of every node, keyed by node identity (one pass)."""
    k = known.get(id(t))
    if k is not None and k.term is t:
        table[id(t)] = k.used
        return k.used
    match t:
        case Var(n):
            fv = frozenset((n,))
        case Let(p, a, b):
            fv = _fv_table(a, table, known) | (_fv_table(b, table, known) - set(p.names()))
        case _:
            fv = frozenset()
            for k in children(t):
                fv |= _fv_table(k, table, known)
    table[id(t)] = fv
    return fv


class _Checker:
    def __init__(self, strict: bool, classical: bool, tol: float, root: Term, known=None):
        self.strict = strict
        self.classical = classical
        self.tol = tol
        # sub-derivations of an earlier run that may be shared with this one
        self.known: dict[int, Judgement] = known or {}
        self._fv: dict[int, frozenset[str]] = {}
        _fv_table(root, self._fv, self.known)

    def fv(self, t: Term) -> frozenset[str]:
        r = self._fv.get(id(t))
        # below a reused node the table is filled on demand
        return r if r is not None else _fv_table(t, self._fv, self.known)

    def infer(self, ctx: Context, t: Term, in_block: bool = False) -> Judgement:
        k = self.known.get(id(t))
        if k is not None and k.term is t and k.ctx == ctx and not self.strict:
            return k
        try:
            return self._infer(ctx, t, in_block)
        except QmlError as e:
            if e.span is None and getattr(t, "span", None) is not None:
                e.span = t.span
            raise

    def _judge(self, ctx, t, ty, premises=(), split=None) -> Judgement:
        return Judgement(ctx, t, ty, self.strict, self.fv(t) & set(ctx.names()), tuple(premises), split)

    def _split(self, ctx: Context, left_free, right_free) -> tuple[Context, Context, Split]:
        g, d = context_split(ctx, left_free, right_free)
        merged, sharing = merge_contexts(g, d)
        return g, d, Split(g, d, merged, sharing)

    def _infer(self, ctx: Context, t: Term, in_block: bool) -> Judgement:
        fv = self.fv(t)
        for n in sorted(fv):
            if n not in ctx:
                raise UnknownVariable(n)
        for n, s in ctx:
            if n not in fv and s != Q1:
                raise UnusedVariable(n)
        if self.classical and isinstance(t, (ZeroVec, Scale, Sup)):
            raise TypeMismatch(f"quantum construct {type(t).__name__} in classical mode")

        match t:
            case Var(n):
                if n not in ctx:
                    raise UnknownVariable(n)
                return self._judge(ctx, t, ctx.type_of(n))
            case Unit():
                return self._judge(ctx, t, Q1)
            case Bool():
                return self._judge(ctx, t, Q2)
            case Pair(a, b):
                g, d, sp = self._split(ctx, self.fv(a), self.fv(b))
                ja, jb = self.infer(g, a), self.infer(d, b)
                return self._judge(ctx, t, Tensor(ja.type, jb.type), (ja, jb), sp)
            case Let(p, a, b):
                for n in p.names():
                    if n in ctx:
                        raise ShadowingError(n)
                g, d, sp = self._split(ctx, self.fv(a), self.fv(b) - set(p.names()))
                ja = self.infer(g, a)
                if isinstance(p, PVar):
                    inner = d.extend((p.name, ja.type))
                else:
                    if not isinstance(ja.type, Tensor):
                        raise TypeMismatch(
                            f"pair pattern ({p.left},{p.right}) bound to term of type {pretty_type(ja.type)}"
                        )
                    inner = d.extend((p.left, ja.type.left), (p.right, ja.type.right))
                jb = self.infer(inner, b)
                return self._judge(ctx, t, jb.type, (ja, jb), sp)
            case IfQ(c, a, b):
                g, d, sp = self._split(ctx, self.fv(c), self.fv(a) | self.fv(b))
                jc = self.infer(g, c)
                if jc.type != Q2:
                    raise TypeMismatch(f"qif condition has type {pretty_type(jc.type)}, expected Q2")
                ja, jb = self.infer(d, a), self.infer(d, b)
                if ja.type != jb.type:
                    raise TypeMismatch(
                        f"qif branches have types {pretty_type(ja.type)} and {pretty_type(jb.type)}"
                    )
                if self.strict and not orthogonal(a, b, d, self.tol):
                    raise NotOrthogonal(a, b, t.span)
                return self._judge(ctx, t, ja.type, (jc, ja, jb), sp)
            case ZeroVec(s):
                j = self._judge(ctx, t, s)
            case Scale(_, a):
                ja = self.infer(ctx, a, in_block=True)
                j = self._judge(ctx, t, ja.type, (ja,))
            case Sup(a, b):
                za, zb = _is_zero_like(a), _is_zero_like(b)
                # a zero summand carries no amplitude and may ignore the context
                ca = Context() if za and not zb else ctx
                cb = Context() if zb and not za else ctx
                ja = self.infer(ca, a, in_block=True)
                jb = self.infer(cb, b, in_block=True)
                if ja.type != jb.type:
                    raise TypeMismatch(
                        f"summands have types {pretty_type(ja.type)} and {pretty_type(jb.type)}"
                    )
                if self.strict and not orthogonal(a, b, ctx, self.tol):
                    raise NotOrthogonal(a, b, t.span)
                j = self._judge(ctx, t, ja.type, (ja, jb))
            case Call(n, _):
                raise TypeMismatch(f"unexpanded call to global {n}")
            case _:
                raise TypeMismatch(f"not a term: {t!r}")

        if self.strict and not in_block:
            n2 = block_norm2(t)
            if abs(n2 - 1.0) > self.tol:
                raise NotNormalised(n2, t.span)
        return j


def block_norm2(t: Term) -> float:
    """Squared norm of a superposition block, assuming orthogonal summands
    and unit-norm leaves."""
    match t:
        case ZeroVec():
            return 0.0
        case Scale(k, a):
            return abs(k) ** 2 * block_norm2(a)
        case Sup(a, b):
            return block_norm2(a) + block_norm2(b)
    return 1.0


def index_judgement(j: Judgement) -> dict[int, Judgement]:
    """Every sub-derivation of ``j``, keyed by the identity of its term."""
    out: dict[int, Judgement] = {}
    stack = [j]
    while stack:
        k = stack.pop()
        out[id(k.term)] = k
        stack.extend(k.premises)
    return out


def infer(
    ctx: Context,
    t: Term,
    strict: bool = True,
    *,
    classical: bool = False,
    tol: float = DEFAULT_TOL,
    reuse: Judgement | dict[int, Judgement] | None = None,
) -> Judgement:
    """Derive ``ctx ⊢ t : σ`` (or ``⊢°`` when ``strict``).

    ``reuse`` is an earlier non-strict derivation (or its
    :func:`index_judgement`), made with the same ``classical`` flag, whose
    sub-derivations are taken over for subterms (compared by identity) that
    occur again in the same context.

    Raises a :class:`QmlTypeError` subclass on rejection.
    """
    # the classical judgement has no orthogonality side conditions
    strict = strict and not classical
    if isinstance(reuse, Judgement):
        reuse = index_judgement(reuse) if not reuse.strict else None
    return _Checker(strict, classical, tol, t, None if strict else reuse).infer(ctx, t)


def check(ctx: Context, t: Term, **kw) -> bool:
    try:
        infer(ctx, t, **kw)
    except QmlTypeError:
        return False
    return True
