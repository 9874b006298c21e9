"""Random well-typed terms for property tests.

Two generators share one seeded :class:`random.Random`:

* :class:`StrictGen` builds terms that denote isometries out of a few Q2
  variables, composing pairs (with sharing), ``qif`` on a variable with
  orthogonal branches, normalised superpositions of orthogonal terms, phases
  and lets. Every variable in the context is consumed, and the output type is
  always large enough to hold the input.
* :class:`FreeGen` drops the isometry discipline and favours redexes of the
  equational theory (values under ``let``, ``qif`` on constants or on a
  superposition, nested scalings, repeated summands, zero summands).
"""

from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass, field
from typing import Callable

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
    PVar,
    QType,
    Scale,
    Sup,
    Tensor,
    Term,
    Var,
    ZeroVec,
    dim,
    height,
    size,
)

Q22 = Tensor(Q2, Q2)
Q222 = Tensor(Q22, Q2)


def unit_pair(rng: random.Random) -> tuple[complex, complex]:
    """Two amplitudes with ``|a|² + |b|² = 1``."""
    if rng.random() < 0.3:
        s = 1 / math.sqrt(2)
        return s, rng.choice([s, -s, 1j * s])
    th = rng.uniform(0.1, math.pi / 2 - 0.1)
    return (
        math.cos(th) * cmath.exp(1j * rng.uniform(0, 2 * math.pi)),
        math.sin(th) * cmath.exp(1j * rng.uniform(0, 2 * math.pi)),
    )


def phase(rng: random.Random) -> complex:
    return rng.choice([-1, 1j, -1j, cmath.exp(1j * rng.uniform(0, 2 * math.pi))])


def amplitude(rng: random.Random) -> complex:
    return rng.choice(
        [0, 1, -1, 0.5, 1j, complex(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))]
    )


def log2dim(t: QType) -> int:
    return dim(t).bit_length() - 1


@dataclass
class _Base:
    rng: random.Random
    max_depth: int = 5
    counter: int = field(default=0)

    def fresh(self) -> str:
        self.counter += 1
        return f"v{self.counter}"

    def closed_value(self, ty: QType) -> Term:
        match ty:
            case Tensor(a, b):
                return Pair(self.closed_value(a), self.closed_value(b))
        if ty == Q1:
            return UNIT
        return self.rng.choice([TRUE, FALSE])

    def split_type(self, ty: Tensor) -> tuple[QType, QType]:
        return ty.left, ty.right


class StrictGen(_Base):
    """Isometries from Q2 variables; ``ctx`` is a tuple of names, all Q2."""

    def term(self, ctx: tuple[str, ...], ty: QType, depth: int = 0) -> Term:
        assert len(ctx) <= log2dim(ty)
        rng = self.rng
        if depth >= self.max_depth:
            return self.direct(ctx, ty, depth)
        options = ["direct"]
        if isinstance(ty, Tensor):
            options += ["pair", "pair"]
        if ctx:
            options += ["qif", "qif"]
        if len(ctx) < log2dim(ty):
            options += ["sup", "sup", "qifsup"]
        if ctx or ty != Q1:
            options += ["let"]
        options += ["phase"]
        match rng.choice(options):
            case "pair":
                return self.pair(ctx, ty, depth)
            case "qif":
                x = rng.choice(ctx)
                rest = tuple(n for n in ctx if n != x)
                u0, u1 = self.orth(rest, ty, depth + 1)
                return IfQ(Var(x), u0, u1)
            case "sup":
                u0, u1 = self.orth(ctx, ty, depth + 1)
                a, b = unit_pair(rng)
                return Sup(Scale(a, u0), Scale(b, u1))
            case "qifsup":
                # a closed superposition used as a condition
                a, b = unit_pair(rng)
                c = Sup(Scale(a, TRUE), Scale(b, FALSE))
                u0, u1 = self.orth(ctx, ty, depth + 1)
                return IfQ(c, u0, u1)
            case "let":
                return self.let(ctx, ty, depth)
            case "phase":
                return Scale(phase(rng), self.term(ctx, ty, depth + 1))
        return self.direct(ctx, ty, depth)

    def direct(self, ctx, ty, depth) -> Term:
        """Shallow construction that always succeeds."""
        if not ctx:
            if ty == Q2 and self.rng.random() < 0.5:
                a, b = unit_pair(self.rng)
                return Sup(Scale(a, TRUE), Scale(b, FALSE))
            return self.closed_value(ty)
        if len(ctx) == 1 and ty == Q2:
            return Var(ctx[0])
        if isinstance(ty, Tensor):
            return self.pair(ctx, ty, self.max_depth)
        # ty == Q2, one variable: handled above; nothing else fits
        raise AssertionError("context larger than type")

    def pair(self, ctx, ty: Tensor, depth) -> Term:
        s, t = self.split_type(ty)
        ls, lt = log2dim(s), log2dim(t)
        for _ in range(20):
            left, right = [], []
            for n in ctx:
                r = self.rng.random()
                if r < 0.4:
                    left.append(n)
                elif r < 0.8:
                    right.append(n)
                else:
                    left.append(n)
                    right.append(n)
            if len(left) <= ls and len(right) <= lt:
                return Pair(self.term(tuple(left), s, depth + 1), self.term(tuple(right), t, depth + 1))
        # deterministic fallback: fill the left first, the rest goes right
        left = tuple(ctx[:ls])
        right = tuple(ctx[ls:])
        return Pair(self.term(left, s, depth + 1), self.term(right, t, depth + 1))

    def let(self, ctx, ty, depth) -> Term:
        rng = self.rng
        k = rng.randint(0, min(2, len(ctx)))
        bound_vars = tuple(rng.sample(ctx, k))
        kept = [n for n in ctx if n not in bound_vars or rng.random() < 0.3]
        need_room = log2dim(ty) - len(kept)
        if k == 2 and need_room >= 2:
            a, b = self.fresh(), self.fresh()
            bound = self.term(bound_vars, Q22, depth + 1)
            return Let(PPair(a, b), bound, self.term(tuple(kept) + (a, b), ty, depth + 1))
        if k <= 1 and need_room >= 1:
            a = self.fresh()
            bound = self.term(bound_vars, Q2, depth + 1)
            return Let(PVar(a), bound, self.term(tuple(kept) + (a,), ty, depth + 1))
        return self.term(ctx, ty, depth + 1)

    def orth(self, ctx, ty, depth) -> tuple[Term, Term]:
        """Two isometries from ``ctx`` whose images are orthogonal (needs room)."""
        assert len(ctx) + 1 <= log2dim(ty)
        rng = self.rng
        if ty == Q2:
            if rng.random() < 0.5:
                return (TRUE, FALSE) if rng.random() < 0.5 else (FALSE, TRUE)
            a, b = unit_pair(rng)
            return (
                Sup(Scale(a, TRUE), Scale(b, FALSE)),
                Sup(Scale(-b.conjugate(), TRUE), Scale(a.conjugate(), FALSE)),
            )
        s, t = self.split_type(ty)
        sides = []
        if len(ctx) <= log2dim(t):
            sides.append("fst")
        if len(ctx) <= log2dim(s) and log2dim(t) >= 1:
            sides.append("snd")
        if not sides:
            # orthogonality has to come from inside one component
            left = tuple(ctx[: log2dim(s) - 1])
            right = tuple(ctx[log2dim(s) - 1 :])
            w0, w1 = self.orth(left, s, depth + 1)
            r0, r1 = self.term(right, t, depth + 1), self.term(right, t, depth + 1)
            return Pair(w0, r0), Pair(w1, r1)
        side = rng.choice(sides)
        if side == "fst":
            w0, w1 = self.orth((), s, depth + 1)
            p0, p1 = Pair(w0, self.term(ctx, t, depth + 1)), Pair(w1, self.term(ctx, t, depth + 1))
        else:
            w0, w1 = self.orth((), t, depth + 1)
            p0, p1 = Pair(self.term(ctx, s, depth + 1), w0), Pair(self.term(ctx, s, depth + 1), w1)
        if rng.random() < 0.3 and _closed_fst_orth(p0, p1):
            # rotate the orthonormal pair
            a, b = unit_pair(rng)
            return (
                Sup(Scale(a, p0), Scale(b, p1)),
                Sup(Scale(-b.conjugate(), p0), Scale(a.conjugate(), p1)),
            )
        return p0, p1


def _closed_fst_orth(p0: Term, p1: Term) -> bool:
    return isinstance(p0.fst, Bool) and isinstance(p1.fst, Bool) and p0.fst != p1.fst


@dataclass
class FreeGen(_Base):
    """Well-typed (non-strict) terms; ``ctx`` maps names to types."""

    classical: bool = False

    def term(self, ctx: dict[str, QType], ty: QType, depth: int = 0) -> Term:
        rng = self.rng
        names = list(ctx)
        if depth >= self.max_depth:
            return self.consume(ctx, ty, depth)
        options = ["consume", "qif", "letval", "letpair", "betaif", "letif"]
        if not self.classical:
            options += ["scale", "sup", "qifsup", "zero", "combine"]
        if isinstance(ty, Tensor):
            options += ["pair", "pair"]
        choice = rng.choice(options)
        match choice:
            case "pair":
                left, right = self.split(names)
                s, t = self.split_type(ty)
                return Pair(
                    self.term({n: ctx[n] for n in left}, s, depth + 1),
                    self.term({n: ctx[n] for n in right}, t, depth + 1),
                )
            case "qif" if any(ctx[n] == Q2 for n in names):
                x = rng.choice([n for n in names if ctx[n] == Q2])
                rest = {n: s for n, s in ctx.items() if n != x or rng.random() < 0.2}
                return IfQ(Var(x), self.term(rest, ty, depth + 1), self.term(rest, ty, depth + 1))
            case "letval":
                # let-bind a classical value built from some of the variables
                a = self.fresh()
                if names and rng.random() < 0.6:
                    x = rng.choice(names)
                    val, vty = Var(x), ctx[x]
                    rest = {n: s for n, s in ctx.items() if n != x or rng.random() < 0.3}
                else:
                    vty = rng.choice([Q2, Q22])
                    val, rest = self.closed_value(vty), dict(ctx)
                if isinstance(vty, Tensor) and rng.random() < 0.5:
                    b = self.fresh()
                    rest.update({a: vty.left, b: vty.right})
                    return Let(PPair(a, b), val, self.term(rest, ty, depth + 1))
                rest[a] = vty
                return Let(PVar(a), val, self.term(rest, ty, depth + 1))
            case "letpair":
                a, b = self.fresh(), self.fresh()
                left, right = self.split(names)
                t1 = self.term({n: ctx[n] for n in left}, Q2, depth + 1)
                t2 = self.term({n: ctx[n] for n in right}, Q2, depth + 1)
                body_ctx = {n: ctx[n] for n in names if rng.random() < 0.2}
                body_ctx.update({a: Q2, b: Q2})
                return Let(PPair(a, b), Pair(t1, t2), self.term(body_ctx, ty, depth + 1))
            case "betaif":
                c = rng.choice([TRUE, FALSE])
                return IfQ(c, self.term(ctx, ty, depth + 1), self.term(ctx, ty, depth + 1))
            case "scale":
                return Scale(amplitude(rng), self.term(ctx, ty, depth + 1))
            case "sup":
                return Sup(self.term(ctx, ty, depth + 1), self.term(ctx, ty, depth + 1))
            case "qifsup":
                c = Sup(Scale(amplitude(rng), self.term({}, Q2, depth + 2)), Scale(amplitude(rng), TRUE))
                return IfQ(c, self.term(ctx, ty, depth + 1), self.term(ctx, ty, depth + 1))
            case "letif":
                a = self.fresh()
                left, right = self.split(names)
                bound = self.term({n: ctx[n] for n in left}, Q2, depth + 1)
                body_ctx = {n: ctx[n] for n in right}
                body_ctx[a] = Q2
                return Let(PVar(a), bound, self.term(body_ctx, ty, depth + 1))
            case "zero":
                return Sup(self.term(ctx, ty, depth + 1), ZeroVec(ty))
            case "combine":
                u = self.term(ctx, ty, depth + 2)
                return Sup(Scale(amplitude(rng), u), Scale(amplitude(rng), u))
        return self.consume(ctx, ty, depth)

    def split(self, names: list[str]) -> tuple[list[str], list[str]]:
        left, right = [], []
        for n in names:
            r = self.rng.random()
            if r < 0.4:
                left.append(n)
            elif r < 0.8:
                right.append(n)
            else:
                left.append(n)
                right.append(n)
        return left, right

    def consume(self, ctx: dict[str, QType], ty: QType, depth: int) -> Term:
        """Use up every variable with as little structure as possible."""
        names = list(ctx)
        if not names:
            if ty == Q2 and not self.classical and self.rng.random() < 0.4:
                return Sup(Scale(amplitude(self.rng), TRUE), Scale(amplitude(self.rng), FALSE))
            return self.closed_value(ty)
        if len(names) == 1 and ctx[names[0]] == ty:
            return Var(names[0])
        x = names[0]
        rest = {n: s for n, s in ctx.items() if n != x}
        s = ctx[x]
        if isinstance(s, Tensor):
            a, b = self.fresh(), self.fresh()
            rest.update({a: s.left, b: s.right})
            return Let(PPair(a, b), Var(x), self.consume(rest, ty, depth + 1))
        if s == Q1:
            return self.consume(rest, ty, depth + 1)
        if isinstance(ty, Tensor) and self.rng.random() < 0.5:
            l, r = self.split_type(ty)
            if ty.left == Q2 and self.rng.random() < 0.5:
                return Pair(Var(x), self.consume(rest, r, depth + 1))
            return Pair(self.consume(ctx, l, depth + 1), self.consume(rest, r, depth + 1))
        return IfQ(Var(x), self.consume(rest, ty, depth + 1), self.consume(rest, ty, depth + 1))


# ---------------------------------------------------------------------------
# entry points

VAR_NAMES = ("x", "y", "z")


def strict_program(rng: random.Random, max_vars: int = 3, max_depth: int = 5) -> tuple[Context, Term]:
    n = rng.randint(0, max_vars)
    names = VAR_NAMES[:n]
    ty = rng.choice([t for t in (Q1, Q2, Q22, Q222) if log2dim(t) >= n])
    t = StrictGen(rng, max_depth).term(names, ty)
    return Context.of(*((x, Q2) for x in names)), t


def free_program(
    rng: random.Random, max_vars: int = 3, max_depth: int = 4, classical: bool = False
) -> tuple[Context, Term]:
    n = rng.randint(0, max_vars)
    names = VAR_NAMES[:n]
    ty = rng.choice([Q1, Q2, Q2, Q22, Q222])
    t = FreeGen(rng, max_depth, classical=classical).term({x: Q2 for x in names}, ty)
    return Context.of(*((x, Q2) for x in names)), t


def classical_program(rng: random.Random, max_vars: int = 3, max_depth: int = 4) -> tuple[Context, Term]:
    """Terms without superpositions, for the classical fragment."""
    return free_program(rng, max_vars, max_depth, classical=True)


def corpus(
    rng: random.Random,
    n: int,
    make: Callable[[random.Random], tuple[Context, Term]],
    max_size: int | None = None,
    max_height: int | None = None,
) -> list[tuple[Context, Term]]:
    """``n`` programs from ``make``, resampling any with more than ``max_size``
    nodes or a longer path than ``max_height``."""
    out = []
    while len(out) < n:
        ctx, t = make(rng)
        if max_size is not None and size(t) > max_size:
            continue
        if max_height is not None and height(t) > max_height:
            continue
        out.append((ctx, t))
    return out
