"""The equational theory as named, directed rewrite steps.

A step is a :class:`RuleApp`: a rule, a direction and the path of the
subterm it rewrites. Paths index children in the order ``Pair(fst, snd)``,
``Let(bound, body)``, ``IfQ(cond, then, else)``, ``Scale(body)``,
``Sup(left, right)``.

Directions whose result is not determined by the matched term (for example
``t ≡ if° true then t else u`` read right to left, which would have to invent
``u``) raise :class:`NoMatch`.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import FinalMismatch, NoMatch, QmlError, QmlSyntaxError, ShapeMismatch, SideConditionFailed
from .parser import Parser, expand_calls
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
    Unit,
    Var,
    ZeroVec,
    all_names,
    all_paths,
    children,
    free_vars,
    fresh_name,
    is_cval,
    is_quantum,
    pretty_type,
    replace_at,
    substitute,
    subterm,
    terms_close,
)
from .typecheck import DEFAULT_TOL, Judgement, index_judgement, infer


class RuleId(enum.Enum):
    LET_VAL = "let p = val in u ≡ u[val/p]"
    BETA_PAIR = "let (x,y) = (t,u) in e ≡ let x = t in let y = u in e"
    BETA_IF_FALSE = "qif false then t else u ≡ u"
    BETA_IF_TRUE = "qif true then t else u ≡ t"
    ETA_UNIT = "() ≡ t  (t : Q1)"
    ETA_LET = "let x = t in x ≡ t"
    ETA_PAIR = "let (x,y) = t in (x,y) ≡ t"
    ETA_IF = "qif t then true else false ≡ t"
    CC_LET_LET = "let p = t in let q = u in e ≡ let q = u in let p = t in e"
    CC_LET_IF = "let p = (qif t then u0 else u1) in e ≡ qif t then (let p = u0 in e) else (let p = u1 in e)"
    Q_IF_SUP = "qif ({λ}*t0 + {κ}*t1) then u0 else u1 ≡ {λ}*(qif t0 then u0 else u1) + {κ}*(qif t1 then u0 else u1)"
    SUP_COMM = "t + u ≡ u + t"
    SUP_ZERO = "t + zero ≡ t"
    SUP_ASSOC = "t + (u + v) ≡ (t + u) + v"
    SCALE_DIST = "{λ}*(t + u) ≡ {λ}*t + {λ}*u"
    SCALE_COMBINE = "{λ}*t + {κ}*t ≡ {λ+κ}*t"
    SCALE_ZERO = "{0}*t ≡ zero"
    SCALE_SCALE = "{λ}*({κ}*t) ≡ {λκ}*t"
    SCALE_ONE = "{1}*t ≡ t"


class Direction(enum.Enum):
    L2R = "L2R"
    R2L = "R2L"


@dataclass(frozen=True)
class RuleApp:
    rule: RuleId
    direction: Direction
    path: tuple[int, ...] = ()

    def __str__(self) -> str:
        p = ".".join(map(str, self.path)) or "root"
        return f"RULE {self.rule.name} {self.direction.value} at {p}"


# ---------------------------------------------------------------------------
# matching helpers


def _scaled(t: Term) -> tuple[complex, Term, bool]:
    """View a summand as ``{λ}*t``; a bare summand has ``λ = 1``."""
    if isinstance(t, Scale):
        return t.amp, t.body, True
    return 1 + 0j, t, False


def _rescale(k: complex, t: Term, explicit: bool) -> Term:
    return Scale(k, t) if explicit else t


class _Rewriter:
    def __init__(self, app: RuleApp, j: Judgement, avoid: set[str], tol: float):
        self.app = app
        self.j = j
        self.avoid = avoid
        self.tol = tol

    def fail(self, reason: str = ""):
        raise NoMatch(self.app.rule, self.app.path, reason)

    def fresh(self, base: str) -> str:
        n = fresh_name(base, self.avoid)
        self.avoid.add(n)
        return n

    def rewrite(self) -> Term:
        t, ty = self.j.term, self.j.type
        rule, l2r = self.app.rule, self.app.direction is Direction.L2R
        match rule:
            case RuleId.LET_VAL:
                if not l2r:
                    self.fail("the value and pattern are not determined")
                match t:
                    case Let(p, a, b) if is_cval(a):
                        captured = set(free_vars(a)) & _binders(b)
                        if captured:
                            self.fail(f"substitution would capture {sorted(captured)}")
                        try:
                            return substitute(b, a, p)
                        except ShapeMismatch as e:
                            self.fail(e.message)
            case RuleId.BETA_PAIR:
                if l2r:
                    match t:
                        case Let(PPair(x, y), Pair(a, b), e):
                            if x in free_vars(b):
                                self.fail(f"{x} is free in the second component")
                            return Let(PVar(x), a, Let(PVar(y), b, e))
                else:
                    match t:
                        case Let(PVar(x), a, Let(PVar(y), b, e)):
                            if x in free_vars(b):
                                self.fail(f"{x} is free in the inner bound term")
                            return Let(PPair(x, y), Pair(a, b), e)
            case RuleId.BETA_IF_FALSE | RuleId.BETA_IF_TRUE:
                if not l2r:
                    self.fail("the discarded branch is not determined")
                want = rule is RuleId.BETA_IF_TRUE
                match t:
                    case IfQ(Bool(v), a, b) if v == want:
                        return a if want else b
            case RuleId.ETA_UNIT:
                if l2r:
                    self.fail("the Q1 term is not determined")
                if ty != Q1:
                    raise SideConditionFailed(f"ETA_UNIT needs a term of type Q1, not {pretty_type(ty)}")
                if is_quantum(t):
                    self.fail("a superposition of type Q1 may carry a phase")
                if not isinstance(t, Unit):
                    return UNIT
            case RuleId.ETA_LET:
                if l2r:
                    match t:
                        case Let(PVar(x), a, Var(y)) if x == y:
                            return a
                else:
                    x = self.fresh("x")
                    return Let(PVar(x), t, Var(x))
            case RuleId.ETA_PAIR:
                if l2r:
                    match t:
                        case Let(PPair(x, y), a, Pair(Var(x2), Var(y2))) if (x, y) == (x2, y2):
                            return a
                else:
                    if not isinstance(ty, Tensor):
                        raise SideConditionFailed(f"ETA_PAIR needs a tensor, not {pretty_type(ty)}")
                    x, y = self.fresh("x"), self.fresh("y")
                    return Let(PPair(x, y), t, Pair(Var(x), Var(y)))
            case RuleId.ETA_IF:
                if l2r:
                    match t:
                        case IfQ(c, Bool(True), Bool(False)):
                            return c
                else:
                    if ty != Q2:
                        raise SideConditionFailed(f"ETA_IF needs type Q2, not {pretty_type(ty)}")
                    return IfQ(t, TRUE, FALSE)
            case RuleId.CC_LET_LET:
                match t:
                    case Let(p, a, Let(q, b, e)):
                        if set(p.names()) & free_vars(b):
                            raise SideConditionFailed("outer pattern binds a variable of the inner bound term")
                        if set(q.names()) & free_vars(a):
                            raise SideConditionFailed("inner pattern binds a variable of the outer bound term")
                        return Let(q, b, Let(p, a, e))
            case RuleId.CC_LET_IF:
                if l2r:
                    match t:
                        case Let(p, IfQ(c, u0, u1), e):
                            return IfQ(c, Let(p, u0, e), Let(p, u1, e))
                else:
                    match t:
                        case IfQ(c, Let(p, u0, e), Let(p2, u1, e2)) if p == p2 and e == e2:
                            return Let(p, IfQ(c, u0, u1), e)
            case RuleId.Q_IF_SUP:
                if l2r:
                    match t:
                        case IfQ(Sup(s0, s1), u0, u1):
                            l, t0, el = _scaled(s0)
                            k, t1, ek = _scaled(s1)
                            return Sup(_rescale(l, IfQ(t0, u0, u1), el), _rescale(k, IfQ(t1, u0, u1), ek))
                else:
                    match t:
                        case Sup(s0, s1):
                            l, i0, el = _scaled(s0)
                            k, i1, ek = _scaled(s1)
                            match i0, i1:
                                case IfQ(t0, u0, u1), IfQ(t1, v0, v1) if u0 == v0 and u1 == v1:
                                    return IfQ(Sup(_rescale(l, t0, el), _rescale(k, t1, ek)), u0, u1)
            case RuleId.SUP_COMM:
                match t:
                    case Sup(a, b):
                        return Sup(b, a)
            case RuleId.SUP_ZERO:
                if l2r:
                    match t:
                        case Sup(a, ZeroVec()):
                            return a
                else:
                    return Sup(t, ZeroVec(ty))
            case RuleId.SUP_ASSOC:
                if l2r:
                    match t:
                        case Sup(a, Sup(b, c)):
                            return Sup(Sup(a, b), c)
                else:
                    match t:
                        case Sup(Sup(a, b), c):
                            return Sup(a, Sup(b, c))
            case RuleId.SCALE_DIST:
                if l2r:
                    match t:
                        case Scale(k, Sup(a, b)):
                            return Sup(Scale(k, a), Scale(k, b))
                else:
                    match t:
                        case Sup(Scale(k, a), Scale(l, b)) if abs(k - l) <= self.tol:
                            return Scale(k, Sup(a, b))
            case RuleId.SCALE_COMBINE:
                if not l2r:
                    self.fail("the split of the amplitude is not determined")
                match t:
                    case Sup(s0, s1):
                        l, a, _ = _scaled(s0)
                        k, b, _ = _scaled(s1)
                        if a == b:
                            return Scale(l + k, a)
            case RuleId.SCALE_ZERO:
                if not l2r:
                    self.fail("the scaled term is not determined")
                match t:
                    case Scale(k, _) if abs(k) <= self.tol:
                        return ZeroVec(ty)
            case RuleId.SCALE_SCALE:
                if not l2r:
                    self.fail("the factorisation is not determined")
                match t:
                    case Scale(k, Scale(l, a)):
                        return Scale(k * l, a)
            case RuleId.SCALE_ONE:
                if l2r:
                    match t:
                        case Scale(k, a) if abs(k - 1) <= self.tol:
                            return a
                else:
                    return Scale(1, t)
        self.fail("pattern does not match")


def _binders(t: Term) -> set[str]:
    out: set[str] = set()
    if isinstance(t, Let):
        out.update(t.pat.names())
    for k in children(t):
        out |= _binders(k)
    return out


# ---------------------------------------------------------------------------
# applying rules and replaying derivations


@dataclass(frozen=True)
class RuleInstance:
    """A successful rule application, with the redex and its replacement."""

    app: RuleApp
    result: Term
    local_ctx: Context
    before: Term
    after: Term
    type: QType
    # False when the replacement only typechecks as part of the whole term
    local: bool
    before_judgement: Judgement
    # for ``after`` in ``local_ctx`` if local, else for ``result`` in the full context
    after_judgement: Judgement


def _zero_like(t: Term) -> bool:
    match t:
        case ZeroVec():
            return True
        case Scale(_, b):
            return _zero_like(b)
        case Sup(a, b):
            return _zero_like(a) and _zero_like(b)
    return False


def _sub_judgement(t: Term, app: RuleApp, j: Judgement) -> Judgement:
    try:
        subterm(t, app.path)
        return j.at(app.path)
    except (IndexError, TypeError):
        raise NoMatch(app.rule, app.path, "no subterm at this path") from None


def _instance(ctx, t, app, j, sub_j, avoid, classical, tol, index=None) -> RuleInstance:
    new = _Rewriter(app, sub_j, set(avoid), tol).rewrite()
    result = replace_at(t, app.path, new)
    # Typing is compositional: if the replacement has the same type in the
    # same local context (hence the same free variables) and the same
    # zero-likeness, every enclosing rule instance is unchanged.
    reuse = index or j
    rj = None
    if _zero_like(new) == _zero_like(sub_j.term):
        try:
            rj = infer(sub_j.ctx, new, strict=False, classical=classical, tol=tol, reuse=reuse)
        except QmlError:
            pass
    local = rj is not None and rj.type == sub_j.type
    if not local:
        try:
            rj = infer(ctx, result, strict=False, classical=classical, tol=tol, reuse=reuse)
        except QmlError as e:
            raise SideConditionFailed(f"{app}: result does not typecheck: {e}") from None
        if rj.type != j.type:
            raise SideConditionFailed(f"{app}: result changes the type")
    return RuleInstance(app, result, sub_j.ctx, sub_j.term, new, sub_j.type, local, sub_j, rj)


def apply_rule(
    ctx: Context,
    t: Term,
    app: RuleApp,
    *,
    classical: bool = False,
    tol: float = DEFAULT_TOL,
    judgement: Judgement | None = None,
) -> Term:
    """Rewrite the subterm of ``t`` at ``app.path`` with one rule instance.

    The result is checked to have the same type in the same context.
    """
    j = judgement or infer(ctx, t, strict=False, classical=classical, tol=tol)
    avoid = all_names(t) | set(ctx.names())
    return _instance(ctx, t, app, j, _sub_judgement(t, app, j), avoid, classical, tol).result


def check_derivation(
    ctx: Context,
    start: Term,
    steps: Sequence[RuleApp],
    end: Term,
    *,
    classical: bool = False,
    tol: float = DEFAULT_TOL,
) -> bool:
    """Replay ``steps`` from ``start``; the last term must match ``end``.

    Raises the first step's error, or :class:`FinalMismatch`.
    """
    infer(ctx, start, strict=False, classical=classical, tol=tol)
    t = start
    for app in steps:
        t = apply_rule(ctx, t, app, classical=classical, tol=tol)
    if not terms_close(t, end, tol):
        from .syntax import pretty

        raise FinalMismatch(f"derivation ends at {pretty(t)}, expected {pretty(end)}")
    return True


_SYMMETRIC = {RuleId.SUP_COMM, RuleId.CC_LET_LET}

# The node class a redex must have, per rule and direction; ``object`` where
# any subterm can be rewritten and ``None`` where the direction never matches.
_HEAD: dict[tuple[RuleId, Direction], type | None] = {
    (RuleId.LET_VAL, Direction.L2R): Let,
    (RuleId.LET_VAL, Direction.R2L): None,
    (RuleId.BETA_PAIR, Direction.L2R): Let,
    (RuleId.BETA_PAIR, Direction.R2L): Let,
    (RuleId.BETA_IF_FALSE, Direction.L2R): IfQ,
    (RuleId.BETA_IF_FALSE, Direction.R2L): None,
    (RuleId.BETA_IF_TRUE, Direction.L2R): IfQ,
    (RuleId.BETA_IF_TRUE, Direction.R2L): None,
    (RuleId.ETA_UNIT, Direction.L2R): None,
    (RuleId.ETA_UNIT, Direction.R2L): object,
    (RuleId.ETA_LET, Direction.L2R): Let,
    (RuleId.ETA_LET, Direction.R2L): object,
    (RuleId.ETA_PAIR, Direction.L2R): Let,
    (RuleId.ETA_PAIR, Direction.R2L): object,
    (RuleId.ETA_IF, Direction.L2R): IfQ,
    (RuleId.ETA_IF, Direction.R2L): object,
    (RuleId.CC_LET_LET, Direction.L2R): Let,
    (RuleId.CC_LET_LET, Direction.R2L): Let,
    (RuleId.CC_LET_IF, Direction.L2R): Let,
    (RuleId.CC_LET_IF, Direction.R2L): IfQ,
    (RuleId.Q_IF_SUP, Direction.L2R): IfQ,
    (RuleId.Q_IF_SUP, Direction.R2L): Sup,
    (RuleId.SUP_COMM, Direction.L2R): Sup,
    (RuleId.SUP_COMM, Direction.R2L): Sup,
    (RuleId.SUP_ZERO, Direction.L2R): Sup,
    (RuleId.SUP_ZERO, Direction.R2L): object,
    (RuleId.SUP_ASSOC, Direction.L2R): Sup,
    (RuleId.SUP_ASSOC, Direction.R2L): Sup,
    (RuleId.SCALE_DIST, Direction.L2R): Scale,
    (RuleId.SCALE_DIST, Direction.R2L): Sup,
    (RuleId.SCALE_COMBINE, Direction.L2R): Sup,
    (RuleId.SCALE_COMBINE, Direction.R2L): None,
    (RuleId.SCALE_ZERO, Direction.L2R): Scale,
    (RuleId.SCALE_ZERO, Direction.R2L): None,
    (RuleId.SCALE_SCALE, Direction.L2R): Scale,
    (RuleId.SCALE_SCALE, Direction.R2L): None,
    (RuleId.SCALE_ONE, Direction.L2R): Scale,
    (RuleId.SCALE_ONE, Direction.R2L): object,
}


def enumerate_rule_instances(
    ctx: Context, t: Term, *, classical: bool = False, tol: float = DEFAULT_TOL
) -> list[RuleInstance]:
    """Every applicable (rule, direction, path) on ``t``.

    Rules that are their own inverse are only listed left to right, and
    expansions that apply to any subterm of a suitable type (``t ≡ t + 0⃗``,
    ``t ≡ 1*t`` and the η rules read right to left) are left out.
    """
    j = infer(ctx, t, strict=False, classical=classical, tol=tol)
    avoid = frozenset(all_names(t) | set(ctx.names()))
    index = index_judgement(j)
    out = []
    for path in all_paths(t):
        sub_j = j.at(path)
        for (rule, d), head in _HEAD.items():
            if head is None or head is object or not isinstance(sub_j.term, head):
                continue
            if d is Direction.R2L and rule in _SYMMETRIC:
                continue
            try:
                out.append(_instance(ctx, t, RuleApp(rule, d, path), j, sub_j, avoid, classical, tol, index))
            except (NoMatch, SideConditionFailed):
                pass
    return out


# ---------------------------------------------------------------------------
# derivation files

_RULE_LINE = re.compile(r"^RULE\s+(\w+)\s+(L2R|R2L)\s+at\s+(root|\d+(?:\.\d+)*)\s*$")
_START_LINE = re.compile(r"^start\s*\[(.*)\]\s*:\s*(.*)$")
_END_LINE = re.compile(r"^end\s*:\s*(.*)$")


@dataclass(frozen=True)
class Derivation:
    ctx: Context
    start: Term
    steps: tuple[RuleApp, ...]
    end: Term


def parse_path(text: str) -> tuple[int, ...]:
    return () if text == "root" else tuple(int(p) for p in text.split("."))


def parse_derivation(text: str) -> Derivation:
    """Read a derivation script.

    Layout: optional ``def`` lines, then ``start [ctx]:`` followed by a term,
    ``RULE <id> <L2R|R2L> at <root|i.j.k>`` lines, and ``end:`` followed by a
    term. ``--`` comments are allowed everywhere.
    """
    lines = text.split("\n")
    stripped = [re.sub(r"--.*$", "", ln).strip() for ln in lines]
    try:
        s = next(i for i, ln in enumerate(stripped) if _START_LINE.match(ln))
    except StopIteration:
        raise QmlSyntaxError(len(lines), 1, "a 'start [ctx]:' line") from None
    try:
        e = next(i for i in range(s + 1, len(stripped)) if _END_LINE.match(stripped[i]))
    except StopIteration:
        raise QmlSyntaxError(len(lines), 1, "an 'end:' line") from None

    defs_prog = Parser("\n".join(lines[:s])).program()
    if defs_prog.main is not None:
        raise QmlSyntaxError(s, 1, "only definitions before 'start'")
    defs = {d.name: d for d in defs_prog.defs}

    m = _START_LINE.match(stripped[s])
    ctx = Parser(m.group(1)).context()
    first_rule = next((i for i in range(s + 1, e) if stripped[i].startswith("RULE")), e)
    head = re.match(r"\s*start\s*\[[^\]]*\]\s*:", lines[s]).end()
    start_text = "\n" * s + " " * head + lines[s][head:]
    start_text += "\n" + "\n".join(lines[s + 1 : first_rule])
    steps = []
    for i in range(first_rule, e):
        if not stripped[i]:
            continue
        rm = _RULE_LINE.match(stripped[i])
        if rm is None:
            raise QmlSyntaxError(i + 1, 1, "RULE <id> <L2R|R2L> at <path>", stripped[i])
        try:
            rule = RuleId[rm.group(1)]
        except KeyError:
            raise QmlSyntaxError(i + 1, 1, "a rule name", rm.group(1)) from None
        steps.append(RuleApp(rule, Direction(rm.group(2)), parse_path(rm.group(3))))
    end_text = "\n" * e + " " * (lines[e].index(":") + 1) + lines[e].split(":", 1)[1]
    end_text += "\n" + "\n".join(lines[e + 1 :])

    start = _term(start_text, ctx, defs)
    end = _term(end_text, ctx, defs)
    return Derivation(ctx, start, tuple(steps), end)


def _term(text: str, ctx: Context, defs) -> Term:
    p = Parser(text, defs)
    t = p.term(set(ctx.names()))
    if p.tok.kind != "eof":
        p.fail("end of term")
    return expand_calls(t, defs)


def format_derivation(d: Derivation) -> str:
    from .syntax import pretty

    out = [f"start [{', '.join(f'{n}:{pretty_type(s)}' for n, s in d.ctx)}]:", "  " + pretty(d.start)]
    out += [str(s) for s in d.steps]
    out += ["end:", "  " + pretty(d.end)]
    return "\n".join(out) + "\n"


def replay(steps: Iterable[RuleApp], ctx: Context, start: Term, **kw) -> list[Term]:
    """Every intermediate term of a derivation, starting with ``start``."""
    out = [start]
    for app in steps:
        out.append(apply_rule(ctx, out[-1], app, **kw))
    return out
