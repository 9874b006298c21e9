"""Concrete syntax: tokenizer, recursive-descent parser and definition inlining.

Grammar (``--`` starts a comment)::

    program  := def* main?
    def      := "def" IDENT param* "=" term
    param    := "(" IDENT ":" type ")"
    main     := "main" "[" ctx "]" "=" term
    ctx      := ε | IDENT ":" type ("," IDENT ":" type)*
    type     := tatom ("*" tatom)*          -- left-nested
    tatom    := "Q1" | "Q2" | "(" type ")"
    term     := "let" pat "=" term "in" term
              | "qif" term "then" term "else" term
              | sum
    sum      := prod ("+" prod)*
    prod     := "{" ampexpr "}" "*" prod | atom
    atom     := "(" term "," term ")" | "(" term ")" | "()" | "false" | "true"
              | "zero" "[" type "]" | IDENT | IDENT atom+
    pat      := IDENT | "(" IDENT "," IDENT ")"
"""

from __future__ import annotations

import cmath
import re
from dataclasses import dataclass, field

from .errors import ArityMismatch, QmlSyntaxError, ShadowingError, UnknownIdentifier
from .syntax import (
    FALSE,
    TRUE,
    UNIT,
    Bool,
    Call,
    Context,
    IfQ,
    Let,
    Pair,
    PPair,
    PVar,
    Q1,
    Q2,
    QType,
    Scale,
    Sup,
    Tensor,
    Term,
    Unit,
    Var,
    ZeroVec,
    all_names,
    children,
    fresh_name,
    with_children,
)

KEYWORDS = {"def", "main", "let", "in", "qif", "then", "else", "false", "true", "zero", "Q1", "Q2"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>\(\)|[()\[\]{},:=*+\-/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, kw, num, sym, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QmlSyntaxError(line, pos - line_start + 1, "a token", text[pos])
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            word = m.group()
            tokens.append(Token("kw" if word in KEYWORDS else "ident", word, line, col))
        elif kind in ("num", "sym"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


@dataclass(frozen=True)
class Definition:
    name: str
    params: tuple[tuple[str, QType], ...]
    body: Term


@dataclass(frozen=True)
class SourceProgram:
    defs: tuple[Definition, ...] = ()
    main: tuple[Context, Term] | None = None

    def lookup(self, name: str) -> Definition:
        for d in self.defs:
            if d.name == name:
                return d
        raise KeyError(name)


_ATOM_START = {"(", "()"}


class Parser:
    def __init__(self, text: str, defs: dict[str, Definition] | None = None):
        self.toks = tokenize(text)
        self.i = 0
        self.defs: dict[str, Definition] = dict(defs or {})

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "kw") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(repr(text))
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.fail("identifier")
        return self.advance()

    def fail(self, expected: str):
        t = self.tok
        raise QmlSyntaxError(t.line, t.col, expected, t.text or "end of input")

    # -- program ------------------------------------------------------------

    def program(self) -> SourceProgram:
        main = None
        while self.at("def"):
            d = self.definition()
            self.defs[d.name] = d
        if self.at("main"):
            main = self.main()
        if self.tok.kind != "eof":
            self.fail("'def', 'main' or end of input")
        return SourceProgram(tuple(self.defs.values()), main)

    def definition(self) -> Definition:
        self.expect("def")
        name_tok = self.ident()
        if name_tok.text in self.defs:
            raise ShadowingError(name_tok.text, (name_tok.line, name_tok.col))
        params: list[tuple[str, QType]] = []
        while self.at("("):
            self.advance()
            p = self.ident()
            if any(p.text == n for n, _ in params):
                raise ShadowingError(p.text, (p.line, p.col))
            self.expect(":")
            params.append((p.text, self.type_()))
            self.expect(")")
        self.expect("=")
        body = self.term({n for n, _ in params})
        return Definition(name_tok.text, tuple(params), body)

    def main(self) -> tuple[Context, Term]:
        self.expect("main")
        self.expect("[")
        ctx = self.context()
        self.expect("]")
        self.expect("=")
        return ctx, self.term(set(ctx.names()))

    def context(self) -> Context:
        entries: list[tuple[str, QType]] = []
        if self.tok.kind == "ident":
            while True:
                n = self.ident()
                if any(n.text == m for m, _ in entries):
                    raise ShadowingError(n.text, (n.line, n.col))
                self.expect(":")
                entries.append((n.text, self.type_()))
                if not self.at(","):
                    break
                self.advance()
        return Context(tuple(entries))

    # -- types --------------------------------------------------------------

    def type_(self) -> QType:
        t = self.type_atom()
        while self.at("*"):
            self.advance()
            t = Tensor(t, self.type_atom())
        return t

    def type_atom(self) -> QType:
        if self.at("Q1"):
            self.advance()
            return Q1
        if self.at("Q2"):
            self.advance()
            return Q2
        if self.at("("):
            self.advance()
            t = self.type_()
            self.expect(")")
            return t
        self.fail("a type")

    # -- terms --------------------------------------------------------------

    def term(self, scope: set[str]) -> Term:
        t = self.tok
        if self.at("let"):
            self.advance()
            pat = self.pattern(scope)
            self.expect("=")
            bound = self.term(scope)
            self.expect("in")
            body = self.term(scope | set(pat.names()))
            return Let(pat, bound, body, span=(t.line, t.col))
        if self.at("qif"):
            self.advance()
            c = self.term(scope)
            self.expect("then")
            a = self.term(scope)
            self.expect("else")
            b = self.term(scope)
            return IfQ(c, a, b, span=(t.line, t.col))
        return self.sum_(scope)

    def pattern(self, scope: set[str]):
        def bind(tok: Token) -> str:
            if tok.text in scope or tok.text in self.defs:
                raise ShadowingError(tok.text, (tok.line, tok.col))
            return tok.text

        if self.at("("):
            self.advance()
            a = bind(self.ident())
            self.expect(",")
            b_tok = self.ident()
            b = bind(b_tok)
            if a == b:
                raise ShadowingError(b, (b_tok.line, b_tok.col))
            self.expect(")")
            return PPair(a, b)
        return PVar(bind(self.ident()))

    def sum_(self, scope: set[str]) -> Term:
        start = self.tok
        t = self.prod(scope)
        while self.at("+"):
            self.advance()
            t = Sup(t, self.prod(scope), span=(start.line, start.col))
        return t

    def prod(self, scope: set[str]) -> Term:
        start = self.tok
        if self.at("{"):
            self.advance()
            k = self.amp_sum()
            self.expect("}")
            self.expect("*")
            return Scale(k, self.prod(scope), span=(start.line, start.col))
        return self.atom(scope)

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind == "ident":
            return True
        return t.kind in ("sym", "kw") and t.text in ("(", "()", "false", "true", "zero")

    def atom(self, scope: set[str]) -> Term:
        t = self.tok
        span = (t.line, t.col)
        if self.at("()"):
            self.advance()
            return Unit(span=span)
        if self.at("false"):
            self.advance()
            return Bool(False, span=span)
        if self.at("true"):
            self.advance()
            return Bool(True, span=span)
        if self.at("zero"):
            self.advance()
            self.expect("[")
            s = self.type_()
            self.expect("]")
            return ZeroVec(s, span=span)
        if self.at("("):
            self.advance()
            a = self.term(scope)
            if self.at(","):
                self.advance()
                b = self.term(scope)
                self.expect(")")
                return Pair(a, b, span=span)
            self.expect(")")
            return a
        if t.kind == "ident":
            self.advance()
            name = t.text
            if name in self.defs and name not in scope:
                args = []
                while self.starts_atom():
                    args.append(self.atom(scope))
                d = self.defs[name]
                if len(args) != len(d.params):
                    raise ArityMismatch(name, len(d.params), len(args), span)
                return Call(name, tuple(args), span=span)
            if name not in scope:
                if self.starts_atom():
                    raise UnknownIdentifier(name, span)
            return Var(name, span=span)
        self.fail("a term")

    # -- amplitude expressions ----------------------------------------------

    def amp_sum(self) -> complex:
        v = self.amp_prod()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            w = self.amp_prod()
            v = v + w if op == "+" else v - w
        return v

    def amp_prod(self) -> complex:
        v = self.amp_unary()
        while self.at("*") or self.at("/"):
            op_tok = self.advance()
            w = self.amp_unary()
            if op_tok.text == "*":
                v = v * w
            else:
                if w == 0:
                    raise QmlSyntaxError(op_tok.line, op_tok.col, "a non-zero divisor")
                v = v / w
        return v

    def amp_unary(self) -> complex:
        if self.at("-"):
            self.advance()
            return -self.amp_unary()
        if self.at("+"):
            self.advance()
            return self.amp_unary()
        return self.amp_atom()

    def amp_atom(self) -> complex:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return complex(float(t.text))
        if t.kind == "ident" and t.text == "i":
            self.advance()
            return 1j
        if t.kind == "ident" and t.text == "sqrt":
            self.advance()
            self.expect("(")
            v = self.amp_sum()
            self.expect(")")
            if v.imag == 0 and v.real >= 0:
                return complex(v.real ** 0.5)
            # principal root; -0.0 imaginary parts would flip the branch
            return cmath.sqrt(complex(v.real, v.imag + 0.0))
        if self.at("("):
            self.advance()
            v = self.amp_sum()
            self.expect(")")
            return v
        self.fail("an amplitude")


def parse(text: str) -> SourceProgram:
    """Parse a whole ``.qml`` source file."""
    return Parser(text).program()


def parse_term(text: str, scope=(), defs: dict[str, Definition] | None = None) -> Term:
    """Parse a single term; ``scope`` lists names bound by the surrounding context."""
    p = Parser(text, defs)
    t = p.term(set(scope))
    if p.tok.kind != "eof":
        p.fail("end of term")
    return t


def parse_type(text: str) -> QType:
    p = Parser(text)
    t = p.type_()
    if p.tok.kind != "eof":
        p.fail("end of type")
    return t


def parse_context(text: str) -> Context:
    p = Parser(text)
    c = p.context()
    if p.tok.kind != "eof":
        p.fail("end of context")
    return c


# ---------------------------------------------------------------------------
# inlining of global definitions


@dataclass
class _Fresh:
    avoid: set[str] = field(default_factory=set)

    def __call__(self, base: str) -> str:
        base = base.split("_")[0] or "v"
        n = fresh_name(f"{base}_1", self.avoid)
        self.avoid.add(n)
        return n


def inline_defs(p: SourceProgram) -> tuple[Context, Term]:
    """Expand every global call in ``main`` by let-binding its arguments."""
    if p.main is None:
        raise ValueError("program has no main")
    ctx, t = p.main
    defs = {d.name: d for d in p.defs}
    avoid = set(ctx.names()) | all_names(t) | set(defs)
    for d in p.defs:
        avoid |= all_names(d.body) | {n for n, _ in d.params}
    return ctx, expand_calls(t, defs, _Fresh(avoid))


def expand_calls(t: Term, defs: dict[str, Definition], fresh=None) -> Term:
    if fresh is None:
        avoid = all_names(t) | set(defs)
        for d in defs.values():
            avoid |= all_names(d.body) | {n for n, _ in d.params}
        fresh = _Fresh(avoid)
    if isinstance(t, Call):
        d = defs[t.name]
        if len(t.args) != len(d.params):
            raise ArityMismatch(t.name, len(d.params), len(t.args), t.span)
        args = [expand_calls(a, defs, fresh) for a in t.args]
        body = _refresh_binders(d.body, fresh)
        names = [fresh(n) for n, _ in d.params]
        body = _rename(body, dict(zip((n for n, _ in d.params), names)))
        body = expand_calls(body, defs, fresh)
        for name, arg in reversed(list(zip(names, args))):
            body = Let(PVar(name), arg, body, span=t.span)
        return body
    kids = children(t)
    if not kids:
        return t
    return with_children(t, [expand_calls(k, defs, fresh) for k in kids])


def _rename(t: Term, mapping: dict[str, str]) -> Term:
    match t:
        case Var(n):
            return Var(mapping.get(n, n), span=t.span)
        case Let(p, a, b):
            inner = {k: v for k, v in mapping.items() if k not in p.names()}
            return Let(p, _rename(a, mapping), _rename(b, inner), span=t.span)
    kids = children(t)
    if not kids:
        return t
    return with_children(t, [_rename(k, mapping) for k in kids])


def _refresh_binders(t: Term, fresh) -> Term:
    """Give every let-bound name in a definition body a fresh name."""
    match t:
        case Let(p, a, b):
            a2 = _refresh_binders(a, fresh)
            if isinstance(p, PVar):
                n = fresh(p.name)
                return Let(PVar(n), a2, _refresh_binders(_rename(b, {p.name: n}), fresh), span=t.span)
            l, r = fresh(p.left), fresh(p.right)
            b2 = _rename(b, {p.left: l, p.right: r})
            return Let(PPair(l, r), a2, _refresh_binders(b2, fresh), span=t.span)
    kids = children(t)
    if not kids:
        return t
    return with_children(t, [_refresh_binders(k, fresh) for k in kids])


__all__ = [
    "Definition",
    "SourceProgram",
    "Token",
    "expand_calls",
    "inline_defs",
    "parse",
    "parse_context",
    "parse_term",
    "parse_type",
    "tokenize",
    "FALSE",
    "TRUE",
    "UNIT",
]
