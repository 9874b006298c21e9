"""``qml``: typecheck, evaluate, normalise and compare programs from files.

Exit status is 0 on success (or EQUIV), 1 on a rejection (or DISTINCT), and
2 on usage, I/O and parse errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .equations import check_derivation, parse_derivation
from .errors import (
    ArityMismatch,
    QmlError,
    QmlSyntaxError,
    ShadowingError,
    TypeClash,
    UnknownIdentifier,
)
from .normalize import denotation, equiv, nf
from .parser import inline_defs, parse
from .semantics import LinMap
from .syntax import Context, Term, pretty, pretty_type
from .typecheck import DEFAULT_TOL, UNKNOWN, infer, inner_product

DIGITS = 12
COMMANDS = ("check", "eval", "nf", "equiv", "ip", "derive")

EXIT_OK, EXIT_REJECTED, EXIT_USAGE = 0, 1, 2

_INPUT_ERRORS = (QmlSyntaxError, ShadowingError, UnknownIdentifier, ArityMismatch, TypeClash)


@dataclass(frozen=True)
class CliConfig:
    command: str
    classical: bool = False
    strict: bool = True
    tol: float = DEFAULT_TOL
    json: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# rendering


def _num(x: float) -> float:
    return float(f"{x:.{DIGITS}g}")


def format_entry(z: complex, tol: float) -> str:
    """``a+bi`` with 12 significant digits; an ε-zero imaginary part is dropped."""
    re, im = _num(z.real), _num(z.imag)
    if abs(im) <= tol:
        return f"{re:.{DIGITS}g}"
    sign = "-" if im < 0 else "+"
    return f"{re:.{DIGITS}g}{sign}{abs(im):.{DIGITS}g}i"


def format_matrix(m: LinMap, tol: float) -> str:
    return "\n".join(" ".join(format_entry(complex(z), tol) for z in row) for row in m.matrix)


def matrix_json(m: LinMap) -> dict:
    return {
        "in_type": pretty_type(m.in_type),
        "out_type": pretty_type(m.out_type),
        "rows": [[[_num(z.real), _num(z.imag)] for z in row] for row in m.matrix],
    }


def _where(path: str, e: QmlError) -> str:
    if e.span is not None:
        return f"{path}:{e.span[0]}:{e.span[1]}: {e.message}"
    return f"{path}: {e.message}"


# ---------------------------------------------------------------------------
# commands


def _load(path: str) -> tuple[Context, Term]:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise _Failure(EXIT_USAGE, f"{path}: {e.strerror}") from None
    try:
        return inline_defs(parse(text))
    except _INPUT_ERRORS as e:
        raise _Failure(EXIT_USAGE, _where(path, e)) from None
    except ValueError as e:
        raise _Failure(EXIT_USAGE, f"{path}: {e}") from None


def _typed(cfg: CliConfig, path: str, ctx: Context, t: Term):
    try:
        return infer(ctx, t, strict=cfg.strict, classical=cfg.classical, tol=cfg.tol)
    except QmlError as e:
        raise _Failure(EXIT_REJECTED, _where(path, e)) from None


def _check(cfg, paths):
    out = []
    for path in paths:
        ctx, t = _load(path)
        j = _typed(cfg, path, ctx, t)
        out.append(({"file": path, "judgement": str(j), "type": pretty_type(j.type)}, str(j)))
    return EXIT_OK, out


def _eval(cfg, paths):
    out = []
    for path in paths:
        ctx, t = _load(path)
        _typed(cfg, path, ctx, t)
        m = denotation(ctx, t, classical=cfg.classical, tol=cfg.tol)
        out.append(({"file": path, **matrix_json(m)}, format_matrix(m, cfg.tol)))
    return EXIT_OK, out


def _nf(cfg, paths):
    out = []
    for path in paths:
        ctx, t = _load(path)
        _typed(cfg, path, ctx, t)
        text = pretty(nf(ctx, t, classical=cfg.classical, tol=cfg.tol), DIGITS)
        out.append(({"file": path, "nf": text}, text))
    return EXIT_OK, out


def _two(paths, what: str):
    if len(paths) != 2:
        raise _Failure(EXIT_USAGE, f"{what} takes exactly two files")
    return paths


def _equiv(cfg, paths):
    p, q = _two(paths, "equiv")
    (ctx, t), (ctx2, u) = _load(p), _load(q)
    if ctx != ctx2:
        raise _Failure(EXIT_USAGE, f"{p} and {q} declare different contexts: {ctx} and {ctx2}")
    j, k = _typed(cfg, p, ctx, t), _typed(cfg, q, ctx, u)
    if j.type != k.type:
        raise _Failure(
            EXIT_REJECTED, f"{p} has type {pretty_type(j.type)} but {q} has type {pretty_type(k.type)}"
        )
    same = equiv(ctx, t, u, classical=cfg.classical, tol=cfg.tol)
    verdict = "EQUIV" if same else "DISTINCT"
    nt = pretty(nf(ctx, t, classical=cfg.classical, tol=cfg.tol), DIGITS)
    nu = pretty(nf(ctx, u, classical=cfg.classical, tol=cfg.tol), DIGITS)
    report = {"verdict": verdict, "nf": [nt, nu]}
    return (EXIT_OK if same else EXIT_REJECTED), [(report, f"{verdict}\n{nt}\n{nu}")]


def _ip(cfg, paths):
    p, q = _two(paths, "ip")
    (ctx, t), (ctx2, u) = _load(p), _load(q)
    for path, c in ((p, ctx), (q, ctx2)):
        if c.entries:
            raise _Failure(EXIT_USAGE, f"{path}: ip needs closed terms, found context {c}")
    _typed(cfg, p, ctx, t)
    _typed(cfg, q, ctx2, u)
    z = inner_product(t, u)
    if z is UNKNOWN:
        return EXIT_OK, [({"inner_product": None}, "?")]
    z = complex(z)
    return EXIT_OK, [({"inner_product": [_num(z.real), _num(z.imag)]}, format_entry(z, cfg.tol))]


def _derive(cfg, paths):
    out = []
    for path in paths:
        try:
            with open(path, encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise _Failure(EXIT_USAGE, f"{path}: {e.strerror}") from None
        try:
            d = parse_derivation(text)
        except _INPUT_ERRORS as e:
            raise _Failure(EXIT_USAGE, _where(path, e)) from None
        try:
            check_derivation(d.ctx, d.start, d.steps, d.end, classical=cfg.classical, tol=cfg.tol)
        except QmlError as e:
            raise _Failure(EXIT_REJECTED, _where(path, e)) from None
        msg = f"{path}: derivation checked ({len(d.steps)} steps)"
        out.append(({"file": path, "verdict": "OK", "steps": len(d.steps)}, msg))
    return EXIT_OK, out


_RUN = {"check": _check, "eval": _eval, "nf": _nf, "equiv": _equiv, "ip": _ip, "derive": _derive}


def run(cfg: CliConfig, paths: Sequence[str], out: TextIO | None = None, err: TextIO | None = None) -> int:
    """Execute one command over ``paths``; returns the exit status."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        code, reports = _RUN[cfg.command](cfg, list(paths))
    except _Failure as f:
        if cfg.json:
            print(json.dumps({"error": str(f)}), file=out)
        print(f, file=err)
        return f.code
    for data, text in reports:
        print(json.dumps(data) if cfg.json else text, file=out)
    return code


# ---------------------------------------------------------------------------
# argument handling


def _positive(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (x > 0 and np.isfinite(x)):
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return x


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qml", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("files", nargs="+", metavar="FILE")
    ap.add_argument("--classical", action="store_true", help="use the classical fragment")
    ap.add_argument("--no-strict", dest="strict", action="store_false", help="skip orthogonality checks")
    ap.add_argument("--tol", type=_positive, default=None, help="amplitude tolerance (env QML_TOL)")
    ap.add_argument("--json", action="store_true", help="machine-readable output")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    tol = args.tol
    if tol is None:
        env = os.environ.get("QML_TOL")
        try:
            tol = _positive(env) if env else DEFAULT_TOL
        except argparse.ArgumentTypeError as e:
            print(f"qml: QML_TOL: {e}", file=sys.stderr)
            return EXIT_USAGE
    cfg = CliConfig(args.command, classical=args.classical, strict=args.strict, tol=tol, json=args.json)
    return run(cfg, args.files)


if __name__ == "__main__":
    sys.exit(main())
