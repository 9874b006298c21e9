"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python -m tests.test_acceptance``.
"""

import random
import time

import numpy as np
import pytest

from qmlang.equations import check_derivation, enumerate_rule_instances, parse_derivation
from qmlang.errors import NotOrthogonal, QmlTypeError, UnusedVariable
from qmlang.generate import (
    FreeGen,
    Q22,
    Q222,
    classical_program,
    corpus,
    free_program,
    strict_program,
)
from qmlang.normalize import denotation, equiv, nf, quote_open, quote_quantum
from qmlang.parser import inline_defs, parse, parse_term
from qmlang.semantics import (
    Vector,
    all_envs,
    basis,
    eval_classical,
    eval_quantum,
    eval_term,
    evaluate,
    from_dense,
    index_of,
    is_isometry,
    to_dense,
    vbind,
    vreturn,
)
from qmlang.syntax import EMPTY, FALSE, TRUE, Q1, Q2, IfQ, Pair, Tensor, Var, dim, pretty, terms_close
from qmlang.normalize import qval_bind, quote_classical
from qmlang.typecheck import infer

from .oracles import BELL, closed_vector, flat_index, run_classical
from .paths import SAMPLES

BUDGET = 10.0  # seconds per criterion
HEIGHT = 6  # longest root-to-leaf path of generated terms
GATES = (SAMPLES / "gates.qml").read_text()


def report(number: int, title: str, ok: bool, detail: str, started: float, capsys=None):
    took = time.perf_counter() - started
    ok = ok and took < BUDGET
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail} [{took:.2f}s]"
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)
    return ok


def _load(name):
    return inline_defs(parse((SAMPLES / name).read_text()))


def _mixed(n, seed, height=HEIGHT):
    def make(rng):
        if rng.random() < 0.5:
            return free_program(rng, max_depth=4)
        return strict_program(rng, max_depth=4)

    return corpus(random.Random(seed), n, make, max_height=height)


# 1 -----------------------------------------------------------------------------


def check_hadamard_self_inverse():
    ctx, hh = _load("hh.qml")
    _, x = _load("id.qml")
    canonical = IfQ(Var("x"), TRUE, FALSE)
    same = equiv(ctx, hh, x, tol=1e-9)
    n1, n2 = nf(ctx, hh, tol=1e-9), nf(ctx, x, tol=1e-9)
    ok = same and terms_close(n1, canonical, 1e-9) and terms_close(n2, canonical, 1e-9)
    return ok, f"equiv={'EQUIV' if same else 'DISTINCT'}, nf={pretty(n1)!r} and {pretty(n2)!r}"


# 2 -----------------------------------------------------------------------------


def check_simplification():
    t = parse_term(
        "{1/sqrt(2)}*({1/sqrt(2)}*false + {1/sqrt(2)}*true)"
        " + {1/sqrt(2)}*({1/sqrt(2)}*false + {-1/sqrt(2)}*true)"
    )
    shown = nf(EMPTY, t, tol=1e-9)
    raw = quote_open(EMPTY, Q2, denotation(EMPTY, t), tol=1e-9, raw=True)
    # raw Q2 tree: {v1}*true + {v0}*false
    amp_true, amp_false = raw.left.amp, raw.right.amp
    ok = shown == FALSE and abs(amp_false - 1) <= 1e-9 and abs(amp_true) <= 1e-9
    return ok, f"nf={pretty(shown)!r}, residual amplitudes (false, true)=({amp_false:.3g}, {amp_true:.3g})"


# 3 -----------------------------------------------------------------------------


def check_bell():
    ctx, t = _load("bell.qml")
    col = eval_term(ctx, t).matrix[:, 0]
    expected = np.array([0.7071067811865476, 0, 0, 0.7071067811865476])
    err = float(np.max(np.abs(col - expected)))
    ok = err <= 1e-9 and np.allclose(expected, BELL)
    return ok, f"amplitudes {np.round(col.real, 10).tolist()}, max error {err:.1e}"


# 4 -----------------------------------------------------------------------------


def check_rejections():
    outcomes = []
    for name, expected in (("measure.qml", UnusedVariable), ("const.qml", NotOrthogonal)):
        ctx, t = _load(name)
        try:
            infer(ctx, t, strict=True)
            outcomes.append((name, None, False))
        except QmlTypeError as e:
            outcomes.append((name, e, isinstance(e, expected)))
    ok = all(hit for _, _, hit in outcomes)
    detail = ", ".join(f"{n} -> {e.message if e else 'accepted'}" for n, e, _ in outcomes)
    return ok, detail


# 5 -----------------------------------------------------------------------------


def check_soundness(n=1000, seed=5):
    terms = _mixed(n, seed)
    instances = bad = 0
    rules = set()
    for ctx, t in terms:
        whole = denotation(ctx, t)
        for inst in enumerate_rule_instances(ctx, t):
            instances += 1
            rules.add(inst.app.rule)
            # typing is compositional, so a local rewrite is compared at its redex
            before = eval_quantum(inst.before_judgement) if inst.local else whole
            after = eval_quantum(inst.after_judgement)
            if before.out_type != after.out_type or not np.allclose(
                before.matrix, after.matrix, atol=1e-9, rtol=0
            ):
                bad += 1
    ok = bad == 0 and instances > n
    return ok, f"{len(terms)} terms, {instances} rule instances over {len(rules)} rules, {bad} unsound"


# 6 -----------------------------------------------------------------------------


def check_inversion(n=1000, seed=6):
    def make(rng):
        return strict_program(rng, max_depth=4)

    terms = corpus(random.Random(seed), n, make, max_height=HEIGHT)
    wrong = unstable = 0
    for ctx, t in terms:
        infer(ctx, t, strict=True)
        m = denotation(ctx, t)
        n1 = nf(ctx, t)
        if not np.allclose(denotation(ctx, n1).matrix, m.matrix, atol=1e-9, rtol=0):
            wrong += 1
        if not terms_close(nf(ctx, n1), n1, 1e-9):
            unstable += 1
    ok = wrong == 0 and unstable == 0
    return ok, f"{len(terms)} strict terms, {wrong} with [[nf t]] != [[t]], {unstable} with nf(nf t) != nf t"


# 7 -----------------------------------------------------------------------------

QUOTE_TYPES = [Q1, Q2, Q22, Q222, Tensor(Q2, Q22), Tensor(Q2, Q1)]


def _unit(rng, ty):
    d = dim(ty)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def _meaning(ty, amps):
    """Quote a vector, then evaluate the closed value tree."""
    return to_dense(ty, evaluate(quote_quantum(ty, Vector(ty, amps)), {})).amps


def check_quote_properties(per_type=500, seed=7):
    rng = np.random.default_rng(seed)
    worst = 0.0
    checked = 0
    for ty in QUOTE_TYPES:
        vs = [_unit(rng, ty) for _ in range(per_type)]
        qs = [_meaning(ty, v) for v in vs]
        for i, (v, qv) in enumerate(zip(vs, qs)):
            w, qw = vs[i - 1], qs[i - 1]
            k = complex(rng.normal(), rng.normal())
            worst = max(
                worst,
                np.max(np.abs(_meaning(ty, k * v) - k * qv)),
                np.max(np.abs(_meaning(ty, v + w) - (qv + qw))),
                abs(np.vdot(v, w) - np.vdot(qv, qw)),
            )
        checked += per_type
        if isinstance(ty, Tensor):
            for _ in range(per_type):
                v, w = _unit(rng, ty.left), _unit(rng, ty.right)
                pair = Pair(quote_quantum(ty.left, Vector(ty.left, v)), quote_quantum(ty.right, Vector(ty.right, w)))
                rhs = to_dense(ty, evaluate(pair, {})).amps
                worst = max(worst, np.max(np.abs(_meaning(ty, np.kron(v, w)) - rhs)))
    ok = worst <= 1e-8
    return ok, f"{checked} unit vectors over {len(QUOTE_TYPES)} types, worst deviation {worst:.1e}"


# 8 -----------------------------------------------------------------------------


def check_isometry_gate(n=1000, seed=8):
    terms = _mixed(n, seed)
    accepted = rejected = leaks = missed = 0
    for ctx, t in terms:
        iso = is_isometry(denotation(ctx, t), 1e-9)
        try:
            infer(ctx, t, strict=True)
            accepted += 1
            if not iso:
                leaks += 1
        except QmlTypeError:
            rejected += 1
            if iso:
                missed += 1
    # completeness of the gate: the non-strict generator only produces
    # isometries by accident; those are reported, not failed on
    ok = leaks == 0 and accepted > 0 and rejected > 0
    return ok, (
        f"{accepted} accepted (all isometric: {leaks == 0}), {rejected} rejected, "
        f"{rejected - missed} of them non-isometric, {missed} isometric but not strict-derivable"
    )


# 9 -----------------------------------------------------------------------------


def _variants(rng, ctx, t, ty):
    """Terms to compare against ``t``: its normal form and random same-typed terms."""
    yield nf(ctx, t, classical=True)
    gen = FreeGen(random.Random(rng.random()), 3, classical=True)
    for _ in range(3):
        yield gen.term(dict(ctx.entries), ty)


def check_classical_oracle(n=250, seed=9):
    rng = random.Random(seed)
    pairs = agree = same = 0
    for _ in range(n):
        ctx, t = classical_program(rng)
        jt = infer(ctx, t, classical=True)
        envs = list(all_envs(ctx))
        truth_t = [flat_index(run_classical(t, e)) for e in envs]
        table_t = eval_classical(jt)
        t_ok = [table_t[i] for i in range(len(envs))] == truth_t
        for u in _variants(rng, ctx, t, jt.type):
            ju = infer(ctx, u, classical=True)
            truth_u = [flat_index(run_classical(u, e)) for e in envs]
            table_u = eval_classical(ju)
            tables_ok = t_ok and [table_u[i] for i in range(len(envs))] == truth_u
            brute = truth_t == truth_u
            verdict = equiv(ctx, t, u, classical=True)
            pairs += 1
            same += brute
            agree += verdict == brute and tables_ok
    ok = agree == pairs and 0 < same < pairs
    return ok, f"{pairs} pairs ({same} equivalent), equiv agrees with truth tables on {agree}"


# 10 ----------------------------------------------------------------------------


def check_derivation_replay():
    d = parse_derivation((SAMPLES / "hh.deriv").read_text())
    ok = check_derivation(d.ctx, d.start, d.steps, d.end)
    return ok, f"{len(d.steps)} steps from {pretty(d.start)!r} to {pretty(d.end)!r}"


# 11 ----------------------------------------------------------------------------


def check_monad_laws(n=500, seed=11):
    rng = np.random.default_rng(seed)
    ty = Q22
    worst = 0.0

    def vec():
        a = rng.normal(size=4) + 1j * rng.normal(size=4)
        a[rng.random(4) < 0.3] = 0
        return from_dense(Vector(ty, a))

    def dense(v):
        return to_dense(ty, v).amps

    for _ in range(n):
        v = vec()
        fs, gs = [vec() for _ in range(4)], [vec() for _ in range(4)]

        def f(b):
            return fs[index_of(ty, b)]

        def g(b):
            return gs[index_of(ty, b)]

        a = basis(ty)[int(rng.integers(4))]
        worst = max(
            worst,
            np.max(np.abs(dense(vbind(vreturn(a), f)) - dense(f(a)))),
            np.max(np.abs(dense(vbind(v, vreturn)) - dense(v))),
            np.max(np.abs(dense(vbind(vbind(v, f), g)) - dense(vbind(v, lambda b: vbind(f(b), g))))),
        )
        # the same laws on value trees
        tv = quote_quantum(ty, Vector(ty, dense(v)))
        tf = [quote_quantum(ty, Vector(ty, dense(x))) for x in fs]
        tg = [quote_quantum(ty, Vector(ty, dense(x))) for x in gs]

        def qf(x):
            return tf[index_of(ty, x)]

        def qg(x):
            return tg[index_of(ty, x)]

        def ret(x):
            return quote_classical(ty, x)

        worst = max(
            worst,
            np.max(np.abs(closed_vector(qval_bind(ret(a), qf, ty)) - closed_vector(qf(a)))),
            np.max(np.abs(closed_vector(qval_bind(tv, ret, ty)) - closed_vector(tv))),
            np.max(
                np.abs(
                    closed_vector(qval_bind(qval_bind(tv, qf, ty), qg, ty))
                    - closed_vector(qval_bind(tv, lambda x: qval_bind(qf(x), qg, ty), ty))
                )
            ),
        )
    ok = worst <= 1e-9
    return ok, f"{n} random vectors and value trees, worst deviation {worst:.1e}"


CRITERIA = [
    (1, "Hadamard self-inverse", check_hadamard_self_inverse),
    (2, "superposition simplifies to false", check_simplification),
    (3, "Bell state", check_bell),
    (4, "rejection suite", check_rejections),
    (5, "soundness fuzz", check_soundness),
    (6, "inversion and adequacy fuzz", check_inversion),
    (7, "quote linearity, isometry and tensors", check_quote_properties),
    (8, "isometry gate", check_isometry_gate),
    (9, "classical oracle", check_classical_oracle),
    (10, "derivation replay", check_derivation_replay),
    (11, "monad and Kleisli laws", check_monad_laws),
]


@pytest.mark.parametrize("number, title, check", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, check, capsys):
    started = time.perf_counter()
    ok, detail = check()
    assert report(number, title, ok, detail, started, capsys), detail


if __name__ == "__main__":
    results = []
    for number, title, check in CRITERIA:
        started = time.perf_counter()
        ok, detail = check()
        results.append(report(number, title, ok, detail, started))
    raise SystemExit(0 if all(results) else 1)
