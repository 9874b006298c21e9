import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmlang.equations import (
    Derivation,
    Direction,
    RuleApp,
    RuleId,
    apply_rule,
    check_derivation,
    enumerate_rule_instances,
    format_derivation,
    parse_derivation,
    parse_path,
    replay,
)
from qmlang.errors import FinalMismatch, NoMatch, QmlSyntaxError, SideConditionFailed
from qmlang.generate import corpus, free_program, strict_program
from qmlang.normalize import denotation
from qmlang.parser import parse_term
from qmlang.semantics import is_isometry
from qmlang.syntax import EMPTY, Q1, Q2, Context, Tensor, all_paths, pretty, terms_close
from qmlang.typecheck import infer

from .paths import SAMPLES

X = Context.of(("x", Q2))
L2R, R2L = Direction.L2R, Direction.R2L


def term(src, ctx=EMPTY):
    return parse_term(src, scope=set(ctx.names()))


def rewrite(src, rule, d=L2R, path=(), ctx=EMPTY):
    return apply_rule(ctx, term(src, ctx), RuleApp(RuleId[rule], d, path))


def test_rule_catalogue():
    listed = {
        "LET_VAL", "BETA_PAIR", "BETA_IF_FALSE", "BETA_IF_TRUE", "ETA_UNIT", "ETA_LET",
        "ETA_PAIR", "ETA_IF", "CC_LET_LET", "CC_LET_IF", "Q_IF_SUP", "SUP_COMM", "SUP_ZERO",
        "SUP_ASSOC", "SCALE_DIST", "SCALE_COMBINE", "SCALE_ZERO",
    }
    assert listed <= {r.name for r in RuleId}
    assert {r.name for r in RuleId} - listed == {"SCALE_SCALE", "SCALE_ONE"}


@pytest.mark.parametrize(
    "src, rule, d, ctx, expected",
    [
        ("qif true then false else true", "BETA_IF_TRUE", L2R, EMPTY, "false"),
        ("qif false then false else true", "BETA_IF_FALSE", L2R, EMPTY, "true"),
        ("{0.6}*true + {0.8}*false", "SUP_COMM", L2R, EMPTY, "{0.8}*false + {0.6}*true"),
        (
            "qif ({0.6}*true + {0.8}*false) then false else true",
            "Q_IF_SUP",
            L2R,
            EMPTY,
            "{0.6}*(qif true then false else true) + {0.8}*(qif false then false else true)",
        ),
        ("let y = (x, true) in y", "LET_VAL", L2R, X, "(x, true)"),
        ("let (a, b) = (x, true) in (b, a)", "BETA_PAIR", L2R, X, "let a = x in let b = true in (b, a)"),
        ("x", "ETA_IF", R2L, X, "qif x then true else false"),
        ("qif x then true else false", "ETA_IF", L2R, X, "x"),
        ("x + zero[Q2]", "SUP_ZERO", L2R, X, "x"),
        ("{0.5}*x + {0.5}*x", "SCALE_COMBINE", L2R, X, "{1}*x"),
        ("{2}*(x + x)", "SCALE_DIST", L2R, X, "{2}*x + {2}*x"),
        ("{2}*x + {2}*x", "SCALE_DIST", R2L, X, "{2}*(x + x)"),
        ("x + (x + x)", "SUP_ASSOC", L2R, X, "(x + x) + x"),
        ("{2}*({3}*x)", "SCALE_SCALE", L2R, X, "{6}*x"),
        ("{1}*x", "SCALE_ONE", L2R, X, "x"),
        ("{0}*true", "SCALE_ZERO", L2R, EMPTY, "zero[Q2]"),
        ("let a = x in let b = true in (a, b)", "CC_LET_LET", L2R, X, "let b = true in let a = x in (a, b)"),
        (
            "let a = (qif x then true else false) in qif a then false else true",
            "CC_LET_IF",
            L2R,
            X,
            "qif x then let a = true in qif a then false else true"
            " else let a = false in qif a then false else true",
        ),
    ],
)
def test_single_rewrites(src, rule, d, ctx, expected):
    out = rewrite(src, rule, d, (), ctx)
    assert terms_close(out, term(expected, ctx), 1e-12), pretty(out)


def test_bare_sum_matches_unit_scalars():
    # t + t is read as 1*t + 1*t
    assert terms_close(rewrite("x + x", "SCALE_COMBINE", ctx=X), term("{2}*x", X), 1e-12)


def test_let_val_needs_a_classical_value():
    with pytest.raises(NoMatch):
        rewrite("let y = {1}*x in y", "LET_VAL", ctx=X)


def test_eta_unit_side_condition():
    with pytest.raises(SideConditionFailed):
        rewrite("true", "ETA_UNIT", R2L)
    u = Context.of(("u", Q1))
    assert rewrite("u", "ETA_UNIT", R2L, ctx=u) == term("()")


def test_cc_let_let_side_condition():
    with pytest.raises(SideConditionFailed):
        rewrite("let a = x in let b = a in b", "CC_LET_LET", ctx=X)


def test_wrong_shape_and_path():
    with pytest.raises(NoMatch):
        rewrite("x", "SUP_COMM", ctx=X)
    with pytest.raises(NoMatch):
        rewrite("qif x then true else false", "BETA_IF_TRUE", path=(5,), ctx=X)


def test_scale_zero_cannot_drop_a_quantum_variable():
    with pytest.raises(SideConditionFailed):
        rewrite("{0}*x", "SCALE_ZERO", ctx=X)


def test_rewrite_at_a_path():
    out = rewrite("(qif true then x else x, ())", "BETA_IF_TRUE", path=(0,), ctx=X)
    assert out == term("(x, ())", X)


def test_enumeration_examples():
    apps = [i.app for i in enumerate_rule_instances(EMPTY, term("qif true then false else true"))]
    assert RuleApp(RuleId.BETA_IF_TRUE, L2R, ()) in apps
    apps = [i.app for i in enumerate_rule_instances(X, term("x + zero[Q2]", X))]
    assert RuleApp(RuleId.SUP_ZERO, L2R, ()) in apps
    assert enumerate_rule_instances(X, term("x", X)) == []


def test_hadamard_derivation():
    d = parse_derivation((SAMPLES / "hh.deriv").read_text())
    assert len(d.steps) > 40
    assert check_derivation(d.ctx, d.start, d.steps, d.end)
    terms = replay(d.steps, d.ctx, d.start)
    for t in terms:
        assert infer(d.ctx, t, strict=False).type == Q2
    assert terms_close(terms[-1], term("x", X), 1e-9)


def test_derivation_negative_controls():
    d = parse_derivation((SAMPLES / "hh.deriv").read_text())
    assert check_derivation(d.ctx, d.start, (), d.start)
    broken = list(d.steps)
    broken[3] = RuleApp(broken[3].rule, broken[3].direction, (9, 9))
    with pytest.raises(NoMatch):
        check_derivation(d.ctx, d.start, broken, d.end)
    with pytest.raises(FinalMismatch):
        check_derivation(d.ctx, d.start, d.steps[:-1], d.end)


def test_derivation_format_round_trips():
    text = (SAMPLES / "hh.deriv").read_text()
    d = parse_derivation(text)
    again = parse_derivation(format_derivation(d))
    assert again == Derivation(d.ctx, d.start, d.steps, d.end)
    assert parse_path("root") == () and parse_path("1.0.2") == (1, 0, 2)
    with pytest.raises(QmlSyntaxError):
        parse_derivation("start [x:Q2]:\n x\nRULE NOPE L2R at root\nend:\n x")


def _fuzz_corpus(n, seed):
    def make(rng):
        return free_program(rng, max_depth=4) if rng.random() < 0.5 else strict_program(rng, max_depth=4)

    return corpus(random.Random(seed), n, make, max_height=6)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_instances_preserve_meaning_and_type(seed):
    for ctx, t in _fuzz_corpus(4, seed):
        whole = denotation(ctx, t)
        strict = _strict(ctx, t)
        for inst in enumerate_rule_instances(ctx, t):
            after = apply_rule(ctx, t, inst.app)
            assert after == inst.result
            m = denotation(ctx, after)
            assert m.out_type == whole.out_type
            assert np.allclose(m.matrix, whole.matrix, atol=1e-9), str(inst.app)
            if strict:
                assert is_isometry(m)


EXPANSIONS = [
    RuleApp(RuleId.ETA_IF, R2L, ()),
    RuleApp(RuleId.ETA_LET, R2L, ()),
    RuleApp(RuleId.ETA_PAIR, R2L, ()),
    RuleApp(RuleId.ETA_UNIT, R2L, ()),
    RuleApp(RuleId.SUP_ZERO, R2L, ()),
    RuleApp(RuleId.SCALE_ONE, R2L, ()),
]


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_expansions_everywhere_preserve_meaning(seed):
    # the expansions are skipped by enumeration; apply them at every path
    for ctx, t in _fuzz_corpus(3, seed):
        whole = denotation(ctx, t)
        for path in all_paths(t):
            for app in EXPANSIONS:
                try:
                    after = apply_rule(ctx, t, RuleApp(app.rule, app.direction, path))
                except (NoMatch, SideConditionFailed):
                    continue
                assert np.allclose(denotation(ctx, after).matrix, whole.matrix, atol=1e-9)


def _strict(ctx, t):
    try:
        infer(ctx, t, strict=True)
        return True
    except Exception:
        return False


def test_eta_pair_on_a_tensor_variable():
    p = Context.of(("p", Tensor(Q2, Q2)))
    out = rewrite("p", "ETA_PAIR", R2L, ctx=p)
    assert np.allclose(denotation(p, out).matrix, np.eye(4))
