import io
import json
import subprocess
import sys

import pytest

from qmlang.cli import CliConfig, format_entry, main, run
from qmlang.parser import inline_defs, parse

from .oracles import R
from .paths import SAMPLES


@pytest.fixture(autouse=True)
def _capture(capsys):
    global _CAPSYS
    _CAPSYS = capsys


def qml(*args):
    _CAPSYS.readouterr()
    code = main([str(a) for a in args])
    out, err = _CAPSYS.readouterr()
    return code, out, err


def s(name):
    return SAMPLES / name


def test_equiv_hh_id():
    code, out, _ = qml("equiv", s("hh.qml"), s("id.qml"))
    assert code == 0
    verdict, n1, n2 = out.splitlines()
    assert verdict == "EQUIV"
    assert n1 == n2 == "qif x then true else false"


def test_equiv_distinct():
    code, out, _ = qml("equiv", s("not.qml"), s("id.qml"))
    assert code == 1
    assert out.splitlines()[0] == "DISTINCT"


def test_check_rejects_discarding():
    code, _, err = qml("check", s("measure.qml"))
    assert code == 1
    assert "UnusedVariable(y)" in err
    assert err.startswith(f"{s('measure.qml')}:2:")


def test_check_rejects_constant_qif_only_when_strict():
    assert qml("check", s("const.qml"))[0] == 1
    code, out, _ = qml("check", "--no-strict", s("const.qml"))
    assert code == 0 and "x:Q2 ⊢ " in out


def test_eval_bell():
    code, out, _ = qml("eval", s("bell.qml"))
    assert code == 0
    rows = out.splitlines()
    assert len(rows) == 4
    assert [complex(r.replace("i", "j")) for r in rows] == pytest.approx([R, 0, 0, R], abs=1e-11)


def test_json_and_text_carry_the_same_numbers():
    _, text, _ = qml("eval", s("bell.qml"))
    _, js, _ = qml("eval", "--json", s("bell.qml"))
    data = json.loads(js)
    assert data["out_type"] == "Q2*Q2" and data["in_type"] == "Q1"
    from_json = [complex(*entry) for row in data["rows"] for entry in row]
    from_text = [complex(r.replace("i", "j")) for r in text.split()]
    assert from_json == from_text


def test_nf_output_renormalises_to_itself(tmp_path):
    for name in ("hh.qml", "bell.qml", "simplify.qml"):
        code, out, _ = qml("nf", s(name))
        assert code == 0
        ctx, _ = inline_defs(parse(s(name).read_text()))
        header = "main [" + ", ".join(f"{n}:Q2" for n in ctx.names()) + "] = "
        again = tmp_path / name
        again.write_text(header + out)
        code2, out2, _ = qml("nf", "--tol", "1e-9", again)
        assert code2 == 0 and out2 == out


def test_simplification():
    assert qml("nf", s("simplify.qml"))[1].strip() == "false"


def test_ip(tmp_path):
    plus = tmp_path / "plus.qml"
    minus = tmp_path / "minus.qml"
    plus.write_text("main [] = {1/sqrt(2)}*false + {1/sqrt(2)}*true")
    minus.write_text("main [] = {1/sqrt(2)}*false + {-1/sqrt(2)}*true")
    code, out, _ = qml("ip", plus, minus)
    assert code == 0 and float(out) == pytest.approx(0, abs=1e-12)
    code, out, _ = qml("ip", plus, plus)
    assert out.strip() == "1"
    code, out, _ = qml("ip", "--json", plus, minus)
    assert json.loads(out)["inner_product"] == pytest.approx([0, 0], abs=1e-12)
    assert qml("ip", plus, s("id.qml"))[0] == 2


def test_derive():
    code, out, _ = qml("derive", s("hh.deriv"))
    assert code == 0 and "54 steps" in out


def test_derive_failure(tmp_path):
    bad = tmp_path / "bad.deriv"
    bad.write_text("start [x:Q2]:\n  x\nRULE SUP_COMM L2R at root\nend:\n  x\n")
    code, _, err = qml("derive", bad)
    assert code == 1 and "NoMatch" in err


def test_usage_and_parse_errors(tmp_path):
    assert qml("frobnicate", s("id.qml"))[0] == 2
    assert qml("check", tmp_path / "missing.qml")[0] == 2
    assert qml("check", "--tol", "-1", s("id.qml"))[0] == 2
    broken = tmp_path / "broken.qml"
    broken.write_text("main [x:Q2] =\n  qif x then")
    code, _, err = qml("check", broken)
    assert code == 2 and f"{broken}:2:13:" in err
    assert qml("equiv", s("id.qml"))[0] == 2
    assert qml("equiv", s("id.qml"), s("bell.qml"))[0] == 2


def test_tolerance_from_environment(monkeypatch):
    cfg_seen = []
    import qmlang.cli as cli

    real = cli.run

    def spy(cfg, paths, *a, **k):
        cfg_seen.append(cfg.tol)
        return real(cfg, paths, *a, **k)

    monkeypatch.setattr(cli, "run", spy)
    monkeypatch.setenv("QML_TOL", "1e-6")
    qml("check", s("id.qml"))
    qml("check", "--tol", "1e-3", s("id.qml"))
    monkeypatch.setenv("QML_TOL", "zero")
    assert qml("check", s("id.qml"))[0] == 2
    assert cfg_seen == [1e-6, 1e-3]


def test_classical_mode():
    code, out, _ = qml("eval", "--classical", s("not.qml"))
    assert code == 0 and out.splitlines() == ["0 1", "1 0"]
    assert qml("check", "--classical", s("bell.qml"))[0] == 1


def test_format_entry():
    assert format_entry(0.5 + 1e-17j, 1e-9) == "0.5"
    assert format_entry(0.5 - 0.25j, 1e-9) == "0.5-0.25i"
    assert format_entry(1 / 3, 1e-9) == "0.333333333333"


def test_config_validation():
    with pytest.raises(ValueError):
        CliConfig("check", tol=0)
    with pytest.raises(ValueError):
        CliConfig("dance")


def test_run_collects_reports():
    out, err = io.StringIO(), io.StringIO()
    assert run(CliConfig("nf"), [str(s("hh.qml")), str(s("id.qml"))], out, err) == 0
    assert out.getvalue().splitlines() == ["qif x then true else false"] * 2


def test_module_entry_point():
    r = subprocess.run(
        [sys.executable, "-m", "qmlang", "check", str(s("id.qml"))], capture_output=True, text=True
    )
    assert r.returncode == 0 and "x:Q2 ⊢° x : Q2" in r.stdout
