"""Command-line surface: subcommands, exit codes, file output."""

import json

import pytest

from agentconform import cli, tla
from agentconform.builtins import builtin
from agentconform import checker


def run_cli(*argv):
    return cli.main(list(argv))


def test_check_failing_property_exits_1(capsys):
    rc = run_cli("check", "mcp", "--property", "P8_CredRevocation")
    out = capsys.readouterr().out
    assert rc == 1
    assert "P8_CredRevocation: FAIL at depth 2" in out


def test_check_passing_property_exits_0(capsys):
    rc = run_cli("check", "acp-cap", "--property", "P8_CredRevocation")
    assert rc == 0
    assert "PASS" in capsys.readouterr().out


def test_check_unknown_model_exits_2(capsys):
    rc = run_cli("check", "nosuch")
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_check_bounds_parsing(capsys):
    rc = run_cli("check", "a2a", "--property", "P3_DelegationMonotonicity",
                 "--bounds", "agentid=2,caps=2,depth=20")
    assert rc == 1
    rc = run_cli("check", "a2a", "--property", "P3_DelegationMonotonicity",
                 "--bounds", "depth=not-a-number")
    assert rc == 2


def test_check_model_file(tmp_path, capsys):
    from agentconform import irfmt
    path = tmp_path / "local.ir"
    path.write_text(irfmt.serialize_model(builtin("mcp")))
    rc = run_cli("check", str(path), "--property", "P8_CredRevocation")
    assert rc == 1


def test_emit_tla_to_dir(tmp_path, capsys):
    rc = run_cli("emit-tla", "a2a", "--out", str(tmp_path))
    assert rc == 0
    module = (tmp_path / "a2a.tla").read_text()
    assert "MODULE a2a" in module
    cfgs = list(tmp_path.glob("a2a_*.cfg"))
    assert len(cfgs) == len(builtin("a2a").properties)


def test_parse_tlc_exit_codes(tmp_path, capsys):
    model = builtin("mcp")
    res = checker.check(model, model.property_by_id("P8_CredRevocation"))
    log = tmp_path / "run.log"
    log.write_text(tla.format_tlc_log(model, res))
    assert run_cli("parse-tlc", str(log)) == 1
    passing = checker.check(model,
                            model.property_by_id("P1_IdentityVerifiability"))
    log.write_text(tla.format_tlc_log(model, passing))
    assert run_cli("parse-tlc", str(log)) == 0
    log.write_text("garbage\n")
    assert run_cli("parse-tlc", str(log)) == 2


def test_compose_pattern(capsys):
    rc = run_cli("compose", "tool-delegation")
    out = capsys.readouterr().out
    assert rc == 1
    assert "CS_NoLeakage: FAIL" in out
    assert run_cli("compose", "nosuch") == 2


def test_replay_round_trip(tmp_path, capsys):
    cx_path = tmp_path / "cx.json"
    rc = run_cli("check", "mcp", "--property", "P8_CredRevocation",
                 "--counterexample-out", str(cx_path))
    assert rc == 1
    capsys.readouterr()
    rc = run_cli("replay", str(cx_path), "--profile", "vulnerable")
    out = capsys.readouterr().out
    assert rc == 1
    assert json.loads(out)["outcome"] == "VIOLATED"
    rc = run_cli("replay", str(cx_path), "--profile", "hardened")
    out = capsys.readouterr().out
    assert rc == 0
    assert json.loads(out)["outcome"] == "UPHELD"


def test_replay_live_without_endpoint_errors(tmp_path, capsys):
    cx_path = tmp_path / "cx.json"
    run_cli("check", "mcp", "--property", "P8_CredRevocation",
            "--counterexample-out", str(cx_path))
    capsys.readouterr()
    rc = run_cli("replay", str(cx_path), "--profile", "vulnerable",
                 "--mode", "live")
    assert rc == 2


def test_matrix_over_models_dir(tmp_path, capsys):
    from agentconform import irfmt
    (tmp_path / "m.ir").write_text(irfmt.serialize_model(builtin("mcp")))
    rc = run_cli("matrix", "--models-dir", str(tmp_path))
    out = capsys.readouterr().out
    assert rc == 1
    assert "mcp P8_CredRevocation: FAIL" in out


def test_out_writes_file(tmp_path, capsys):
    target = tmp_path / "verdicts.txt"
    run_cli("check", "mcp", "--property", "P8_CredRevocation",
            "--out", str(target))
    assert "FAIL" in target.read_text()
