import json
import logging

import pandas as pd
import pytest

import cli
import settings
from invariants import INVARIANTS
from report import LEDGER_COLUMNS

PAIRING_BREAKER = """R1: A -> C
R2: A -> B
R3: B -> A
kinetics:
R1: A=1
R2: A=2
R3: B=1
"""


def _run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out


def test_analyze_preset_json(capsys):
    code, out = _run(capsys, "analyze", "--preset", "schmitz", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["schema_version"] == 1
    assert data["name"] == "schmitz"
    assert data["network"]["deficiency"] == 0
    assert data["f_decomposition"]["bi_independent"] is True
    assert data["f_decomposition"]["decomposition_type"] == "TypeIII"
    assert data["kinetics"] is None


def test_analyze_with_kinetics_reports_nf_nodes(capsys):
    code, out = _run(capsys, "analyze", "--preset", "schmitz-ndk")
    data = json.loads(out)
    assert data["kinetics"]["class"] == "PL-NDK"
    assert data["kinetics"]["nf_nodes"] == ["M1"]
    assert data["multistationarity"].startswith("precondition")


def test_analyze_text_output(capsys):
    code, out = _run(capsys, "analyze", "--preset", "heck", "--format", "text")
    assert code == 0
    assert "== F-decomposition ==" in out
    assert "independence_w_le_s" in out


def test_explicit_orientation(capsys):
    code, out = _run(capsys, "analyze", "--preset", "schmitz", "--orientation", "R2,R3,R4,R5,R6,R7,R8")
    assert code == 0
    assert json.loads(out)["orientation"] == ["R2", "R3", "R4", "R5", "R6", "R7", "R8"]
    code, _ = _run(capsys, "analyze", "--preset", "schmitz", "--orientation", "R1,R2")
    assert code == 2


def test_decompose_partition_choices(capsys, tmp_path):
    code, out = _run(capsys, "decompose", "--preset", "schmitz", "--partition", "p")
    assert code == 0
    assert json.loads(out)["decomposition"]["kind"] == "P-decomposition"

    part = tmp_path / "classes.txt"
    part.write_text("R1 R2 R3 R4\nR5 R6 R7 R8\n", encoding="utf-8")
    code, out = _run(capsys, "decompose", "--preset", "schmitz", "--partition-file", str(part))
    data = json.loads(out)
    assert data["decomposition"]["kind"] == "user"
    assert data["decomposition"]["bi_independent"] is True

    code, out = _run(capsys, "decompose", "--preset", "schmitz",
                     "--partition", "user-file", "--partition-file", str(part))
    assert json.loads(out)["decomposition"]["kind"] == "user"
    code, _ = _run(capsys, "decompose", "--preset", "schmitz", "--partition", "user-file")
    assert code == 2

    code, _ = _run(capsys, "decompose", "--preset", "schmitz", "--partition", "species")
    assert code == 2


def test_decompose_text(capsys):
    code, out = _run(capsys, "decompose", "--preset", "pd-distributive:2", "--format", "text")
    assert code == 0
    assert "TypeII" in out


def test_transform_schmitz(capsys):
    code, out = _run(capsys, "transform", "--preset", "schmitz-ndk", "--verify")
    assert code == 0
    data = json.loads(out)
    assert data["method"] == "cf-ri+"
    assert "R5: 2M1 -> M1 + M3" in data["dsl"]
    assert data["verification"]["passed"] is True
    assert data["added_complexes"] == ["2M1", "M1 + M3"]


def test_transform_output_parses_back(capsys, tmp_path):
    code, out = _run(capsys, "transform", "--preset", "replicator", "--format", "text")
    assert code == 0
    path = tmp_path / "rdk.crn"
    path.write_text(out, encoding="utf-8")
    code, out = _run(capsys, "analyze", str(path))
    assert json.loads(out)["kinetics"]["class"] == "PL-RDK"


def test_transform_failed_verification_exits_1(capsys, tmp_path):
    path = tmp_path / "breaker.crn"
    path.write_text(PAIRING_BREAKER, encoding="utf-8")
    code, out = _run(capsys, "transform", str(path), "--method", "cf-rm+", "--verify")
    assert code == 1
    assert json.loads(out)["verification"]["passed"] is False
    code, _ = _run(capsys, "transform", str(path), "--method", "cf-ri+", "--verify")
    assert code == 0


def test_transform_without_kinetics_exits_2(capsys):
    code, _ = _run(capsys, "transform", "--preset", "schmitz")
    assert code == 2


def test_default_method_from_config(capsys, config_file):
    config_file("transform:\n  default_method: cf-rm+\n")
    code, out = _run(capsys, "transform", "--preset", "schmitz-ndk")
    assert json.loads(out)["method"] == "cf-rm+"


def test_check_preset_with_ledger(capsys, tmp_path):
    ledger = tmp_path / "out" / "checks.csv"
    code, out = _run(capsys, "check", "--preset", "heck", "--ledger", str(ledger))
    assert code == 0
    assert json.loads(out)["passed"] is True
    df = pd.read_csv(ledger)
    assert list(df.columns) == LEDGER_COLUMNS
    assert len(df) == len(INVARIANTS)

    _run(capsys, "check", "--preset", "schmitz", "--ledger", str(ledger), "--invariants", "dsl_roundtrip")
    assert len(pd.read_csv(ledger)) == len(INVARIANTS) + 1


def test_check_directory(capsys, tmp_path):
    (tmp_path / "a.crn").write_text("R1: A -> B\nR2: B -> A\n", encoding="utf-8")
    (tmp_path / "b.crn").write_text("A + B <-> C\nC -> 2A\n", encoding="utf-8")
    (tmp_path / "notes.txt").write_text("ignored", encoding="utf-8")
    code, out = _run(capsys, "check", str(tmp_path))
    assert code == 0
    assert [n["name"] for n in json.loads(out)["networks"]] == ["a", "b"]


def test_check_text_table(capsys):
    code, out = _run(capsys, "check", "--preset", "schmitz", "--format", "text")
    assert code == 0
    assert out.startswith("# schmitz: ok")
    assert "kernel_dimension" in out


def test_check_failure_exits_1(capsys, monkeypatch):
    from transform import CheckResult

    monkeypatch.setitem(INVARIANTS, "always_fails", lambda ctx: CheckResult("always_fails", False, "no"))
    code, out = _run(capsys, "check", "--preset", "schmitz", "--invariants", "always_fails")
    assert code == 1
    assert json.loads(out)["passed"] is False


@pytest.mark.parametrize("argv", [
    ["analyze"],
    ["analyze", "missing-file.crn"],
    ["analyze", "--preset", "nope"],
    ["check", "--preset", "schmitz", "--invariants", "nope"],
])
def test_input_errors_exit_2(capsys, argv):
    code, _ = _run(capsys, *argv)
    assert code == 2


def test_parse_error_exits_2(capsys, tmp_path, caplog):
    path = tmp_path / "bad.crn"
    path.write_text("R1: A -> A\n", encoding="utf-8")
    with caplog.at_level(logging.ERROR, logger="cli"):
        code, _ = _run(capsys, "analyze", str(path))
    assert code == 2
    assert "line 1, column 5" in caplog.text


def test_presets_listing(capsys):
    code, out = _run(capsys, "presets")
    assert code == 0
    assert "schmitz-ndk" in out.split()


def test_setup_logging_writes_files(tmp_path, monkeypatch, config_file):
    config_file(f"logging:\n  dir: {tmp_path / 'logs'}\n  level: DEBUG\n")
    monkeypatch.setattr(cli, "_LOGGING_READY", False)
    root = logging.getLogger()
    before = list(root.handlers)
    level = root.level
    try:
        cli.setup_logging()
        logging.getLogger("cli").error("boom")
        assert (tmp_path / "logs" / "crn.log").exists()
        assert (tmp_path / "logs" / "errors.log").exists()
        assert root.level == logging.DEBUG
    finally:
        for h in root.handlers[len(before):]:
            h.close()
            root.removeHandler(h)
        root.setLevel(level)


def test_settings_partial_override_and_env(config_file, monkeypatch):
    cfg = config_file("analysis:\n  orientation_cap: 8\n")
    assert cfg["analysis"]["orientation_cap"] == 8
    assert cfg["analysis"]["default_format"] == "json"
    assert settings.get("transform", "max_multiplier") == 64

    monkeypatch.setenv("CRN_LOG_LEVEL", "WARNING")
    assert settings.reload()["logging"]["level"] == "WARNING"
    monkeypatch.delenv("CRN_LOG_LEVEL")


def test_broken_config_falls_back_to_defaults(config_file):
    cfg = config_file("analysis: [unclosed\n")
    assert cfg["analysis"]["orientation_cap"] == 64
