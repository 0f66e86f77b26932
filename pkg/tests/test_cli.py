import io
import json
import subprocess
import sys

import jsonschema
import pytest

from sheetspy.cli import main
from sheetspy.resources import load_schema, sample_names


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def run_json(schema, *argv):
    code, out, err = run(*argv, "--json")
    data = json.loads(out)
    jsonschema.validate(data, load_schema(schema))
    return code, data


@pytest.mark.parametrize("name", sample_names())
@pytest.mark.parametrize("command,schema", [("inspect", "inspect"), ("lint", "lint"), ("crit", "crit"),
                                            ("eval", "eval"), ("fix", "changes")])
def test_json_output_matches_schema(sample_file, name, command, schema):
    code, data = run_json(schema, command, str(sample_file(name)))
    assert data["schema_version"] == "1"
    assert code in (0, 1)


def test_exit_codes(sample_file):
    assert run("lint", str(sample_file("fig6")))[0] == 0
    assert run("lint", str(sample_file("guardless")))[0] == 1
    assert run("crit", str(sample_file("guardless")))[0] == 1
    assert run("crit", str(sample_file("guarded")))[0] == 0
    assert run("lint", "/nonexistent.fml.csv")[0] == 2
    assert run("frobnicate")[0] == 2


def test_parse_error_reports_cell(tmp_path):
    bad = tmp_path / "bad.fml.csv"
    bad.write_text("1,=SUM(A1\n")
    code, out, err = run("lint", str(bad))
    assert code == 2
    assert "B1: expected ')'" in err


def test_allow_const_silences_finding(sample_file):
    path = str(sample_file("fig6"))
    _, data = run_json("lint", "lint", path, "--allow-const", "1")
    assert "SPY-CONST-001" in [d["code"] for d in data["diagnostics"]]
    _, data = run_json("lint", "lint", path, "--allow-const", "0,1")
    assert "SPY-CONST-001" not in [d["code"] for d in data["diagnostics"]]


def test_crit_plain_mode_reports_group_hint(sample_file):
    code, data = run_json("crit", "crit", str(sample_file("fig6")), "--plain")
    assert code == 1
    assert data["overall"] == "Fail"
    code, data = run_json("crit", "crit", str(sample_file("fig6")))
    assert (code, data["overall"]) == (0, "Pass")


def test_fix_then_lint_is_clean(sample_file, tmp_path):
    fixed = tmp_path / "fixed.fml.csv"
    code, out, err = run("fix", str(sample_file("deviant")), "--out", str(fixed))
    assert code == 0 and out == ""
    assert "B3" in err
    assert run("lint", str(fixed))[0] == 0


def test_fix_to_stdout(sample_file):
    code, out, err = run("fix", str(sample_file("fig6")))
    assert out.encode() == open(sample_file("fig6"), "rb").read()
    assert err == ""


def test_insert_then_eval(sample_file, tmp_path):
    new = tmp_path / "new.fml.csv"
    code, data = run_json("changes", "insert", str(sample_file("fig6")), "--group", "R1", "--at", "3",
                          "--out", str(new))
    assert code == 0
    assert data["written"] == str(new)
    assert [c["after"] for c in data["changes"]] == ["G6:J8", "M6:P8", "E12:E14", "G12:J14", "M12:P14"]
    _, values = run_json("eval", "eval", str(new))
    _, before = run_json("eval", "eval", str(sample_file("fig6")))
    assert values["values"]["G16"] == before["values"]["G14"]
    assert values["values"]["G14"] == 0


def test_insert_by_cell_and_column(sample_file):
    code, out, _ = run("insert", str(sample_file("fig6")), "--group", "H11", "--at", "1", "--col")
    assert code == 0
    assert "=SUM(H11:H13)" in out


def test_insert_errors(sample_file):
    path = str(sample_file("fig6"))
    assert run("insert", path, "--group", "R7", "--at", "1")[0] == 2
    assert run("insert", path, "--group", "R1", "--at", "9")[0] == 2
    assert run("insert", path, "--group", "R1", "--at", "3", "--no-guard")[0] == 2


def test_replicate(sample_file):
    code, data = run_json("changes", "replicate", str(sample_file("fig6")), "--mark", "G11:J12,E11,E12",
                          "--to", "E20")
    assert code == 0
    assert "=$E20*G6*(1+G$9)" in data["workbook"]
    assert run("replicate", str(sample_file("fig6")), "--mark", "G11:J12", "--to", "G12")[0] == 2
    assert run("replicate", str(sample_file("fig6")), "--mark", "G11:Q", "--to", "G30")[0] == 2


def test_in_place_and_refusal(sample_file, tmp_path):
    path = tmp_path / "d.fml.csv"
    path.write_bytes(open(sample_file("deviant"), "rb").read())
    code, _, err = run("fix", str(path), "--out", str(path))
    assert code == 2 and "--in-place" in err
    assert path.read_bytes() == open(sample_file("deviant"), "rb").read()
    assert run("fix", str(path), "--in-place")[0] == 0
    assert run("lint", str(path))[0] == 0
    assert run("fix", str(path), "--in-place", "--out", "x")[0] == 2


def test_no_color(sample_file, monkeypatch):
    class Tty(io.StringIO):
        def isatty(self):
            return True

    out = Tty()
    main(["lint", str(sample_file("guardless"))], out=out, err=io.StringIO())
    assert "\033[" in out.getvalue()
    monkeypatch.setenv("SHEETSPY_NO_COLOR", "1")
    out = Tty()
    main(["lint", str(sample_file("guardless"))], out=out, err=io.StringIO())
    assert "\033[" not in out.getvalue()


def test_module_entry_point(sample_file):
    proc = subprocess.run([sys.executable, "-m", "sheetspy", "lint", str(sample_file("fig6"))],
                          capture_output=True, text=True)
    assert proc.returncode == 0
