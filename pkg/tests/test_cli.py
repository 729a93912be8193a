import json
import pathlib

import pytest

from dglift.cli import main

GOLDENS = pathlib.Path(__file__).parent / "goldens"


@pytest.mark.parametrize("name,code", [
    ("split", 0),
    ("obstructed", 10),
    ("error", 1),
])
def test_golden_reports_and_exit_codes(tmp_path, capsys, name, code):
    session = GOLDENS / f"{name}.session"
    out1 = tmp_path / "run1.json"
    out2 = tmp_path / "run2.json"
    assert main([str(session), "--report", str(out1)]) == code
    assert main([str(session), "--report", str(out2)]) == code
    b1, b2 = out1.read_bytes(), out2.read_bytes()
    assert b1 == b2, "reports differ between runs"
    expected = (GOLDENS / f"{name}.json").read_bytes()
    assert b1 == expected, "report drifted from the committed golden file"


def test_report_structure(tmp_path):
    out = tmp_path / "r.json"
    main([str(GOLDENS / "split.session"), "--report", str(out)])
    doc = json.loads(out.read_text())
    assert doc["version"] and doc["seed"] == 0
    for rep in doc["reports"]:
        assert set(rep) == {
            "command", "window", "result", "tables", "certificates",
            "seed", "version",
        }


def test_seed_recorded(tmp_path):
    out = tmp_path / "r.json"
    main([str(GOLDENS / "split.session"), "--seed", "7", "--report", str(out)])
    doc = json.loads(out.read_text())
    assert doc["seed"] == 7
    assert all(rep["seed"] == 7 for rep in doc["reports"])


def test_human_output_mentions_status(capsys):
    code = main([str(GOLDENS / "obstructed.session")])
    captured = capsys.readouterr()
    assert code == 10
    assert "OBSTRUCTED" in captured.out


def test_missing_file_errors(capsys):
    assert main(["/nonexistent.session"]) == 1
    assert "error" in capsys.readouterr().err


def test_parse_error_exit_and_position(tmp_path, capsys):
    bad = tmp_path / "bad.session"
    bad.write_text("field Q\nbase x:1\ntower divided\nrun eval q\n")
    assert main([str(bad)]) == 1
    err = capsys.readouterr().err
    assert "4:" in err and "unknown identifier" in err


def test_modular_field_session_end_to_end(tmp_path):
    session = tmp_path / "f5.session"
    session.write_text(
        "field F 5\nbase x:1\ntower divided\n"
        "run tate x^2 hbound 2 wbound 4\n"
        "run check-axioms budget 40 wbound 3\n"
    )
    out = tmp_path / "r.json"
    assert main([str(session), "--report", str(out)]) == 0
    doc = json.loads(out.read_text())
    tate_rep = doc["reports"][0]
    assert tate_rep["result"]["variables"] == [["X1", 1, 2]]
    assert doc["reports"][1]["result"]["status"] == "ok"


def test_default_window_flag(tmp_path):
    session = tmp_path / "w.session"
    session.write_text(
        "field Q\nbase x:1\ntower divided\nvar X deg 1 wt 1 d x\n"
        "module N\ngen e deg 0 wt 0\nrun ext N N 0..1\n"
    )
    out = tmp_path / "r.json"
    assert main([str(session), "--window", "0:2:2", "--report", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["reports"][0]["window"] == "0:2:2"
    # without a window anywhere the command errors
    assert main([str(session)]) == 1
