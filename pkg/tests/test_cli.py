import csv
import json

import numpy as np
import pytest

from sharpturn import cli, one_turn
from sharpturn.errors import NonConvergence


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config: ")
    config = json.loads(lines[0][len("# config: "):])
    rows = list(csv.reader(lines[1:]))
    return config, rows[0], rows[1:]


def run(tmp_path, *argv):
    return cli.main([*argv, "--output-dir", str(tmp_path)])


def test_one_turn_table(tmp_path):
    assert run(tmp_path, "one-turn", "--grid", "5") == 0
    config, header, rows = read_csv(tmp_path / "one_turn.csv")
    assert header == ["nu", "f_closed", "f_matching", "T", "theta"]
    assert len(rows) == 5
    assert rows[0][0] == "0"
    assert float(rows[0][1]) == pytest.approx(2 * np.log(3) - 2, abs=1e-12)
    assert float(rows[0][2]) == pytest.approx(0.1972246, abs=1e-7)
    assert float(rows[-1][0]) == pytest.approx(0.25)
    assert config["model"]["beta"] == pytest.approx(np.pi / 3)
    mirror = json.loads((tmp_path / "one_turn.json").read_text())
    assert mirror["columns"] == header and len(mirror["rows"]) == 5


def test_repeated_runs_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["boundary", "--grid", "4", "--emin", "1e-3", "--emax", "1e-2"]
    assert cli.main([*argv, "--output-dir", str(a)]) == 0
    assert cli.main([*argv, "--output-dir", str(b)]) == 0
    for name in ("boundary.csv", "boundary.json", "boundary_optima.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


@pytest.mark.parametrize("argv", [
    ["one-turn", "--beta", "2.0"],
    ["boundary", "--emin", "0"],
    ["boundary", "--emin", "1e-2", "--emax", "1e-3"],
    ["boundary", "--alpha", "1.2"],
    ["tunnel", "--physical-units"],
    ["tunnel", "--L", "2"],
    ["one-turn", "--physical-units", "--L", "2"],
    ["boundary", "--workers", "0"],
])
def test_config_errors(tmp_path, capsys, argv):
    assert run(tmp_path, *argv) == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["kind"] == "config"
    assert "error" in record and "message" in record


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": {"beta": 1.0}, "colour": "red"}))
    assert run(tmp_path, "one-turn", "--config", str(cfg)) == 2
    assert "colour" in capsys.readouterr().err


def test_config_file_values(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": {"beta": 1.0}, "points": 3}))
    assert run(tmp_path, "one-turn", "--config", str(cfg)) == 0
    config, _, rows = read_csv(tmp_path / "one_turn.csv")
    assert len(rows) == 3 and config["model"]["beta"] == 1.0
    assert float(rows[-1][0]) == pytest.approx(np.cos(1.0) ** 2)


def test_solver_error_exit(tmp_path, capsys, monkeypatch):
    def broken(*args, **kwargs):
        raise NonConvergence("forced")
    monkeypatch.setattr(one_turn, "solve_matching", broken)
    assert run(tmp_path, "one-turn", "--grid", "3") == 1
    record = json.loads(capsys.readouterr().err.strip())
    assert record["kind"] == "solver" and "forced" in record["message"]


def test_tunnel_glued(tmp_path):
    assert run(tmp_path, "tunnel", "--grid", "400", "--emin", "2e-4", "--emax", "3e-3") == 0
    _, header, rows = read_csv(tmp_path / "tunnel_glued.csv")
    assert header == ["E", "F0", "branch", "is_switch"]
    # rows ascend in E; coming down from the global branch the first local one is n = 4
    switches = [r for r in rows if r[3] == "True"]
    assert rows[-1][2] == "Global"
    assert switches and switches[-1][2] == "Local(4)"
    _, bheader, brows = read_csv(tmp_path / "tunnel_branches.csv")
    assert bheader[-1] == "branch" and len(brows) > len(rows)


def test_physical_units_scale(tmp_path):
    L = 2.0
    plain, phys = tmp_path / "plain", tmp_path / "phys"
    assert cli.main(["boundary", "--grid", "3", "--emin", "1e-3", "--emax", "1e-2",
                     "--output-dir", str(plain)]) == 0
    assert cli.main(["boundary", "--grid", "3", "--emin", str(1e-3 * L**2),
                     "--emax", str(1e-2 * L**2), "--physical-units", "--L", str(L),
                     "--output-dir", str(phys)]) == 0
    _, _, a = read_csv(plain / "boundary.csv")
    _, _, b = read_csv(phys / "boundary.csv")
    for ra, rb in zip(a, b):
        assert float(rb[0]) == pytest.approx(L**2 * float(ra[0]), rel=1e-10)
        assert float(rb[1]) == pytest.approx(L**2 * float(ra[1]), rel=1e-10)
        assert rb[2] == ra[2]


def test_output_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["one-turn", "--grid", "2"]) == 0
    assert (tmp_path / "env" / "one_turn.csv").exists()


def test_sphaleron_report(tmp_path):
    assert run(tmp_path, "sphaleron") == 0
    report = json.loads((tmp_path / "sphaleron.json").read_text())
    assert report["q"] == pytest.approx(2134.11, abs=0.01)
    assert report["orbit_residual"] <= 1e-8
    assert report["growth"]["relative_error"] <= 0.02
    assert [r["region"] for r in report["instability"]] == ["xi<0", "xi>0"]


def test_sphaleron_needs_width(tmp_path, capsys):
    assert run(tmp_path, "sphaleron", "--b", "0") == 2


def test_validate_single(tmp_path, capsys):
    assert run(tmp_path, "validate", "--only", "1") == 0
    out = capsys.readouterr().out
    assert "criterion 1 (one-turn exponent): PASS" in out
    summary = json.loads(out.strip().splitlines()[-1])
    assert summary == {"criteria": {"1": True}, "passed": True}
    assert (tmp_path / "validate.json").exists()


def test_help_exit(capsys):
    assert cli.main(["--help"]) == 0
    assert cli.main(["nonsense"]) == 2
