"""Command-line parsing, reports and exit codes."""

import json

import pytest

from alecurv import __version__
from alecurv.cli import ChartSpecError, build_chart, main, parse_chart_spec


@pytest.mark.parametrize(
    "text, position",
    [("kahlr:m=2,p=1", 0), ("kahler:m=2,p=x", 13), ("kahler:m=2,q=1", 11), ("kahler:m=2,p", 11),
     ("kahler:m=2", 10), ("schwarzschild:n=4,n=5", 18), ("flat:", 5), ("sphere:radius=inf", 14)],
)
def test_chart_spec_errors(text, position):
    with pytest.raises(ChartSpecError) as err:
        parse_chart_spec(text)
    assert err.value.position == position


def test_chart_spec_parse():
    assert parse_chart_spec("kahler:m=2,p=1,a=0.5") == ("kahler", {"m": 2, "p": 1, "a": 0.5})
    assert build_chart("schwarzschild:n=5,mu=2").spec() == "schwarzschild:n=5,mu=2.0"
    assert build_chart("sphere").spec() == "sphere:radius=1.0"


def test_bad_chart_exit_code(capsys):
    assert main(["decay", "--chart", "kahler:m=2,p=x"]) == 2
    assert "position 13" in capsys.readouterr().err
    assert main(["curvature", "--chart", "flat:n=12"]) == 2
    assert main(["nonsense"]) == 2


def test_inequality_report(tmp_path):
    out = tmp_path / "ineq.json"
    code = main(["inequality", "--kind", "selfdual-ricci", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["schema"] == 1 and rep["version"] == __version__ and rep["seed"] == 0
    row = rep["rows"][0]
    assert row["bound"] == pytest.approx(2 / 3) and row["gap"] >= -1e-9
    assert all(c["anchor"] for c in rep["checks"])
    assert set(rep["tolerances"]) >= {"algebra", "bound", "backend"}


def test_decay_cli(tmp_path, capsys):
    out = tmp_path / "d.json"
    assert main(["decay", "--chart", "kahler:m=2,p=1,a=1", "--quantity", "rm_norm", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert 3.9 <= rep["rows"][0]["exponent"] <= 4.1


def test_csv_output(capsys):
    assert main(["ode", "--a", "2", "--b", "3", "--output", "csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("a,b,C0,f1") and len(lines) == 2


def test_identity_failure_exit_code(capsys):
    # the r^2 volume coefficient check fails (see the ledger): exit 1 with the check named
    assert main(["volume", "--m", "2", "--p", "1"]) == 1
    assert "c_sub" in capsys.readouterr().err


def test_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["curvature", "--chart", "kahler:m=2,p=3,a=1", "--points", "4", "--seed", "123"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--jobs", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.json"
    main(["curvature", "--chart", "kahler:m=2,p=3,a=1", "--points", "4", "--seed", "124", "--out", str(c)])
    assert c.read_bytes() != a.read_bytes()


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[common]\nseed = 5\noutput = csv\n[ode]\na = 3\nb = 3\n[decay]\nquantity = rc_norm\n")
    assert main(["ode", "--config", str(cfg), "--b", "4"]) == 0
    out = capsys.readouterr().out.splitlines()
    row = dict(zip(out[0].split(","), out[1].split(",")))
    assert float(row["a"]) == 3.0 and float(row["b"]) == 4.0


@pytest.mark.parametrize("body", ["[ode]\nbogus = 1\n", "[mystery]\nseed = 1\n", "[ode]\nquantity = rm_norm\n",
                                  "[common]\noutput = xml\n", "not an ini"])
def test_config_errors(tmp_path, body, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(body)
    assert main(["ode", "--config", str(cfg)]) == 2
    assert "error" in capsys.readouterr().err


def test_atomic_write_leaves_no_temp(tmp_path):
    out = tmp_path / "r.json"
    main(["ode", "--out", str(out)])
    assert [p.name for p in tmp_path.iterdir()] == ["r.json"]


def test_pohozaev_cli(tmp_path):
    out = tmp_path / "p.json"
    code = main(["pohozaev", "--chart", "flat:n=4", "--r-in", "1", "--r-out", "3", "--panels", "2", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["checks"][-1]["value"] < 1e-6


def test_tol_scale_validation(capsys):
    assert main(["ode", "--tol-scale", "-1"]) == 2
