import csv
import io
import json
import math
import re

import pytest

from ncphi4 import cli, rg_flow

DIAGNOSTIC = re.compile(r"^ncphi4: error: [\w\[\]_]+: .+$")


def run(capsys, *argv):
    try:
        code = cli.main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def assert_single_line_failure(err):
    lines = err.strip().splitlines()
    assert len(lines) == 1 and DIAGNOSTIC.match(lines[0]), err


@pytest.mark.parametrize(
    "name,line",
    [
        ("T1", "n=1 L=1 N=2 F=2 g=0 B=1 planar_regular"),
        ("T3", "n=1 L=1 N=2 F=2 g=0 B=2 planar_irregular"),
        ("bubble", "n=2 L=2 N=4 F=2 g=0 B=1 planar_regular"),
    ],
)
def test_classify_builtin(capsys, name, line):
    code, out, _ = run(capsys, "classify", f"builtin:{name}")
    assert code == 0 and out.strip() == line


def test_classify_file(capsys, tmp_path):
    path = tmp_path / "crossed.txt"
    path.write_text("v 0: a b c d\ne: a c\ne: b d\n")
    code, out, _ = run(capsys, "classify", str(path))
    assert code == 0 and out.strip().endswith("g=1 B=0 nonplanar")


@pytest.mark.parametrize(
    "argv",
    [
        ("classify", "builtin:nope"),
        ("classify", "/nonexistent/graph.txt"),
        ("betafn", "--grid", "100:10000:2"),
        ("betafn", "--grid", "bogus"),
        ("amplitude", "--id", "S1_p", "--grid", "1:100:9"),
        ("decompose", "--p2", "5:1:3"),
        ("frobnicate",),
    ],
)
def test_input_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert_single_line_failure(err)


def test_malformed_graph_reports_line(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("v 0: a b c d\ne: a b\ne: c\n")
    code, _, err = run(capsys, "classify", str(path))
    assert code == 2 and "line 3" in err
    assert_single_line_failure(err)


def test_unknown_config_key_is_named(capsys, tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# run\nlambda = 0.2\nmass = 3\n")
    code, _, err = run(capsys, "betafn", "--config", str(path))
    assert code == 2 and "'mass'" in err
    assert_single_line_failure(err)


def test_config_values_are_used(capsys, tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("lambda = 0.2  # coupling\na = 0\ngrid_count = 7\n")
    code, out, _ = run(capsys, "betafn", "--config", str(path), "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["beta_a"] == 0.0 and doc["beta_a_witness"]["trivial"] is True
    assert doc["beta_lambda_coeff"] == pytest.approx(4 * math.pi**2, rel=2e-2)


def test_fit_rejection_exits_3(capsys, monkeypatch):
    monkeypatch.setattr(rg_flow, "gamma_four", lambda params, c, at_pm=True: math.sqrt(c))
    code, _, err = run(capsys, "betafn")
    assert code == 3 and "fit[Gamma4]" in err
    assert_single_line_failure(err)


def test_betafn_json(capsys):
    code, out, _ = run(capsys, "betafn", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["Z"] == 1.0 and doc["gamma"] == 0.0
    assert doc["beta_lambda_coeff"] == pytest.approx(4 * math.pi**2, rel=2e-2)
    assert set(doc["beta_m"]) == {"c_quad", "c_log"}


def test_betafn_writes_json_and_samples(capsys, tmp_path):
    code, out, _ = run(capsys, "betafn", "--out", str(tmp_path))
    assert code == 0 and out == ""
    assert json.loads((tmp_path / "betafn.json").read_text())["Z"] == 1.0
    rows = list(csv.reader((tmp_path / "samples.csv").open()))
    assert rows[0] == list(rg_flow.BetaReport.SAMPLE_COLUMNS) and len(rows) == 10


def test_outputs_are_deterministic(capsys):
    first = run(capsys, "decompose", "--random", "500", "--seed", "7")
    second = run(capsys, "decompose", "--random", "500", "--seed", "7")
    other = run(capsys, "decompose", "--random", "500", "--seed", "8")
    assert first == second and first[1] != other[1]


def test_decompose_csv(capsys):
    code, out, _ = run(capsys, "decompose", "--p2", "1e-2:1e2:5")
    rows = [r for r in csv.reader(io.StringIO(out)) if not r[0].startswith("#")]
    assert code == 0 and len(rows) == 6
    for p2, c, comm, corr, resid in rows[1:]:
        assert float(resid) < 1e-12
        assert float(c) == pytest.approx(float(comm) + float(corr), rel=1e-12)


def test_decompose_without_a_has_zero_correction(capsys, tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("a = 0\n")
    code, out, _ = run(capsys, "decompose", "--config", str(path))
    rows = [r for r in csv.reader(io.StringIO(out)) if not r[0].startswith("#")]
    assert code == 0 and all(float(r[3]) == 0.0 for r in rows[1:])


def test_slice_json(capsys):
    code, out, _ = run(capsys, "slice", "--format", "json", "--p2", "1e-1:1e1:3")
    doc = json.loads(out)
    assert code == 0 and doc["holds"] is True
    assert doc["columns"] == ["p2", "i", "C_i", "partial_sum", "C"]
    assert len(doc["rows"]) == 3 * 13


def test_amplitude_csv(capsys):
    code, out, _ = run(capsys, "amplitude", "--id", "NC_tadpole", "--grid", "100:1000:6")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["integrand_id", "Lambda", "value", "abs_error"]
    assert len(rows) == 7 and all(r[0] == "NC_tadpole" for r in rows[1:])


def test_powercount(capsys):
    code, out, _ = run(capsys, "powercount", "--b-max", "5", "--n-max", "6")
    assert code == 0 and "# all_nc_convergent=true" in out


def test_report_bundle(capsys, tmp_path):
    code, out, _ = run(capsys, "report", "--out", str(tmp_path), "--grid", "100:10000:6")
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary["status"].values()) == {"ok"}
    for name in ("decompose.csv", "slice.csv", "powercount.csv", "betafn.json", "samples.csv",
                 "classify_T3.txt", "amplitude_S1_p.csv"):
        assert (tmp_path / name).exists(), name
