"""Command-line interface: schema, exit codes, determinism."""

import csv
import io
import json
import math
import pathlib
import subprocess
import sys

import mpmath
import pytest

from boseldp import cli
from boseldp.extended import from_json_value, parse_number

GOLDEN = pathlib.Path(__file__).parent / "golden"
BETA_STAR = math.e ** 2 / (4 * math.pi) ** 3


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(body))))


def meta(text):
    out = {}
    for ln in text.splitlines():
        if ln.startswith("# "):
            key, _, value = ln[2:].partition(": ")
            out[key] = from_json_value(json.loads(value))
    return out


@pytest.mark.parametrize("name,argv", [
    ("sweep_ideal_beta_norm.csv", ["--model", "ideal", "--beta-norm", "--mu-start", "-1",
                                   "--mu-stop", "0", "--mu-count", "5"]),
    ("sweep_pmf_beta_norm.csv", ["--model", "pmf", "--beta-norm", "--a", "1", "--mu-start", "0",
                                 "--mu-stop", "5", "--mu-count", "6"]),
])
def test_sweep_matches_golden_file(capsys, name, argv):
    code, out, _ = run(capsys, "sweep", *argv)
    assert code == 0
    body = "".join(ln + "\n" for ln in out.splitlines() if not ln.startswith("# config"))
    assert body == (GOLDEN / name).read_text()


def test_sweep_columns_and_critical_slope(capsys):
    _, out, _ = run(capsys, "sweep", "--model", "ideal", "--beta-norm", "--mu-start", "-1",
                    "--mu-stop", "0", "--mu-count", "3")
    rows = table(out)
    assert rows[0] == list(cli.SWEEP_COLUMNS)
    last = dict(zip(rows[0], rows[-1]))
    assert float(last["dp_dmu"]) == pytest.approx(float(mpmath.zeta(1.5)), rel=1e-15)
    assert float(last["pressure"]) == pytest.approx(float(4 * mpmath.pi * mpmath.zeta(2.5)),
                                                    rel=1e-15)
    assert meta(out)["config"]["mu_count"] == 3


def test_pmf_sweep_regimes(capsys):
    _, out, _ = run(capsys, "sweep", "--model", "pmf", "--beta-norm", "--a", "1",
                    "--mu-start", "0", "--mu-stop", "5", "--mu-count", "11")
    rows = [dict(zip(*[table(out)[0], r])) for r in table(out)[1:]]
    zeta = float(mpmath.zeta(1.5))
    for r in rows:
        mu = float(r["mu_eff"])
        expect = "Supercritical" if mu > zeta else "Subcritical"
        assert r["regime"] == expect
        if mu > zeta:
            assert float(r["dp_dmu"]) == mu
            assert float(r["condensate"]) == pytest.approx(mu - zeta, rel=1e-14)


def test_sweep_row_errors_and_total_failure(capsys):
    code, out, _ = run(capsys, "sweep", "--model", "ideal", "--mu-start", "-0.5",
                       "--mu-stop", "0.5", "--mu-count", "3")
    assert code == 0
    rows = table(out)
    assert rows[-1][4] == "Error" and rows[-1][1] == "nan"
    assert "row_errors" in meta(out)
    code, _, err = run(capsys, "sweep", "--model", "ideal", "--mu-start", "0.5",
                       "--mu-stop", "1", "--mu-count", "2")
    assert code == 2 and "failed" in err


def test_hyl_sweep_reports_nonsmooth_row(capsys):
    code, out, _ = run(capsys, "sweep", "--model", "hyl", "--beta", repr(BETA_STAR), "--a", "2",
                       "--b", "1", "--mu-start", "300", "--mu-stop", "400", "--mu-count", "6")
    assert code == 0
    rows = table(out)[1:]
    ns = [r for r in rows if r[4] == "NonSmooth"]
    assert len(ns) == 1 and ns[0][2] == "undefined" and ns[0][3] == "undefined"


def test_zero_ideal_beta_norm_rows_are_power_law(capsys):
    code, out, _ = run(capsys, "zero", "--model", "ideal", "--d", "3", "--beta", "0.0795775",
                       "--mu", "0", "--kmax", "6")
    assert code == 0
    for k, x in table(out)[1:]:
        assert float(x) == pytest.approx(int(k) ** -2.5, rel=1e-5)
    _, out, _ = run(capsys, "zero", "--model", "ideal", "--beta-norm", "--kmax", "6")
    for k, x in table(out)[1:]:
        assert float(x) == pytest.approx(int(k) ** -2.5, rel=1e-15)
    tail = meta(out)["tail"]
    assert tail["starts_after"] == 6 and tail["density"] > 0


def test_zero_cmf_reports_lambert_factor(capsys):
    _, out, _ = run(capsys, "zero", "--model", "cmf", "--mu", "-0.5", "--a", "1",
                    "--format", "json")
    doc = from_json_value(json.loads(out))
    info = doc["solution"]["info"]
    assert info["factor"] == pytest.approx(info["W"] / info["K"], rel=1e-15)


def test_zero_hyl_in_fold_lists_all_families(capsys):
    _, out, _ = run(capsys, "zero", "--model", "hyl", "--beta", repr(BETA_STAR), "--mu", "360",
                    "--a", "2", "--b", "1", "--format", "json")
    doc = from_json_value(json.loads(out))
    assert len(doc["families"]) == 3
    assert doc["solution"]["unique_stationary_point"] is False
    assert doc["config"]["params"]["mu_eff"] == 360.0


def test_alpha_reduction_echoed(capsys):
    _, out, _ = run(capsys, "pressure", "--model", "pmf", "--mu", "0.3", "--alpha", "-0.1",
                    "--a", "1")
    cfg = meta(out)["config"]
    assert cfg["params"]["mu_eff"] == pytest.approx(0.2)
    assert cfg["reduction"] == "mu <- mu + alpha"
    assert float(table(out)[1][0]) == pytest.approx(0.2)


def test_condensate_convention_flag(capsys):
    _, out, _ = run(capsys, "condensate", "--model", "ideal")
    assert table(out)[1][1] == "0"
    _, out, _ = run(capsys, "condensate", "--model", "ideal", "--convention", "periodic")
    assert table(out)[1][1] == "inf"


def test_free_energy_rows(capsys):
    code, out, _ = run(capsys, "free-energy", "--model", "ideal", "--beta-norm", "--rho", "1",
                       "5")
    assert code == 0
    rows = table(out)[1:]
    assert rows[1][3] == "true" and rows[0][3] == "false"
    assert rows[1][2] == "0" and float(rows[0][2]) < 0.0
    assert float(rows[1][1]) == pytest.approx(-float(4 * mpmath.pi * mpmath.zeta(2.5)), rel=1e-14)


def test_simulate_is_deterministic_and_reports_z(capsys):
    argv = ["simulate", "--model", "pmf", "--mu", "0.05", "--a", "0.5", "--volume", "100",
            "--samples", "50000", "--seed", "3", "--verify-zero", "--format", "json"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    doc = from_json_value(json.loads(first))
    assert doc["diagnostics"]["seed"] == 3
    assert "tail_bound" in doc["diagnostics"]
    assert all("z" in r and math.isfinite(r["z"]) for r in doc["rows"])


def test_simulate_ideal_means_within_bands(capsys):
    _, out, _ = run(capsys, "simulate", "--model", "ideal", "--mu", "-0.1", "--volume", "1000",
                    "--samples", "100000", "--verify-zero")
    for r in table(out)[1:]:
        assert abs(float(r[-1])) < 4.5


def test_simulate_invalid_config_exit_two(capsys):
    code, _, err = run(capsys, "simulate", "--model", "pmf", "--a", "1", "--volume", "-1",
                       "--samples", "10")
    assert code == 2 and "domain error" in err


@pytest.mark.parametrize("argv", [
    ["zero", "--model", "ideal", "--mu", "1"],
    ["zero", "--model", "hyl", "--a", "1", "--b", "1"],
    ["pressure", "--beta", "1", "--beta-norm"],
    ["sweep", "--mu-start", "0", "--mu-stop", "1", "--mu-count", "1"],
    ["free-energy", "--model", "hyl", "--a", "2", "--b", "1", "--rho", "1"],
])
def test_domain_errors_exit_two(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and err


def test_bad_arguments_exit_two():
    with pytest.raises(SystemExit) as exc:
        cli.main(["zero", "--model", "quantum"])
    assert exc.value.code == 2


def test_verify_only_specfun(capsys):
    code, out, err = run(capsys, "verify", "--only", "specfun", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert [c["group"] for c in doc["checks"]] == ["specfun"]
    assert doc["checks"][0]["anchor"]
    assert err.startswith("PASS")


def test_specfun_command(capsys):
    _, out, _ = run(capsys, "specfun", "--fn", "lambert_w", "--x", "1")
    assert parse_number(table(out)[1][2]) == pytest.approx(float(mpmath.lambertw(1)), rel=1e-16)
    _, out, _ = run(capsys, "specfun", "--fn", "zeta", "--x", "0.5")
    assert float(table(out)[1][2]) == pytest.approx(float(mpmath.zeta(0.5)), rel=1e-13)


def test_output_file_and_console_entry(tmp_path):
    target = tmp_path / "p.csv"
    res = subprocess.run([sys.executable, "-m", "boseldp", "pressure", "--model", "ideal",
                          "--out", str(target)], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == ""
    assert table(target.read_text())[0][0] == "mu_eff"
    res = subprocess.run([sys.executable, "-m", "boseldp", "--version"], capture_output=True,
                         text=True)
    assert res.stdout.strip().endswith("0.1.0")
