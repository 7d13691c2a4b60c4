import subprocess
import sys

import numpy as np
import pytest

from gpclab.cli import main, parse_range
from gpclab.errors import ConfigError
from gpclab.experiments import analyze, simulate, summarize
from gpclab.scenario import bundled_names, load_scenario, parse_scenario
from gpclab.simkit import read_trace

BASE = """
seed = 3
horizon = 120

[model]
a = [-0.5, -0.8]
b = [0, 0, 2, 1, 0.5]

[controller]
variant = "full"
N = 4
Q = 1
lambda = 1

[reference]
kind = "ramp"

[disturbance]
kind = "ramp"
"""


def write(tmp_path, text, name="s.scn"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# -- scenario parsing ---------------------------------------------------------

def test_bundled_scenarios_all_parse():
    names = bundled_names()
    assert {"example1_lambda1.scn", "example2_ramp_lambda0.scn", "example2_noise.scn",
            "example3_compensated.scn", "deadbeat_trivial.scn"} <= set(names)
    for n in names:
        sc = load_scenario(n)
        assert sc.horizon >= 1


def test_bundled_scenarios_encode_the_experiments():
    e1 = load_scenario("example1_lambda1")
    np.testing.assert_array_equal(e1.model.a, [-0.5, -0.8])
    np.testing.assert_array_equal(e1.model.b, [0, 0, 2, 1, 0.5])
    assert (e1.reference.kind, e1.disturbance.kind, e1.horizon) == ("ramp", "ramp", 400)
    e2 = load_scenario("example2_noise")
    assert e2.model.delay == 4 and e2.reference.kind == "square" and e2.reference.period == 100
    assert e2.disturbance.kind == "noise" and e2.controller.lam[0] == 1e-10
    e3 = load_scenario("example3_compensated")
    assert e3.disturbance.kind == "power" and e3.disturbance.n == 3
    assert e3.controller.compensated and e3.controller.compensation == "exact"


def test_unknown_key_names_key_and_line(tmp_path, capsys):
    bad = BASE.replace("lambda = 1", "lamda = 1")
    with pytest.raises(ConfigError) as info:
        parse_scenario(bad, "bad.scn")
    assert "lamda" in str(info.value) and "bad.scn:13" in str(info.value)
    assert main(["run", write(tmp_path, bad), "--out", str(tmp_path)]) == 1
    assert "lamda" in capsys.readouterr().err


@pytest.mark.parametrize("mutate", [
    lambda s: s.replace("[model]", "[plant]"),
    lambda s: s.replace("[reference]\nkind = \"ramp\"\n", ""),
    lambda s: s.replace("seed = 3", "sede = 3"),
    lambda s: s.replace("a = [-0.5, -0.8]", "a = [-0.5, -0.8"),
    lambda s: s.replace("N = 4", "N = 0"),
    lambda s: s.replace('kind = "ramp"', 'kind = "sawtooth"', 1),
    lambda s: s.replace("horizon = 120", "horizon = 0"),
])
def test_invalid_scenarios_are_config_errors(mutate):
    with pytest.raises(ConfigError):
        parse_scenario(mutate(BASE), "x.scn")


def test_missing_scenario_file(tmp_path):
    assert main(["run", str(tmp_path / "nope.scn")]) == 1


def test_noise_seed_flows_from_scenario(tmp_path):
    text = BASE.replace('[disturbance]\nkind = "ramp"', '[disturbance]\nkind = "noise"')
    sc = parse_scenario(text)
    assert sc.disturbance.seed == 3
    assert sc.with_seed(11).disturbance.seed == 11
    assert sc.with_dist("uniform").disturbance.dist == "uniform"
    assert sc.with_dist("uniform").reference.kind == "ramp"


# -- run ------------------------------------------------------------------------

def test_run_example1_csv(tmp_path, capsys):
    assert main(["run", "example1_lambda1", "--out", str(tmp_path)]) == 0
    data = read_trace(tmp_path / "example1_lambda1.csv")
    np.testing.assert_allclose(data["e"][69:400], -5.9632653061, atol=1e-9)
    out = capsys.readouterr().out
    assert "final e" in out and "max |e|" in out


def test_run_example2_ramp_bound(tmp_path, capsys):
    assert main(["run", "example2_ramp_lambda0", "--out", str(tmp_path)]) == 0
    rec = simulate(load_scenario("example2_ramp_lambda0"))
    s = summarize(rec)
    assert s["tail_start_k"] == 301 and s["max_abs_e_tail"] < 5e-10
    assert np.max(np.abs(rec.e[299:400])) < 5e-10


def test_run_round_trip(tmp_path):
    main(["run", "example2_noise", "--out", str(tmp_path)])
    data = read_trace(tmp_path / "example2_noise.csv")
    rec = simulate(load_scenario("example2_noise"))
    for c in ("y_ref", "y", "u", "du", "chi", "e"):
        assert np.all(np.array([float(f"{v:.15g}") for v in rec.column(c)]) == data[c])


def test_run_seed_override_changes_noise(tmp_path):
    main(["run", "example2_noise", "--out", str(tmp_path / "a")])
    main(["run", "example2_noise", "--out", str(tmp_path / "b"), "--seed", "99"])
    main(["run", "example2_noise", "--out", str(tmp_path / "c"), "--dist", "uniform"])
    chis = [read_trace(tmp_path / d / "example2_noise.csv")["chi"] for d in "abc"]
    assert not np.array_equal(chis[0], chis[1]) and not np.array_equal(chis[0], chis[2])
    assert chis[2].min() >= 0


def test_run_divergence_exit_code(tmp_path, capsys):
    text = BASE.replace("lambda = 1", "lambda = -1").replace("horizon = 120", "horizon = 1000")
    assert main(["run", write(tmp_path, text), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "diverged" in err and "k=" in err


def test_run_writes_requested_outputs(tmp_path):
    text = BASE + '\n[outputs]\ncsv = "trace.csv"\nplot = "trace.svg"\n'
    assert main(["run", write(tmp_path, text), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trace.csv").exists() and (tmp_path / "trace.svg").exists()


# -- analyze ----------------------------------------------------------------------

def _report(tmp_path, name, capsys):
    assert main(["analyze", name, "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    return (tmp_path / f"{name}.txt").read_text()


def test_analyze_example1_lambda2(tmp_path, capsys):
    text = _report(tmp_path, "example1_lambda2", capsys)
    assert "steady-state error (total): -6.3657142857" in text
    assert "roots in z" in text and "G_w" in text


def test_analyze_example1_negative_lambda(tmp_path, capsys):
    text = _report(tmp_path, "example1_lambda_m0p1", capsys)
    assert "verdict: stable" in text
    assert "steady-state error (total): -4.8827413127" in text


def test_analyze_deadbeat(tmp_path, capsys):
    text = _report(tmp_path, "deadbeat_trivial", capsys)
    assert "\n  1   (lowest power z^-0)\n" in text  # T = 1
    assert "steady-state error (total): 0.0000000000" in text
    an = analyze(load_scenario("deadbeat_trivial"))
    assert an.total == 0.0 and an.ops.T.allclose(an.ops.T.__class__([1.0]))


def test_analyze_unstable_still_reports(tmp_path):
    text = BASE.replace("lambda = 1", "lambda = -1")
    assert main(["analyze", write(tmp_path, text), "--out", str(tmp_path)]) == 0
    report = (tmp_path / "s.txt").read_text()
    assert "verdict: unstable" in report
    assert "steady-state error (total): inapplicable" in report


def test_analyze_singular_controller_is_config_error(tmp_path):
    text = BASE.replace("lambda = 1", "lambda = 0").replace("b = [0, 0, 2, 1, 0.5]",
                                                            "b = [0, 0, 0, 1, 0.5]")
    assert main(["analyze", write(tmp_path, text), "--out", str(tmp_path)]) == 1


# -- table1 -----------------------------------------------------------------------

def test_table1_default(capsys):
    assert main(["table1"]) == 0
    out = capsys.readouterr().out
    for v in ("-4.8827413127", "-5.9632653061", "-6.3657142857"):
        assert out.count(v) == 2


def test_table1_perturbed_fails(capsys):
    assert main(["table1", "--perturb"]) == 3
    assert "mismatch" in capsys.readouterr().err
    assert main(["table1", "--perturb", "--tolerance", "1e-6"]) == 3


def test_table1_loose_tolerance_same_verdict():
    assert main(["table1", "--tolerance", "1e-6"]) == 0


# -- sweep ------------------------------------------------------------------------

def test_parse_range():
    assert parse_range("4,5,6", "N") == [4, 5, 6]
    assert parse_range("-2:5:0.1", "lambda")[:3] == [-2.0, -1.9, -1.8]
    assert len(parse_range("-2:5:0.1", "lambda")) == 71
    assert parse_range("1:1:1", "lambda") == [1.0]
    for bad in ("5:4", "", "a:b", "1:2:0", "4.5", "0,1"):
        with pytest.raises(ConfigError):
            parse_range(bad, "N")


def _sweep_rows(path):
    import csv
    with open(path) as fh:
        return list(csv.reader(fh))


def test_sweep_lambda(tmp_path, capsys):
    assert main(["sweep", "example1_lambda1", "--param", "lambda", "--range=-2:5:0.1",
                 "--out", str(tmp_path), "--jobs", "2"]) == 0
    rows = _sweep_rows(tmp_path / "example1_lambda1_sweep_lambda.csv")
    assert rows[0][:4] == ["lambda", "variant", "verdict", "steady_state_error"]
    body = rows[1:]
    assert [float(r[0]) for r in body] == sorted(float(r[0]) for r in body)
    verdicts = {round(float(r[0]), 6): r[2] for r in body}
    assert verdicts[-1.0] == "unstable" and verdicts[1.0] == "stable"
    # monotone offset growth with the weight over the positive stable region
    pos = [abs(float(r[3])) for r in body if float(r[0]) > 0 and r[2] == "stable"]
    assert all(x < y for x, y in zip(pos, pos[1:]))
    assert {r[3] for r in body if r[2] == "unstable"} == {"inapplicable"}


def test_sweep_horizon_all_stable(tmp_path, capsys):
    assert main(["sweep", "example1_lambda1", "--param", "N", "--range", "4,5,6,7,8",
                 "--out", str(tmp_path)]) == 0
    body = _sweep_rows(tmp_path / "example1_lambda1_sweep_N.csv")[1:]
    assert [r[0] for r in body] == ["4", "5", "6", "7", "8"]
    assert all(r[2] == "stable" for r in body)


def test_sweep_single_point_matches_run_and_analyze(tmp_path, capsys):
    assert main(["sweep", "example1_lambda2", "--param", "lambda", "--range", "2",
                 "--out", str(tmp_path)]) == 0
    row = _sweep_rows(tmp_path / "example1_lambda2_sweep_lambda.csv")[1]
    sc = load_scenario("example1_lambda2")
    an = analyze(sc)
    s = summarize(simulate(sc))
    assert row[2] == an.verdict.label
    assert row[3] == f"{an.total:.15g}"
    assert row[4] == f"{s['max_abs_e_tail']:.15g}"


def test_sweep_empty_range(tmp_path):
    assert main(["sweep", "example1_lambda1", "--param", "lambda", "--range", "3:1:1",
                 "--out", str(tmp_path)]) == 1


# -- plot -------------------------------------------------------------------------

def test_plot_deterministic(tmp_path, capsys):
    main(["run", "example2_noise", "--out", str(tmp_path)])
    csv_path = str(tmp_path / "example2_noise.csv")
    assert main(["plot", csv_path, str(tmp_path / "a.svg"), "--columns", "y_ref,y"]) == 0
    assert main(["plot", csv_path, str(tmp_path / "b.svg"), "--columns", "y_ref,y"]) == 0
    a, b = (tmp_path / "a.svg").read_bytes(), (tmp_path / "b.svg").read_bytes()
    assert a == b and b"<svg" in a
    assert main(["plot", csv_path, str(tmp_path / "e.svg"), "--columns", "e"]) == 0


@pytest.mark.parametrize("text", ["k,y_ref,y,u,du,chi,e\n", "", "k,y\n1,2\n"])
def test_plot_malformed_csv(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    assert main(["plot", str(p), str(tmp_path / "x.svg")]) == 1


def test_plot_unknown_column(tmp_path):
    main(["run", "deadbeat_trivial", "--out", str(tmp_path)])
    assert main(["plot", str(tmp_path / "deadbeat_trivial.csv"), "--columns", "zeta",
                 "--out", str(tmp_path)]) == 1


# -- entry points -----------------------------------------------------------------

def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "gpclab", "analyze", "deadbeat_trivial",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and "verdict: stable" in out.stdout


def test_no_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
