import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fobs import expr as ex
from fobs.cli import main
from fobs.cstr import EMPTY_REACTOR, CstrParams, analytic_design, steady_state
from fobs.io import (
    SpecError,
    cstr_spec,
    load_json,
    load_system,
    revalidate_report,
    save_json,
    system_from_dict,
    system_to_dict,
)
from fobs.linear import BetaCoefficients
from fobs.model import LinearSystem
from fobs.nonlinear import build_T_nonlinear, sample_box
from fobs.spectrum import poly_from_eigenvalues


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    toy = {"kind": "linear", "F": [[0.6, 0.2], [-0.1, 0.7]], "H": [[1.0, 2.0]], "q": [1.0, 2.0]}
    diag = {"kind": "linear", "F": [[0.8, 0.0], [0.0, 0.5]], "H": [[1.0, 0.0]], "q": [0.0, 1.0]}
    P = CstrParams()
    ref = steady_state(P)
    d = analytic_design(P)
    return {
        "toy": write(tmp_path / "toy.json", toy),
        "diag": write(tmp_path / "diag.json", diag),
        "cstr": write(tmp_path / "cstr.json", cstr_spec(P, ref)),
        "beta": write(tmp_path / "beta.json", {"beta": d.beta.beta.tolist()}),
        "alpha1": d.alpha1,
        "x0": ",".join(repr(float(v)) for v in EMPTY_REACTOR - ref.as_array()),
        "dir": tmp_path,
    }


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_design_linear_feasible(files):
    out = files["dir"] / "r.json"
    assert main(["design-linear", "--system", files["toy"], "--eigenvalues", "0.5",
                 "--order", "1", "--out", str(out)]) == 0
    rep = load_json(out)
    assert rep["feasible"] and rep["D"] == [[pytest.approx(1.0)]]
    assert revalidate_report(rep, load_system(files["toy"]))


def test_design_linear_infeasible_writes_report(files):
    out = files["dir"] / "r.json"
    assert main(["design-linear", "--system", files["diag"], "--eigenvalues", "0.7",
                 "--order", "1", "--out", str(out)]) == 2
    rep = load_json(out)
    assert not rep["feasible"]
    assert rep["residuals"]["feasibility"] == pytest.approx(0.2, abs=1e-12)


def test_design_linear_strict_span(files):
    out = files["dir"] / "r.json"
    assert main(["design-linear", "--system", files["toy"], "--eigenvalues", "0.3,0.2",
                 "--order", "2", "--strict-span", "--out", str(out)]) == 0
    rep = load_json(out)
    assert rep["D"] == [[0.0]] and rep["diagnostics"]["strict_span"]


@pytest.mark.parametrize(
    "argv",
    [
        ["design-linear", "--system", "{toy}", "--eigenvalues", "0.5,0.4", "--order", "1"],
        ["design-linear", "--system", "{toy}", "--eigenvalues", "0.3+0.4i", "--order", "1"],
        ["design-linear", "--system", "missing.json", "--eigenvalues", "0.5", "--order", "1"],
        ["design-linear", "--system", "{cstr}", "--eigenvalues", "0.5", "--order", "1"],
        ["verify-nonlinear", "--system", "{cstr}", "--eigenvalues", "0.5", "--order", "1"],
        ["simulate", "--system", "{toy}", "--observer", "{toy}", "--x0", "1", "--consistent"],
        ["obs-index"],
        ["no-such-command"],
    ],
)
def test_input_errors_exit_1(files, argv):
    argv = [a.format(**files) for a in argv] + ["--out", str(files["dir"] / "o")]
    if argv[0] == "obs-index" or argv[0] == "no-such-command":
        argv = argv[:1]
    assert main(argv) == 1


def test_malformed_spec(tmp_path):
    bad = write(tmp_path / "bad.json", {"kind": "linear", "F": [[1, 0], [0, 1]], "H": [[1, 0, 0]], "q": [1, 0]})
    with pytest.raises(SpecError):
        load_system(bad)
    (tmp_path / "broken.json").write_text("{\n  nope")
    with pytest.raises(SpecError, match="line 2"):
        load_json(tmp_path / "broken.json")


def test_verify_nonlinear_supplied_beta(files):
    out = files["dir"] / "nl.json"
    eig = repr(-files["alpha1"])
    assert main(["verify-nonlinear", "--system", files["cstr"], "--eigenvalues", eig, "--order", "1",
                 "--beta", files["beta"], "--samples", "200", "--out", str(out)]) == 0
    rep = load_json(out)
    assert rep["feasible"]
    assert rep["residuals"]["condition_max"] <= 1e-8 * rep["residuals"]["condition_scale"]
    assert rep["diagnostics"]["label"] == "verified on domain_box only"
    assert len(rep["T"]) == 1 and "x3" in rep["T"][0]


@pytest.mark.filterwarnings("ignore::fobs.nonlinear.DegenerateFitWarning")
def test_verify_nonlinear_fit(files):
    out = files["dir"] / "fit.json"
    eig = repr(-files["alpha1"])
    assert main(["verify-nonlinear", "--system", files["cstr"], "--eigenvalues", eig, "--order", "1",
                 "--fit", "--samples", "200", "--seed", "3", "--out", str(out)]) == 0
    rep = load_json(out)
    assert rep["residuals"]["fit_rank"] == 3
    assert rep["residuals"]["validation"] <= 1e-6 * max(1.0, rep["residuals"]["condition_scale"])


def test_seed_from_environment(files, monkeypatch):
    args = ["verify-nonlinear", "--system", files["cstr"], "--eigenvalues", "0.9", "--order", "1",
            "--beta", files["beta"], "--samples", "50"]
    a, b, c = (files["dir"] / n for n in "abc")
    monkeypatch.setenv("FOBS_SEED", "17")
    main(args + ["--out", str(a)])
    monkeypatch.delenv("FOBS_SEED")
    main(args + ["--seed", "17", "--out", str(b)])
    main(args + ["--seed", "18", "--out", str(c)])
    ra, rb, rc = (load_json(p)["residuals"] for p in (a, b, c))
    assert ra == rb and ra != rc
    monkeypatch.setenv("FOBS_SEED", "seventeen")
    assert main(args + ["--out", str(a)]) == 1


def test_simulate_linear_consistent(files):
    rep, out = files["dir"] / "r.json", files["dir"] / "t.csv"
    main(["design-linear", "--system", files["toy"], "--eigenvalues", "0.3,0.2", "--order", "2",
          "--out", str(rep)])
    assert main(["simulate", "--system", files["toy"], "--observer", str(rep), "--x0", "1,-2",
                 "--consistent", "--steps", "50", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 51
    assert max(abs(float(r["err"])) for r in rows) <= 1e-9
    assert main(["simulate", "--system", files["toy"], "--observer", str(rep), "--x0", "1,2,3",
                 "--consistent", "--out", str(out)]) == 1


def test_simulate_cstr_init_error(files):
    rep, out = files["dir"] / "nl.json", files["dir"] / "t.csv"
    eig = repr(-files["alpha1"])
    main(["verify-nonlinear", "--system", files["cstr"], "--eigenvalues", eig, "--order", "1",
          "--beta", files["beta"], "--samples", "20", "--out", str(rep)])
    assert main(["simulate", "--system", files["cstr"], "--observer", str(rep), "--x0=" + files["x0"],
                 "--init-error", "1", "--steps", "100", "--out", str(out)]) == 0
    err = np.array([float(r["err"]) for r in read_csv(out)])
    np.testing.assert_allclose(err, (-files["alpha1"]) ** np.arange(101), atol=1e-8)


def test_cstr_command(files):
    out = files["dir"] / "cstr.csv"
    assert main(["cstr", "--steps", "50", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 51
    assert list(rows[0])[:5] == ["k", "C_A", "C_B", "theta", "theta_j"]
    assert float(rows[0]["err"]) == pytest.approx(1.0)
    assert float(rows[0]["C_A"]) == pytest.approx(0.0, abs=1e-12)


def test_obs_index(files, capsys):
    assert main(["obs-index", "--system", files["toy"]]) == 0
    assert capsys.readouterr().out.strip() == "2"
    assert main(["obs-index", "--system", files["diag"]]) == 0
    assert capsys.readouterr().out.strip() == "unobservable"


def test_linear_spec_round_trip(rng):
    sys_ = LinearSystem(rng.standard_normal((3, 3)), rng.standard_normal((2, 3)), rng.standard_normal(3))
    back = system_from_dict(json.loads(json.dumps(system_to_dict(sys_))))
    for m in "FHq":
        np.testing.assert_array_equal(getattr(back, m), getattr(sys_, m))


def test_nonlinear_spec_round_trip(tmp_path):
    spec = cstr_spec()
    model = system_from_dict(spec)
    save_json(tmp_path / "s.json", system_to_dict(model))
    again = load_system(tmp_path / "s.json")
    assert again.trees == model.trees and again.params == model.params


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "fobs", "--help"], capture_output=True, text=True)
    assert done.returncode == 0
    assert "design-linear" in done.stdout


def test_transformation_expressions_match_callable():
    spec = {
        "kind": "nonlinear", "n": 2, "p": 1, "params": {"a": 0.5},
        "F": ["0.6*x1 + x2^2", "a*x2 - x1*x2"], "H": ["x2"], "q": "x1",
        "domain_box": {"lower": [-1, -1], "upper": [1, 1]},
    }
    model = system_from_dict(spec)
    sys_ = model.system()
    cp = poly_from_eigenvalues([0.2, -0.4])
    beta = BetaCoefficients([[0.3], [-1.2], [0.7]])
    T = build_T_nonlinear(sys_, cp, beta)
    exprs = [ex.compile_expr(ex.parse(t, 2, {"a"}), model.params)
             for t in model.transformation_expressions(cp, beta)]
    for x in sample_box(sys_.domain_box, 50, 0).points:
        np.testing.assert_allclose([f(x) for f in exprs], T(x), rtol=1e-13, atol=1e-14)
