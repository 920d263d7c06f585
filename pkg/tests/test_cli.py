"""Command-line interface: files, schemas, exit codes, determinism."""

import json

import numpy as np
import pytest

import coxfield as cf
from coxfield.cli import main


HYPER = {"kind": "hyperexp", "weights": [0.5, 0.5], "rates": [2.0, 2.0 / 3.0]}
COX = {"kind": "coxian", "rates": [1.0, 2.0], "continuations": [0.25, 0.0]}


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def load(tmp_path, name):
    return json.loads((tmp_path / name).read_text())


def model_file(tmp_path, **overrides):
    model = {"policy": "jsq", "lambda": 0.75, "d": 2, "B": 6, "service": HYPER}
    model.update(overrides)
    return write(tmp_path / "model.json", model)


# ---------------------------------------------------------------------------
# convert / fit


def test_convert_hyperexp(tmp_path):
    src = write(tmp_path / "dist.json", HYPER)
    assert main(["convert", src, "--out", str(tmp_path)]) == 0
    out = load(tmp_path, "convert.json")
    assert out["class"]["is_member"] and out["class"]["margin"] > 0
    assert out["cdf_max_gap"] < 1e-12
    assert out["moments"]["m1"] == pytest.approx(1.0)
    cox = cf.CoxianDistribution(tuple(out["coxian"]["rates"]),
                                tuple(out["coxian"]["continuations"]))
    assert cf.moments(cox, 2) == pytest.approx(2.5)
    manifest = load(tmp_path, "manifest.json")
    assert manifest["command"] == "convert"
    assert manifest.get("error") is None
    assert "convert.json" in manifest["outputs"]
    assert manifest["wall_clock_s"] >= 0


def test_convert_coxian_reports_membership(tmp_path):
    src = write(tmp_path / "dist.json", COX)
    assert main(["convert", src, "--out", str(tmp_path)]) == 0
    out = load(tmp_path, "convert.json")
    assert out["completion_rates"] == [0.75, 2.0]
    assert not out["class"]["is_member"]


def test_convert_exit_codes(tmp_path):
    assert main(["convert", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["convert", str(bad), "--out", str(tmp_path)]) == 2
    unknown = write(tmp_path / "unk.json", {"kind": "weibull", "shape": 2})
    assert main(["convert", unknown, "--out", str(tmp_path)]) == 2
    dup = write(tmp_path / "dup.json",
                {"kind": "hyperexp", "weights": [0.5, 0.5], "rates": [2.0, 2.0]})
    assert main(["convert", dup, "--out", str(tmp_path)]) == 1
    manifest = load(tmp_path, "manifest.json")
    assert "distinct" in manifest["error"]


def test_fit_round_trip(tmp_path):
    args = ["fit", "--m1", "2.0", "--n2", "2.5", "--n3", "4.2", "--out", str(tmp_path)]
    assert main(args) == 0
    out = load(tmp_path, "fit.json")
    assert out["achieved"]["n2"] == pytest.approx(2.5, rel=1e-10)
    assert out["achieved"]["n3"] == pytest.approx(4.2, rel=1e-10)
    assert out["achieved"]["m1"] == pytest.approx(2.0, rel=1e-10)
    assert out["coxian"]["rates"]


def test_fit_infeasible(tmp_path):
    args = ["fit", "--m1", "1.0", "--n2", "2.5", "--n3", "3.6", "--out", str(tmp_path)]
    assert main(args) == 1
    assert load(tmp_path, "manifest.json")["error"]


# ---------------------------------------------------------------------------
# fixed-point / integrate / simulate


def test_fixed_point_output(tmp_path):
    src = model_file(tmp_path)
    assert main(["fixed-point", src, "--out", str(tmp_path)]) == 0
    out = load(tmp_path, "fixed_point.json")
    assert out["residual"] <= 1e-12
    pi = cf.state_from_dict(out["pi"])
    model = cf.model_from_dict(json.loads((tmp_path / "model.json").read_text()))
    assert np.abs(pi.h - cf.fixed_point(model).pi.h).max() < 1e-12
    assert out["structure"]["phase_residual"] <= 1e-10
    assert out["structure"]["generator_residual"] <= 1e-10
    first = (tmp_path / "fixed_point.json").read_bytes()
    assert main(["fixed-point", src, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "fixed_point.json").read_bytes() == first


def test_integrate_csv(tmp_path):
    src = model_file(tmp_path, B=4)
    args = ["integrate", src, "--t-final", "5", "--samples", "4", "--out", str(tmp_path)]
    assert main(args) == 0
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t," + ",".join(
        f"h_{l}_{i}" for l in range(1, 5) for i in (1, 2)
    )
    assert len(lines) == 6
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    assert rows[0, 0] == 0.0 and np.all(rows[0, 1:] == 0.0)
    assert rows[-1, 0] == 5.0
    model = cf.model_from_dict(json.loads((tmp_path / "model.json").read_text()))
    want = cf.integrate(model, cf.zero_state(4, 2), 5.0, samples=4).final
    assert np.abs(rows[-1, 1:].reshape(4, 2) - want).max() < 1e-12


def test_integrate_inits(tmp_path):
    src = model_file(tmp_path, B=3)
    args = ["integrate", src, "--t-final", "0", "--init", "full", "--out", str(tmp_path)]
    assert main(args) == 0
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert len(lines) == 2
    assert [float(v) for v in lines[1].split(",")] == [0.0] + [1.0] * 6
    state = write(tmp_path / "state.json", cf.state_to_dict(cf.full_state(3, 2)))
    args = ["integrate", src, "--t-final", "0", "--init", state, "--out", str(tmp_path)]
    assert main(args) == 0
    assert (tmp_path / "trajectory.csv").read_text().splitlines()[1] == lines[1]
    # shape mismatch between state file and model
    tall = write(tmp_path / "tall.json", cf.state_to_dict(cf.full_state(5, 2)))
    assert main(["integrate", src, "--t-final", "1", "--init", tall,
                 "--out", str(tmp_path)]) == 2


def test_simulate_output(tmp_path):
    config = {
        "model": {"policy": "jsq", "lambda": 0.6, "d": 2, "B": 4, "service": HYPER},
        "N": 25, "horizon": 50.0, "warmup": 10.0, "replications": 2, "seed": 0,
    }
    src = write(tmp_path / "sim.json", config)
    assert main(["simulate", src, "--out", str(tmp_path)]) == 0
    out = load(tmp_path, "simulate.json")
    assert np.asarray(out["h_bar"]).shape == (4, 2)
    assert out["replications"] == 2
    assert out["pi_residual"] <= 1e-12
    assert out["distance_to_pi"] >= 0
    assert out["excess_entries"] <= out["total_entries"] == 8
    first = (tmp_path / "simulate.json").read_bytes()
    assert main(["simulate", src, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "simulate.json").read_bytes() == first
    missing = write(tmp_path / "m.json", {"model": config["model"], "N": 5})
    assert main(["simulate", missing, "--out", str(tmp_path)]) == 2


# ---------------------------------------------------------------------------
# verify


def test_verify_order_oracle(tmp_path):
    args = ["verify", "order-oracle", "--count", "60", "--B", "4", "--phases", "2",
            "--out", str(tmp_path), "--seed", "5"]
    assert main(args) == 0
    out = load(tmp_path, "verify_order_oracle.json")
    assert out["pass"] is True
    assert out["agreements"] == out["count"] == 60
    assert out["disagreements"] == []


def test_verify_monotone(tmp_path):
    src = model_file(tmp_path, B=4, service={"kind": "coxian", "rates": [1.0],
                                             "continuations": [0.0]})
    args = ["verify", "monotone", "--model", src, "--count", "3", "--T", "5",
            "--out", str(tmp_path)]
    assert main(args) == 0
    out = load(tmp_path, "verify_monotone.json")
    assert out["pass"] is True and len(out["cases"]) == 3


def test_verify_needs_model(tmp_path):
    assert main(["verify", "monotone", "--out", str(tmp_path)]) == 2
    assert "model" in load(tmp_path, "manifest.json")["error"]
