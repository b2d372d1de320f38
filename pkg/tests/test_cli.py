import json
import os
import subprocess
import sys

import numpy as np
import pytest

from toric_geodesic import cli
from toric_geodesic.config import ConfigError, ExperimentConfig
from toric_geodesic.disc_analysis import RHProblem, random_rh_problem
from toric_geodesic.errors import ConsistencyError
from toric_geodesic.polytope import Polytope

from conftest import hinge

FAST = {"samples": 801, "t_max": 6, "grid": 32}


def write_config(tmp_path, name="exp.json", **kw):
    conf = ExperimentConfig.example(**{**FAST, **kw})
    path = tmp_path / name
    path.write_text(conf.to_json())
    return str(path)


def custom_config(tmp_path, P, f, K, name="exp.json"):
    conf = ExperimentConfig(polytope=P.to_dict(), direction=f.to_dict(), K=str(K), **FAST)
    path = tmp_path / name
    path.write_text(conf.to_json())
    return str(path)


def run(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# futaki

def test_futaki_example(tmp_path, capsys):
    code, out, _ = run(["futaki", "--config", write_config(tmp_path), "--out",
                        str(tmp_path / "o")], capsys)
    assert code == 0
    rep = read_json(tmp_path / "o" / "futaki.json")
    assert rep["F1"] == "-1/8" and rep["F0"] == "3/4" and rep["method"] == "exact"
    assert json.loads(out)["F1"] == "-1/8"
    assert rep["samples"][:3] == [[1, 3, 2, "2/3"], [2, 5, 7, "7/10"], [3, 7, 15, "5/7"]]


def test_futaki_product(tmp_path, capsys):
    from toric_geodesic.polytope import PiecewiseLinearFn
    zero = PiecewiseLinearFn((((0,), 0),))
    path = custom_config(tmp_path, Polytope.interval(0, 2), zero, 1)
    assert run(["futaki", "--config", path, "--out", str(tmp_path)], capsys)[0] == 0
    assert read_json(tmp_path / "futaki.json")["F1"] == "0"


def test_futaki_non_integral(tmp_path, capsys):
    from fractions import Fraction
    path = custom_config(tmp_path, Polytope.interval(0, 1), hinge(Fraction(1, 2)), 1)
    assert run(["futaki", "--config", path, "--out", str(tmp_path)], capsys)[0] == 0
    assert read_json(tmp_path / "futaki.json")["method"] == "fit"


# ---------------------------------------------------------------------------
# ray

def test_ray_three_times(tmp_path, capsys):
    out = tmp_path / "o"
    code, _, err = run(["ray", "--config", write_config(tmp_path), "--out", str(out)], capsys)
    assert code == 0 and "warning" not in err
    names = sorted(os.listdir(out))
    assert [n for n in names if n.startswith("branches")] == \
        ["branches_t0.svg", "branches_t10.svg", "branches_t5.svg"]
    rows = (out / "gap_series.csv").read_text().splitlines()
    assert rows[0] == "t,gap,jump,third_sup" and len(rows) == 4
    gaps = [float(r.split(",")[1]) for r in rows[1:]]
    assert abs(gaps[2] - gaps[1]) < 1e-2  # stabilized
    assert "<!-- data h_t:" in (out / "branches_t5.svg").read_text()


def test_ray_t0_has_no_jumps(tmp_path, capsys):
    out = tmp_path / "o"
    assert run(["ray", "--config", write_config(tmp_path), "--out", str(out), "--t", "0"],
               capsys)[0] == 0
    row = (out / "gap_series.csv").read_text().splitlines()[1].split(",")
    assert row[2] == ""
    assert read_json(out / "ray_diagnostics.json")["jumps"] == []
    assert "linear segment" not in (out / "branches_t0.svg").read_text()


def test_ray_small_window_warns(tmp_path, capsys):
    path = write_config(tmp_path, window=0.1)
    code, _, err = run(["ray", "--config", path, "--out", str(tmp_path / "o"), "--t", "5"],
                       capsys)
    assert code == 0 and "window" in err


# ---------------------------------------------------------------------------
# yen and compare

def test_yen(tmp_path, capsys):
    assert run(["yen", "--config", write_config(tmp_path), "--out", str(tmp_path)], capsys)[0] == 0
    rep = read_json(tmp_path / "yen.json")
    assert rep["closed_form"] == "1/2"
    assert abs(rep["series"][-1][1] - 0.5) < 1e-6


def test_compare_example(tmp_path, capsys):
    code, out, _ = run(["compare", "--config", write_config(tmp_path), "--out", str(tmp_path)],
                       capsys)
    assert code == 0
    rep = read_json(tmp_path / "compare.json")
    assert rep["pass"] and rep["yen_closed"] == "1/2"


def test_compare_interval_three(tmp_path, capsys):
    path = custom_config(tmp_path, Polytope.interval(0, 3), hinge(2), 1)
    assert run(["compare", "--config", path, "--out", str(tmp_path)], capsys)[0] == 0
    rep = read_json(tmp_path / "compare.json")
    assert rep["yen_closed"] == "2/3" and rep["F1"] == "-1/9"


def test_compare_flipped_weight_exits_4(tmp_path, capsys):
    code, _, err = run(["compare", "--config", write_config(tmp_path), "--out", str(tmp_path),
                        "--debug-flip-weight"], capsys)
    assert code == cli.EXIT_IDENTITY and "FAILED" in err


# ---------------------------------------------------------------------------
# rh

def test_rh_trivial(tmp_path, capsys):
    path = tmp_path / "rh.json"
    path.write_text(json.dumps(RHProblem(1, {}, {0: [[1.0]]}, N=8).to_dict()))
    assert run(["rh", str(path), "--out", str(tmp_path)], capsys)[0] == 0
    rep = read_json(tmp_path / "rh.json")
    assert rep["kernel_dim"] == 2 and rep["pairing_deviation"] < 1e-8


def test_rh_random_index(tmp_path, capsys):
    path = tmp_path / "p.json"
    path.write_text(json.dumps(random_rh_problem(2, np.random.default_rng(3)).to_dict()))
    assert run(["rh", str(path), "--out", str(tmp_path)], capsys)[0] == 0
    assert read_json(tmp_path / "rh.json")["index"] == 4


def test_rh_indefinite_exits_2(tmp_path, capsys):
    path = tmp_path / "p.json"
    path.write_text(json.dumps(RHProblem(1, {}, {0: [[-1.0]]}, N=8).to_dict()))
    code, _, err = run(["rh", str(path), "--out", str(tmp_path)], capsys)
    assert code == cli.EXIT_INPUT and "positive definite" in err


def test_rh_missing_file_exits_2(tmp_path, capsys):
    assert run(["rh", str(tmp_path / "nope.json"), "--out", str(tmp_path)], capsys)[0] == 2


# ---------------------------------------------------------------------------
# failure paths and plumbing

@pytest.mark.parametrize("text", ["{", "[]", '{"polytope": {}}',
                                  '{"polytope": {}, "direction": {}, "bogus": 1}',
                                  '{"polytope": "missing.json", "direction": {}}'])
def test_invalid_config_exits_2(tmp_path, capsys, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert run(["futaki", "--config", str(path), "--out", str(tmp_path)], capsys)[0] == 2


def test_out_of_range_knob_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    d = ExperimentConfig.example().to_dict()
    d["grid"] = 2
    path.write_text(json.dumps(d))
    assert run(["ray", "--config", str(path)], capsys)[0] == 2


def test_bad_polytope_exits_2(tmp_path, capsys):
    d = ExperimentConfig.example().to_dict()
    d["polytope"] = {"dim": 1, "facets": [{"normal": [1], "offset": "0"}]}  # unbounded
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    assert run(["futaki", "--config", str(path), "--out", str(tmp_path)], capsys)[0] == 2


def test_consistency_failure_exits_3(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise ConsistencyError("lattice count disagrees with interpolation")
    monkeypatch.setattr(cli, "futaki_expansion", boom)
    code, _, err = run(["futaki", "--config", write_config(tmp_path), "--out", str(tmp_path)],
                       capsys)
    assert code == cli.EXIT_CONSISTENCY and "consistency" in err


def test_threads_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("TORIC_GEODESIC_THREADS", "x")
    assert run(["futaki", "--config", write_config(tmp_path), "--out", str(tmp_path)],
               capsys)[0] == 2
    monkeypatch.setenv("TORIC_GEODESIC_THREADS", "4")
    out4 = tmp_path / "t4"
    assert run(["ray", "--config", write_config(tmp_path), "--out", str(out4)], capsys)[0] == 0
    monkeypatch.setenv("TORIC_GEODESIC_THREADS", "1")
    out1 = tmp_path / "t1"
    assert run(["ray", "--config", write_config(tmp_path), "--out", str(out1)], capsys)[0] == 0
    for name in os.listdir(out1):
        assert (out1 / name).read_bytes() == (out4 / name).read_bytes()


def test_example_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["example", "--out", str(a)], capsys)[0] == 0
    assert run(["example", "--out", str(b)], capsys)[0] == 0
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    assert {"summary.json", "futaki.json", "compare.json", "gap_series.csv",
            "yen.json", "gap.svg"} <= set(names)
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    summary = read_json(a / "summary.json")
    assert summary["F1"] == "-1/8" and summary["pass"]


def test_relative_out_resolves_against_config(tmp_path, capsys):
    sub = tmp_path / "cfg"
    sub.mkdir()
    path = write_config(sub, out="results")
    assert run(["futaki", "--config", path], capsys)[0] == 0
    assert (sub / "results" / "futaki.json").exists()


def test_config_roundtrip(tmp_path):
    conf = ExperimentConfig.example(window=3.5, t_list=[1.0, 2.0], k_max=20, numeric_yen=True)
    assert ExperimentConfig.from_json(conf.to_json()) == conf
    assert ExperimentConfig.from_json(conf.to_json()).to_json() == conf.to_json()
    with pytest.raises(ConfigError):
        ExperimentConfig.example(initial="flat")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "toric_geodesic", "futaki", "--config",
                           write_config(tmp_path), "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["F1"] == "-1/8"


CONFIGS = os.path.join(os.path.dirname(__file__), "..", "scripts", "configs")


def test_shipped_configs(tmp_path, capsys):
    for name in ("example.json", "interval3.json"):
        conf = ExperimentConfig.load(os.path.join(CONFIGS, name))
        assert ExperimentConfig.from_json(conf.to_json()) == conf
        assert run(["compare", "--config", os.path.join(CONFIGS, name), "--out",
                    str(tmp_path / name)], capsys)[0] == 0
    for name, dim in (("rh_trivial.json", 2), ("rh_random_n2.json", 4)):
        assert run(["rh", os.path.join(CONFIGS, name), "--out", str(tmp_path)], capsys)[0] == 0
        assert read_json(tmp_path / "rh.json")["kernel_dim"] == dim
