"""Command-line front end.

Exit codes: 0 success, 2 invalid input or failed precondition, 3 internal
consistency failure, 4 the Futaki/yen identity fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from fractions import Fraction

import numpy as np

from . import __version__
from ._exact import frac_str
from .config import ConfigError, ExperimentConfig
from .degeneration import algebraic_ray, futaki_expansion
from .disc_analysis import load_rh_problem, pairing_invariance, rh_solve
from .errors import (ConditioningError, ConsistencyError, ConvexityError, DomainError,
                     EvaluationError, PolytopeError, PreconditionError, UnsupportedInputError)
from .geodesic import crease_images, parallelism_gap, regularity_diagnostics
from .invariants import compare_futaki_yen, kenergy_derivative, yen_invariant
from .svg import line_plot

EXIT_OK, EXIT_INPUT, EXIT_CONSISTENCY, EXIT_IDENTITY = 0, 2, 3, 4
_INPUT_ERRORS = (ConfigError, PolytopeError, PreconditionError, UnsupportedInputError,
                 DomainError, json.JSONDecodeError, KeyError)
_CONSISTENCY_ERRORS = (ConsistencyError, ConvexityError, EvaluationError, ConditioningError)


def thread_count() -> int:
    raw = os.environ.get("TORIC_GEODESIC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"TORIC_GEODESIC_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("TORIC_GEODESIC_THREADS must be at least 1")
    return n


def _pmap(fn, items):
    items = list(items)
    n = min(thread_count(), max(len(items), 1))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


def _fmt(v):
    if isinstance(v, Fraction):
        return frac_str(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_fmt) + "\n"


def _write(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def _num(v: float) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# Commands


def cmd_futaki(conf: ExperimentConfig, out_dir: str, weight_sign: int = 1) -> dict:
    cfg = conf.build_configuration()
    k_range = range(1, conf.k_max + 1) if conf.k_max else None
    res = futaki_expansion(cfg, k_range=k_range, weight_sign=weight_sign)
    report = res.to_dict()
    report["samples"] = [[k, d, w, _fmt(F) if isinstance(F, Fraction) else float(F)]
                         for k, d, w, F in res.samples]
    report["degenerate"] = cfg.degenerate
    _write(out_dir, "futaki.json", _dump(report))
    return report


def cmd_ray(conf: ExperimentConfig, out_dir: str, t_list=None) -> dict:
    cfg = conf.build_configuration()
    ray = conf.build_ray(cfg)
    t_list = [float(t) for t in (t_list if t_list is not None else conf.t_list)]
    w = conf.window

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        _pmap(ray.dual, t_list)  # fill the dual cache
        gaps = parallelism_gap(ray, cfg, t_list, window=w, samples=conf.samples)
        diag = regularity_diagnostics(ray, t_list, window=w, samples=conf.samples)
    messages = sorted({str(c.message) for c in caught})
    for m in messages:
        print(f"warning: {m}", file=sys.stderr)

    rows = ["t,gap,jump,third_sup"]
    for i, t in enumerate(t_list):
        jumps = [j for (tt, _, j) in diag.jump_series if tt == t]
        jump = _num(max(jumps)) if jumps else ""
        rows.append(f"{_num(t)},{_num(gaps.gap[i])},{jump},"
                    f"{_num(diag.third_derivative_sup[i][1])}")
    _write(out_dir, "gap_series.csv", "\n".join(rows) + "\n")

    plots = []
    for t in t_list:
        ys = np.linspace(-w, w + t, 801)
        h = ray.dual(t).value(ys[:, None])
        alg = algebraic_ray(cfg, t).value(ys[:, None])
        series = [("h_t", ys, h), ("h_0,t", ys, alg)]
        for lo, hi, _ in (crease_images(ray, t) if t > 0 else []):
            seg = np.linspace(lo, hi, 50)
            series.append((f"linear segment [{lo:.4g}, {hi:.4g}]", seg,
                           ray.dual(t).value(seg[:, None])))
        name = f"branches_t{t:g}.svg"
        _write(out_dir, name, line_plot(series, title=f"h_t at t = {t:g}", xlabel="y",
                                        ylabel="h"))
        plots.append(name)
    _write(out_dir, "gap.svg", line_plot([("sup |h_t - h_0,t|", t_list, gaps.gap)],
                                         title="parallelism gap", xlabel="t", ylabel="gap"))
    report = {"t": t_list, "gap": gaps.gap, "increments": gaps.increments,
              "jumps": [list(j) for j in diag.jump_series],
              "third_sup": [list(s) for s in diag.third_derivative_sup],
              "second_sup": [list(s) for s in diag.second_derivative_sup],
              "window": w, "edge_warning": gaps.edge_warning, "warnings": messages,
              "plots": plots}
    _write(out_dir, "ray_diagnostics.json", _dump(report))
    return report


def cmd_yen(conf: ExperimentConfig, out_dir: str) -> dict:
    cfg = conf.build_configuration()
    ray = conf.build_ray(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est = yen_invariant(ray, conf.t_max, "symplectic", resolution=conf.grid)
    rows = ["t,dEdt"] + [f"{_num(t)},{_num(v)}" for t, v in est.series]
    _write(out_dir, "yen_series.csv", "\n".join(rows) + "\n")
    report = {"series": [[t, float(v)] for t, v in est.series], "limit": _fmt(est.limit),
              "closed_form": _fmt(est.closed_form), "converged": est.converged}
    if conf.numeric_yen:
        kv = kenergy_derivative(ray, conf.t_max, "complex", eps=conf.eps)
        report["complex"] = {"t": conf.t_max, "value": kv.value, "error": kv.error}
    _write(out_dir, "yen.json", _dump(report))
    return report


def cmd_compare(conf: ExperimentConfig, out_dir: str, weight_sign: int = 1) -> dict:
    cfg = conf.build_configuration()
    ray = conf.build_ray(cfg) if conf.numeric_yen else None
    rep = compare_futaki_yen(cfg, ray, numeric=conf.numeric_yen, t_numeric=conf.t_max,
                             weight_sign=weight_sign, tol=conf.tol)
    report = rep.to_dict()
    _write(out_dir, "compare.json", _dump(report))
    return report


def cmd_rh(problem_path: str, out_dir: str, N: int | None = None) -> dict:
    try:
        prob = load_rh_problem(problem_path)
    except OSError as exc:
        raise ConfigError(f"cannot read problem file: {exc}") from exc
    if N is not None:
        prob = prob.with_truncation(N)
    sol = rh_solve(prob)
    pr = pairing_invariance(sol)
    report = sol.to_dict()
    report["pairing_deviation"] = max(pr.max_imag, pr.max_variation)
    report["n"] = prob.n
    _write(out_dir, "rh.json", _dump(report))
    return report


def cmd_example(conf: ExperimentConfig, out_dir: str) -> dict:
    futaki = cmd_futaki(conf, out_dir)
    compare = cmd_compare(conf, out_dir)
    ray = cmd_ray(conf, out_dir)
    yen = cmd_yen(conf, out_dir)
    summary = {"F0": futaki["F0"], "F1": futaki["F1"], "F2": futaki["F2"],
               "yen_closed": compare["yen_closed"], "pass": compare["pass"],
               "gap": dict(zip(map(str, ray["t"]), ray["gap"])), "yen_limit": yen["limit"]}
    _write(out_dir, "summary.json", _dump(summary))
    return summary


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="toric-geodesic",
                                description="Toric degenerations, geodesic rays and the "
                                            "Futaki/yen comparison.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="experiment JSON file")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--t-max", type=int, help="largest time for t sweeps")
        sp.add_argument("--k-max", type=int, help="largest k for the Hilbert data")
        sp.add_argument("--grid", type=int, help="quadrature resolution")

    common(sub.add_parser("futaki", help="Futaki expansion from lattice counts"))
    sp = sub.add_parser("ray", help="geodesic ray diagnostics and plots")
    common(sp)
    sp.add_argument("--t", type=float, action="append", dest="t_list",
                    help="time to sample (repeatable; overrides the config)")
    common(sub.add_parser("yen", help="K-energy derivative series"))
    sp = sub.add_parser("compare", help="check F1 = -yen / (2 Vol)")
    common(sp)
    sp.add_argument("--debug-flip-weight", action="store_true",
                    help="flip the weight convention (negative control)")
    sp = sub.add_parser("rh", help="linearised Riemann-Hilbert solve")
    sp.add_argument("problem", help="JSON problem file with Fourier coefficients")
    sp.add_argument("--out", default="out")
    sp.add_argument("--grid", type=int, help="truncation degree N")
    common(sub.add_parser("example", help="reproduce the worked example"), config_required=False)
    return p


def _load_config(args) -> ExperimentConfig:
    conf = ExperimentConfig.load(args.config) if args.config else ExperimentConfig.example()
    updates = {}
    if args.out:
        updates["out"] = args.out
    if args.t_max is not None:
        updates["t_max"] = args.t_max
    if args.k_max is not None:
        updates["k_max"] = args.k_max
    if args.grid is not None:
        updates["grid"] = args.grid
    if updates:
        conf = replace(conf, **updates)
    return conf


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        thread_count()
        if args.command == "rh":
            report = cmd_rh(args.problem, args.out, args.grid)
        else:
            conf = _load_config(args)
            out = conf.out if os.path.isabs(conf.out) or args.out else \
                os.path.join(conf.base_dir, conf.out)
            if args.command == "futaki":
                report = cmd_futaki(conf, out)
            elif args.command == "ray":
                report = cmd_ray(conf, out, args.t_list)
            elif args.command == "yen":
                report = cmd_yen(conf, out)
            elif args.command == "compare":
                report = cmd_compare(conf, out, -1 if args.debug_flip_weight else 1)
            else:
                report = cmd_example(conf, out)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _CONSISTENCY_ERRORS as exc:
        print(f"consistency failure: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(_dump(report))
    if args.command in ("compare", "example") and not report["pass"]:
        print("identity F1 = -yen / (2 Vol) FAILED", file=sys.stderr)
        return EXIT_IDENTITY
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
