"""Experiment runner: declarative JSON configs drive (method x size x seed)
sweeps with per-cell results, resumable manifests, and report emission.

Verbs: ``run`` executes a config, ``oracle`` exposes the exact checkers,
``report`` turns a finished run directory into figure-ready CSV series.
Exit codes: 0 success, 2 config error, 3 runtime error, 4 cap violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np

from . import baselines, metrics
from .engine import EngineConfig, Trajectory, run as engine_run
from .errors import CapExceededError, ConfigError
from .ising import (IsingProblem, brute_force, brute_force_constrained,
                    evaluate_cost_batch, gen_3regular, gen_portfolio, gen_ring,
                    gen_sk, load_problem, spectrum_histogram)
from .samplers import child_seed

FAMILIES = ("sk", "ring", "3regular", "portfolio")
ENGINE_KEYS = {"selection_source", "decision_source", "m", "k",
               "filter_infeasible", "brute_force_threshold", "grid_g",
               "grid_b", "chi_max"}
METHOD_KINDS = {
    "engine": ENGINE_KEYS,
    "classical-greedy": set(),
    "sdp": set(),
    "annealing": {"sweeps", "t_start", "t_end"},
    "best-random": {"m"},
}


def _fail(path: str, msg: str) -> None:
    raise ConfigError(f"{path}: {msg}")


def validate_config(doc: dict) -> dict:
    """Schema-check a config document; unknown keys anywhere are rejected."""
    if not isinstance(doc, dict):
        _fail("$", "config must be a JSON object")
    allowed = {"experiment", "family", "sizes", "seeds", "methods", "portfolio",
               "exact_ratio_cap"}
    for key in doc:
        if key not in allowed:
            _fail(f"$.{key}", "unknown key")
    for key in ("experiment", "family", "sizes", "seeds", "methods"):
        if key not in doc:
            _fail(f"$.{key}", "missing required key")
    if not isinstance(doc["experiment"], str) or not doc["experiment"]:
        _fail("$.experiment", "must be a non-empty string")
    if doc["family"] not in FAMILIES:
        _fail("$.family", f"must be one of {FAMILIES}")
    sizes = doc["sizes"]
    if not isinstance(sizes, list) or not sizes or \
            any(not isinstance(s, int) or s < 1 for s in sizes):
        _fail("$.sizes", "must be a non-empty list of positive integers")
    seeds = doc["seeds"]
    if not isinstance(seeds, dict) or set(seeds) != {"start", "count"} or \
            not all(isinstance(seeds[k], int) for k in ("start", "count")) or \
            seeds["count"] < 1:
        _fail("$.seeds", 'must be {"start": int, "count": int >= 1}')
    methods = doc["methods"]
    if not isinstance(methods, list) or not methods:
        _fail("$.methods", "must be a non-empty list")
    names = set()
    for idx, m in enumerate(methods):
        where = f"$.methods[{idx}]"
        if not isinstance(m, dict):
            _fail(where, "must be an object")
        if "name" not in m or "kind" not in m:
            _fail(where, "needs 'name' and 'kind'")
        if m["kind"] not in METHOD_KINDS:
            _fail(f"{where}.kind", f"must be one of {sorted(METHOD_KINDS)}")
        extra = set(m) - {"name", "kind"} - METHOD_KINDS[m["kind"]]
        if extra:
            _fail(f"{where}.{sorted(extra)[0]}", "unknown key for this kind")
        if m["name"] in names:
            _fail(f"{where}.name", "duplicate method name")
        names.add(m["name"])
    if "portfolio" in doc:
        extra = set(doc["portfolio"]) - {"density", "constraint_tightness"}
        if extra:
            _fail(f"$.portfolio.{sorted(extra)[0]}", "unknown key")
    if "exact_ratio_cap" in doc and (not isinstance(doc["exact_ratio_cap"], int)
                                     or doc["exact_ratio_cap"] < 2):
        _fail("$.exact_ratio_cap", "must be an integer >= 2")
    return doc


def _make_instance(family: str, n: int, seed: int, portfolio_opts: dict):
    if family == "sk":
        return gen_sk(n, seed), []
    if family == "ring":
        return gen_ring(n, seed), []
    if family == "3regular":
        return gen_3regular(n, seed), []
    problem, cons = gen_portfolio(n, seed, **portfolio_opts)
    return problem, cons


def _ratio_for(family: str, problem, constraints, cost: float, cap: int):
    n = problem.n_total
    if n <= cap:
        bf = brute_force_constrained(problem, constraints, cap=cap) \
            if constraints else brute_force(problem, cap=cap)
        return metrics.estimate_ratio(cost, n, extrema=(bf.c_min, bf.c_max))
    if family == "sk":
        return metrics.estimate_ratio(cost, n, family="sk")
    if family == "ring":
        return metrics.estimate_ratio(cost, n, family="ring")
    return None


def run_cell(family: str, n: int, seed: int, method: dict, portfolio_opts: dict,
             exact_cap: int) -> dict:
    """Execute one (method, size, seed) cell; returns the run record plus an
    optional trajectory stream."""
    problem, constraints = _make_instance(family, n, seed, portfolio_opts)
    kind = method["kind"]
    t0 = time.perf_counter()
    trajectory_text = None
    extra: dict = {}
    if kind == "engine":
        opts = {k: v for k, v in method.items() if k in ENGINE_KEYS}
        proxy = family if family in ("sk", "ring") else "none"
        cfg = EngineConfig(seed=child_seed(seed, n, 1), proxy=proxy, **opts)
        traj = engine_run(problem, constraints, cfg)
        cost = traj.final_cost
        trajectory_text = traj.to_jsonl()
    elif kind == "classical-greedy":
        cost, _ = baselines.classical_greedy_direct(problem, seed=child_seed(seed, n, 2))
    elif kind == "sdp":
        cost, _ = baselines.sdp_spectral_round(problem)
    elif kind == "annealing":
        sched = baselines.AnnealSchedule(method.get("t_start"),
                                         method.get("t_end", 0.1))
        res = baselines.simulated_annealing(problem, method.get("sweeps", 1000),
                                            sched, seed=child_seed(seed, n, 3))
        cost = res.best_cost
    elif kind == "best-random":
        m = int(method.get("m", 1000))
        rng = np.random.default_rng(child_seed(seed, n, 4))
        bits = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
        cost = float(np.min(evaluate_cost_batch(problem, bits)))
        extra["m"] = m
        if family == "sk":
            extra["expected_best_cost"] = baselines.best_random_expected_cost(n, m)
    else:
        raise ConfigError(f"unknown method kind {kind!r}")
    wall = time.perf_counter() - t0
    est = _ratio_for(family, problem, constraints, cost, exact_cap)
    return {
        "method": method["name"], "family": family, "n": n, "seed": seed,
        "cost": cost, "r": None if est is None else est.value,
        "mode": "none" if est is None else est.mode,
        "clipped": False if est is None else est.clipped,
        "wall_clock": wall, "extra": extra,
        "_trajectory": trajectory_text,
    }


def _cell_key(method_name: str, n: int, seed: int) -> str:
    return f"{method_name}__n{n}__s{seed}"


def _run_star(args):
    return run_cell(*args)


def cmd_run(args) -> int:
    with open(args.config) as fh:
        doc = validate_config(json.load(fh))
    out = Path(args.out)
    manifest_path = out / "manifest.json"
    if manifest_path.exists() and not args.resume:
        print(f"error: {manifest_path} exists; pass --resume to continue it",
              file=sys.stderr)
        return 2
    (out / "runs").mkdir(parents=True, exist_ok=True)
    (out / "trajectories").mkdir(parents=True, exist_ok=True)
    manifest = {"experiment": doc["experiment"], "cells": {}}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
    portfolio_opts = doc.get("portfolio", {})
    exact_cap = doc.get("exact_ratio_cap", 24)
    seeds = range(doc["seeds"]["start"] + args.seed_offset,
                  doc["seeds"]["start"] + args.seed_offset + doc["seeds"]["count"])
    cells = []
    for method in doc["methods"]:
        for n in doc["sizes"]:
            for seed in seeds:
                key = _cell_key(method["name"], n, seed)
                if key in manifest["cells"]:
                    continue
                cells.append((key, (doc["family"], n, seed, method,
                                    portfolio_opts, exact_cap)))

    def finish(key: str, record: dict) -> None:
        traj = record.pop("_trajectory", None)
        if traj is not None:
            (out / "trajectories" / f"{key}.jsonl").write_text(traj)
        run_file = f"runs/{key}.json"
        (out / run_file).write_text(json.dumps(record, indent=1) + "\n")
        manifest["cells"][key] = run_file
        manifest_path.write_text(json.dumps(manifest, indent=1) + "\n")

    if args.jobs <= 1:
        for key, cell_args in cells:
            finish(key, run_cell(*cell_args))
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {pool.submit(_run_star, cell_args): key
                       for key, cell_args in cells}
            for fut in as_completed(futures):
                finish(futures[fut], fut.result())

    records = []
    for key, run_file in sorted(manifest["cells"].items()):
        rec = json.loads((out / run_file).read_text())
        records.append(rec)
    metrics.write_runs_json(records, out / "results.json")
    rows = metrics.aggregate(records)
    metrics.write_aggregate_csv(rows, out / "aggregate.csv")
    print(f"completed {len(records)} cells -> {out}")
    return 0


# ---------------------------------------------------------------------------
# oracle verbs
# ---------------------------------------------------------------------------

def cmd_oracle(args) -> int:
    if args.oracle_cmd == "brute-force":
        problem, constraints = load_problem(args.problem)
        bf = brute_force_constrained(problem, constraints, cap=args.cap) \
            if constraints else brute_force(problem, cap=args.cap)
        print(json.dumps({"c_min": bf.c_min, "c_max": bf.c_max,
                          "argmin_count": bf.argmin_count,
                          "argmin": bf.argmin.to01()}))
    elif args.oracle_cmd == "spectrum":
        problem, _ = load_problem(args.problem)
        hist = spectrum_histogram(problem, cap=args.cap)
        print(json.dumps({"spectrum": {str(k): v for k, v in sorted(hist.items())}}))
    elif args.oracle_cmd == "decompose-check":
        from .gates import (circuit_unitary, decompose_rzz, decompose_rzz_swap,
                            phase_aligned_distance, rzz_matrix, SWAP_MAT)
        rng = np.random.default_rng(args.seed)
        worst = 0.0
        for _ in range(args.count):
            if args.kind == "rzz":
                phi = float(rng.uniform(-math.pi, math.pi))
                d = phase_aligned_distance(circuit_unitary(decompose_rzz(phi)),
                                           rzz_matrix(phi))
            else:
                phi = float(rng.uniform(0.0, math.pi / 2))
                d = phase_aligned_distance(
                    circuit_unitary(decompose_rzz_swap(phi)),
                    SWAP_MAT @ rzz_matrix(phi))
            worst = max(worst, d)
        print(json.dumps({"kind": args.kind, "count": args.count,
                          "max_deviation": worst}))
    elif args.oracle_cmd == "mps-diff":
        from .gates import apply_circuit
        from .mps import build_truncated_circuit, run_truncated_qaoa_mps
        from .mps import mps_init_plus, apply_2q_adjacent, apply_1q, _ansatz_slots
        from .gates import SWAP_MAT, rzz_matrix
        from .samplers import QaoaAngles
        problem = gen_sk(args.n, args.seed)
        angles = QaoaAngles((0.8,), (0.3,))
        embed = child_seed(args.seed, 1)
        slots, _, _ = _ansatz_slots(problem, embed)
        state = mps_init_plus(args.n)
        for b, w in slots:
            op = SWAP_MAT if w is None else SWAP_MAT @ rzz_matrix(-1.6 * w)
            apply_2q_adjacent(state, b, op)
        mixer = np.array([[math.cos(0.3), 1j * math.sin(0.3)],
                          [1j * math.sin(0.3), math.cos(0.3)]])
        for s in range(args.n):
            apply_1q(state, s, mixer)
        circ, _ = build_truncated_circuit(problem, angles, embed)
        e0 = np.zeros(1 << args.n, dtype=complex)
        e0[0] = 1.0
        dense = apply_circuit(e0, circ)
        vec = state.to_statevector()
        tr = np.vdot(dense, vec)
        phase = tr / abs(tr)
        dev = float(np.max(np.abs(vec - phase * dense)))
        print(json.dumps({"n": args.n, "max_amplitude_deviation": dev}))
    else:
        raise ConfigError(f"unknown oracle subcommand {args.oracle_cmd!r}")
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(args) -> int:
    out = Path(args.results)
    manifest_path = out / "manifest.json"
    if not manifest_path.exists():
        print(f"error: no manifest found in {out} (no runs found)", file=sys.stderr)
        return 3
    manifest = json.loads(manifest_path.read_text())
    if not manifest["cells"]:
        print("no runs found", file=sys.stderr)
        return 3
    records = [json.loads((out / f).read_text())
               for _, f in sorted(manifest["cells"].items())]
    rows = metrics.aggregate(records)
    metrics.write_aggregate_csv(rows, out / "fig3_size_series.csv")

    # per-step series from trajectories
    steps: dict[tuple[str, int, int], list[tuple[float, float]]] = {}
    for key in sorted(manifest["cells"]):
        tpath = out / "trajectories" / f"{key}.jsonl"
        if not tpath.exists():
            continue
        method = key.split("__n")[0]
        traj = Trajectory.from_jsonl(tpath.read_text())
        for rec in traj.records:
            if rec.ratio is None:
                continue
            best_r = rec.ratio if rec.best_cost is None else None
            steps.setdefault((method, traj.n_total, rec.iteration), []).append(
                (rec.ratio, best_r))
        steps.setdefault((method, traj.n_total, len(traj.records)), []).append(
            (traj.final_ratio, traj.final_ratio))
    with open(out / "fig2_step_series.csv", "w") as fh:
        fh.write("method,n,step,mean_r,std_r,count\n")
        for (method, n, step), vals in sorted(steps.items()):
            rs = np.array([v[0] for v in vals if v[0] is not None])
            if rs.size == 0:
                continue
            std = float(np.std(rs, ddof=1)) if rs.size > 1 else 0.0
            fh.write(f"{method},{n},{step},{metrics.format_float(float(rs.mean()))},"
                     f"{metrics.format_float(std)},{rs.size}\n")

    with open(out / "s3_extreme_value.csv", "w") as fh:
        fh.write("method,n,m,mean_r,std_r,count,formula_r\n")
        groups: dict[tuple[str, int, int], list[dict]] = {}
        for rec in records:
            if "m" in rec.get("extra", {}):
                groups.setdefault((rec["method"], rec["n"], rec["extra"]["m"]),
                                  []).append(rec)
        for (method, n, m), items in sorted(groups.items()):
            rs = np.array([r["r"] for r in items if r["r"] is not None])
            if rs.size == 0:
                continue
            formula = ""
            exp_cost = items[0].get("extra", {}).get("expected_best_cost")
            if exp_cost is not None:
                formula = metrics.format_float(
                    metrics.estimate_ratio(exp_cost, n, family="sk").value)
            std = float(np.std(rs, ddof=1)) if rs.size > 1 else 0.0
            fh.write(f"{method},{n},{m},{metrics.format_float(float(rs.mean()))},"
                     f"{metrics.format_float(std)},{rs.size},{formula}\n")

    with open(out / "s12_quality_runtime.csv", "w") as fh:
        fh.write("method,n,mean_r,std_r,mean_wall_clock_s,count\n")
        groups2: dict[tuple[str, int], list[dict]] = {}
        for rec in records:
            groups2.setdefault((rec["method"], rec["n"]), []).append(rec)
        for (method, n), items in sorted(groups2.items()):
            rs = np.array([r["r"] for r in items if r["r"] is not None])
            ws = np.array([r["wall_clock"] for r in items])
            mean_r = metrics.format_float(float(rs.mean())) if rs.size else "nan"
            std_r = metrics.format_float(float(np.std(rs, ddof=1))) \
                if rs.size > 1 else "0"
            fh.write(f"{method},{n},{mean_r},{std_r},"
                     f"{metrics.format_float(float(ws.mean()))},{len(items)}\n")
    print(f"report written to {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qgreedy",
                                     description="greedy Ising solver benchmarks")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--seed-offset", type=int, default=0)
    p_run.add_argument("--resume", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_or = sub.add_parser("oracle", help="standalone verification checks")
    orsub = p_or.add_subparsers(dest="oracle_cmd", required=True)
    p_bf = orsub.add_parser("brute-force")
    p_bf.add_argument("--problem", required=True)
    p_bf.add_argument("--cap", type=int, default=24)
    p_sp = orsub.add_parser("spectrum")
    p_sp.add_argument("--problem", required=True)
    p_sp.add_argument("--cap", type=int, default=24)
    p_dc = orsub.add_parser("decompose-check")
    p_dc.add_argument("--count", type=int, default=1000)
    p_dc.add_argument("--kind", choices=["rzz", "rzz-swap"], default="rzz")
    p_dc.add_argument("--seed", type=int, default=0)
    p_md = orsub.add_parser("mps-diff")
    p_md.add_argument("--n", type=int, default=12)
    p_md.add_argument("--seed", type=int, default=0)
    p_or.set_defaults(func=cmd_oracle)

    p_rep = sub.add_parser("report", help="emit figure CSVs from a run directory")
    p_rep.add_argument("--results", required=True)
    p_rep.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapExceededError as exc:
        print(f"cap violation: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
