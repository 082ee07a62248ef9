"""The iterative solver: sample bit strings, pick the most correlated variable,
freeze it to the value minimizing the batch-average cost, reduce the problem,
repeat.  Selection and decision batches can come from independent sources
(uniform, exact statevector circuit, or MPS truncated ansatz)."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from functools import partial

import numpy as np

from .errors import InfeasibleTrajectoryError, NotActiveError
from .ising import (BitString, IsingProblem, LinearConstraint, brute_force,
                    brute_force_constrained, check_constraints, evaluate_cost,
                    evaluate_cost_batch, feasibility_reachable, freeze_variable)
from .metrics import estimate_ratio
from .samplers import (SampleSet, child_seed, expand_to_full, grid_search,
                       sample_uniform, statevector_sampler)

SOURCES = ("uniform", "statevector-qaoa", "mps-qaoa")


@dataclass(frozen=True)
class EngineConfig:
    """Knobs of one engine run.

    ``selection_source`` and ``decision_source`` each name a bit-string
    generator (or are callables ``f(problem, m, seed) -> SampleSet`` for
    testing); when they coincide the same batch feeds both steps.  ``k`` is
    the number of variables frozen per iteration; ``brute_force_threshold``
    finishes the tail exactly once at most that many variables remain.
    """

    k: int = 1
    selection_source: object = "uniform"
    decision_source: object = "uniform"
    m: int = 256
    filter_infeasible: bool = False
    brute_force_threshold: int = 0
    seed: int = 0
    grid_g: int = 16
    grid_b: int = 16
    chi_max: int = 64
    proxy: str = "sk"  # ratio proxy family above the exact-extrema cap

    def __post_init__(self):
        if self.k < 1 or self.m < 1:
            raise ValueError("need k >= 1 and m >= 1")
        for src in (self.selection_source, self.decision_source):
            if isinstance(src, str) and src not in SOURCES:
                raise ValueError(f"unknown source {src!r}; choose from {SOURCES}")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    kind: str  # "greedy" or "brute_force"
    chosen: tuple[int, ...]
    sigma: tuple[int, ...]
    mean_cost: float | None
    best_cost: float | None
    ratio: float | None
    angles: tuple[float, float] | None
    filtered_out: int
    filter_fallback: bool
    constraint_flip: bool


@dataclass
class Trajectory:
    records: list[IterationRecord]
    final_bits: BitString
    final_cost: float
    final_ratio: float | None
    ratio_mode: str
    n_total: int
    seed: int
    wall_clock: float = 0.0

    def to_jsonl(self) -> str:
        lines = []
        for r in self.records:
            lines.append(json.dumps({
                "iteration": r.iteration, "kind": r.kind,
                "chosen": list(r.chosen), "sigma": list(r.sigma),
                "mean_cost": r.mean_cost, "best_cost": r.best_cost,
                "ratio": r.ratio,
                "angles": list(r.angles) if r.angles else None,
                "filtered_out": r.filtered_out,
                "filter_fallback": r.filter_fallback,
                "constraint_flip": r.constraint_flip,
            }))
        lines.append(json.dumps({
            "kind": "final", "bits": self.final_bits.to01(),
            "cost": self.final_cost, "ratio": self.final_ratio,
            "ratio_mode": self.ratio_mode, "n_total": self.n_total,
            "seed": self.seed, "wall_clock": self.wall_clock,
        }))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_jsonl(text: str) -> "Trajectory":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        final = rows[-1]
        if final.get("kind") != "final":
            raise ValueError("trajectory stream is missing its final record")
        recs = [IterationRecord(
            iteration=r["iteration"], kind=r["kind"], chosen=tuple(r["chosen"]),
            sigma=tuple(r["sigma"]), mean_cost=r["mean_cost"],
            best_cost=r["best_cost"], ratio=r["ratio"],
            angles=tuple(r["angles"]) if r["angles"] else None,
            filtered_out=r["filtered_out"], filter_fallback=r["filter_fallback"],
            constraint_flip=r["constraint_flip"]) for r in rows[:-1]]
        return Trajectory(
            records=recs, final_bits=BitString.from01(final["bits"]),
            final_cost=final["cost"], final_ratio=final["ratio"],
            ratio_mode=final["ratio_mode"], n_total=final["n_total"],
            seed=final["seed"], wall_clock=final["wall_clock"])

    def replay(self, problem: IsingProblem) -> float:
        """Re-apply the recorded freezes; returns the reduced problem's offset,
        which must equal the final cost exactly."""
        cur = problem
        for r in self.records:
            for vid, sigma in zip(r.chosen, r.sigma):
                cur = freeze_variable(cur, vid, sigma)
        if cur.active:
            raise ValueError("trajectory does not freeze every variable")
        return cur.u


def _selection_scores(problem: IsingProblem, samples: SampleSet,
                      ) -> tuple[list[int], np.ndarray]:
    """F_k = (1/M)[ sum_{i active, i != k} |w_ik sum_b Z_i Z_k|
    + |v_k sum_b Z_k| ] for every active k, indexed by sorted active id."""
    ids = problem.active_ids()
    if not ids:
        raise NotActiveError("no active variables to select from")
    n_tot = problem.n_total
    col_of = np.full(n_tot, -1, dtype=np.int64)
    for q, vid in enumerate(samples.variable_ids):
        col_of[vid] = q
    z = 1.0 - 2.0 * samples.bits.astype(np.float64)
    index_of = np.full(n_tot, -1, dtype=np.int64)
    for q, vid in enumerate(ids):
        index_of[vid] = q
    f = np.zeros(len(ids))
    v_ids, v_vals, w_i, w_j, w_vals = problem.as_arrays()
    if w_vals.size:
        gram = z.T @ z  # column-pair sums, small (n_active^2)
        pair_sums = gram[col_of[w_i], col_of[w_j]]
        t = np.abs(w_vals * pair_sums)
        np.add.at(f, index_of[w_i], t)
        np.add.at(f, index_of[w_j], t)
    if v_vals.size:
        zsum = z.sum(axis=0)
        np.add.at(f, index_of[v_ids], np.abs(v_vals * zsum[col_of[v_ids]]))
    return ids, f / samples.m


def select_variable(problem: IsingProblem, samples: SampleSet) -> int:
    """Most correlated active variable under the batch (argmax of the
    two-body score), ties broken toward the smallest id."""
    ids, f = _selection_scores(problem, samples)
    return ids[int(np.argmax(f))]


def _top_k_variables(problem: IsingProblem, samples: SampleSet, k: int) -> list[int]:
    ids, f = _selection_scores(problem, samples)
    order = sorted(range(len(ids)), key=lambda q: (-f[q], ids[q]))
    return [ids[q] for q in order[:min(k, len(ids))]]


def freeze_decision(problem: IsingProblem, samples: SampleSet, k: int) -> int:
    """Spin minimizing the batch-average cost with bit k overwritten.

    Semantically: overwrite bit k to 0 and to 1 across the batch, average the
    cost both ways, freeze the winner (ties freeze to bit 0, spin +1).  The
    two averages differ only in the terms touching k, so only the sampled
    mean field at k is evaluated; c0 - c1 == 2 (v_k + sum_i w_ik <Z_i>).
    """
    if k not in problem.active:
        raise NotActiveError(f"variable {k} is not active")
    col_of = {vid: q for q, vid in enumerate(samples.variable_ids)}
    z_mean = (1.0 - 2.0 * samples.bits.astype(np.float64)).mean(axis=0)
    d = problem.v.get(k, 0.0)
    for (i, j), w in problem.w.items():
        if i == k:
            d += w * z_mean[col_of[j]]
        elif j == k:
            d += w * z_mean[col_of[i]]
    return 1 if d <= 0.0 else -1


def freeze_decision_multi(problem: IsingProblem, samples: SampleSet,
                          ks: list[int]) -> tuple[int, ...]:
    """Best of the 2^K substitutions over the selected variables."""
    full = expand_to_full(problem, samples)
    best = None
    for mask in range(1 << len(ks)):
        trial = full.copy()
        sigmas = []
        for q, vid in enumerate(ks):
            bit = (mask >> q) & 1
            trial[:, vid] = bit
            sigmas.append(1 - 2 * bit)
        mean = float(np.mean(evaluate_cost_batch(problem, trial)))
        if best is None or mean < best[0]:
            best = (mean, tuple(sigmas))
    return best[1]


def _decide_limit(problem: IsingProblem, k: int) -> int:
    """Freezing decision in the vanishing-expectation limit: only v_k Z_k
    survives the averages, so the spin opposes the accumulated field."""
    d = problem.v.get(k, 0.0)
    return 1 if d <= 0.0 else -1


def _decide_multi_limit(problem: IsingProblem, ks: list[int]) -> tuple[int, ...]:
    """2^K substitution search in the limit: substituted bits are constants,
    so their own fields and mutual couplings survive while everything else
    averages out."""
    best = None
    for mask in range(1 << len(ks)):
        sigmas = [1 - 2 * ((mask >> q) & 1) for q in range(len(ks))]
        val = sum(problem.v.get(vid, 0.0) * s for vid, s in zip(ks, sigmas))
        for a in range(len(ks)):
            for b in range(a + 1, len(ks)):
                pair = (min(ks[a], ks[b]), max(ks[a], ks[b]))
                val += problem.w.get(pair, 0.0) * sigmas[a] * sigmas[b]
        if best is None or val < best[0]:
            best = (val, tuple(sigmas))
    return best[1]


def freeze_decision_constrained(problem: IsingProblem, samples: SampleSet,
                                k: int, constraints: list[LinearConstraint],
                                frozen: dict[int, int]) -> tuple[int, bool]:
    """Cost-preferred spin unless it makes the constraints unreachable, in
    which case the opposite spin is taken; returns (spin, flipped flag)."""
    preferred = freeze_decision(problem, samples, k)
    trial = dict(frozen)
    trial[k] = preferred
    if feasibility_reachable(constraints, trial):
        return preferred, False
    trial[k] = -preferred
    if feasibility_reachable(constraints, trial):
        return -preferred, True
    raise InfeasibleTrajectoryError(
        f"no spin value for variable {k} keeps the constraints reachable")


class _UniformLimit:
    """Sentinel for the infinite uniform batch: every sampled one- and
    two-point average is exactly zero, the regime in which the algorithm
    reduces to the classical randomized greedy (its O(N^2) form that never
    materializes bit strings)."""


UNIFORM_LIMIT = _UniformLimit()


def _draw(source, problem: IsingProblem, config: EngineConfig, seed: int,
          embed_seed: int):
    if callable(source):
        return source(problem, config.m, seed)
    if source == "uniform":
        return UNIFORM_LIMIT
    if source == "statevector-qaoa":
        _, samples = grid_search(problem, statevector_sampler,
                                 config.grid_g, config.grid_b, config.m, seed)
        return samples
    if source == "mps-qaoa":
        from .mps import run_truncated_qaoa_mps
        sampler = partial(run_truncated_qaoa_mps, chi_max=config.chi_max,
                          embed_seed=embed_seed)
        fn = lambda pr, ang, m, sd: sampler(pr, ang, sd, m)  # noqa: E731
        _, samples = grid_search(problem, fn, config.grid_g, config.grid_b,
                                 config.m, seed)
        return samples
    raise ValueError(f"unknown source {source!r}")


def _filter_feasible(samples: SampleSet, problem: IsingProblem,
                     constraints) -> tuple[SampleSet, int, bool]:
    """Drop infeasible rows; falls back to the unfiltered batch when nothing
    survives."""
    full = expand_to_full(problem, samples)
    mask = np.array([check_constraints(constraints, row) for row in full], dtype=bool)
    dropped = int(np.sum(~mask))
    if dropped == 0:
        return samples, 0, False
    if not mask.any():
        return samples, 0, True
    kept = SampleSet(samples.bits[mask], samples.source, samples.variable_ids,
                     samples.angles, None)
    full_kept = expand_to_full(problem, kept)
    mean_cost = float(np.mean(evaluate_cost_batch(problem, full_kept)))
    return SampleSet(kept.bits, kept.source, kept.variable_ids, kept.angles,
                     mean_cost), dropped, False


def run(problem: IsingProblem, constraints=None,
        config: EngineConfig | None = None) -> Trajectory:
    """Iterate selection / decision / reduction until everything is frozen.

    Per-step ratio estimates use exact extrema when the instance is small
    enough to enumerate, otherwise the configured ensemble proxy.  With
    constraints, freezing never leaves the reachable-feasible space and the
    run aborts if both spin values would.
    """
    config = config or EngineConfig()
    constraints = constraints or []
    if constraints and config.k != 1:
        raise ValueError("constrained runs support k=1 only")
    t0 = time.perf_counter()
    extrema = None
    ratio_mode = "proxy" if config.proxy != "none" else "none"
    if problem.n_total <= 24:
        bf = brute_force_constrained(problem, constraints) if constraints \
            else brute_force(problem)
        extrema = (bf.c_min, bf.c_max)
        ratio_mode = "exact"

    def ratio_of(cost):
        if cost is None:
            return None
        if extrema is not None:
            return estimate_ratio(cost, problem.n_total, extrema=extrema).value
        if config.proxy == "none":
            return None
        return estimate_ratio(cost, problem.n_total, family=config.proxy).value

    same_source = config.selection_source == config.decision_source
    cur = problem
    records: list[IterationRecord] = []
    step = 0
    while cur.n_active > max(0, config.brute_force_threshold):
        sel_seed = child_seed(config.seed, step, 0)
        dec_seed = child_seed(config.seed, step, 1)
        embed = child_seed(config.seed, step, 2)
        selection = _draw(config.selection_source, cur, config, sel_seed, embed)
        filtered_out = 0
        fallback = False
        if config.filter_infeasible and constraints and \
                not isinstance(selection, _UniformLimit):
            selection, filtered_out, fallback = _filter_feasible(
                selection, cur, constraints)
        if same_source:
            decision_batch = selection
        else:
            decision_batch = _draw(config.decision_source, cur, config, dec_seed, embed)
            if config.filter_infeasible and constraints and \
                    not isinstance(decision_batch, _UniformLimit):
                decision_batch, d_out, d_fb = _filter_feasible(
                    decision_batch, cur, constraints)
                filtered_out += d_out
                fallback = fallback or d_fb
        if isinstance(selection, _UniformLimit):
            # all selection scores vanish; ties resolve to the smallest ids
            chosen = cur.active_ids()[:config.k]
            mean_cost = cur.u  # exact expectation over uniform strings
            best_cost = None
            angles = None
        else:
            batch_costs = evaluate_cost_batch(problem, expand_to_full(cur, selection))
            mean_cost = selection.mean_cost if selection.mean_cost is not None \
                else float(np.mean(batch_costs))
            best_cost = float(np.min(batch_costs))
            chosen = _top_k_variables(cur, selection, config.k)
            angles = None
            if selection.angles is not None:
                angles = (selection.angles.gamma[0], selection.angles.beta[0])
        limit_decision = isinstance(decision_batch, _UniformLimit)
        flip = False
        if constraints:
            if limit_decision:
                preferred = _decide_limit(cur, chosen[0])
                trial = dict(cur.frozen)
                trial[chosen[0]] = preferred
                if feasibility_reachable(constraints, trial):
                    sigmas = (preferred,)
                else:
                    trial[chosen[0]] = -preferred
                    if not feasibility_reachable(constraints, trial):
                        raise InfeasibleTrajectoryError(
                            f"no spin for {chosen[0]} keeps constraints reachable")
                    sigmas = (-preferred,)
                    flip = True
            else:
                sigma_val, flip = freeze_decision_constrained(
                    cur, decision_batch, chosen[0], constraints, cur.frozen)
                sigmas = (sigma_val,)
        elif len(chosen) == 1:
            sigmas = (_decide_limit(cur, chosen[0]) if limit_decision
                      else freeze_decision(cur, decision_batch, chosen[0]),)
        else:
            sigmas = (_decide_multi_limit(cur, chosen) if limit_decision
                      else freeze_decision_multi(cur, decision_batch, chosen))
        for vid, sigma in zip(chosen, sigmas):
            cur = freeze_variable(cur, vid, sigma)
        records.append(IterationRecord(
            iteration=step, kind="greedy", chosen=tuple(chosen), sigma=sigmas,
            mean_cost=mean_cost, best_cost=best_cost, ratio=ratio_of(mean_cost),
            angles=angles, filtered_out=filtered_out, filter_fallback=fallback,
            constraint_flip=flip))
        step += 1

    if cur.n_active > 0:
        # exact finish over the remaining variables
        tail = brute_force_constrained(cur, constraints) if constraints \
            else brute_force(cur)
        chosen = cur.active_ids()
        sigmas = tuple(int(tail.argmin.spins()[vid]) for vid in chosen)
        for vid, sigma in zip(chosen, sigmas):
            cur = freeze_variable(cur, vid, sigma)
        records.append(IterationRecord(
            iteration=step, kind="brute_force", chosen=tuple(chosen),
            sigma=sigmas, mean_cost=tail.c_min, best_cost=tail.c_min,
            ratio=ratio_of(tail.c_min), angles=None, filtered_out=0,
            filter_fallback=False, constraint_flip=False))

    bits = np.zeros(problem.n_total, dtype=np.uint8)
    for vid, sigma in cur.frozen.items():
        bits[vid] = (1 - sigma) // 2
    final = BitString(bits)
    final_cost = evaluate_cost(problem, final)
    traj = Trajectory(
        records=records, final_bits=final, final_cost=final_cost,
        final_ratio=ratio_of(final_cost), ratio_mode=ratio_mode,
        n_total=problem.n_total, seed=config.seed,
        wall_clock=time.perf_counter() - t0)
    return traj
