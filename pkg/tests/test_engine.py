"""Selection, freezing decisions, full runs, constraints, trajectories."""

import numpy as np
import pytest

from qgreedy.engine import (EngineConfig, Trajectory, freeze_decision,
                            freeze_decision_constrained, freeze_decision_multi,
                            run, select_variable)
from qgreedy.errors import InfeasibleTrajectoryError, NotActiveError
from qgreedy.ising import (BitString, IsingProblem, LinearConstraint,
                           brute_force, brute_force_constrained,
                           check_constraints, evaluate_cost,
                           evaluate_cost_batch, freeze_variable, gen_portfolio,
                           gen_sk)
from qgreedy.samplers import SampleSet, expand_to_full, sample_uniform


def batch(bits_rows, ids):
    return SampleSet(np.array(bits_rows, dtype=np.uint8), "uniform", tuple(ids))


def slow_scores(problem, samples):
    """Naive double-loop recomputation of the selection score."""
    ids = problem.active_ids()
    col = {vid: q for q, vid in enumerate(samples.variable_ids)}
    z = 1 - 2 * samples.bits.astype(np.int64)
    out = {}
    for k in ids:
        total = 0.0
        for (i, j), w in problem.w.items():
            other = None
            if i == k:
                other = j
            elif j == k:
                other = i
            if other is not None:
                total += abs(w * float(np.sum(z[:, col[k]] * z[:, col[other]])))
        total += abs(problem.v.get(k, 0.0) * float(np.sum(z[:, col[k]])))
        out[k] = total / samples.m
    return out


class TestSelectVariable:
    def test_triangle_tie_breaks_to_smallest(self):
        p = IsingProblem.build(3, w={(0, 1): 1, (0, 2): 1, (1, 2): 1})
        s = batch([[0, 0, 0], [1, 1, 1]], [0, 1, 2])
        assert select_variable(p, s) == 0

    def test_linear_term_dominates(self):
        p = IsingProblem.build(2, v={1: 5.0}, w={(0, 1): 0.1})
        s = batch([[0, 0], [1, 0]], [0, 1])  # <Z_1> = 1
        assert select_variable(p, s) == 1

    def test_matches_slow_oracle(self):
        rng = np.random.default_rng(0)
        for trial in range(30):
            p = gen_sk(10, trial)
            if trial % 2:
                p = freeze_variable(p, int(rng.integers(0, 10)), 1)
            ids = p.active_ids()
            s = sample_uniform(len(ids), 32, 100 + trial)
            s = SampleSet(s.bits, "uniform", tuple(ids))
            want = slow_scores(p, s)
            best = max(sorted(want), key=lambda k: (want[k], -k))
            got = select_variable(p, s)
            assert want[got] == pytest.approx(max(want.values()))
            assert got == best

    def test_no_active_raises(self):
        p = gen_sk(2, 0)
        p = freeze_variable(freeze_variable(p, 0, 1), 1, 1)
        with pytest.raises(NotActiveError):
            select_variable(p, batch([[0, 0]], [0, 1]))


class TestFreezeDecision:
    def test_linear_term_prefers_minus(self):
        p = IsingProblem.build(1, v={0: 1.0})
        s = batch([[0], [1]], [0])
        assert freeze_decision(p, s, 0) == -1

    def test_offset_only_ties_to_plus(self):
        p = IsingProblem.build(1, u=4.0)
        s = batch([[0], [1]], [0])
        assert freeze_decision(p, s, 0) == 1

    def test_matches_substitution_oracle(self):
        rng = np.random.default_rng(1)
        for trial in range(60):
            p = gen_sk(8, 200 + trial)
            p = freeze_variable(p, int(rng.integers(0, 8)), -1)
            ids = p.active_ids()
            s = sample_uniform(len(ids), 16, trial)
            s = SampleSet(s.bits, "uniform", tuple(ids))
            k = ids[int(rng.integers(0, len(ids)))]
            full = expand_to_full(p, s)
            f0 = full.copy()
            f0[:, k] = 0
            f1 = full.copy()
            f1[:, k] = 1
            c0 = evaluate_cost_batch(p, f0).mean()
            c1 = evaluate_cost_batch(p, f1).mean()
            want = 1 if c0 <= c1 else -1
            assert freeze_decision(p, s, k) == want

    def test_multi_matches_exhaustive(self):
        p = gen_sk(6, 3)
        ids = p.active_ids()
        s = sample_uniform(6, 32, 9)
        s = SampleSet(s.bits, "uniform", tuple(ids))
        ks = [0, 3]
        got = freeze_decision_multi(p, s, ks)
        full = expand_to_full(p, s)
        best = None
        for b0 in (0, 1):
            for b1 in (0, 1):
                t = full.copy()
                t[:, 0] = b0
                t[:, 3] = b1
                m = evaluate_cost_batch(p, t).mean()
                if best is None or m < best[0]:
                    best = (m, (1 - 2 * b0, 1 - 2 * b1))
        assert got == best[1]


class TestConstrainedDecision:
    def test_without_constraints_identical(self):
        p = gen_sk(6, 1)
        s = batch(np.random.default_rng(0).integers(0, 2, (16, 6)), range(6))
        plain = freeze_decision(p, s, 2)
        got, flipped = freeze_decision_constrained(p, s, 2, [], {})
        assert got == plain and not flipped

    def test_counting_forces_flip(self):
        # three spins already at -1 against a budget only -1 spins can satisfy
        n = 4
        con = LinearConstraint({i: 1.0 for i in range(n)}, -(n - 1.0) - 0.5, "<=")
        frozen = {0: -1, 1: -1, 2: -1}
        s = batch([[1, 1, 1, 0]], range(n))
        p2 = IsingProblem.build(n, v={3: -5.0})  # cost prefers +1
        got, flipped = freeze_decision_constrained(p2, s, 3, [con], frozen)
        assert got == -1 and flipped

    def test_infeasible_raises(self):
        n = 3
        con_lo = LinearConstraint({i: 1.0 for i in range(n)}, -3.0, "<=")
        con_hi = LinearConstraint({i: 1.0 for i in range(n)}, 3.0, ">=")
        p = IsingProblem.build(n)
        s = batch([[0, 0, 0]], range(n))
        with pytest.raises(InfeasibleTrajectoryError):
            freeze_decision_constrained(p, s, 0, [con_lo, con_hi], {1: 1, 2: -1})


class TestRun:
    def test_optimality_preservation(self):
        for s in range(6):
            n = 8 + 2 * (s % 3)
            p = gen_sk(n, 40 + s)
            bf = brute_force(p)

            def optimal_source(problem, m, seed, _row=bf.argmin.bits):
                ids = problem.active_ids()
                return SampleSet(np.tile(_row[np.array(ids)], (m, 1)),
                                 "uniform", tuple(ids))

            cfg = EngineConfig(selection_source=optimal_source,
                               decision_source=optimal_source, m=8, seed=s)
            traj = run(p, config=cfg)
            assert traj.final_cost == bf.c_min
            assert traj.final_ratio == 1.0

    def test_replay_and_telescoping(self):
        p = gen_sk(12, 7)
        traj = run(p, config=EngineConfig(seed=3))
        assert traj.replay(p) == pytest.approx(traj.final_cost)
        assert evaluate_cost(p, traj.final_bits) == pytest.approx(traj.final_cost)

    def test_record_count_and_shrink(self):
        p = gen_sk(10, 2)
        traj = run(p, config=EngineConfig(seed=1))
        assert len(traj.records) == 10
        assert all(len(r.chosen) == 1 for r in traj.records)
        traj2 = run(p, config=EngineConfig(seed=1, k=3))
        assert len(traj2.records) == 4  # ceil(10 / 3)
        assert [len(r.chosen) for r in traj2.records] == [3, 3, 3, 1]

    def test_determinism(self):
        p = gen_sk(10, 5)
        cfg = EngineConfig(seed=11, selection_source="statevector-qaoa",
                           decision_source="statevector-qaoa", m=64)
        a = run(p, config=cfg)
        b = run(p, config=cfg)
        assert a.records == b.records
        assert a.final_bits == b.final_bits

    def test_brute_force_tail(self):
        p = gen_sk(12, 9)
        traj = run(p, config=EngineConfig(seed=4, brute_force_threshold=5))
        assert traj.records[-1].kind == "brute_force"
        assert len(traj.records[-1].chosen) == 5
        assert len(traj.records) == 8  # 7 greedy + 1 tail
        assert evaluate_cost(p, traj.final_bits) == pytest.approx(traj.final_cost)
        plain = run(p, config=EngineConfig(seed=4))
        assert traj.final_cost <= plain.final_cost + 1e-12

    def test_statevector_source_improves_over_uniform(self):
        # smoke-scale version of the quantum-enhancement ordering
        gains = []
        for s in range(10):
            p = gen_sk(10, 60 + s)
            q = run(p, config=EngineConfig(selection_source="statevector-qaoa",
                                           decision_source="statevector-qaoa",
                                           seed=s, m=128))
            u = run(p, config=EngineConfig(seed=s))
            gains.append(q.final_ratio - u.final_ratio)
        assert float(np.mean(gains)) > 0

    def test_mps_source_runs(self):
        p = gen_sk(8, 3)
        cfg = EngineConfig(selection_source="mps-qaoa",
                           decision_source="mps-qaoa", m=32, grid_g=4,
                           grid_b=4, seed=2)
        traj = run(p, config=cfg)
        assert evaluate_cost(p, traj.final_bits) == pytest.approx(traj.final_cost)
        assert all(r.angles is not None for r in traj.records)

    def test_bad_source_rejected(self):
        with pytest.raises(ValueError):
            EngineConfig(selection_source="hardware")

    def test_constrained_k2_rejected(self):
        p, cons = gen_portfolio(6, 0)
        with pytest.raises(ValueError):
            run(p, cons, EngineConfig(k=2))


class TestConstrainedRuns:
    def test_final_strings_feasible(self):
        for s in range(15):
            p, cons = gen_portfolio(10, s)
            traj = run(p, cons, EngineConfig(seed=s))
            assert check_constraints(cons, traj.final_bits.bits)

    def test_ratio_uses_feasible_extrema(self):
        p, cons = gen_portfolio(8, 2)
        traj = run(p, cons, EngineConfig(seed=1))
        bf = brute_force_constrained(p, cons)
        expect = (bf.c_max - traj.final_cost) / (bf.c_max - bf.c_min)
        assert traj.final_ratio == pytest.approx(min(max(expect, 0.0), 1.0))

    def test_filtering_flag_recorded(self):
        p, cons = gen_portfolio(8, 4)
        cfg = EngineConfig(seed=0, selection_source="statevector-qaoa",
                           decision_source="statevector-qaoa", m=64,
                           filter_infeasible=True)
        traj = run(p, cons, cfg)
        assert check_constraints(cons, traj.final_bits.bits)
        assert any(r.filtered_out >= 0 for r in traj.records)


class TestTrajectoryIo:
    def test_jsonl_round_trip(self):
        p = gen_sk(9, 1)
        traj = run(p, config=EngineConfig(seed=2))
        text = traj.to_jsonl()
        back = Trajectory.from_jsonl(text)
        assert back.final_cost == traj.final_cost
        assert back.final_bits == traj.final_bits
        assert back.records == traj.records
        assert back.replay(p) == pytest.approx(traj.final_cost)

    def test_missing_final_raises(self):
        with pytest.raises(ValueError):
            Trajectory.from_jsonl('{"iteration": 0}\n')
