"""Closed-form constants, direct greedy, spectral rounding, extreme values,
simulated annealing."""

import math
from itertools import permutations, product

import numpy as np
import pytest
from scipy.stats import norm

from qgreedy.baselines import (PARISI, AnnealSchedule, analytic_ratio,
                               best_random_expected_cost,
                               classical_greedy_direct, greedy_3regular_theory,
                               greedy_ring_theory, gumbel_params,
                               inverse_normal_cdf, sdp_spectral_round,
                               simulated_annealing, sk_cmin_proxy)
from qgreedy.ising import (BitString, IsingProblem, brute_force, evaluate_cost,
                           gen_3regular, gen_ring, gen_sk)


class TestAnalyticRatios:
    def test_constants_to_six_decimals(self):
        assert analytic_ratio("qaoa1") == pytest.approx(0.698688, abs=1e-6)
        assert analytic_ratio("greedy_sk") == pytest.approx(0.848497, abs=1e-6)
        assert analytic_ratio("sdp_sk") == pytest.approx(0.917090, abs=1e-6)
        assert analytic_ratio("random") == 0.5
        assert analytic_ratio("greedy_ring") == pytest.approx(5 / 6)

    def test_recompute_from_parisi(self):
        assert analytic_ratio("greedy_sk") == pytest.approx(
            0.5 + math.sqrt(2 / math.pi) / (3 * PARISI), abs=1e-15)
        assert analytic_ratio("sdp_sk") == pytest.approx(
            0.5 + 1 / (math.pi * PARISI), abs=1e-15)
        assert analytic_ratio("qaoa1") == pytest.approx(
            0.5 + 1 / (4 * PARISI * math.sqrt(math.e)), abs=1e-15)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            analytic_ratio("tabu")


class TestCminProxy:
    def test_asymptotic_density(self):
        n = 10 ** 9
        assert sk_cmin_proxy(n) / n ** 1.5 == pytest.approx(-0.763167, abs=1e-5)

    def test_n72_value(self):
        # direct arithmetic: 72^1.5 (-P + 0.70 * 72^(-2/3))
        expected = 72 ** 1.5 * (-PARISI + 0.70 * 72 ** (-2 / 3))
        assert sk_cmin_proxy(72) == pytest.approx(expected, abs=1e-12)
        assert sk_cmin_proxy(72) == pytest.approx(-441.5, abs=0.2)

    def test_matches_brute_force_ensemble_at_16(self):
        cmins = [brute_force(gen_sk(16, s)).c_min for s in range(200)]
        mean = float(np.mean(cmins))
        assert abs(sk_cmin_proxy(16) - mean) / abs(mean) < 0.10


class TestClassicalGreedy:
    def test_hand_trace_three_variables(self):
        # order (0,1,2) with Z_0 = +1 forces Z_1 = -1, Z_2 = +1, cost -3
        p = IsingProblem.build(3, w={(0, 1): 1, (0, 2): -1, (1, 2): 1})
        seed = next(s for s in range(1000)
                    if list(np.random.default_rng(s).permutation([0, 1, 2])) == [0, 1, 2])
        cost, bits = classical_greedy_direct(p, seed)
        assert cost == -3
        assert evaluate_cost(p, bits) == -3
        assert brute_force(p).c_min == -3

    def test_cost_matches_returned_bits(self):
        for s in range(20):
            p = gen_sk(12, s)
            cost, bits = classical_greedy_direct(p, seed=100 + s)
            assert evaluate_cost(p, bits) == pytest.approx(cost)

    def test_handles_linear_terms(self):
        p = IsingProblem.build(2, u=1.0, v={0: 3.0}, w={(0, 1): -1.0})
        cost, bits = classical_greedy_direct(p, seed=0)
        assert evaluate_cost(p, bits) == pytest.approx(cost)
        assert cost <= 1.0  # at least as good as the all-ties value u

    def test_ring_exact_enumeration_n4(self):
        # exhaustive over all weight draws and all orders: mean is exactly -2N/3
        n = 4
        total = 0.0
        count = 0
        for ws in product([-1, 1], repeat=n):
            wmat = np.zeros((n, n))
            for i in range(n):
                j = (i + 1) % n
                wmat[i, j] += ws[i]
                wmat[j, i] += ws[i]
            for order in permutations(range(n)):
                f = np.zeros(n)
                cost = 0.0
                for k in order:
                    sigma = -1 if f[k] > 0 else 1
                    cost += sigma * f[k]
                    f += wmat[:, k] * sigma
                total += cost
                count += 1
        assert total / count == pytest.approx(greedy_ring_theory(n), abs=1e-12)

    def test_3regular_exact_enumeration_k4(self):
        # K4 is the unique 3-regular graph on 4 nodes; exhaustive mean -7N/8
        n = 4
        pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        total = 0.0
        count = 0
        for ws in product([-1, 1], repeat=6):
            wmat = np.zeros((n, n))
            for (i, j), w in zip(pairs, ws):
                wmat[i, j] = w
                wmat[j, i] = w
            for order in permutations(range(n)):
                f = np.zeros(n)
                cost = 0.0
                for k in order:
                    sigma = -1 if f[k] > 0 else 1
                    cost += sigma * f[k]
                    f += wmat[:, k] * sigma
                total += cost
                count += 1
        assert total / count == pytest.approx(greedy_3regular_theory(n), abs=1e-12)

    def test_ring_monte_carlo(self):
        n = 120
        vals = [classical_greedy_direct(gen_ring(n, s), seed=10_000 + s)[0] / n
                for s in range(400)]
        se = np.std(vals, ddof=1) / math.sqrt(len(vals))
        assert abs(np.mean(vals) - greedy_ring_theory(n) / n) < 3 * se

    def test_3regular_monte_carlo(self):
        n = 120
        vals = [classical_greedy_direct(gen_3regular(n, s), seed=20_000 + s)[0] / n
                for s in range(400)]
        se = np.std(vals, ddof=1) / math.sqrt(len(vals))
        assert abs(np.mean(vals) - greedy_3regular_theory(n) / n) < 3 * se


class TestSdp:
    def test_two_spins(self):
        p = IsingProblem.build(2, w={(0, 1): 1.0})
        cost, bits = sdp_spectral_round(p)
        assert cost == -1.0
        assert bits.spins()[0] != bits.spins()[1]

    def test_never_beats_brute_force(self):
        for s in range(50):
            p = gen_sk(12, s)
            cost, _ = sdp_spectral_round(p)
            assert cost >= brute_force(p).c_min - 1e-9

    def test_sign_flip_invariance(self):
        p = gen_sk(10, 3)
        cost, bits = sdp_spectral_round(p)
        flipped = BitString((1 - bits.bits).astype(np.uint8))
        assert evaluate_cost(p, flipped) == pytest.approx(cost)

    def test_deterministic(self):
        p = gen_sk(20, 5)
        a = sdp_spectral_round(p)
        b = sdp_spectral_round(p)
        assert a[0] == b[0] and a[1] == b[1]

    def test_zero_coupling_problem(self):
        p = IsingProblem.build(3, v={0: 1.0, 1: -2.0, 2: 0.5})
        cost, bits = sdp_spectral_round(p)
        assert evaluate_cost(p, bits) == pytest.approx(cost)


class TestInverseNormal:
    def test_against_scipy(self):
        ps = np.concatenate([np.linspace(1e-9, 1 - 1e-9, 2001),
                             [1e-12, 1 - 1e-12, 0.5, 0.02425, 0.97575]])
        for p in ps:
            assert abs(inverse_normal_cdf(float(p)) - norm.ppf(p)) < 1e-8

    def test_domain(self):
        with pytest.raises(ValueError):
            inverse_normal_cdf(0.0)


class TestBestRandom:
    def test_gumbel_cross_check(self):
        n, m = 40, 10_000
        mu, sigma = gumbel_params(n, m)
        gamma = 0.5772156649015329
        closed = best_random_expected_cost(n, m)
        assert abs(-(mu + gamma * sigma) - closed) / abs(closed) < 0.05

    def test_monte_carlo_agreement(self):
        n, m = 40, 1000
        p_costs = []
        for rep in range(120):
            p = gen_sk(n, 5000 + rep)
            rng = np.random.default_rng(rep)
            bits = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
            from qgreedy.ising import evaluate_cost_batch
            p_costs.append(float(evaluate_cost_batch(p, bits).min()))
        mc = float(np.mean(p_costs))
        pred = best_random_expected_cost(n, m)
        assert abs(mc - pred) / abs(mc) < 0.05

    def test_monotone_in_m(self):
        vals = [best_random_expected_cost(48, m) for m in (100, 1000, 10_000, 100_000)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_validity_warning(self):
        with pytest.warns(UserWarning):
            best_random_expected_cost(8, 10_000)  # m >> 2^n


class TestSimulatedAnnealing:
    def test_reaches_optimum_small(self):
        hits = 0
        for s in range(40):
            p = gen_sk(12, s)
            res = simulated_annealing(p, sweeps=1000, seed=900 + s)
            if res.best_cost == brute_force(p).c_min:
                hits += 1
        assert hits >= 36  # 90%

    def test_infinite_temperature_final_cost_unbiased(self):
        finals = []
        for s in range(200):
            p = gen_sk(16, 3000 + s)
            res = simulated_annealing(p, sweeps=50,
                                      schedule=AnnealSchedule(math.inf, math.inf),
                                      seed=s)
            finals.append(res.final_cost)
        finals = np.array(finals)
        se = finals.std(ddof=1) / math.sqrt(len(finals))
        assert abs(finals.mean()) < 3 * se

    def test_best_consistency(self):
        p = gen_sk(10, 1)
        res = simulated_annealing(p, sweeps=100, seed=3)
        assert evaluate_cost(p, res.best) == pytest.approx(res.best_cost)
        assert evaluate_cost(p, res.final) == pytest.approx(res.final_cost)
        assert res.best_cost <= res.final_cost + 1e-12

    def test_deterministic(self):
        p = gen_sk(10, 2)
        a = simulated_annealing(p, sweeps=50, seed=7)
        b = simulated_annealing(p, sweeps=50, seed=7)
        assert a.best_cost == b.best_cost and a.best == b.best
