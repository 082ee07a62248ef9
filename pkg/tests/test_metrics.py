"""Ratio computation and aggregation."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgreedy.baselines import sk_cmin_proxy
from qgreedy.metrics import (aggregate, estimate_ratio, ratio_exact,
                             ratio_proxy_sk, write_aggregate_csv)


class TestRatioExact:
    def test_endpoints(self):
        assert ratio_exact(-5.0, -5.0, 5.0) == 1.0
        assert ratio_exact(5.0, -5.0, 5.0) == 0.0
        assert ratio_exact(0.0, -5.0, 5.0) == 0.5

    def test_clipping(self):
        assert ratio_exact(-7.0, -5.0, 5.0) == 1.0
        assert ratio_exact(9.0, -5.0, 5.0) == 0.0

    def test_degenerate_raises(self):
        with pytest.raises(ValueError):
            ratio_exact(1.0, 3.0, 3.0)

    @given(st.floats(-100, 100), st.floats(-100, -1), st.floats(1, 100),
           st.floats(-50, 50), st.floats(0.1, 10))
    def test_affine_and_scale_invariance(self, c, lo, hi, shift, scale):
        base = ratio_exact(c, lo, hi)
        assert ratio_exact(c + shift, lo + shift, hi + shift) == pytest.approx(base, abs=1e-9)
        assert ratio_exact(c * scale, lo * scale, hi * scale) == pytest.approx(base, abs=1e-9)


class TestRatioProxy:
    def test_zero_cost_is_half(self):
        for n in (8, 24, 72, 500):
            assert ratio_proxy_sk(0.0, n) == 0.5

    def test_proxy_optimum_is_one(self):
        for n in (16, 72):
            assert ratio_proxy_sk(sk_cmin_proxy(n), n) == pytest.approx(1.0)

    def test_estimate_modes(self):
        e = estimate_ratio(-3.0, 8, extrema=(-10.0, 10.0))
        assert e.mode == "exact" and e.value == pytest.approx(0.65)
        p = estimate_ratio(-100.0, 72, family="sk")
        assert p.mode == "proxy" and 0 < p.value < 1
        r = estimate_ratio(-30.0, 72, family="ring")
        assert r.value == pytest.approx(0.5 * (1 + 30 / 72))
        with pytest.raises(ValueError):
            estimate_ratio(-1.0, 72, family="3regular")

    def test_clipped_flag(self):
        lucky = estimate_ratio(sk_cmin_proxy(20) * 1.2, 20, family="sk")
        assert lucky.clipped and lucky.value > 1.0

    def test_proxy_vs_exact_consistency_at_20(self):
        from qgreedy.baselines import classical_greedy_direct
        from qgreedy.ising import brute_force, gen_sk
        diffs = []
        for s in range(60):
            p = gen_sk(20, s)
            cost, _ = classical_greedy_direct(p, seed=s)
            bf = brute_force(p)
            exact = ratio_exact(cost, bf.c_min, bf.c_max)
            diffs.append(abs(ratio_proxy_sk(cost, 20) - exact))
        assert float(np.mean(diffs)) < 0.05


class TestAggregate:
    def test_single_run_zero_std(self):
        rows = aggregate([{"method": "a", "n": 8, "r": 0.9, "mode": "exact"}])
        assert rows[0].std_r == 0.0 and rows[0].stderr_r == 0.0
        assert rows[0].count == 1

    def test_symmetric_pair_std(self):
        a, d = 0.8, 0.05
        rows = aggregate([
            {"method": "m", "n": 8, "r": a + d, "mode": "exact"},
            {"method": "m", "n": 8, "r": a - d, "mode": "exact"},
        ])
        assert rows[0].mean_r == pytest.approx(a)
        assert rows[0].std_r == pytest.approx(d * math.sqrt(2))

    def test_permutation_invariance(self):
        runs = [{"method": "m", "n": 8, "r": 0.1 * i, "mode": "exact"}
                for i in range(8)]
        fwd = aggregate(runs)
        rev = aggregate(runs[::-1])
        assert fwd == rev

    def test_sorted_keys(self):
        runs = [{"method": "b", "n": 16, "r": 0.5, "mode": "proxy"},
                {"method": "a", "n": 24, "r": 0.5, "mode": "exact"},
                {"method": "a", "n": 8, "r": 0.5, "mode": "exact"}]
        rows = aggregate(runs)
        assert [(r.method, r.n) for r in rows] == [("a", 8), ("a", 24), ("b", 16)]

    def test_none_ratios_counted(self):
        rows = aggregate([{"method": "m", "n": 30, "r": None, "mode": "none"}])
        assert rows[0].count == 1 and math.isnan(rows[0].mean_r)

    def test_csv_shape(self, tmp_path):
        rows = aggregate([{"method": "m", "n": 8, "r": 0.875, "mode": "exact"}])
        path = tmp_path / "agg.csv"
        write_aggregate_csv(rows, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "method,n,mean_r,std_r,stderr_r,count,mode"
        assert lines[1] == "m,8,0.875,0,0,1,exact"
