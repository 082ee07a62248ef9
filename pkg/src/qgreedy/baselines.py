"""Classical reference points: direct randomized greedy, closed-form asymptotic
ratios, spectral (SDP-style) rounding, extreme-value statistics of random
sampling, and simulated annealing."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .ising import BitString, IsingProblem, evaluate_cost

#: N -> infinity ground-state energy density of the +-1 fully connected
#: ensemble (cost / N^{3/2} -> -PARISI).
PARISI = 0.763166726566547
#: Non-universal finite-size coefficient and universal exponent entering the
#: optimum-cost proxy below.
FINITE_SIZE_A = 0.70
FINITE_SIZE_OMEGA = 2.0 / 3.0
EULER_MASCHERONI = 0.5772156649015329


@dataclass(frozen=True)
class AsymptoticConstants:
    """Catalog of the fixed constants used by the closed-form baselines."""

    parisi: float = PARISI
    finite_size_a: float = FINITE_SIZE_A
    finite_size_omega: float = FINITE_SIZE_OMEGA
    euler_mascheroni: float = EULER_MASCHERONI


def analytic_ratio(method: str) -> float:
    """Large-N expected approximation ratio of a named strategy on the
    fully connected +-1 ensemble (``greedy_ring`` refers to the ring)."""
    p = PARISI
    table = {
        "random": 0.5,
        "qaoa1": 0.5 + 1.0 / (4.0 * p * math.sqrt(math.e)),
        "greedy_sk": 0.5 + math.sqrt(2.0 / math.pi) / (3.0 * p),
        "sdp_sk": 0.5 + 1.0 / (math.pi * p),
        "greedy_ring": 5.0 / 6.0,
    }
    if method not in table:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(table)}")
    return table[method]


def sk_cmin_proxy(n: int) -> float:
    """Ensemble-average optimal cost of a size-n +-1 complete-graph instance,
    including the leading finite-size correction."""
    if n < 2:
        raise ValueError("need n >= 2")
    return n ** 1.5 * (-PARISI + FINITE_SIZE_A * n ** (-FINITE_SIZE_OMEGA))


def classical_greedy_direct(problem: IsingProblem, seed: int) -> tuple[float, BitString]:
    """Randomized greedy: freeze variables in random order, each to the spin
    minimizing its local field from already-frozen neighbors.

    The first variable (zero field) gets spin +1, as does any later tie.  The
    returned cost equals u minus the sum of absolute local fields seen along
    the trajectory, which also equals the cost of the returned bit string.
    """
    rng = np.random.default_rng(seed)
    ids = problem.active_ids()
    n = problem.n_total
    wmat = np.zeros((n, n))
    for (i, j), val in problem.w.items():
        wmat[i, j] = val
        wmat[j, i] = val
    f = np.zeros(n)
    for i, val in problem.v.items():
        f[i] = val
    z = np.zeros(n, dtype=np.int64)
    cost = problem.u
    order = rng.permutation(ids)
    for k in order:
        sigma = -1 if f[k] > 0 else 1
        z[k] = sigma
        cost += sigma * f[k]
        f += wmat[:, k] * sigma
    for k, sigma in problem.frozen.items():
        z[k] = sigma
    return float(cost), BitString.from_spins(np.where(z == 0, 1, z))


def greedy_ring_theory(n: int) -> float:
    """Expected random-order greedy cost on a ring of n +-1 edges (large n)."""
    return -2.0 * n / 3.0


def greedy_3regular_theory(n: int) -> float:
    """Expected random-order greedy cost on a random 3-regular graph (large n)."""
    return -7.0 * n / 8.0


def sdp_spectral_round(problem: IsingProblem, tol: float = 1e-8,
                       max_iters: int = 100_000) -> tuple[float, BitString]:
    """Sign-round the bottom eigenvector of the coupling matrix.

    The eigenvector of the minimum eigenvalue of W (the symmetric coupling
    matrix, zero diagonal) is extracted by power iteration on c*I - W with a
    Gershgorin shift c, then rounded entrywise to +-1 (zeros round to +1).
    Both the rounded vector and its negation are scored; the better one wins.
    """
    ids = problem.active_ids()
    n = len(ids)
    if n < 2:
        raise ValueError("need at least two active variables")
    pos = {vid: q for q, vid in enumerate(ids)}
    wmat = np.zeros((n, n))
    for (i, j), val in problem.w.items():
        wmat[pos[i], pos[j]] = val
        wmat[pos[j], pos[i]] = val

    def assemble(z_active: np.ndarray) -> BitString:
        z = np.ones(problem.n_total, dtype=np.int64)
        for q, vid in enumerate(ids):
            z[vid] = int(z_active[q])
        for vid, sigma in problem.frozen.items():
            z[vid] = sigma
        return BitString.from_spins(z)

    if not np.any(wmat):
        b = assemble(np.ones(n, dtype=np.int64))
        return evaluate_cost(problem, b), b

    shift = float(np.abs(wmat).sum(axis=1).max())
    x = 1.0 + 1e-3 * np.arange(n)
    x /= np.linalg.norm(x)
    lam = x @ (wmat @ x)
    for _ in range(max_iters):
        y = shift * x - wmat @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            break
        x = y / norm
        lam = x @ (wmat @ x)
        if np.max(np.abs(wmat @ x - lam * x)) < tol:
            break
    else:
        raise RuntimeError(f"power iteration did not converge in {max_iters} steps")

    z = np.where(x < 0, -1, 1).astype(np.int64)
    cand = [assemble(z), assemble(-z)]
    costs = [evaluate_cost(problem, b) for b in cand]
    best = int(np.argmin(costs))
    return costs[best], cand[best]


def inverse_normal_cdf(p: float) -> float:
    """Quantile of the standard normal distribution.

    Rational initial guess (Acklam) polished with one Halley step against the
    exact erfc-based CDF; absolute error well below 1e-8 across (0, 1).
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    a = [-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00]
    b = [-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01]
    c = [-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00]
    d = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00]
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0]*q + c[1])*q + c[2])*q + c[3])*q + c[4])*q + c[5]) / \
            ((((d[0]*q + d[1])*q + d[2])*q + d[3])*q + 1.0)
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = (((((a[0]*r + a[1])*r + a[2])*r + a[3])*r + a[4])*r + a[5])*q / \
            (((((b[0]*r + b[1])*r + b[2])*r + b[3])*r + b[4])*r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((c[0]*q + c[1])*q + c[2])*q + c[3])*q + c[4])*q + c[5]) / \
            ((((d[0]*q + d[1])*q + d[2])*q + d[3])*q + 1.0)
    # one Halley refinement
    err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    dens = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if dens > 0.0:
        u = err / dens
        x -= u / (1.0 + 0.5 * x * u)
    return x


def gumbel_params(n: int, m: int) -> tuple[float, float]:
    """Location and scale of the limiting minimum-of-m distribution of random
    costs on a size-n +-1 complete-graph instance (stated for the maximum of
    the mirrored Gaussian; negate the mean for minima)."""
    scale = math.sqrt(n * (n - 1) / 2.0)
    mu = scale * inverse_normal_cdf(1.0 - 1.0 / m)
    sigma = scale * inverse_normal_cdf(1.0 - 1.0 / (math.e * m)) - mu
    return mu, sigma


def best_random_expected_cost(n: int, m: int) -> float:
    """Expected best (lowest) cost among m uniformly random bit strings on a
    size-n +-1 complete-graph instance.

    Valid for 1 << m <~ 2^n; outside that window the Gaussian bulk
    approximation degrades and a warning is emitted.
    """
    if n < 2 or m < 2:
        raise ValueError("need n >= 2 and m >= 2")
    if m < 8 or math.log(m) > n * math.log(2.0):
        warnings.warn("m outside the validity window 1 << m <~ 2^n", stacklevel=2)
    gamma = EULER_MASCHERONI
    var = n * (n - 1) / 2.0
    inner = m * m / (2.0 * math.pi)
    val = math.log(inner / math.log(inner))
    return -(1.0 + gamma / math.log(m)) * math.sqrt(var * val)


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric temperature ladder; t_start defaults to 2*max|w| at run time."""

    t_start: float | None = None
    t_end: float = 0.1


@dataclass(frozen=True)
class SAResult:
    best_cost: float
    best: BitString
    final_cost: float
    final: BitString


def simulated_annealing(problem: IsingProblem, sweeps: int = 1000,
                        schedule: AnnealSchedule | None = None,
                        seed: int = 0) -> SAResult:
    """Single-spin-flip Metropolis with a geometric temperature schedule.

    One sweep proposes a flip of every active variable once, in id order.
    Tracks and returns the best configuration seen; the final state is also
    reported (at infinite temperature it is a uniform sample).
    """
    if sweeps < 1:
        raise ValueError("need sweeps >= 1")
    schedule = schedule or AnnealSchedule()
    rng = np.random.default_rng(seed)
    ids = problem.active_ids()
    n = problem.n_total
    wmat = np.zeros((n, n))
    for (i, j), val in problem.w.items():
        wmat[i, j] = val
        wmat[j, i] = val
    max_w = float(np.abs(wmat).max()) if problem.w else 1.0
    t_start = schedule.t_start if schedule.t_start is not None else 2.0 * max_w
    t_end = schedule.t_end
    if not (t_start > 0 and t_end > 0):
        raise ValueError("temperatures must be positive")

    z = np.where(rng.random(n) < 0.5, -1, 1).astype(np.float64)
    for k, sigma in problem.frozen.items():
        z[k] = sigma
    f = wmat @ z
    for i, val in problem.v.items():
        f[i] += val
    bits = ((1 - z) / 2).astype(np.uint8)
    cost = evaluate_cost(problem, BitString(bits))
    best_cost, best_z = cost, z.copy()
    if sweeps == 1:
        temps = np.array([t_start])
    elif math.isinf(t_start) or math.isinf(t_end):
        temps = np.full(sweeps, np.inf)
    else:
        temps = t_start * (t_end / t_start) ** (np.arange(sweeps) / (sweeps - 1))
    for temp in temps:
        us = rng.random(len(ids))
        for idx, k in enumerate(ids):
            delta = -2.0 * z[k] * f[k]
            accept = (delta <= 0.0 or math.isinf(temp)
                      or us[idx] < math.exp(-delta / temp))
            if accept:
                zk_old = z[k]
                z[k] = -zk_old
                cost += delta
                f -= 2.0 * zk_old * wmat[:, k]
                if cost < best_cost:
                    best_cost = cost
                    best_z = z.copy()
    return SAResult(
        best_cost=float(best_cost),
        best=BitString.from_spins(best_z.astype(np.int64)),
        final_cost=float(cost),
        final=BitString.from_spins(z.astype(np.int64)),
    )
