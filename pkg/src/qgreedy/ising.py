"""Quadratic spin objectives: representation, generators, oracles, freezing.

The objective is ``u + sum_i v_i Z_i + sum_{i<j} w_ij Z_i Z_j`` over spins
``Z_i in {-1,+1}`` with bit convention ``Z_i = 1 - 2 B_i``.  Variable ids are
stable for the lifetime of a problem: freezing a variable removes it from the
active set and absorbs its couplings, but never reindexes the survivors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceededError, NotActiveError

DEFAULT_BRUTE_FORCE_CAP = 24
SPECTRUM_CAP = 24


def _canonical_pair(i: int, j: int) -> tuple[int, int]:
    if i == j:
        raise ValueError(f"self-coupling ({i},{i}) is not allowed")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class IsingProblem:
    """Sparse quadratic objective over spin variables with freeze bookkeeping.

    Attributes:
        n_total: number of variables ever introduced (ids are 0..n_total-1).
        active: ids still free to be assigned.
        u: scalar offset (accumulates contributions of frozen variables).
        v: linear coefficients, keyed by active id.
        w: quadratic coefficients, keyed by canonical (min, max) id pair.
        frozen: assigned spin value for each frozen id.
    """

    n_total: int
    active: frozenset[int]
    u: float
    v: dict[int, float]
    w: dict[tuple[int, int], float]
    frozen: dict[int, int] = field(default_factory=dict)

    @staticmethod
    def build(n: int, u: float = 0.0, v: dict[int, float] | None = None,
              w: dict[tuple[int, int], float] | None = None) -> "IsingProblem":
        """Construct a fresh all-active problem; duplicate pairs sum, zeros drop."""
        if n < 1:
            raise ValueError("need at least one variable")
        vv: dict[int, float] = {}
        for i, val in (v or {}).items():
            if not 0 <= i < n:
                raise ValueError(f"linear id {i} out of range")
            vv[i] = vv.get(i, 0.0) + float(val)
        ww: dict[tuple[int, int], float] = {}
        for pair, val in (w or {}).items():
            key = _canonical_pair(*pair)
            if not (0 <= key[0] < n and 0 <= key[1] < n):
                raise ValueError(f"pair {key} out of range")
            ww[key] = ww.get(key, 0.0) + float(val)
        vv = {i: c for i, c in vv.items() if c != 0.0}
        ww = {p: c for p, c in ww.items() if c != 0.0}
        return IsingProblem(n_total=n, active=frozenset(range(n)), u=float(u), v=vv, w=ww)

    @property
    def n_active(self) -> int:
        return len(self.active)

    def active_ids(self) -> list[int]:
        return sorted(self.active)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Coefficients as flat arrays (v_ids, v_vals, w_i, w_j, w_vals);
        memoized, safe because instances are immutable."""
        cached = self.__dict__.get("_arrays")
        if cached is not None:
            return cached
        v_ids = np.fromiter(self.v.keys(), dtype=np.int64, count=len(self.v))
        v_vals = np.fromiter(self.v.values(), dtype=np.float64, count=len(self.v))
        if self.w:
            pairs = np.array(list(self.w.keys()), dtype=np.int64)
            w_i, w_j = pairs[:, 0], pairs[:, 1]
        else:
            w_i = w_j = np.empty(0, dtype=np.int64)
        w_vals = np.fromiter(self.w.values(), dtype=np.float64, count=len(self.w))
        out = (v_ids, v_vals, w_i, w_j, w_vals)
        object.__setattr__(self, "_arrays", out)
        return out


@dataclass(frozen=True)
class BitString:
    """A candidate assignment: bit B_i in {0,1}, spin Z_i = 1 - 2 B_i."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8)
        if b.ndim != 1 or not np.all(b <= 1):
            raise ValueError("bits must be a 1-d 0/1 vector")
        object.__setattr__(self, "bits", b)

    def __len__(self) -> int:
        return self.bits.size

    def __eq__(self, other) -> bool:
        return isinstance(other, BitString) and np.array_equal(self.bits, other.bits)

    def spins(self) -> np.ndarray:
        return 1 - 2 * self.bits.astype(np.int64)

    @staticmethod
    def from_spins(z) -> "BitString":
        z = np.asarray(z, dtype=np.int64)
        if not np.all(np.abs(z) == 1):
            raise ValueError("spins must be +-1")
        return BitString(((1 - z) // 2).astype(np.uint8))

    def to01(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @staticmethod
    def from01(s: str) -> "BitString":
        return BitString(np.array([int(c) for c in s], dtype=np.uint8))


@dataclass(frozen=True)
class LinearConstraint:
    """Linear inequality over spin values: sum_i coeffs[i] * Z_i  (<= | >=)  bound."""

    coeffs: dict[int, float]
    bound: float
    sense: str  # "<=" or ">="

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("constraint needs at least one coefficient")
        if self.sense not in ("<=", ">="):
            raise ValueError(f"sense must be '<=' or '>=', got {self.sense!r}")


def evaluate_cost(problem: IsingProblem, b: BitString) -> float:
    """Objective value of ``b``; bits of frozen variables are ignored."""
    bits = b.bits if isinstance(b, BitString) else np.asarray(b, dtype=np.uint8)
    if bits.shape[-1] != problem.n_total:
        raise ValueError(
            f"bit string length {bits.shape[-1]} != n_total {problem.n_total}")
    z = 1.0 - 2.0 * bits
    v_ids, v_vals, w_i, w_j, w_vals = problem.as_arrays()
    c = problem.u
    if v_ids.size:
        c += float(v_vals @ z[v_ids])
    if w_vals.size:
        c += float(w_vals @ (z[w_i] * z[w_j]))
    return c


def coupling_matrix(problem: IsingProblem) -> np.ndarray:
    """Dense symmetric coupling matrix (memoized; zero diagonal)."""
    cached = problem.__dict__.get("_wmat")
    if cached is not None:
        return cached
    n = problem.n_total
    wmat = np.zeros((n, n))
    for (i, j), val in problem.w.items():
        wmat[i, j] = val
        wmat[j, i] = val
    object.__setattr__(problem, "_wmat", wmat)
    return wmat


def evaluate_cost_batch(problem: IsingProblem, bits: np.ndarray) -> np.ndarray:
    """Objective values for a (M, n_total) batch of bit rows."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 2 or bits.shape[1] != problem.n_total:
        raise ValueError("expected (M, n_total) bit matrix")
    z = 1.0 - 2.0 * bits
    v_ids, v_vals, w_i, w_j, w_vals = problem.as_arrays()
    c = np.full(bits.shape[0], problem.u)
    if v_ids.size:
        c += z[:, v_ids] @ v_vals
    if w_vals.size:
        if problem.n_total <= 512 and w_vals.size > problem.n_total:
            wmat = coupling_matrix(problem)
            c += 0.5 * np.einsum("mi,mi->m", z @ wmat, z)
        else:
            c += (z[:, w_i] * z[:, w_j]) @ w_vals
    return c


def _fwht(a: np.ndarray, radix_bits: int = 6) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform, blocked for memory locality."""
    n_bits = a.size.bit_length() - 1
    h2 = np.array([[1.0, 1.0], [1.0, -1.0]])
    done = 0
    while done < n_bits:
        k = min(radix_bits, n_bits - done)
        hk = h2
        for _ in range(k - 1):
            hk = np.kron(hk, h2)
        a = (hk @ a.reshape(-1, 1 << k, 1 << done)).reshape(-1)
        done += k
    return a


def _cost_table(problem: IsingProblem) -> tuple[np.ndarray, list[int]]:
    """Exact cost of every assignment of the active variables.

    Index ``b`` encodes the bit of the q-th active id (sorted order) at bit
    position q, with bit 0 meaning spin +1.  Costs are the Walsh-Hadamard
    transform of the coefficient vector, exact in float64 for small integer
    weights and within normal rounding otherwise.
    """
    ids = problem.active_ids()
    pos = {vid: q for q, vid in enumerate(ids)}
    n = len(ids)
    coeff = np.zeros(1 << n)
    coeff[0] = problem.u
    for i, val in problem.v.items():
        coeff[1 << pos[i]] += val
    for (i, j), val in problem.w.items():
        coeff[(1 << pos[i]) | (1 << pos[j])] += val
    return _fwht(coeff), ids


@dataclass(frozen=True)
class BruteForceResult:
    c_min: float
    c_max: float
    argmin_count: int
    argmin: BitString


def brute_force(problem: IsingProblem, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> BruteForceResult:
    """Exact extrema over all assignments of the active variables.

    Returns the global minimum and maximum cost, the number of assignments
    attaining the minimum, and one minimizing bit string (frozen bits filled
    with their frozen values).
    """
    n = problem.n_active
    if n > cap:
        raise CapExceededError(f"{n} active variables exceed brute-force cap {cap}")
    if n == 0:
        raise ValueError("no active variables to enumerate")
    costs, ids = _cost_table(problem)
    c_min = float(costs.min())
    c_max = float(costs.max())
    count = int(np.count_nonzero(costs == c_min))
    idx = int(np.argmin(costs))
    bits = np.zeros(problem.n_total, dtype=np.uint8)
    for q, vid in enumerate(ids):
        bits[vid] = (idx >> q) & 1
    for vid, sigma in problem.frozen.items():
        bits[vid] = (1 - sigma) // 2
    return BruteForceResult(c_min, c_max, count, BitString(bits))


def spectrum_histogram(problem: IsingProblem, cap: int = SPECTRUM_CAP) -> dict:
    """Multiplicity map cost -> number of assignments attaining it.

    Uses a direct per-term enumeration over all 2^n assignments, deliberately
    independent of the transform used by :func:`brute_force` so the two can
    cross-check each other.  Integer-valued spectra get integer keys.
    """
    n = problem.n_active
    if n > cap:
        raise CapExceededError(f"{n} active variables exceed spectrum cap {cap}")
    ids = problem.active_ids()
    pos = {vid: q for q, vid in enumerate(ids)}
    size = 1 << n
    indices = np.arange(size, dtype=np.int64)
    costs = np.full(size, problem.u)
    z_cache = {}

    def zvec(q):
        if q not in z_cache:
            z_cache[q] = 1.0 - 2.0 * ((indices >> q) & 1)
        return z_cache[q]

    for i, val in problem.v.items():
        costs += val * zvec(pos[i])
    for (i, j), val in problem.w.items():
        costs += val * (zvec(pos[i]) * zvec(pos[j]))
    values, counts = np.unique(costs, return_counts=True)
    integral = np.allclose(values, np.round(values), atol=1e-9)
    out = {}
    for val, cnt in zip(values, counts):
        key = int(round(val)) if integral else float(val)
        out[key] = out.get(key, 0) + int(cnt)
    return out


def freeze_variable(problem: IsingProblem, k: int, sigma: int) -> IsingProblem:
    """Fix variable ``k`` to spin ``sigma`` and absorb its couplings.

    Every coupling w_ik turns into a linear shift v_i += w_ik * sigma and the
    linear term v_k feeds the offset u += v_k * sigma.  Pure: the input
    problem is unchanged.
    """
    if k not in problem.active:
        raise NotActiveError(f"variable {k} is not active")
    if sigma not in (-1, 1):
        raise ValueError(f"spin must be -1 or +1, got {sigma}")
    u = problem.u
    v = dict(problem.v)
    w = dict(problem.w)
    u += v.pop(k, 0.0) * sigma
    for pair in [p for p in w if k in p]:
        other = pair[0] if pair[1] == k else pair[1]
        v[other] = v.get(other, 0.0) + w.pop(pair) * sigma
        if v[other] == 0.0:
            del v[other]
    frozen = dict(problem.frozen)
    frozen[k] = int(sigma)
    return IsingProblem(
        n_total=problem.n_total,
        active=problem.active - {k},
        u=u, v=v, w=w, frozen=frozen,
    )


# ---------------------------------------------------------------------------
# instance generators
# ---------------------------------------------------------------------------

def gen_sk(n: int, seed: int) -> IsingProblem:
    """Fully connected instance with couplings drawn uniformly from {-1,+1}."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    vals = rng.choice([-1.0, 1.0], size=len(pairs))
    return IsingProblem.build(n, w=dict(zip(pairs, vals)))


def gen_ring(n: int, seed: int) -> IsingProblem:
    """Cycle graph with random +-1 couplings on its n edges."""
    if n < 3:
        raise ValueError("need n >= 3")
    rng = np.random.default_rng(seed)
    pairs = [(i, (i + 1) % n) for i in range(n)]
    vals = rng.choice([-1.0, 1.0], size=n)
    return IsingProblem.build(n, w=dict(zip(pairs, vals)))


def gen_3regular(n: int, seed: int, max_retries: int = 10_000) -> IsingProblem:
    """Random simple 3-regular graph (configuration model) with +-1 couplings.

    Whole-sample rejection on any self-loop or multi-edge keeps the sampling
    simple and near-uniform at the sizes used here.
    """
    if n < 4 or n % 2 != 0:
        raise ValueError("3-regular graphs need even n >= 4")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), 3)
    for _ in range(max_retries):
        perm = rng.permutation(stubs)
        edges = perm.reshape(-1, 2)
        if np.any(edges[:, 0] == edges[:, 1]):
            continue
        canon = {_canonical_pair(int(a), int(b)) for a, b in edges}
        if len(canon) != edges.shape[0]:
            continue
        pairs = sorted(canon)
        vals = rng.choice([-1.0, 1.0], size=len(pairs))
        return IsingProblem.build(n, w=dict(zip(pairs, vals)))
    raise RuntimeError(f"no simple 3-regular graph found in {max_retries} tries")


def gen_portfolio(n: int, seed: int, density: float = 1.0,
                  constraint_tightness: float = 0.5,
                  ) -> tuple[IsingProblem, list[LinearConstraint]]:
    """Synthetic portfolio-style instance: dense real coefficients plus a
    budget constraint (sum Z_i <= A) and a return constraint (sum mu_i Z_i >= B).

    ``constraint_tightness`` is the target fraction of uniformly random bit
    strings that satisfy both constraints; the bounds A and B are calibrated
    per constraint from a seeded Monte Carlo quantile with a small safety
    margin, so the realized feasible fraction is at least the target.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if not 0.0 < constraint_tightness < 1.0:
        raise ValueError("constraint_tightness must be in (0, 1)")
    rng = np.random.default_rng(seed)
    v = {i: rng.uniform(-1.0, 1.0) for i in range(n)}
    w = {}
    for i in range(n):
        for j in range(i + 1, n):
            if density >= 1.0 or rng.random() < density:
                w[(i, j)] = rng.uniform(-1.0, 1.0)
    mu = rng.uniform(0.0, 1.0, size=n)
    mu[mu == 0.0] = 0.5  # open interval (0, 1]
    # per-constraint acceptance target, with margin against quantile noise
    q = min(1.0 - (1.0 - constraint_tightness) / 2.0 + 0.02, 0.999)
    calib = rng.integers(0, 2, size=(8192, n))
    zc = 1.0 - 2.0 * calib
    size_tot = zc.sum(axis=1)
    ret_tot = zc @ mu
    a_bound = float(np.quantile(size_tot, q, method="higher"))
    b_bound = float(np.quantile(ret_tot, 1.0 - q, method="lower"))
    constraints = [
        LinearConstraint({i: 1.0 for i in range(n)}, a_bound, "<="),
        LinearConstraint({i: float(mu[i]) for i in range(n)}, b_bound, ">="),
    ]
    return IsingProblem.build(n, v=v, w=w), constraints


# ---------------------------------------------------------------------------
# constraints
# ---------------------------------------------------------------------------

def check_constraints(constraints: list[LinearConstraint], b: BitString) -> bool:
    """True iff every inequality holds on the spin values of ``b``."""
    bits = b.bits if isinstance(b, BitString) else np.asarray(b, dtype=np.uint8)
    for c in constraints:
        total = 0.0
        for i, coef in c.coeffs.items():
            total += coef * (1.0 - 2.0 * bits[i])
        if c.sense == "<=" and total > c.bound:
            return False
        if c.sense == ">=" and total < c.bound:
            return False
    return True


def feasibility_reachable(constraints: list[LinearConstraint],
                          frozen: dict[int, int]) -> bool:
    """Can some completion of the unfrozen variables satisfy every constraint?

    Decided per constraint by giving each free variable the spin that most
    helps that constraint.  Exact for each constraint alone; for the pair of
    one <= and one >= constraint used here the per-constraint optima need not
    coincide, so jointly this is a relaxation (never falsely reports
    unreachable, may miss a joint conflict).
    """
    for c in constraints:
        fixed = sum(coef * frozen[i] for i, coef in c.coeffs.items() if i in frozen)
        slack = sum(abs(coef) for i, coef in c.coeffs.items() if i not in frozen)
        if c.sense == "<=" and fixed - slack > c.bound:
            return False
        if c.sense == ">=" and fixed + slack < c.bound:
            return False
    return True


def feasibility_reachable_exhaustive(constraints: list[LinearConstraint],
                                     frozen: dict[int, int],
                                     free_ids: list[int], cap: int = 20) -> bool:
    """Exact joint reachability by enumerating all completions (test oracle)."""
    if len(free_ids) > cap:
        raise CapExceededError(f"{len(free_ids)} free variables exceed cap {cap}")
    for mask in range(1 << len(free_ids)):
        assign = dict(frozen)
        for q, vid in enumerate(free_ids):
            assign[vid] = 1 - 2 * ((mask >> q) & 1)
        ok = True
        for c in constraints:
            total = sum(coef * assign[i] for i, coef in c.coeffs.items())
            if (c.sense == "<=" and total > c.bound) or \
               (c.sense == ">=" and total < c.bound):
                ok = False
                break
        if ok:
            return True
    return False


def brute_force_constrained(problem: IsingProblem,
                            constraints: list[LinearConstraint],
                            cap: int = DEFAULT_BRUTE_FORCE_CAP) -> BruteForceResult:
    """Exact extrema restricted to the feasible assignments."""
    n = problem.n_active
    if n > cap:
        raise CapExceededError(f"{n} active variables exceed brute-force cap {cap}")
    if not constraints:
        return brute_force(problem, cap=cap)
    costs, ids = _cost_table(problem)
    indices = np.arange(costs.size, dtype=np.int64)
    feasible = np.ones(costs.size, dtype=bool)
    pos = {vid: q for q, vid in enumerate(ids)}
    frozen_spins = problem.frozen
    for c in constraints:
        total = np.zeros(costs.size)
        for i, coef in c.coeffs.items():
            if i in frozen_spins:
                total += coef * frozen_spins[i]
            else:
                total += coef * (1.0 - 2.0 * ((indices >> pos[i]) & 1))
        feasible &= (total <= c.bound) if c.sense == "<=" else (total >= c.bound)
    if not feasible.any():
        raise ValueError("no feasible assignment exists")
    sub = costs[feasible]
    c_min = float(sub.min())
    c_max = float(sub.max())
    count = int(np.count_nonzero(sub == c_min))
    idx = int(indices[feasible][int(np.argmin(sub))])
    bits = np.zeros(problem.n_total, dtype=np.uint8)
    for q, vid in enumerate(ids):
        bits[vid] = (idx >> q) & 1
    for vid, sigma in frozen_spins.items():
        bits[vid] = (1 - sigma) // 2
    return BruteForceResult(c_min, c_max, count, BitString(bits))


# ---------------------------------------------------------------------------
# problem files
# ---------------------------------------------------------------------------

def problem_to_dict(problem: IsingProblem,
                    constraints: list[LinearConstraint] | None = None) -> dict:
    doc = {
        "n": problem.n_total,
        "u": problem.u,
        "v": [[i, val] for i, val in sorted(problem.v.items())],
        "w": [[i, j, val] for (i, j), val in sorted(problem.w.items())],
    }
    if constraints:
        doc["constraints"] = [
            {"coeffs": [[i, c] for i, c in sorted(con.coeffs.items())],
             "bound": con.bound, "sense": con.sense}
            for con in constraints
        ]
    return doc


def problem_from_dict(doc: dict) -> tuple[IsingProblem, list[LinearConstraint]]:
    problem = IsingProblem.build(
        int(doc["n"]),
        u=float(doc.get("u", 0.0)),
        v={int(i): float(val) for i, val in doc.get("v", [])},
        w={(int(i), int(j)): float(val) for i, j, val in doc.get("w", [])},
    )
    constraints = [
        LinearConstraint({int(i): float(c) for i, c in con["coeffs"]},
                         float(con["bound"]), str(con["sense"]))
        for con in doc.get("constraints", [])
    ]
    return problem, constraints


def save_problem(path, problem: IsingProblem,
                 constraints: list[LinearConstraint] | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(problem_to_dict(problem, constraints), fh, indent=1)
        fh.write("\n")


def load_problem(path) -> tuple[IsingProblem, list[LinearConstraint]]:
    with open(path) as fh:
        return problem_from_dict(json.load(fh))
