"""Bit-string sources: uniform sampling, exact statevector simulation of the
alternating phase/mixer circuit, grid search over its two angles, and the
linear-topology truncated-ansatz edge schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError
from .ising import IsingProblem, _cost_table, evaluate_cost_batch

STATEVECTOR_CAP = 24


@dataclass(frozen=True)
class QaoaAngles:
    """Phase angles gamma (canonical [0, 2pi)) and mixer angles beta ([0, pi))."""

    gamma: tuple[float, ...]
    beta: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(x) for x in np.atleast_1d(self.gamma))
        b = tuple(float(x) for x in np.atleast_1d(self.beta))
        if len(g) != len(b) or not g:
            raise ValueError("gamma and beta must have equal positive length")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "beta", b)

    @property
    def p(self) -> int:
        return len(self.gamma)


@dataclass(frozen=True)
class SampleSet:
    """A batch of sampled bit strings.

    ``bits[m, q]`` is the bit of variable ``variable_ids[q]`` in sample m.
    ``mean_cost`` is the batch-average objective when a problem was attached
    at sampling time (None for bare draws).
    """

    bits: np.ndarray
    source: str
    variable_ids: tuple[int, ...]
    angles: QaoaAngles | None = None
    mean_cost: float | None = None

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] != len(self.variable_ids):
            raise ValueError("bits must be (M, len(variable_ids))")
        object.__setattr__(self, "bits", b)

    @property
    def m(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class StateVector:
    """Dense amplitudes over 2^n basis states; qubit q holds variable qubits[q]
    at bit position q of the basis index."""

    amplitudes: np.ndarray
    qubits: tuple[int, ...]

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.size != 1 << len(self.qubits):
            raise ValueError("amplitude count does not match qubit count")
        object.__setattr__(self, "amplitudes", a)

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


def child_seed(seed: int, *key: int) -> int:
    """Deterministic independent stream id derived from (seed, key)."""
    return int(np.random.SeedSequence(entropy=seed, spawn_key=key).generate_state(1)[0])


def sample_uniform(n: int, m: int, seed: int) -> SampleSet:
    """m i.i.d. uniform bit strings over n variables."""
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
    return SampleSet(bits, "uniform", tuple(range(n)))


def expand_to_full(problem: IsingProblem, samples: SampleSet) -> np.ndarray:
    """Scatter active-variable sample columns into full-length bit rows,
    filling frozen variables with their frozen values."""
    full = np.zeros((samples.m, problem.n_total), dtype=np.uint8)
    for vid, sigma in problem.frozen.items():
        full[:, vid] = (1 - sigma) // 2
    cols = np.fromiter(samples.variable_ids, dtype=np.int64)
    full[:, cols] = samples.bits
    return full


def qaoa_state(problem: IsingProblem, angles: QaoaAngles,
               cap: int = STATEVECTOR_CAP) -> StateVector:
    """Exact statevector of the p-layer phase/mixer circuit on the active
    variables: start in the uniform superposition, then per layer multiply
    the diagonal phase e^{i gamma C} and rotate every qubit by e^{i beta X}.
    """
    n = problem.n_active
    if n > cap:
        raise CapExceededError(f"{n} active variables exceed statevector cap {cap}")
    if n == 0:
        raise ValueError("no active variables")
    costs, ids = _cost_table(problem)
    amp = np.full(1 << n, 1.0 / math.sqrt(1 << n), dtype=complex)
    for gamma, beta in zip(angles.gamma, angles.beta):
        amp = amp * np.exp(1j * gamma * costs)
        mixer = np.array([[math.cos(beta), 1j * math.sin(beta)],
                          [1j * math.sin(beta), math.cos(beta)]])
        psi = amp.reshape((2,) * n)
        for q in range(n):
            ax = n - 1 - q
            psi = np.moveaxis(np.tensordot(mixer, psi, axes=([1], [ax])), 0, ax)
        amp = np.ascontiguousarray(psi).reshape(-1)
    return StateVector(amp, tuple(ids))


def state_expectation(state: StateVector, problem: IsingProblem) -> float:
    """Exact <C> = sum_b |amp(b)|^2 C(b) over the problem's active variables."""
    costs, ids = _cost_table(problem)
    if tuple(ids) != state.qubits:
        raise ValueError("state qubits do not match the problem's active ids")
    return float(np.sum(np.abs(state.amplitudes) ** 2 * costs))


def sample_state(state: StateVector, m: int, seed: int,
                 norm_tol: float = 1e-8) -> SampleSet:
    """m independent draws from |amplitude|^2 (deterministic per seed)."""
    if m < 1:
        raise ValueError("need m >= 1")
    nsq = state.norm_sq()
    if abs(nsq - 1.0) > norm_tol:
        raise ValueError(f"state norm^2 deviates from 1 by {abs(nsq - 1.0):.2e}")
    probs = np.abs(state.amplitudes) ** 2 / nsq
    rng = np.random.default_rng(seed)
    edges = np.cumsum(probs)
    edges[-1] = 1.0
    idx = np.searchsorted(edges, rng.random(m), side="right")
    n = len(state.qubits)
    bits = ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)
    return SampleSet(bits, "statevector", state.qubits)


def statevector_sampler(problem: IsingProblem, angles: QaoaAngles, m: int,
                        seed: int) -> SampleSet:
    """Sample the exact circuit state and attach the batch mean cost."""
    state = qaoa_state(problem, angles)
    s = sample_state(state, m, seed)
    full = expand_to_full(problem, s)
    mean_cost = float(np.mean(evaluate_cost_batch(problem, full)))
    return SampleSet(s.bits, "statevector", s.variable_ids, angles, mean_cost)


def grid_search(problem: IsingProblem, sampler_fn=None, grid_g: int = 16,
                grid_b: int = 16, m: int = 256, seed: int = 0,
                ) -> tuple[QaoaAngles, SampleSet]:
    """Single-layer angle optimization over a grid_g x grid_b grid covering
    gamma in [0, 2pi) and beta in [0, pi).

    Each grid point draws m fresh samples from its own seed stream (derived
    from (seed, grid index), so parallel and serial evaluation agree) and
    scores the sample-mean cost; the lowest mean wins, ties broken by the
    first (gamma index, beta index) in row-major order.  Returns the winning
    angles together with the very batch that achieved the minimum.
    """
    if sampler_fn is None:
        return _grid_search_statevector(problem, grid_g, grid_b, m, seed)
    gammas = np.linspace(0.0, 2.0 * math.pi, grid_g, endpoint=False)
    betas = np.linspace(0.0, math.pi, grid_b, endpoint=False)
    best: tuple[float, int] | None = None
    best_angles = None
    best_samples = None
    for ig, gamma in enumerate(gammas):
        for ib, beta in enumerate(betas):
            idx = ig * grid_b + ib
            angles = QaoaAngles((float(gamma),), (float(beta),))
            samples = sampler_fn(problem, angles, m, child_seed(seed, idx))
            if samples.mean_cost is None:
                raise ValueError("sampler_fn must attach mean_cost")
            if best is None or samples.mean_cost < best[0]:
                best = (samples.mean_cost, idx)
                best_angles = angles
                best_samples = samples
    return best_angles, best_samples


_H_BLOCKS: dict[int, np.ndarray] = {}


def _h_block(k: int) -> np.ndarray:
    if k not in _H_BLOCKS:
        h2 = np.array([[1.0, 1.0], [1.0, -1.0]])
        hk = h2
        for _ in range(k - 1):
            hk = np.kron(hk, h2)
        _H_BLOCKS[k] = hk
    return _H_BLOCKS[k]


def _fwht_complex(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform of a complex vector (blocked)."""
    n_bits = a.size.bit_length() - 1
    done = 0
    while done < n_bits:
        k = min(6, n_bits - done)
        a = (_h_block(k) @ a.reshape(-1, 1 << k, 1 << done)).reshape(-1)
        done += k
    return a


def _grid_search_statevector(problem: IsingProblem, grid_g: int, grid_b: int,
                             m: int, seed: int) -> tuple[QaoaAngles, SampleSet]:
    """Grid search specialized to the exact statevector circuit.

    Equivalent to the generic path with :func:`statevector_sampler` (same
    seed streams, same scoring), but shares work across the grid: the phase
    factor advances multiplicatively along the gamma axis and the mixer layer
    is applied as a Hadamard-conjugated diagonal via two fast transforms.
    """
    n = problem.n_active
    if n > STATEVECTOR_CAP:
        raise CapExceededError(f"{n} active variables exceed statevector cap {STATEVECTOR_CAP}")
    costs, ids = _cost_table(problem)
    dim = 1 << n
    basis = np.arange(dim, dtype=np.int64)
    pops = np.zeros(dim, dtype=np.int64)
    for q in range(n):
        pops += (basis >> q) & 1
    sum_z = (n - 2 * pops).astype(np.float64)  # eigenvalue of sum_q Z_q
    gammas = np.linspace(0.0, 2.0 * math.pi, grid_g, endpoint=False)
    betas = np.linspace(0.0, math.pi, grid_b, endpoint=False)
    phase_step = np.exp(1j * (2.0 * math.pi / grid_g) * costs)
    phase = np.ones(dim, dtype=complex)
    root = 1.0 / math.sqrt(dim)
    mixer_diags = [np.exp(1j * beta * sum_z) for beta in betas]
    best = None
    for ig in range(grid_g):
        psi_g = _fwht_complex(phase * root)  # mixer basis, unnormalized
        for ib, beta in enumerate(betas):
            idx = ig * grid_b + ib
            psi = _fwht_complex(mixer_diags[ib] * psi_g) / dim
            probs = np.abs(psi) ** 2
            probs /= probs.sum()
            edges = np.cumsum(probs)
            edges[-1] = 1.0
            rng = np.random.default_rng(child_seed(seed, idx))
            drawn = np.searchsorted(edges, rng.random(m), side="right")
            mean_cost = float(np.mean(costs[drawn]))
            if best is None or mean_cost < best[0]:
                best = (mean_cost, idx, float(gammas[ig]), float(beta), drawn)
        phase = phase * phase_step
    mean_cost, _, gamma, beta, drawn = best
    bits = ((drawn[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)
    angles = QaoaAngles((gamma,), (beta,))
    return angles, SampleSet(bits, "statevector", tuple(ids), angles, mean_cost)


# ---------------------------------------------------------------------------
# truncated ansatz on a line
# ---------------------------------------------------------------------------

def brick_wall_bonds(n: int, swap_cycles: int = 2) -> list[list[int]]:
    """Bond layers of the brick-wall swap schedule: per swap cycle one layer
    on even bonds then one on odd bonds; each bond gate also swaps."""
    layers = []
    for _ in range(swap_cycles):
        for parity in (0, 1):
            layers.append(list(range(parity, n - 1, 2)))
    return layers


def line_embedding(n: int, seed: int) -> np.ndarray:
    """Random assignment of variables onto the line: position -> variable id."""
    return np.random.default_rng(seed).permutation(n)


def ansatz_adjacencies(n: int, seed: int, swap_cycles: int = 2,
                       ) -> list[tuple[int, int, int]]:
    """Replay the swap schedule and list the candidate variable pairs it
    brings adjacent: one (layer, i, j) entry per bond gate, 2(n-1) in total
    for two swap cycles."""
    pos = line_embedding(n, seed)
    out = []
    for layer, bonds in enumerate(brick_wall_bonds(n, swap_cycles)):
        for b in bonds:
            i, j = int(pos[b]), int(pos[b + 1])
            out.append((layer, min(i, j), max(i, j)))
            pos[b], pos[b + 1] = pos[b + 1], pos[b]
    return out


def truncated_ansatz_edges(problem: IsingProblem, seed: int,
                           swap_cycles: int = 2) -> list[tuple[int, int]]:
    """Problem edges realized by the brick-wall schedule on a random line
    embedding; repeats (possible at very small n) load only once."""
    n = problem.n_active
    ids = problem.active_ids()
    id_of = {q: vid for q, vid in enumerate(ids)}
    realized: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for _, a, b in ansatz_adjacencies(n, seed, swap_cycles):
        pair = (min(id_of[a], id_of[b]), max(id_of[a], id_of[b]))
        if pair in problem.w and pair not in seen:
            seen.add(pair)
            realized.append(pair)
    return realized
