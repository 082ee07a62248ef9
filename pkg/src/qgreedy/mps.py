"""Matrix-product-state simulation of shallow brick-wall circuits.

The state is kept in mixed-canonical form (tensors left of the center are
left-orthogonal, right of it right-orthogonal), so singular values at the
center bond are Schmidt coefficients and thresholding them is exact.  The
four-layer truncated ansatz needs bond dimension at most 16, so exact mode
with the default headroom never truncates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TruncationRefusedError
from .ising import IsingProblem, evaluate_cost_batch
from .samplers import QaoaAngles, SampleSet, child_seed, expand_to_full

DEFAULT_CHI = 64
SINGULAR_FLOOR = 1e-12
UNITARY_TOL = 1e-10


@dataclass
class MpsState:
    """Tensor train with one rank-3 tensor (left bond, physical 2, right bond)
    per site; ``center`` is the orthogonality center."""

    tensors: list[np.ndarray]
    center: int = 0
    truncation_error: float = 0.0

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def norm_sq(self) -> float:
        """Full transfer-matrix contraction of <psi|psi>."""
        env = np.ones((1, 1), dtype=complex)
        for t in self.tensors:
            env = np.einsum("ab,apc,bpd->cd", env, t, t.conj(), optimize=True)
        return float(np.real(env[0, 0]))

    def to_statevector(self, cap: int = 20) -> np.ndarray:
        """Dense amplitudes with site s at bit position s of the index."""
        if self.n_sites > cap:
            raise ValueError(f"{self.n_sites} sites exceed dense cap {cap}")
        acc = np.ones((1, 1), dtype=complex)  # (collapsed physical, bond)
        for t in self.tensors:
            acc = np.einsum("xa,apb->xpb", acc, t, optimize=True)
            acc = acc.reshape(acc.shape[0] * 2, acc.shape[2])
        amp = acc[:, 0].reshape((2,) * self.n_sites)
        return np.ascontiguousarray(amp.transpose(range(self.n_sites - 1, -1, -1))).reshape(-1)


def mps_init_plus(n: int) -> MpsState:
    """Product state with every site in (|0> + |1>)/sqrt(2)."""
    if n < 1:
        raise ValueError("need n >= 1")
    t = (np.ones((1, 2, 1), dtype=complex) / np.sqrt(2.0))
    return MpsState([t.copy() for _ in range(n)], center=0)


def _check_unitary(u: np.ndarray, dim: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix")
    if np.max(np.abs(u.conj().T @ u - np.eye(dim))) > UNITARY_TOL:
        raise ValueError("matrix is not unitary within tolerance")
    return u


def _shift_center_right(state: MpsState) -> None:
    c = state.center
    t = state.tensors[c]
    dl, _, dr = t.shape
    q, r = np.linalg.qr(t.reshape(dl * 2, dr))
    state.tensors[c] = q.reshape(dl, 2, q.shape[1])
    state.tensors[c + 1] = np.einsum("ab,bpc->apc", r, state.tensors[c + 1])
    state.center = c + 1


def _shift_center_left(state: MpsState) -> None:
    c = state.center
    t = state.tensors[c]
    dl, _, dr = t.shape
    q, r = np.linalg.qr(t.reshape(dl, 2 * dr).conj().T)
    state.tensors[c] = q.conj().T.reshape(q.shape[1], 2, dr)
    state.tensors[c - 1] = np.einsum("apb,bc->apc", state.tensors[c - 1],
                                     r.conj().T)
    state.center = c - 1


def move_center(state: MpsState, site: int) -> None:
    while state.center < site:
        _shift_center_right(state)
    while state.center > site:
        _shift_center_left(state)


def apply_1q(state: MpsState, site: int, u: np.ndarray) -> MpsState:
    """Apply a one-qubit unitary on ``site`` (bond dimensions unchanged)."""
    u = _check_unitary(u, 2)
    if not 0 <= site < state.n_sites:
        raise ValueError(f"site {site} out of range")
    state.tensors[site] = np.einsum("pq,aqb->apb", u, state.tensors[site])
    return state


def apply_2q_adjacent(state: MpsState, site: int, u: np.ndarray,
                      chi_max: int = DEFAULT_CHI, exact: bool = True) -> MpsState:
    """Apply a two-qubit unitary on (site, site+1): contract, apply, split.

    Singular values below the numerical floor are dropped (they carry no
    weight); in exact mode a split needing more than ``chi_max`` genuine
    values raises instead of truncating, otherwise the discarded weight is
    accumulated in ``truncation_error``.
    """
    u = _check_unitary(u, 4)
    if not 0 <= site < state.n_sites - 1:
        raise ValueError(f"bond ({site},{site + 1}) out of range")
    if state.center < site:
        move_center(state, site)
    elif state.center > site + 1:
        move_center(state, site + 1)
    theta = np.einsum("apb,bqc->apqc", state.tensors[site], state.tensors[site + 1])
    theta = np.einsum("pqrs,arsc->apqc", u.reshape(2, 2, 2, 2), theta)
    dl, _, _, dr = theta.shape
    mat = theta.reshape(dl * 2, 2 * dr)
    uu, ss, vh = np.linalg.svd(mat, full_matrices=False)
    keep = int(np.sum(ss > SINGULAR_FLOOR))
    keep = max(keep, 1)
    if keep > chi_max:
        if exact:
            raise TruncationRefusedError(
                f"split needs rank {keep} > chi_max {chi_max} in exact mode")
        state.truncation_error += float(np.sum(ss[chi_max:] ** 2))
        keep = chi_max
    state.tensors[site] = uu[:, :keep].reshape(dl, 2, keep)
    state.tensors[site + 1] = (ss[:keep, None] * vh[:keep, :]).reshape(keep, 2, dr)
    state.center = site + 1
    return state


def mps_sample(state: MpsState, m: int, seed: int) -> SampleSet:
    """m exact samples by the left-to-right conditional-probability sweep.

    Works on a right-canonical copy; the running environment vectors are
    batched over all m samples.  Column s of the result is site s.
    """
    if m < 1:
        raise ValueError("need m >= 1")
    work = MpsState([t.copy() for t in state.tensors], state.center,
                    state.truncation_error)
    move_center(work, 0)
    nrm = np.linalg.norm(work.tensors[0])
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError("state is not normalized")
    work.tensors[0] = work.tensors[0] / nrm
    rng = np.random.default_rng(seed)
    n = work.n_sites
    bits = np.empty((m, n), dtype=np.uint8)
    env = np.ones((m, 1), dtype=complex)
    for s in range(n):
        a = np.einsum("mb,bpc->mpc", env, work.tensors[s], optimize=True)
        probs = np.sum(np.abs(a) ** 2, axis=2)  # (m, 2)
        p1 = probs[:, 1] / (probs[:, 0] + probs[:, 1])
        chosen = (rng.random(m) < p1).astype(np.uint8)
        bits[:, s] = chosen
        env = a[np.arange(m), chosen, :]
        env = env / np.sqrt(probs[np.arange(m), chosen])[:, None]
    return SampleSet(bits, "mps", tuple(range(n)))


# ---------------------------------------------------------------------------
# truncated one-layer ansatz on the line
# ---------------------------------------------------------------------------

def _ansatz_slots(problem: IsingProblem, seed: int, swap_cycles: int = 2):
    """Schedule slots of the truncated ansatz on the line.

    Each slot is (bond, rzz_angle or None); the angle unit is the bare
    coupling (multiply by -2 gamma for the phase-separator convention).
    Also returns the final position -> active-index array and the active ids.
    """
    from .samplers import brick_wall_bonds, line_embedding

    ids = problem.active_ids()
    n = len(ids)
    pos = line_embedding(n, seed)
    slots: list[tuple[int, float | None]] = []
    seen: set[tuple[int, int]] = set()
    for bonds in brick_wall_bonds(n, swap_cycles):
        for b in bonds:
            va, vb = ids[int(pos[b])], ids[int(pos[b + 1])]
            pair = (min(va, vb), max(va, vb))
            if pair in problem.w and pair not in seen:
                seen.add(pair)
                slots.append((b, float(problem.w[pair])))
            else:
                slots.append((b, None))
            pos[b], pos[b + 1] = pos[b + 1], pos[b]
    return slots, pos, ids


def run_truncated_qaoa_mps(problem: IsingProblem, angles: QaoaAngles, seed: int,
                           m: int, chi_max: int = DEFAULT_CHI,
                           embed_seed: int | None = None) -> SampleSet:
    """Execute the four-layer truncated ansatz exactly on an MPS and sample.

    The problem is randomly embedded on the line (``embed_seed``; derived from
    ``seed`` when absent, and held fixed across a grid search), each schedule
    slot applies the fused bond operator, every realized problem edge loads
    once, and the mixer closes the circuit.  Samples are reported per variable
    id with the batch mean cost attached.
    """
    from .gates import SWAP_MAT, rzz_matrix

    if angles.p != 1:
        raise ValueError("the truncated ansatz is a single-layer circuit")
    if embed_seed is None:
        embed_seed = child_seed(seed, 0xA5)
    gamma, beta = angles.gamma[0], angles.beta[0]
    slots, final_pos, ids = _ansatz_slots(problem, embed_seed)
    n = len(ids)
    state = mps_init_plus(n)
    for b, w in slots:
        op = SWAP_MAT if w is None else SWAP_MAT @ rzz_matrix(-2.0 * gamma * w)
        apply_2q_adjacent(state, b, op, chi_max=chi_max, exact=True)
    mixer = np.array([[np.cos(beta), 1j * np.sin(beta)],
                      [1j * np.sin(beta), np.cos(beta)]])
    for s in range(n):
        apply_1q(state, s, mixer)
    raw = mps_sample(state, m, seed)
    variable_ids = tuple(ids[int(final_pos[s])] for s in range(n))
    samples = SampleSet(raw.bits, "mps", variable_ids, angles)
    full = expand_to_full(problem, samples)
    mean_cost = float(np.mean(evaluate_cost_batch(problem, full)))
    return SampleSet(raw.bits, "mps", variable_ids, angles, mean_cost)


def build_truncated_circuit(problem: IsingProblem, angles: QaoaAngles,
                            embed_seed: int, swap_cycles: int = 2):
    """Abstract gate list of the same truncated ansatz (for compilation and
    dense cross-checks); returns (circuit, variable id per final position)."""
    from .gates import Circuit, Gate, I2, X_MAT

    if angles.p != 1:
        raise ValueError("the truncated ansatz is a single-layer circuit")
    gamma, beta = angles.gamma[0], angles.beta[0]
    slots, final_pos, ids = _ansatz_slots(problem, embed_seed, swap_cycles)
    n = len(ids)
    gates = [Gate("h", (q,)) for q in range(n)]
    for b, w in slots:
        if w is not None:
            gates.append(Gate("rzz", (b, b + 1), -2.0 * gamma * w))
        gates.append(Gate("swap", (b, b + 1)))
    mixer = np.cos(beta) * I2 + 1j * np.sin(beta) * X_MAT
    for q in range(n):
        gates.append(Gate("u1", (q,), matrix=mixer))
    circuit = Circuit(n, tuple(gates))
    return circuit, tuple(ids[int(final_pos[s])] for s in range(n))
