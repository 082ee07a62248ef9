"""Gate-level circuits and native-gate compilation.

The native set is the one used throughout: integer-parameter x rotations
``Rx(k) = exp(-i X k pi/4)``, continuous z rotations ``Rz(t) = exp(-i Z t/2)``,
and the two-qubit ``sqrt_iswap = exp[i pi (XX+YY)/8]``.  Abstract circuits may
additionally contain Hadamard, Rzz, Swap and raw 1q/2q unitaries.

``decompose_rzz`` realizes Rzz(phi) with exactly two sqrt-iswaps from a fixed
closed-form table of one-qubit Rz/Rx sequences.  ``decompose_rzz_swap``
realizes Rzz(phi) followed by a SWAP with exactly three sqrt-iswaps on the
branch 0 <= phi <= pi/2, splitting the target into magic-basis-diagonal
factors and dressing them with single-qubit gates found by exact local
alignment (no iterative optimization involved).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError, UnsupportedAngleError

_ONE_Q = ("rx", "rz", "h", "u1")
_TWO_Q = ("sqrt_iswap", "rzz", "swap", "u2")

I2 = np.eye(2, dtype=complex)
X_MAT = np.array([[0, 1], [1, 0]], dtype=complex)
Y_MAT = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z_MAT = np.array([[1, 0], [0, -1]], dtype=complex)
H_MAT = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
SWAP_MAT = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
                    dtype=complex)
SQRT_ISWAP = np.array(
    [[1, 0, 0, 0],
     [0, 1 / math.sqrt(2), 1j / math.sqrt(2), 0],
     [0, 1j / math.sqrt(2), 1 / math.sqrt(2), 0],
     [0, 0, 0, 1]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]])


def rx_int_matrix(k: int) -> np.ndarray:
    a = k * math.pi / 4
    return math.cos(a) * I2 - 1j * math.sin(a) * X_MAT


def rot_x_matrix(theta: float) -> np.ndarray:
    """Continuous exp(-i X theta/2); only integer multiples of pi/4 are native."""
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * X_MAT


def rzz_matrix(phi: float) -> np.ndarray:
    e = np.exp(-0.5j * phi)
    return np.diag([e, e.conjugate(), e.conjugate(), e])


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    param: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind in _ONE_Q:
            arity = 1
        elif self.kind in _TWO_Q:
            arity = 2
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.targets) != arity:
            raise ValueError(f"{self.kind} expects {arity} target(s), got {self.targets}")
        if arity == 2 and self.targets[0] == self.targets[1]:
            raise ValueError("two-qubit gate targets must be distinct")
        if self.kind == "rx":
            if self.param is None or self.param != int(self.param):
                raise ValueError("rx takes an integer parameter")
        if self.kind in ("u1", "u2") and self.matrix is None:
            raise ValueError(f"{self.kind} needs an explicit matrix")


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(t < 0 or t >= self.n_qubits for t in g.targets):
                raise ValueError(f"gate target out of range: {g}")

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for g in self.gates:
            out[g.kind] = out.get(g.kind, 0) + 1
        return out


def gate_matrix(gate: Gate) -> np.ndarray:
    if gate.kind == "rx":
        return rx_int_matrix(int(gate.param))
    if gate.kind == "rz":
        return rz_matrix(float(gate.param))
    if gate.kind == "h":
        return H_MAT.copy()
    if gate.kind == "u1" or gate.kind == "u2":
        return np.array(gate.matrix, dtype=complex)
    if gate.kind == "sqrt_iswap":
        return SQRT_ISWAP.copy()
    if gate.kind == "swap":
        return SWAP_MAT.copy()
    if gate.kind == "rzz":
        return rzz_matrix(float(gate.param))
    raise ValueError(f"unknown gate kind {gate.kind!r}")


def circuit_to_json(circuit: Circuit) -> str:
    items = []
    for g in circuit.gates:
        d: dict = {"kind": g.kind, "targets": list(g.targets)}
        if g.param is not None:
            d["param"] = g.param
        if g.matrix is not None:
            d["matrix"] = [[[c.real, c.imag] for c in row] for row in np.asarray(g.matrix)]
        items.append(d)
    return json.dumps({"n_qubits": circuit.n_qubits, "gates": items})


def circuit_from_json(text: str) -> Circuit:
    doc = json.loads(text)
    gates = []
    for d in doc["gates"]:
        mat = None
        if "matrix" in d:
            mat = np.array([[complex(re, im) for re, im in row] for row in d["matrix"]])
        gates.append(Gate(d["kind"], tuple(d["targets"]), d.get("param"), mat))
    return Circuit(doc["n_qubits"], tuple(gates))


# ---------------------------------------------------------------------------
# dense application (oracles)
# ---------------------------------------------------------------------------

def apply_circuit(state: np.ndarray, circuit: Circuit) -> np.ndarray:
    """Apply every gate in order to a dense statevector.

    Qubit q corresponds to bit q of the basis index (little-endian); the first
    target of a two-qubit gate is the high bit of the gate's own 2x2x2x2 basis.
    """
    n = circuit.n_qubits
    if state.size != 1 << n:
        raise ValueError("state size does not match qubit count")
    psi = np.array(state, dtype=complex).reshape((2,) * n)
    for g in circuit.gates:
        m = gate_matrix(g)
        if len(g.targets) == 1:
            ax = n - 1 - g.targets[0]
            psi = np.moveaxis(np.tensordot(m, psi, axes=([1], [ax])), 0, ax)
        else:
            ax_a = n - 1 - g.targets[0]
            ax_b = n - 1 - g.targets[1]
            t = np.tensordot(m.reshape(2, 2, 2, 2), psi, axes=([2, 3], [ax_a, ax_b]))
            psi = np.moveaxis(t, [0, 1], [ax_a, ax_b])
    return psi.reshape(-1)


def circuit_unitary(circuit: Circuit, cap: int = 10) -> np.ndarray:
    """Dense unitary of the whole circuit by applying it to every basis state."""
    n = circuit.n_qubits
    if n > cap:
        raise CapExceededError(f"{n} qubits exceed circuit-unitary cap {cap}")
    dim = 1 << n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[col] = 1.0
        out[:, col] = apply_circuit(e, circuit)
    return out


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Operator 2-norm of a - e^{i t} b, minimized analytically over t."""
    tr = np.trace(b.conj().T @ a)
    phase = tr / abs(tr) if abs(tr) > 1e-14 else 1.0
    return float(np.linalg.norm(a - phase * b, 2))


# ---------------------------------------------------------------------------
# one-qubit synthesis: Rz Rx(1) Rz Rx(1) Rz
# ---------------------------------------------------------------------------

def zxzxz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """Angles (a, b, c) with u = phase * Rz(c) Rx(1) Rz(b) Rx(1) Rz(a).

    Derived from the z-y-z Euler form via Ry(t) ~ Rz(pi) Rx(1) Rz(t+pi) Rx(1).
    """
    u = np.asarray(u, dtype=complex)
    det = np.linalg.det(u)
    v = u / np.sqrt(det)
    theta = 2.0 * math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    if abs(v[1, 0]) < 1e-12:
        phi = 2.0 * np.angle(v[1, 1])
        lam = 0.0
    elif abs(v[0, 0]) < 1e-12:
        phi = 2.0 * np.angle(v[1, 0])
        lam = 0.0
    else:
        half_sum = -np.angle(v[0, 0])
        half_diff = np.angle(v[1, 0])
        phi = half_sum + half_diff
        lam = half_sum - half_diff
    # u ~ Rz(phi) Ry(theta) Rz(lam); fold the Ry into the native form
    return lam, theta + math.pi, phi + math.pi


def zxzxz_gates(u: np.ndarray, qubit: int) -> list[Gate]:
    a, b, c = zxzxz_angles(u)
    return [
        Gate("rz", (qubit,), a),
        Gate("rx", (qubit,), 1),
        Gate("rz", (qubit,), b),
        Gate("rx", (qubit,), 1),
        Gate("rz", (qubit,), c),
    ]


# ---------------------------------------------------------------------------
# Rzz(phi) with two sqrt-iswaps (closed-form one-qubit dressings)
# ---------------------------------------------------------------------------

def _rzz_angles(phi: float) -> tuple[float, float, float, float]:
    """Internal angles (alpha, beta, gamma, phi_tilde) of the two-sqrt-iswap
    realization of Rzz(phi).

    ``phi_tilde`` wraps phi into [-pi/2, pi/2); gamma carries the branch sign,
    fixed at the removable |phi| = pi/2 point so the assembled unitary stays
    continuous from the outer branch.
    """
    phi_t = math.fmod(phi + math.pi / 2, math.pi)
    if phi_t < 0:
        phi_t += math.pi
    phi_t -= math.pi / 2
    if phi_t + math.pi / 2 < 1e-9:
        # wrap boundary: asin(tan(.)) amplifies roundoff near its pole
        alpha = -math.pi / 2
        beta = 2.0 * math.pi
    else:
        alpha = math.asin(max(-1.0, min(1.0, math.tan(phi_t / 2))))
        arg = math.sqrt(2.0) * math.sin(phi_t / 2)
        if abs(arg) > 1.0 + 1e-9:
            raise ValueError(f"angle synthesis left its domain at phi={phi}")
        beta = 2.0 * math.acos(max(-1.0, min(1.0, arg)))
    # reduce |phi| into [0, pi] before the branch comparison with pi/2
    phi_red = abs(math.fmod(abs(phi), 2.0 * math.pi))
    if phi_red > math.pi:
        phi_red = 2.0 * math.pi - phi_red
    s = math.copysign(1.0, math.pi / 2 - phi_red)
    if abs(phi_red - math.pi / 2) < 1e-12:
        s = -1.0 if math.fmod(abs(phi), 2 * math.pi) <= math.pi else 1.0
        if phi < 0:
            s = -s
    gamma = (math.pi / 2) * s
    return alpha, beta, gamma, phi_t


def _rz_rx_run(qubit: int, *seq: tuple[str, float]) -> list[Gate]:
    """Emit a product written right-to-left (matrix order) in application order."""
    out = []
    for kind, val in reversed(seq):
        if kind == "rz":
            out.append(Gate("rz", (qubit,), float(val)))
        else:
            out.append(Gate("rx", (qubit,), int(val)))
    return out


def decompose_rzz(phi: float) -> Circuit:
    """Two-qubit circuit equal to Rzz(phi) up to global phase, containing
    exactly two sqrt-iswap gates and native one-qubit rotations."""
    alpha, beta, gamma, _ = _rzz_angles(phi)
    half = math.pi / 2
    gates: list[Gate] = []
    gates += _rz_rx_run(0, ("rz", math.pi), ("rx", 1), ("rz", alpha), ("rx", 1), ("rz", half))
    gates += _rz_rx_run(1, ("rz", half), ("rx", 1), ("rz", half))
    gates.append(Gate("sqrt_iswap", (0, 1)))
    gates += _rz_rx_run(0, ("rx", 1), ("rz", beta), ("rx", 1))
    gates.append(Gate("sqrt_iswap", (0, 1)))
    gates += _rz_rx_run(0, ("rz", gamma), ("rx", 1), ("rz", alpha), ("rx", 1), ("rz", math.pi))
    gates += _rz_rx_run(1, ("rz", gamma), ("rx", 1), ("rz", half))
    return Circuit(2, tuple(gates))


# ---------------------------------------------------------------------------
# magic-basis machinery for exact local alignment
# ---------------------------------------------------------------------------

_MAGIC = np.array(
    [[1, 0, 0, 1j],
     [0, 1j, 1, 0],
     [0, 1j, -1, 0],
     [1, 0, 0, -1j]], dtype=complex) / math.sqrt(2)


def _real_orthogonal_eigenbasis(m: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Real orthogonal eigenbasis of a complex symmetric unitary matrix.

    Re(m) and Im(m) are commuting real symmetric matrices; diagonalise Re(m),
    then refine inside its (near-)degenerate blocks with Im(m).
    """
    a = np.real(m)
    b = np.imag(m)
    _, p = np.linalg.eigh(a)
    d = p.T @ a @ p
    vals = np.diag(d)
    order = np.argsort(vals)
    p = p[:, order]
    vals = vals[order]
    start = 0
    while start < len(vals):
        stop = start + 1
        while stop < len(vals) and abs(vals[stop] - vals[start]) < 1e-6:
            stop += 1
        if stop - start > 1:
            block = p[:, start:stop]
            sub = block.T @ b @ block
            _, q = np.linalg.eigh((sub + sub.T) / 2)
            p[:, start:stop] = block @ q
        start = stop
    if np.linalg.det(p) < 0:
        p[:, 0] = -p[:, 0]
    check = p.T @ m @ p
    if np.max(np.abs(check - np.diag(np.diag(check)))) > tol:
        raise RuntimeError("failed to diagonalize symmetric unitary with a real basis")
    return p


def _su2_kron_factors(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a Kronecker-product unitary g = a (x) b into its 2x2 factors."""
    m = g.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(m)
    if s[1] > 1e-8:
        raise RuntimeError("matrix is not a Kronecker product of one-qubit gates")
    a = (u[:, 0] * math.sqrt(s[0])).reshape(2, 2)
    b = (vh[0, :] * math.sqrt(s[0])).reshape(2, 2)
    da = np.linalg.det(a)
    a = a / np.sqrt(da)
    b = b * np.sqrt(da)
    return a, b


def align_local_factors(k: np.ndarray, t: np.ndarray, tol: float = 1e-9,
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, complex]:
    """One-qubit dressings turning k into t.

    For locally equivalent two-qubit unitaries, returns (l0, l1, r0, r1, phase)
    with ``t = phase * (l0 (x) l1) @ k @ (r0 (x) r1)``, found by matching the
    magic-basis symmetric forms of both gates.  Raises if the gates are not
    locally equivalent.
    """
    k = np.asarray(k, dtype=complex)
    t = np.asarray(t, dtype=complex)
    vk = _MAGIC.conj().T @ (k / np.linalg.det(k) ** 0.25) @ _MAGIC
    vt = _MAGIC.conj().T @ (t / np.linalg.det(t) ** 0.25) @ _MAGIC
    mk = vk.T @ vk
    mt = vt.T @ vt
    pk = _real_orthogonal_eigenbasis(mk)
    pt = _real_orthogonal_eigenbasis(mt)
    dk = np.diag(pk.T @ mk @ pk)
    dt = np.diag(pt.T @ mt @ pt)

    # global phase alpha of the SU(4)-normalized relation satisfies
    # e^{4 i alpha} = 1, so the eigenvalue multisets match up to a sign
    for ratio in (1.0, -1.0):
        used = [False] * 4
        perm = [-1] * 4
        ok = True
        for i in range(4):
            found = False
            for jj in range(4):
                if not used[jj] and abs(dk[i] - ratio * dt[jj]) < 1e-6:
                    used[jj] = True
                    perm[i] = jj
                    found = True
                    break
            if not found:
                ok = False
                break
        if not ok:
            continue
        sigma = np.zeros((4, 4))
        for i in range(4):
            sigma[i, perm[i]] = 1.0
        alpha_phase = complex(ratio) ** -0.5  # e^{i alpha} up to sign (irrelevant)
        for flip in (False, True):
            s = sigma.copy()
            if flip:
                s[0, :] = -s[0, :]
            o2 = pk @ s @ pt.T
            o1 = alpha_phase.conjugate() * (vt @ pt @ s.T @ pk.T @ vk.conj().T)
            if np.max(np.abs(np.imag(o1))) > 1e-7:
                continue
            o1r = np.real(o1)
            if np.max(np.abs(o1r @ o1r.T - np.eye(4))) > 1e-7:
                continue
            if np.linalg.det(o1r) < 0 or np.linalg.det(o2) < 0:
                continue
            l_pair = _MAGIC @ o1r @ _MAGIC.conj().T
            r_pair = _MAGIC @ o2 @ _MAGIC.conj().T
            try:
                l0, l1 = _su2_kron_factors(l_pair)
                r0, r1 = _su2_kron_factors(r_pair)
            except RuntimeError:
                continue
            built = np.kron(l0, l1) @ k @ np.kron(r0, r1)
            tr = np.trace(t.conj().T @ built)
            if abs(tr) < 1e-8:
                continue
            phase = (tr / abs(tr)).conjugate()
            if np.max(np.abs(phase * built - t)) < tol:
                return l0, l1, r0, r1, phase
    raise RuntimeError("gates are not locally equivalent (no alignment found)")


# ---------------------------------------------------------------------------
# Rzz(phi) * SWAP with three sqrt-iswaps
# ---------------------------------------------------------------------------

def _magic_diag(x: float, y: float, z: float) -> np.ndarray:
    """exp[i (x XX + y YY + z ZZ)], diagonal in the magic basis."""
    xx = np.kron(X_MAT, X_MAT)
    yy = np.kron(Y_MAT, Y_MAT)
    zz = np.kron(Z_MAT, Z_MAT)
    h = x * xx + y * yy + z * zz
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(1j * vals)) @ vecs.conj().T


def _inner_2s_pair(x: float, y: float, z: float) -> tuple[np.ndarray, np.ndarray]:
    """Middle one-qubit pair (c0, c1) such that S (c0 (x) c1) S is locally
    equivalent to exp[i(x XX + y YY + z ZZ)], for coordinates satisfying
    x >= y + |z| inside the standard chamber."""
    c_prod = np.clip(math.sin(x + y - z) * math.sin(x - y + z)
                     * math.sin(-x - y - z) * math.sin(-x + y + z), 0.0, 1.0)
    alpha = math.acos(np.clip(math.cos(2 * x) - math.cos(2 * y)
                              + math.cos(2 * z) + 2 * math.sqrt(c_prod), -1.0, 1.0))
    beta = math.acos(np.clip(math.cos(2 * x) - math.cos(2 * y)
                             + math.cos(2 * z) - 2 * math.sqrt(c_prod), -1.0, 1.0))
    four_ccs = 4.0 * (math.cos(x) * math.cos(z) * math.sin(y)) ** 2
    denom = four_ccs + np.clip(math.cos(2 * x) * math.cos(2 * y) * math.cos(2 * z), 0.0, 1.0)
    sign_z = -1.0 if z < 0 else 1.0
    gamma = math.acos(np.clip(sign_z * math.sqrt(four_ccs / denom) if denom > 0 else 1.0,
                              -1.0, 1.0))
    c0 = rz_matrix(gamma) @ rot_x_matrix(alpha) @ rz_matrix(gamma)
    c1 = rot_x_matrix(beta)
    return c0, c1


def decompose_rzz_swap(phi: float) -> Circuit:
    """Two-qubit circuit equal to SWAP @ Rzz(phi) up to global phase, with
    exactly three sqrt-iswap gates; supported branch is 0 <= phi <= pi/2.

    The target is exp[i(pi/4 XX + pi/4 YY + c ZZ)] (up to phase) with
    c = pi/4 - phi/2.  It splits exactly into two magic-diagonal factors,
    one locally equivalent to a single sqrt-iswap and one reachable with two;
    the one-qubit dressings come from exact local alignment.
    """
    if not -1e-12 <= phi <= math.pi / 2 + 1e-12:
        raise UnsupportedAngleError(
            f"phi={phi} outside the supported branch [0, pi/2]")
    phi = min(max(phi, 0.0), math.pi / 2)
    c = math.pi / 4 - phi / 2
    # single-sqrt-iswap piece and its dressings
    b1 = _magic_diag(0.0, math.pi / 8, math.pi / 8)
    h0, h1, hp0, hp1, _ = align_local_factors(SQRT_ISWAP, b1)
    # two-sqrt-iswap piece
    x2, y2, z2 = math.pi / 4, math.pi / 8, c - math.pi / 8
    b2 = _magic_diag(x2, y2, z2)
    c0, c1 = _inner_2s_pair(x2, y2, z2)
    u2 = SQRT_ISWAP @ np.kron(c0, c1) @ SQRT_ISWAP
    e0, e1, f0, f1, _ = align_local_factors(u2, b2)

    gates: list[Gate] = []
    gates += zxzxz_gates(hp0, 0) + zxzxz_gates(hp1, 1)
    gates.append(Gate("sqrt_iswap", (0, 1)))
    gates += zxzxz_gates(f0 @ h0, 0) + zxzxz_gates(f1 @ h1, 1)
    gates.append(Gate("sqrt_iswap", (0, 1)))
    gates += zxzxz_gates(c0, 0) + zxzxz_gates(c1, 1)
    gates.append(Gate("sqrt_iswap", (0, 1)))
    gates += zxzxz_gates(e0, 0) + zxzxz_gates(e1, 1)
    return Circuit(2, tuple(gates))


# ---------------------------------------------------------------------------
# compilation to the native set
# ---------------------------------------------------------------------------

def _remap(circ: Circuit, targets: tuple[int, int], n_qubits: int) -> list[Gate]:
    return [Gate(g.kind, tuple(targets[t] for t in g.targets), g.param, g.matrix)
            for g in circ.gates]


def _reduce_rzz_swap_angle(phi: float) -> tuple[float, list[Gate], list[Gate]]:
    """Map an arbitrary Rzz*SWAP angle into [0, pi/2] with native sandwiches.

    Rzz is 2 pi periodic up to phase; Rzz(phi + pi) = phase * (Z(x)Z) Rzz(phi)
    and Rzz(-phi) = (X(x)I) Rzz(phi) (X(x)I), with the X/Z factors realized as
    Rx(2)/Rz(pi).  SWAP commutes with symmetric sandwiches and exchanges
    one-sided ones.  Returns (reduced phi, gates before, gates after).
    """
    phi = math.fmod(phi, 2.0 * math.pi)
    if phi > math.pi:
        phi -= 2.0 * math.pi
    if phi < -math.pi:
        phi += 2.0 * math.pi
    before: list[Gate] = []
    after: list[Gate] = []
    if phi > math.pi / 2:
        # Rzz(phi) = phase * Rzz(phi - pi) (Rz(pi) x Rz(pi))
        before = [Gate("rz", (0,), math.pi), Gate("rz", (1,), math.pi)]
        phi = phi - math.pi
    elif phi < -math.pi / 2:
        before = [Gate("rz", (0,), math.pi), Gate("rz", (1,), math.pi)]
        phi = phi + math.pi
    if phi < 0:
        # SWAP Rzz(phi) = (I x X) [SWAP Rzz(-phi)] (X x I)
        phi = -phi
        before = before + [Gate("rx", (0,), 2)]
        after = [Gate("rx", (1,), 2)]
    return phi, before, after


def compile_to_native(circuit: Circuit) -> tuple[Circuit, dict[str, int]]:
    """Lower an abstract circuit to {rx, rz, sqrt_iswap} and count the result.

    Adjacent Rzz followed by Swap on the same pair fuses into the three-
    sqrt-iswap realization; a lone Rzz costs two; a lone Swap is Rzz(0)*Swap.
    """
    out: list[Gate] = []
    gates = list(circuit.gates)
    i = 0
    while i < len(gates):
        g = gates[i]
        nxt = gates[i + 1] if i + 1 < len(gates) else None
        if g.kind == "rzz" and nxt is not None and nxt.kind == "swap" \
                and set(nxt.targets) == set(g.targets):
            phi, before, after = _reduce_rzz_swap_angle(float(g.param))
            sub = decompose_rzz_swap(phi)
            pair = g.targets
            out += [Gate(b.kind, (pair[b.targets[0]],), b.param) for b in before]
            out += _remap(sub, pair, circuit.n_qubits)
            out += [Gate(a.kind, (pair[a.targets[0]],), a.param) for a in after]
            i += 2
            continue
        if g.kind == "rzz":
            out += _remap(decompose_rzz(float(g.param)), g.targets, circuit.n_qubits)
        elif g.kind == "swap":
            out += _remap(decompose_rzz_swap(0.0), g.targets, circuit.n_qubits)
        elif g.kind == "h":
            q = g.targets[0]
            out += [Gate("rz", (q,), math.pi / 2), Gate("rx", (q,), 1),
                    Gate("rz", (q,), math.pi / 2)]
        elif g.kind == "u1":
            out += zxzxz_gates(g.matrix, g.targets[0])
        elif g.kind in ("rx", "rz", "sqrt_iswap"):
            out.append(g)
        else:
            raise ValueError(f"cannot compile gate kind {g.kind!r}")
        i += 1
    compiled = Circuit(circuit.n_qubits, tuple(out))
    c = compiled.counts()
    return compiled, {"rx": c.get("rx", 0), "rz": c.get("rz", 0),
                      "sqrt_iswap": c.get("sqrt_iswap", 0)}


# ---------------------------------------------------------------------------
# gate-level phase-separator circuit (cross-check target for the samplers)
# ---------------------------------------------------------------------------

def qaoa_gate_circuit(problem, angles) -> Circuit:
    """Gate-level realization of the alternating phase/mixer circuit over the
    active variables of ``problem`` (diagonal terms as Rzz/Rz gates)."""
    ids = problem.active_ids()
    pos = {vid: q for q, vid in enumerate(ids)}
    n = len(ids)
    gates: list[Gate] = [Gate("h", (q,)) for q in range(n)]
    for gamma, beta in zip(angles.gamma, angles.beta):
        for (i, j), w in sorted(problem.w.items()):
            gates.append(Gate("rzz", (pos[i], pos[j]), -2.0 * gamma * w))
        for i, v in sorted(problem.v.items()):
            gates.append(Gate("rz", (pos[i],), -2.0 * gamma * v))
        mixer = np.cos(beta) * I2 + 1j * np.sin(beta) * X_MAT
        for q in range(n):
            gates.append(Gate("u1", (q,), matrix=mixer))
    return Circuit(n, tuple(gates))
