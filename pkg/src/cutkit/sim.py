"""Statevector simulation, shot sampling, dense oracles, and noise trajectories.

States are flat complex vectors of length 2^n indexed little-endian (qubit 0
is the least significant bit).  Internally states are reshaped to rank-n
tensors where axis ``n - 1 - q`` carries qubit ``q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import rng_stream
from .circuit import Circuit, GateOp, ROTATION_KINDS
from .errors import (
    BadPauliError,
    BadRangeError,
    UnboundParameterError,
    UnsupportedOpError,
)

_SQ2 = 1.0 / math.sqrt(2.0)

_FIXED_1Q = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "PROJ_PLUS": np.array([[1, 0], [0, 0]], dtype=complex),
    "PROJ_MINUS": np.array([[0, 0], [0, 1]], dtype=complex),
}


def rotation_matrix(kind: str, theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)
    raise UnsupportedOpError(f"not a single-qubit rotation: {kind}")


def two_qubit_tensor(kind: str, theta: float | None = None) -> np.ndarray:
    """Gate as a (2,2,2,2) tensor M[oa, ob, ia, ib] over (qubits[0], qubits[1])."""
    m = np.zeros((2, 2, 2, 2), dtype=complex)
    if kind == "CNOT":
        for ia in range(2):
            for ib in range(2):
                m[ia, ib ^ ia, ia, ib] = 1.0
    elif kind == "CZ":
        for ia in range(2):
            for ib in range(2):
                m[ia, ib, ia, ib] = -1.0 if ia and ib else 1.0
    elif kind == "RZZ":
        for ia in range(2):
            for ib in range(2):
                phase = np.exp(-0.5j * theta) if ia == ib else np.exp(0.5j * theta)
                m[ia, ib, ia, ib] = phase
    else:
        raise UnsupportedOpError(f"unknown two-qubit gate {kind}")
    return m


def op_matrix(op: GateOp) -> np.ndarray:
    """Matrix/tensor of a bound unitary gate op."""
    if op.is_symbolic:
        raise UnboundParameterError(f"unbound parameter {op.param.name!r}")
    if len(op.qubits) == 2:
        return two_qubit_tensor(op.kind, op.param)
    if op.kind in ROTATION_KINDS:
        return rotation_matrix(op.kind, op.param)
    return _FIXED_1Q[op.kind]


# --- Batched tensor application --------------------------------------------
# ``states`` has shape batch_shape + (2,)*n; the qubit axis inside the state
# block is (n - 1 - q) from the right.

def _apply_1q(states: np.ndarray, mat: np.ndarray, q: int, n: int) -> np.ndarray:
    ax = states.ndim - 1 - q
    shape = states.shape
    moved = np.moveaxis(states, ax, -1).reshape(-1, 2)
    out = moved @ mat.T
    return np.moveaxis(out.reshape(np.moveaxis(states, ax, -1).shape), -1, ax).reshape(shape)


def _apply_2q(states: np.ndarray, tensor: np.ndarray, qa: int, qb: int, n: int) -> np.ndarray:
    axa = states.ndim - 1 - qa
    axb = states.ndim - 1 - qb
    shape = states.shape
    moved = np.moveaxis(states, (axa, axb), (-2, -1))
    moved_shape = moved.shape
    out = moved.reshape(-1, 4) @ tensor.reshape(4, 4).T
    return np.moveaxis(out.reshape(moved_shape), (-2, -1), (axa, axb)).reshape(shape)


def apply_gate(states: np.ndarray, op: GateOp, n: int) -> np.ndarray:
    if len(op.qubits) == 1:
        return _apply_1q(states, op_matrix(op), op.qubits[0], n)
    return _apply_2q(states, op_matrix(op), op.qubits[0], op.qubits[1], n)


def zero_state(n: int) -> np.ndarray:
    state = np.zeros(1 << n, dtype=complex)
    state[0] = 1.0
    return state


# --- Pure statevector path --------------------------------------------------

def run_statevector(circuit: Circuit) -> np.ndarray:
    """Amplitudes of the circuit applied to |0...0>.

    Projective or measurement ops are rejected; use :func:`signed_measure`
    or :func:`channel_oracle` for those.
    """
    if not circuit.is_bound:
        raise UnboundParameterError("circuit has unbound parameters")
    n = circuit.width
    state = zero_state(n).reshape((2,) * n)
    for op in circuit.ops:
        if op.kind in ("MEASURE_Z_MID", "PROJ_PLUS", "PROJ_MINUS"):
            raise UnsupportedOpError(f"{op.kind} not allowed in pure statevector run")
        state = apply_gate(state, op, n)
    return state.reshape(-1)


def probabilities(state: np.ndarray) -> np.ndarray:
    return np.abs(state) ** 2


def expectation_pauli(state: np.ndarray, pauli: str) -> float:
    """<state| P |state> for a Pauli string, pauli[q] acting on qubit q."""
    n = int(round(math.log2(state.size)))
    if len(pauli) != n or any(ch not in "IXYZ" for ch in pauli):
        raise BadPauliError(f"bad Pauli string {pauli!r} for {n} qubits")
    work = state.reshape((2,) * n)
    for q, ch in enumerate(pauli):
        if ch != "I":
            work = _apply_1q(work, _FIXED_1Q[ch], q, n)
    return float(np.real(np.vdot(state, work.reshape(-1))))


def pauli_eigenvalues(pauli: str) -> np.ndarray:
    """Diagonal of a Z/I Pauli string over computational basis states."""
    n = len(pauli)
    if any(ch not in "IZ" for ch in pauli):
        raise BadPauliError(f"observable must be a Z/I string, got {pauli!r}")
    eig = np.ones(1 << n)
    for q, ch in enumerate(pauli):
        if ch == "Z":
            bits = (np.arange(1 << n) >> q) & 1
            eig *= 1.0 - 2.0 * bits
    return eig


# --- Signed measure of circuits with mid-circuit measurements ---------------

def signed_measure(circuit: Circuit) -> tuple[np.ndarray, np.ndarray]:
    """Exact outcome measure split by accumulated measurement sign.

    Returns ``(mu_plus, mu_minus)``, each of length 2^n: the probability of
    reading bitstring x with accumulated mid-measurement sign +1 / -1.  Every
    MEASURE_Z_MID outcome eigenvalue multiplies the sign.  mu_plus + mu_minus
    sums to 1; mu_plus - mu_minus is the net signed weight per bitstring.
    """
    if not circuit.is_bound:
        raise UnboundParameterError("circuit has unbound parameters")
    n = circuit.width
    branches: list[tuple[np.ndarray, int]] = [(zero_state(n).reshape((2,) * n), 1)]
    for op in circuit.ops:
        if op.kind == "MEASURE_Z_MID":
            q = op.qubits[0]
            nxt = []
            for vec, sign in branches:
                v0 = _apply_1q(vec, _FIXED_1Q["PROJ_PLUS"], q, n)
                v1 = _apply_1q(vec, _FIXED_1Q["PROJ_MINUS"], q, n)
                if np.vdot(v0, v0).real > 1e-30:
                    nxt.append((v0, sign))
                if np.vdot(v1, v1).real > 1e-30:
                    nxt.append((v1, -sign))
            branches = nxt
        elif op.kind in ("PROJ_PLUS", "PROJ_MINUS"):
            raise UnsupportedOpError("projectors not allowed in sampled circuits")
        else:
            branches = [(apply_gate(vec, op, n), sign) for vec, sign in branches]
    mu_plus = np.zeros(1 << n)
    mu_minus = np.zeros(1 << n)
    for vec, sign in branches:
        p = np.abs(vec.reshape(-1)) ** 2
        if sign > 0:
            mu_plus += p
        else:
            mu_minus += p
    return mu_plus, mu_minus


@dataclass(frozen=True)
class ShotRecord:
    output: int  # little-endian bitstring as integer
    sign: int  # +1 or -1


def _records_from_joint(joint: np.ndarray, dim: int, shots: int, rng: np.random.Generator):
    """Draw shot records from a joint (sign, outcome) distribution."""
    p = np.clip(joint, 0.0, None)
    p = p / p.sum()
    draws = rng.choice(2 * dim, size=shots, p=p)
    return [ShotRecord(int(d % dim), 1 if d < dim else -1) for d in draws]


def sample_shots(circuit: Circuit, shots: int, seed: int, *, stream_tag: int = 0) -> list[ShotRecord]:
    """Sample measurement records; deterministic given ``(circuit, shots, seed)``.

    Mid-circuit measurements branch the trajectory and fold their outcome
    eigenvalues into the record sign.
    """
    if shots < 1:
        raise BadRangeError("shots must be >= 1")
    mu_plus, mu_minus = signed_measure(circuit)
    joint = np.concatenate([mu_plus, mu_minus])
    rng = rng_stream(seed, 1, stream_tag)
    return _records_from_joint(joint, circuit.dim, shots, rng)


def empirical_signed_weights(records: list[ShotRecord], dim: int) -> np.ndarray:
    """Per-bitstring net weight (1/N) * sum of signs."""
    w = np.zeros(dim)
    for rec in records:
        w[rec.output] += rec.sign
    return w / len(records)


def records_to_csv(records: list[ShotRecord], width: int) -> str:
    lines = ["output,sign"]
    lines += [f"{rec.output:0{width}b},{rec.sign}" for rec in records]
    return "\n".join(lines) + "\n"


# --- Dense oracles (verification only) --------------------------------------

def circuit_unitary_oracle(circuit: Circuit) -> np.ndarray:
    """Dense unitary of the circuit; capped at 10 qubits."""
    n = circuit.width
    if n > 10:
        raise UnsupportedOpError("unitary oracle capped at 10 qubits")
    if not circuit.is_bound:
        raise UnboundParameterError("circuit has unbound parameters")
    dim = 1 << n
    # Batch of basis columns, evolved together.
    states = np.eye(dim, dtype=complex).reshape((dim,) + (2,) * n)
    for op in circuit.ops:
        if op.kind in ("MEASURE_Z_MID", "PROJ_PLUS", "PROJ_MINUS"):
            raise UnsupportedOpError(f"{op.kind} not unitary")
        states = apply_gate(states, op, n)
    return states.reshape(dim, dim).T


def _conjugate_dm(rho: np.ndarray, op: GateOp, n: int) -> np.ndarray:
    # rho as tensor with ket axes then bra axes.
    t = rho.reshape((2,) * (2 * n))
    if len(op.qubits) == 1:
        mat = op_matrix(op)
        t = _apply_axis_1q(t, mat, 2 * n - 1 - op.qubits[0] - n)  # ket axis
        t = _apply_axis_1q(t, mat.conj(), 2 * n - 1 - op.qubits[0])  # bra axis
    else:
        tensor = op_matrix(op)
        qa, qb = op.qubits
        t = _apply_axes_2q(t, tensor, n - 1 - qa, n - 1 - qb)
        t = _apply_axes_2q(t, tensor.conj(), 2 * n - 1 - qa, 2 * n - 1 - qb)
    return t.reshape(1 << n, 1 << n)


def _apply_axis_1q(t: np.ndarray, mat: np.ndarray, ax: int) -> np.ndarray:
    out = np.moveaxis(t, ax, -1)
    out = np.einsum("ij,...j->...i", mat, out)
    return np.moveaxis(out, -1, ax)


def _apply_axes_2q(t: np.ndarray, tensor: np.ndarray, axa: int, axb: int) -> np.ndarray:
    out = np.moveaxis(t, (axa, axb), (-2, -1))
    out = np.einsum("abij,...ij->...ab", tensor, out)
    return np.moveaxis(out, (-2, -1), (axa, axb))


def channel_oracle(circuit: Circuit, rho: np.ndarray) -> np.ndarray:
    """Apply the circuit as a channel to a density matrix; capped at 6 qubits.

    Unitaries act by conjugation; PROJ_PLUS / PROJ_MINUS act as P rho P and
    may decrease the trace.  Mid-circuit measurements are not supported here;
    express them through their projector variants.
    """
    n = circuit.width
    if n > 6:
        raise UnsupportedOpError("channel oracle capped at 6 qubits")
    out = np.asarray(rho, dtype=complex)
    for op in circuit.ops:
        if op.kind == "MEASURE_Z_MID":
            raise UnsupportedOpError("express measurements via PROJ_PLUS/PROJ_MINUS")
        out = _conjugate_dm(out, op, n)
    return out


# --- Noise model and stochastic Pauli trajectories ---------------------------

_PAULI_1Q = [_FIXED_1Q["X"], _FIXED_1Q["Y"], _FIXED_1Q["Z"]]


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing noise after each gate plus readout bit flips."""

    p1: float = 0.0  # after each single-qubit op
    p2: float = 0.0  # after each two-qubit op
    p_ro: float = 0.0  # readout flip per qubit

    def __post_init__(self):
        for name in ("p1", "p2", "p_ro"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise BadRangeError(f"{name}={v} outside [0, 1]")

    @property
    def is_trivial(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0 and self.p_ro == 0.0


def _apply_1q_rows(states: np.ndarray, rows: np.ndarray, mat: np.ndarray, q: int, n: int):
    if rows.size == 0:
        return
    sub = states[rows]
    states[rows] = _apply_1q(sub, mat, q, n)


def noisy_trajectory_sample(
    circuit: Circuit, noise: NoiseModel, shots: int, seed: int, *, stream_tag: int = 0
) -> list[ShotRecord]:
    """Per-shot stochastic Pauli trajectories.

    After each gate a uniformly random non-identity Pauli is inserted on the
    gate's qubits with probability p1 (one qubit) or p2 (two qubits); readout
    bits flip independently with probability p_ro.  Mid-circuit measurements
    are sampled per shot and carry their eigenvalue into the record sign.
    """
    outcomes, signs = _noisy_outcomes(circuit, noise, shots, seed, stream_tag)
    return [ShotRecord(int(x), int(s)) for x, s in zip(outcomes, signs)]


def noisy_signed_weights(
    circuit: Circuit, noise: NoiseModel, shots: int, seed: int, *, stream_tag: int = 0
) -> np.ndarray:
    """Signed empirical outcome weights from noisy trajectories.

    Same sampling process as :func:`noisy_trajectory_sample` but tallied
    directly into an array, avoiding per-shot record objects.
    """
    outcomes, signs = _noisy_outcomes(circuit, noise, shots, seed, stream_tag)
    return np.bincount(outcomes, weights=signs, minlength=circuit.dim) / shots


def _noisy_outcomes(
    circuit: Circuit, noise: NoiseModel, shots: int, seed: int, stream_tag: int
) -> tuple[np.ndarray, np.ndarray]:
    if shots < 1:
        raise BadRangeError("shots must be >= 1")
    if not circuit.is_bound:
        raise UnboundParameterError("circuit has unbound parameters")
    n = circuit.width
    dim = circuit.dim
    rng = rng_stream(seed, 2, stream_tag)
    states = np.zeros((shots, dim), dtype=complex)
    states[:, 0] = 1.0
    states = states.reshape((shots,) + (2,) * n)
    signs = np.ones(shots, dtype=np.int64)

    for op in circuit.ops:
        if op.kind in ("PROJ_PLUS", "PROJ_MINUS"):
            raise UnsupportedOpError("projectors not allowed in sampled circuits")
        if op.kind == "MEASURE_Z_MID":
            q = op.qubits[0]
            ax = states.ndim - 1 - q
            take1 = np.moveaxis(states, ax, -1)[..., 1]
            p1_prob = np.abs(take1.reshape(shots, -1)) ** 2
            p1_prob = p1_prob.sum(axis=1)
            outcome = rng.random(shots) < p1_prob
            flat = states.reshape(shots, dim)
            bitmask = ((np.arange(dim) >> q) & 1).astype(bool)
            keep = np.where(outcome[:, None], bitmask[None, :], ~bitmask[None, :])
            flat = np.where(keep, flat, 0.0)
            norms = np.sqrt((np.abs(flat) ** 2).sum(axis=1))
            flat = flat / norms[:, None]
            states = flat.reshape((shots,) + (2,) * n)
            signs = np.where(outcome, -signs, signs)
            err_p = noise.p1
        else:
            states = apply_gate(states, op, n)
            err_p = noise.p1 if len(op.qubits) == 1 else noise.p2
        if err_p > 0.0:
            hit = np.nonzero(rng.random(shots) < err_p)[0]
            if hit.size:
                if len(op.qubits) == 1:
                    which = rng.integers(0, 3, size=hit.size)
                    for k in range(3):
                        _apply_1q_rows(states, hit[which == k], _PAULI_1Q[k], op.qubits[0], n)
                else:
                    which = rng.integers(1, 16, size=hit.size)  # skip I (x) I
                    qa, qb = op.qubits
                    for code in range(1, 16):
                        rows = hit[which == code]
                        if rows.size == 0:
                            continue
                        ka, kb = code % 4, code // 4
                        if ka:
                            _apply_1q_rows(states, rows, _PAULI_1Q[ka - 1], qa, n)
                        if kb:
                            _apply_1q_rows(states, rows, _PAULI_1Q[kb - 1], qb, n)

    probs = np.abs(states.reshape(shots, dim)) ** 2
    probs = probs / probs.sum(axis=1)[:, None]
    cum = np.cumsum(probs, axis=1)
    r = rng.random(shots)
    outcomes = (r[:, None] > cum).sum(axis=1).astype(np.int64)
    outcomes = np.minimum(outcomes, dim - 1)
    if noise.p_ro > 0.0:
        flips = rng.random((shots, n)) < noise.p_ro
        flip_int = (flips * (1 << np.arange(n))).sum(axis=1).astype(np.int64)
        outcomes ^= flip_int
    return outcomes, signs


# --- Compiled batched evaluation (parameter sweeps) --------------------------

class CompiledCircuit:
    """Circuit compiled for evaluating many parameter bindings in one pass.

    ``param_order`` fixes the column layout of the value matrix; symbolic
    rotation angles are read per row.  Only measurement-free circuits are
    supported.
    """

    def __init__(self, circuit: Circuit, param_order: list[str]):
        self.n = circuit.width
        self.dim = circuit.dim
        col = {name: i for i, name in enumerate(param_order)}
        self.steps: list[tuple] = []
        for op in circuit.ops:
            if op.kind in ("MEASURE_Z_MID", "PROJ_PLUS", "PROJ_MINUS"):
                raise UnsupportedOpError(f"{op.kind} not supported in compiled runs")
            if op.is_symbolic:
                self.steps.append(("sym", op.kind, op.qubits, col[op.param.name]))
            elif len(op.qubits) == 1:
                self.steps.append(("1q", op_matrix(op), op.qubits[0]))
            else:
                self.steps.append(("2q", op_matrix(op), op.qubits))

    def run(self, values: np.ndarray) -> np.ndarray:
        """Evaluate all rows of ``values`` (B, P); returns states (B, 2^n)."""
        values = np.atleast_2d(np.asarray(values, dtype=float))
        b = values.shape[0]
        states = np.zeros((b, self.dim), dtype=complex)
        states[:, 0] = 1.0
        states = states.reshape((b,) + (2,) * self.n)
        for step in self.steps:
            if step[0] == "1q":
                states = _apply_1q(states, step[1], step[2], self.n)
            elif step[0] == "2q":
                states = _apply_2q(states, step[1], step[2][0], step[2][1], self.n)
            else:
                _, kind, qubits, column = step
                theta = values[:, column]
                if kind == "RZZ":
                    mats = _batch_rzz(theta)
                    states = _apply_2q_rows(states, mats, qubits[0], qubits[1], self.n)
                else:
                    mats = _batch_rotation(kind, theta)
                    ax = states.ndim - 1 - qubits[0]
                    out = np.moveaxis(states, ax, -1)
                    out = np.einsum("bij,b...j->b...i", mats, out)
                    states = np.moveaxis(out, -1, ax)
        return states.reshape(b, self.dim)


def _batch_rotation(kind: str, theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    mats = np.zeros((theta.size, 2, 2), dtype=complex)
    if kind == "RX":
        mats[:, 0, 0] = c
        mats[:, 1, 1] = c
        mats[:, 0, 1] = -1j * s
        mats[:, 1, 0] = -1j * s
    elif kind == "RY":
        mats[:, 0, 0] = c
        mats[:, 1, 1] = c
        mats[:, 0, 1] = -s
        mats[:, 1, 0] = s
    elif kind == "RZ":
        mats[:, 0, 0] = np.exp(-0.5j * theta)
        mats[:, 1, 1] = np.exp(0.5j * theta)
    else:
        raise UnsupportedOpError(kind)
    return mats


def _batch_rzz(theta: np.ndarray) -> np.ndarray:
    mats = np.zeros((theta.size, 2, 2, 2, 2), dtype=complex)
    same = np.exp(-0.5j * theta)
    diff = np.exp(0.5j * theta)
    for ia in range(2):
        for ib in range(2):
            mats[:, ia, ib, ia, ib] = same if ia == ib else diff
    return mats


def _apply_2q_rows(states: np.ndarray, tensors: np.ndarray, qa: int, qb: int, n: int) -> np.ndarray:
    axa = states.ndim - 1 - qa
    axb = states.ndim - 1 - qb
    out = np.moveaxis(states, (axa, axb), (-2, -1))
    out = np.einsum("bcdij,b...ij->b...cd", tensors, out)
    return np.moveaxis(out, (-2, -1), (axa, axb))
