"""Quasi-probability gate cutting and reconstruction.

A cuttable two-qubit gate is rewritten as ``exp(i*phi*Z(x)Z)`` plus local
dressing, and that interaction is replaced by a signed mixture of six local
channels:

    exp(i*phi*ZZ) rho exp(-i*phi*ZZ)
        = cos^2(phi) * rho
        + sin^2(phi) * (Z(x)Z) rho (Z(x)Z)
        + cos(phi)sin(phi) * [(S3 + S4) - (S5 + S6)]

where S3 applies a sign-weighted Z measurement on side a and exp(+i*pi/4*Z)
on side b, S5 is its exp(-i*pi/4*Z) partner, and S4/S6 mirror the pair with
the roles of the sides swapped.  Each fully assigned replacement yields one
subexperiment; weighted tallies recombine into expectation values or a full
quasi-distribution.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ._rng import rng_stream
from .circuit import Circuit, GateOp, connected_components
from .errors import (
    BadRangeError,
    TooManyCutsError,
    UnboundParameterError,
    UncuttableGateError,
)
from .sim import (
    NoiseModel,
    noisy_signed_weights,
    op_matrix,
    pauli_eigenvalues,
)

HALF_PI = math.pi / 2.0

# Local op descriptors inside a term: ("Z",), ("RZ", angle), ("MEAS",)
LocalOp = tuple


@dataclass(frozen=True)
class QPDTerm:
    coefficient: float
    side_a_ops: tuple[LocalOp, ...]
    side_b_ops: tuple[LocalOp, ...]
    sign_from_measurement: bool

    def projective_variants(self):
        """Expand MEAS into signed projector pairs, for channel verification.

        Yields ``(weight, a_ops, b_ops)`` with MEAS replaced by PROJ_PLUS
        (weight +1) or PROJ_MINUS (weight -1).
        """

        def expand(ops):
            variants = [(1, [])]
            for op in ops:
                if op[0] == "MEAS":
                    variants = [(w * s, done + [kind]) for w, done in variants
                                for s, kind in ((1, ("PROJ_PLUS",)), (-1, ("PROJ_MINUS",)))]
                else:
                    variants = [(w, done + [op]) for w, done in variants]
            return variants

        for wa, a_ops in expand(self.side_a_ops):
            for wb, b_ops in expand(self.side_b_ops):
                yield wa * wb, tuple(a_ops), tuple(b_ops)


def gamma(phi: float) -> float:
    """Sampling overhead of one cut: sum of coefficient magnitudes."""
    return 1.0 + 2.0 * abs(math.sin(2.0 * phi))


def zz_interaction_terms(phi: float) -> tuple[QPDTerm, ...]:
    """Six-term decomposition of the channel of ``exp(i*phi*Z(x)Z)``."""
    c2, s2 = math.cos(phi) ** 2, math.sin(phi) ** 2
    cs = math.cos(phi) * math.sin(phi)
    rot_p = ("RZ", -HALF_PI)  # exp(+i*pi/4*Z)
    rot_m = ("RZ", +HALF_PI)  # exp(-i*pi/4*Z)
    meas = ("MEAS",)
    return (
        QPDTerm(c2, (), (), False),
        QPDTerm(s2, (("Z",),), (("Z",),), False),
        QPDTerm(cs, (meas,), (rot_p,), True),
        QPDTerm(cs, (rot_p,), (meas,), True),
        QPDTerm(-cs, (meas,), (rot_m,), True),
        QPDTerm(-cs, (rot_m,), (meas,), True),
    )


@dataclass(frozen=True)
class DressedCut:
    """Rewriting of a two-qubit gate as local dressing around a ZZ interaction."""

    qubits: tuple[int, int]
    phi: float  # exponent of the residual exp(i*phi*Z(x)Z)
    pre_ops: tuple[GateOp, ...]
    post_ops: tuple[GateOp, ...]


def cut_dress_gate(op: GateOp) -> DressedCut:
    """Local dressing that reduces CZ / CNOT / RZZ to a pure ZZ interaction.

    CZ equals, up to global phase, exp(-i*pi/4*ZZ) followed by RZ(-pi/2) on
    both qubits; CNOT conjugates CZ by H on the target; RZZ passes through.
    """
    qa, qb = op.qubits if len(op.qubits) == 2 else (None, None)
    if op.kind == "RZZ":
        if op.is_symbolic:
            raise UnboundParameterError("cut RZZ requires a bound angle")
        return DressedCut((qa, qb), -0.5 * op.param, (), ())
    if op.kind == "CZ":
        post = (GateOp("RZ", (qa,), -HALF_PI), GateOp("RZ", (qb,), -HALF_PI))
        return DressedCut((qa, qb), -math.pi / 4.0, (), post)
    if op.kind == "CNOT":
        pre = (GateOp("H", (qb,)),)
        post = (GateOp("RZ", (qa,), -HALF_PI), GateOp("RZ", (qb,), -HALF_PI), GateOp("H", (qb,)))
        return DressedCut((qa, qb), -math.pi / 4.0, pre, post)
    raise UncuttableGateError(f"cannot cut gate kind {op.kind}")


def dressed_equivalent_circuit(op: GateOp) -> Circuit:
    """Uncut realization of the dressed gate (for unitary-oracle checks)."""
    d = cut_dress_gate(op)
    width = max(op.qubits) + 1
    ops = d.pre_ops + (GateOp("RZZ", d.qubits, -2.0 * d.phi),) + d.post_ops
    return Circuit(width).extend(ops)


@dataclass(frozen=True)
class CutSpec:
    index: int  # op position in the base circuit
    dressed: DressedCut
    terms: tuple[QPDTerm, ...]


@dataclass(frozen=True)
class CutPlan:
    base: Circuit
    cuts: tuple[CutSpec, ...]

    @property
    def k(self) -> int:
        return len(self.cuts)

    @property
    def num_subexperiments(self) -> int:
        return 6 ** self.k

    @property
    def sampling_overhead(self) -> float:
        return float(np.prod([gamma(c.dressed.phi) for c in self.cuts])) if self.cuts else 1.0

    def coefficients(self) -> np.ndarray:
        """Signed coefficient per term assignment, in enumeration order."""
        if not self.cuts:
            return np.ones(1)
        per_cut = [np.array([t.coefficient for t in c.terms]) for c in self.cuts]
        out = per_cut[0]
        for vec in per_cut[1:]:
            out = np.outer(out, vec).reshape(-1)
        return out


def plan_cuts(circuit: Circuit, cut_indices, max_cuts: int = 8) -> CutPlan:
    """Build a cut plan for the given op positions (CZ, CNOT, or RZZ)."""
    indices = sorted(set(int(i) for i in cut_indices))
    if len(indices) > max_cuts:
        raise TooManyCutsError(f"{len(indices)} cuts exceeds cap {max_cuts}")
    cuts = []
    for idx in indices:
        if not 0 <= idx < len(circuit.ops):
            raise BadRangeError(f"cut index {idx} out of range")
        op = circuit.ops[idx]
        dressed = cut_dress_gate(op)
        cuts.append(CutSpec(idx, dressed, zz_interaction_terms(dressed.phi)))
    return CutPlan(circuit, tuple(cuts))


def crossing_indices(circuit: Circuit, group: set[int]) -> list[int]:
    """Positions of two-qubit ops with exactly one qubit inside ``group``."""
    out = []
    for idx, op in enumerate(circuit.ops):
        if len(op.qubits) == 2 and (op.qubits[0] in group) != (op.qubits[1] in group):
            out.append(idx)
    return out


def _term_gate_ops(term: QPDTerm, qa: int, qb: int, slot_counter: list[int]) -> list[GateOp]:
    ops = []
    for side_ops, q in ((term.side_a_ops, qa), (term.side_b_ops, qb)):
        for local in side_ops:
            if local[0] == "MEAS":
                ops.append(GateOp("MEASURE_Z_MID", (q,), slot=slot_counter[0]))
                slot_counter[0] += 1
            elif local[0] == "RZ":
                ops.append(GateOp("RZ", (q,), local[1]))
            else:
                ops.append(GateOp(local[0], (q,)))
    return ops


def subexperiment_circuit(plan: CutPlan, assignment: tuple[int, ...]) -> Circuit:
    """The cut-free circuit for one term assignment."""
    cut_at = {c.index: (c, t) for c, t in zip(plan.cuts, assignment)}
    ops: list[GateOp] = []
    slot_counter = [0]
    for idx, op in enumerate(plan.base.ops):
        if idx in cut_at:
            cut, t = cut_at[idx]
            qa, qb = cut.dressed.qubits
            ops.extend(cut.dressed.pre_ops)
            ops.extend(_term_gate_ops(cut.terms[t], qa, qb, slot_counter))
            ops.extend(cut.dressed.post_ops)
        else:
            ops.append(op)
    return Circuit(plan.base.width, tuple(ops), plan.base.params)


def enumerate_subexperiments(plan: CutPlan) -> list[tuple[Circuit, float]]:
    """All 6^k term assignments with their signed coefficients."""
    coeffs = plan.coefficients()
    out = []
    for i, assignment in enumerate(itertools.product(range(6), repeat=plan.k)):
        out.append((subexperiment_circuit(plan, assignment), float(coeffs[i])))
    return out


def sample_subexperiment_terms(
    plan: CutPlan, num_samples: int, seed: int
) -> list[tuple[tuple[int, ...], int]]:
    """Draw term assignments i.i.d. with probability prod|c_i| / Gamma.

    Each sample carries the product of its coefficient signs, so that
    ``Gamma * sign * tally`` averaged over samples is unbiased for the full
    enumeration estimate.
    """
    if num_samples < 1:
        raise BadRangeError("num_samples must be >= 1")
    rng = rng_stream(seed, 3)
    cols = []
    for cut in plan.cuts:
        mags = np.abs([t.coefficient for t in cut.terms])
        cols.append(rng.choice(6, size=num_samples, p=mags / mags.sum()))
    out = []
    for row in range(num_samples):
        assignment = tuple(int(col[row]) for col in cols)
        sign = 1
        for cut, t in zip(plan.cuts, assignment):
            if cut.terms[t].coefficient < 0:
                sign = -sign
        out.append((assignment, sign))
    return out


# --- Grouped exact evolution -------------------------------------------------
# All 6^k term assignments are evolved together as a batch of density
# matrices per circuit fragment.  Each state carries a sign-parity axis: the
# plus/minus components of the accumulated mid-measurement sign.

def _threaded_program(plan: CutPlan) -> list[tuple]:
    cut_at = {c.index: pos for pos, c in enumerate(plan.cuts)}
    items: list[tuple] = []
    for idx, op in enumerate(plan.base.ops):
        if idx in cut_at:
            cut = plan.cuts[cut_at[idx]]
            qa, qb = cut.dressed.qubits
            items.extend(("op", p) for p in cut.dressed.pre_ops)
            alts = []
            for term in cut.terms:
                alt_ops = _term_gate_ops(term, qa, qb, [0])
                alts.append(tuple(alt_ops))
            items.append(("choice", tuple(alts)))
            items.extend(("op", p) for p in cut.dressed.post_ops)
        else:
            items.append(("op", op))
    return items


def _fragment_qubits(plan: CutPlan) -> list[list[int]]:
    """Connected components of the base circuit with cut gates removed."""
    cut_idx = {c.index for c in plan.cuts}
    ops = tuple(op for i, op in enumerate(plan.base.ops) if i not in cut_idx)
    stripped = Circuit(plan.base.width, ops, plan.base.params)
    return [sorted(g) for g in connected_components(stripped)]


class _FragmentEvolver:
    """Batched density-matrix evolution of one fragment over all assignments."""

    def __init__(self, qubits: list[int], program: list[tuple]):
        self.qubits = qubits
        self.nf = len(qubits)
        self.local = {q: i for i, q in enumerate(qubits)}
        self.program = program

    def _ket_axis(self, states: np.ndarray, lq: int) -> int:
        return states.ndim - 2 * self.nf + (self.nf - 1 - lq)

    def _bra_axis(self, states: np.ndarray, lq: int) -> int:
        return states.ndim - self.nf + (self.nf - 1 - lq)

    def _apply_unitary(self, states: np.ndarray, op: GateOp) -> np.ndarray:
        if len(op.qubits) == 1:
            mat = op_matrix(op)
            lq = self.local[op.qubits[0]]
            states = self._axis_1q(states, mat, self._ket_axis(states, lq))
            states = self._axis_1q(states, mat.conj(), self._bra_axis(states, lq))
        else:
            tensor = op_matrix(op)
            la, lb = self.local[op.qubits[0]], self.local[op.qubits[1]]
            states = self._axis_2q(states, tensor, self._ket_axis(states, la),
                                   self._ket_axis(states, lb))
            states = self._axis_2q(states, tensor.conj(), self._bra_axis(states, la),
                                   self._bra_axis(states, lb))
        return states

    @staticmethod
    def _axis_1q(t: np.ndarray, mat: np.ndarray, ax: int) -> np.ndarray:
        out = np.moveaxis(t, ax, -1)
        out = np.einsum("ij,...j->...i", mat, out)
        return np.moveaxis(out, -1, ax)

    @staticmethod
    def _axis_2q(t: np.ndarray, tensor: np.ndarray, axa: int, axb: int) -> np.ndarray:
        out = np.moveaxis(t, (axa, axb), (-2, -1))
        out = np.einsum("abij,...ij->...ab", tensor, out)
        return np.moveaxis(out, (-2, -1), (axa, axb))

    def _apply_measure(self, states: np.ndarray, op: GateOp) -> np.ndarray:
        # rho_plus' = P0 rho_plus P0 + P1 rho_minus P1 (and swapped for minus):
        # the projector keeps the diagonal blocks and the outcome eigenvalue
        # toggles the sign-parity component.
        lq = self.local[op.qubits[0]]
        ka, ba = self._ket_axis(states, lq), self._bra_axis(states, lq)
        out = np.zeros_like(states)
        for v in (0, 1):
            idx = [slice(None)] * states.ndim
            idx[ka] = v
            idx[ba] = v
            idx = tuple(idx)
            block = states[idx]  # (..., 2 sign axis at position 1, ...)
            if v == 0:
                out[idx] = block
            else:
                out[idx] = block[:, ::-1]  # sign axis is axis 1
        return out

    def _apply_alt(self, states: np.ndarray, ops: tuple[GateOp, ...]) -> np.ndarray:
        for op in ops:
            if op.kind == "MEASURE_Z_MID":
                states = self._apply_measure(states, op)
            else:
                states = self._apply_unitary(states, op)
        return states

    def run(self) -> np.ndarray:
        """Returns signed measures of shape (num_assignments, 2, 2^nf)."""
        nf = self.nf
        shape = (1, 2) + (2,) * (2 * nf)
        states = np.zeros(shape, dtype=complex)
        zero = (0, 0) + (0,) * (2 * nf)
        states[zero] = 1.0
        for item in self.program:
            if item[0] == "op":
                op = item[1]
                if set(op.qubits) <= set(self.qubits):
                    states = self._apply_unitary(states, op)
            else:
                alts = item[1]
                expanded = []
                for ops in alts:
                    mine = tuple(op for op in ops if op.qubits[0] in self.local)
                    expanded.append(self._apply_alt(states, mine))
                states = np.stack(expanded, axis=1)
                states = states.reshape((-1,) + states.shape[2:])
        c = states.shape[0]
        dm = states.reshape(c, 2, 1 << nf, 1 << nf)
        return np.real(np.einsum("csii->csi", dm))


def exact_signed_measures(plan: CutPlan, *, split_fragments: bool = True) -> np.ndarray:
    """Exact per-assignment outcome measures, shape (6^k, 2, 2^n).

    Index 0 of the middle axis holds the probability of each outcome arriving
    with accumulated sign +1, index 1 with sign -1.  When ``split_fragments``
    is set, each connected fragment is evolved independently and the joint
    measure is recovered as a sign-resolved outer product.
    """
    if not plan.base.is_bound:
        raise UnboundParameterError("plan base circuit has unbound parameters")
    program = _threaded_program(plan)
    n = plan.base.width
    fragments = _fragment_qubits(plan) if split_fragments else [list(range(n))]
    c_total = plan.num_subexperiments

    joint = np.zeros((c_total, 2, 1))
    joint[:, 0, 0] = 1.0
    idx_map = np.zeros(1, dtype=np.int64)
    for qubits in fragments:
        measures = _FragmentEvolver(qubits, program).run()
        if measures.shape[0] != c_total:
            # fragment saw no choice points (k=0 handled here too)
            measures = np.broadcast_to(measures, (c_total,) + measures.shape[1:])
        df = measures.shape[2]
        contrib = np.zeros(df, dtype=np.int64)
        for v in range(df):
            contrib[v] = sum(((v >> l) & 1) << q for l, q in zip(range(len(qubits)), qubits))
        plus = (joint[:, 0, :, None] * measures[:, 0, None, :]
                + joint[:, 1, :, None] * measures[:, 1, None, :])
        minus = (joint[:, 0, :, None] * measures[:, 1, None, :]
                 + joint[:, 1, :, None] * measures[:, 0, None, :])
        joint = np.stack([plus, minus], axis=1).reshape(c_total, 2, -1)
        idx_map = (idx_map[:, None] + contrib[None, :]).reshape(-1)
    out = np.zeros((c_total, 2, 1 << n))
    out[:, :, idx_map] = joint
    return out


# --- Plan execution ----------------------------------------------------------

@dataclass
class WeightedTally:
    """Signed per-bitstring weights from one executed subexperiment."""

    assignment: tuple[int, ...]
    coefficient: float
    net_weight: np.ndarray
    shots: int | None = None  # None for exact-mode tallies


def _assignment_tuple(index: int, k: int) -> tuple[int, ...]:
    out = []
    for _ in range(k):
        out.append(index % 6)
        index //= 6
    return tuple(reversed(out))


def _config_index(assignment: tuple[int, ...]) -> int:
    idx = 0
    for t in assignment:
        idx = idx * 6 + t
    return idx


def execute_plan(
    plan: CutPlan,
    *,
    engine: str = "exact",
    shots: int = 4096,
    seed: int = 0,
    samples: int | None = None,
    noise: NoiseModel | None = None,
    split_fragments: bool = True,
    stream_tag: int = 0,
) -> list[WeightedTally]:
    """Run every subexperiment of the plan and tally signed outcome weights.

    engine "exact" uses exact trajectory-branch probabilities, "sampled"
    draws ``shots`` per subexperiment from them, "noisy" runs stochastic
    Pauli trajectories under ``noise``.  ``samples`` switches from full
    enumeration to Monte-Carlo assignment sampling; coefficients are then
    ``Gamma * sign * count / samples`` for each distinct assignment.
    """
    k = plan.k
    if samples is None:
        coeffs = plan.coefficients()
        jobs = [(_assignment_tuple(i, k), float(coeffs[i])) for i in range(plan.num_subexperiments)]
    else:
        overhead = plan.sampling_overhead
        counts: Counter = Counter()
        signs: dict[tuple[int, ...], int] = {}
        for assignment, sign in sample_subexperiment_terms(plan, samples, seed):
            counts[assignment] += 1
            signs[assignment] = sign
        jobs = [
            (a, overhead * signs[a] * c / samples)
            for a, c in sorted(counts.items())
        ]

    if engine in ("exact", "sampled"):
        measures = exact_signed_measures(plan, split_fragments=split_fragments)
        tallies = []
        for assignment, coeff in jobs:
            cfg = _config_index(assignment)
            mu = measures[cfg]
            if engine == "exact":
                tallies.append(WeightedTally(assignment, coeff, mu[0] - mu[1], None))
            else:
                rng = rng_stream(seed, 4, stream_tag, cfg)
                p = np.clip(np.concatenate([mu[0], mu[1]]), 0.0, None)
                counts_arr = rng.multinomial(shots, p / p.sum())
                dim = plan.base.dim
                net = (counts_arr[:dim] - counts_arr[dim:]) / shots
                tallies.append(WeightedTally(assignment, coeff, net, shots))
        return tallies

    if engine == "noisy":
        if noise is None:
            raise BadRangeError("noisy engine requires a NoiseModel")
        tallies = []
        for assignment, coeff in jobs:
            circ = subexperiment_circuit(plan, assignment)
            net = noisy_signed_weights(
                circ, noise, shots, seed,
                stream_tag=(stream_tag << 32) + _config_index(assignment),
            )
            tallies.append(WeightedTally(assignment, coeff, net, shots))
        return tallies

    raise BadRangeError(f"unknown engine {engine!r}")


# --- Reconstruction ----------------------------------------------------------

@dataclass
class QuasiDistribution:
    """Signed weight per bitstring; may go negative before normalization."""

    weights: np.ndarray

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def normalized(self) -> tuple[np.ndarray, float]:
        """Clamp negatives to zero and rescale to a probability vector.

        Returns ``(probabilities, clamped_mass)`` where clamped_mass is the
        total negative weight that was discarded.
        """
        clipped = np.clip(self.weights, 0.0, None)
        clamped = float(clipped.sum() - self.weights.sum())
        total = clipped.sum()
        if total <= 0.0:
            return np.full_like(clipped, 1.0 / clipped.size), clamped
        return clipped / total, clamped


def reconstruct_distribution(
    tallies: list[WeightedTally], coefficients=None
) -> QuasiDistribution:
    weights = np.zeros_like(tallies[0].net_weight)
    coeffs = [t.coefficient for t in tallies] if coefficients is None else coefficients
    for tally, c in zip(tallies, coeffs):
        weights = weights + c * tally.net_weight
    return QuasiDistribution(weights)


def reconstruct_expectation(
    tallies: list[WeightedTally], pauli: str, coefficients=None
) -> float:
    """Weighted recombination of a Z/I-string observable.

    Non-diagonal observables are handled by appending basis-change gates to
    the base circuit before planning the cuts.
    """
    eig = pauli_eigenvalues(pauli)
    coeffs = [t.coefficient for t in tallies] if coefficients is None else coefficients
    return float(sum(c * float(tally.net_weight @ eig) for tally, c in zip(tallies, coeffs)))


def required_shots(epsilon: float, delta: float, phis=()) -> int:
    """Hoeffding sample count for accuracy epsilon at confidence 1 - delta.

    The sampling overhead Gamma = prod(1 + 2|sin 2*phi|) over cuts inflates
    the count quadratically.
    """
    if not 0.0 < epsilon < 1.0 or not 0.0 < delta < 1.0:
        raise BadRangeError("epsilon and delta must lie in (0, 1)")
    big_gamma = 1.0
    for phi in phis:
        big_gamma *= gamma(phi)
    return int(math.ceil(big_gamma ** 2 * math.log(2.0 / delta) / (2.0 * epsilon ** 2)))


# --- Export ------------------------------------------------------------------

def tallies_to_json(tallies: list[WeightedTally], width: int) -> str:
    doc = []
    for tally in tallies:
        weights = {
            f"0b{x:0{width}b}": float(w)
            for x, w in enumerate(tally.net_weight)
            if w != 0.0
        }
        doc.append(
            {
                "assignment": list(tally.assignment),
                "coefficient": tally.coefficient,
                "shots": tally.shots,
                "net_weights": weights,
            }
        )
    return json.dumps(doc)
