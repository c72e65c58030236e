import json
import math

import numpy as np
import pytest

from cutkit.circuit import Circuit, GateOp, ghz_circuit
from cutkit.cutting import (
    crossing_indices,
    cut_dress_gate,
    dressed_equivalent_circuit,
    enumerate_subexperiments,
    execute_plan,
    gamma,
    plan_cuts,
    reconstruct_distribution,
    reconstruct_expectation,
    required_shots,
    sample_subexperiment_terms,
    subexperiment_circuit,
    tallies_to_json,
    zz_interaction_terms,
)
from cutkit.errors import TooManyCutsError, UncuttableGateError
from cutkit.sim import (
    channel_oracle,
    circuit_unitary_oracle,
    expectation_pauli,
    probabilities,
    run_statevector,
)

RNG = np.random.default_rng(11)


def _zz_unitary(phi):
    return np.diag(np.exp(1j * phi * np.array([1, -1, -1, 1])))


def _phase_aligned(u, v):
    k = np.argmax(np.abs(v))
    return u * (v.flat[k] / u.flat[k] / abs(v.flat[k] / u.flat[k]))


def test_gamma_values():
    assert gamma(0.0) == pytest.approx(1.0)
    assert gamma(math.pi / 4) == pytest.approx(3.0)
    assert gamma(-math.pi / 4) == pytest.approx(3.0)


def test_term_coefficients_sum():
    for phi in RNG.uniform(-math.pi, math.pi, 10):
        terms = zz_interaction_terms(phi)
        assert len(terms) == 6
        assert sum(t.coefficient for t in terms) == pytest.approx(1.0)
        assert sum(abs(t.coefficient) for t in terms) == pytest.approx(gamma(phi))


def test_decomposition_recombines_to_channel():
    # Weighted sum of the six local channels equals conjugation by exp(i phi ZZ).
    for phi in RNG.uniform(-math.pi, math.pi, 5):
        u = _zz_unitary(phi)
        for _ in range(3):
            a = RNG.normal(size=(4, 4)) + 1j * RNG.normal(size=(4, 4))
            rho = a @ a.conj().T
            rho /= np.trace(rho)
            target = u @ rho @ u.conj().T
            total = np.zeros((4, 4), dtype=complex)
            for term in zz_interaction_terms(phi):
                for weight, a_ops, b_ops in term.projective_variants():
                    ops = []
                    for q, local in ((0, a_ops), (1, b_ops)):
                        for spec in local:
                            kind, *angle = spec
                            ops.append(GateOp(kind, (q,), angle[0] if angle else None))
                    variant = Circuit(2, tuple(ops))
                    total += term.coefficient * weight * channel_oracle(variant, rho)
            assert np.abs(total - target).max() < 1e-12


def test_cz_cnot_dressings_match_targets():
    cz = np.diag([1, 1, 1, -1]).astype(complex)
    cnot = np.array(
        [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
    )  # control qubit 0 (LSB), target qubit 1
    for op, target in ((GateOp("CZ", (0, 1)), cz), (GateOp("CNOT", (0, 1)), cnot)):
        u = circuit_unitary_oracle(dressed_equivalent_circuit(op))
        assert np.abs(_phase_aligned(u, target) - target).max() < 1e-12


def test_uncuttable_gate_rejected():
    with pytest.raises(UncuttableGateError):
        cut_dress_gate(GateOp("H", (0,)))


def test_too_many_cuts_rejected():
    ops = tuple(GateOp("CZ", (0, 1)) for _ in range(9))
    c = Circuit(2, ops)
    with pytest.raises(TooManyCutsError):
        plan_cuts(c, list(range(9)))


def test_crossing_indices_ghz():
    c = ghz_circuit()
    assert crossing_indices(c, {0}) == [1]


def test_subexperiments_are_cut_free_and_counted():
    c = ghz_circuit()
    plan = plan_cuts(c, [1])
    assert plan.num_subexperiments == 6
    subs = enumerate_subexperiments(plan)
    assert len(subs) == 6
    for circuit, _ in subs:
        assert all(len(op.qubits) == 1 for op in circuit.ops)


def test_ghz_exact_reconstruction():
    c = ghz_circuit()
    plan = plan_cuts(c, [1])
    tallies = execute_plan(plan, engine="exact")
    q = reconstruct_distribution(tallies).weights
    assert np.allclose(q, [0.5, 0, 0, 0.5], atol=1e-12)
    assert reconstruct_expectation(tallies, "ZZ") == pytest.approx(1.0)
    assert reconstruct_expectation(tallies, "ZI") == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("entangler", ["CZ", "CNOT", "RZZ"])
def test_exact_reconstruction_random_circuits(entangler):
    for trial in range(3):
        rng = np.random.default_rng(100 + trial)
        ops = []
        for q in range(3):
            ops.append(GateOp("RY", (q,), float(rng.uniform(-3, 3))))
        param = float(rng.uniform(-3, 3)) if entangler == "RZZ" else None
        ops.append(GateOp(entangler, (0, 1), param))
        ops.append(GateOp("CZ", (1, 2)))
        for q in range(3):
            ops.append(GateOp("RX", (q,), float(rng.uniform(-3, 3))))
        c = Circuit(3, tuple(ops))
        cut_at = [i for i, op in enumerate(c.ops) if op.qubits == (0, 1) and len(op.qubits) == 2]
        plan = plan_cuts(c, cut_at)
        q = reconstruct_distribution(execute_plan(plan, engine="exact")).weights
        p = probabilities(run_statevector(c))
        assert np.abs(q - p).max() < 1e-10


def test_fragment_and_joint_execution_agree():
    c = ghz_circuit()
    plan = plan_cuts(c, [1])
    q_split = reconstruct_distribution(execute_plan(plan, engine="exact", split_fragments=True))
    q_joint = reconstruct_distribution(execute_plan(plan, engine="exact", split_fragments=False))
    assert np.allclose(q_split.weights, q_joint.weights, atol=1e-12)


def test_sampled_engine_converges():
    c = ghz_circuit()
    plan = plan_cuts(c, [1])
    tallies = execute_plan(plan, engine="sampled", shots=100_000, seed=2)
    q = reconstruct_distribution(tallies).weights
    assert np.abs(q - np.array([0.5, 0, 0, 0.5])).sum() < 0.02


def test_sampled_engine_deterministic():
    c = ghz_circuit()
    plan = plan_cuts(c, [1])
    a = execute_plan(plan, engine="sampled", shots=1000, seed=4)
    b = execute_plan(plan, engine="sampled", shots=1000, seed=4)
    for ta, tb in zip(a, b):
        assert np.array_equal(ta.net_weight, tb.net_weight)


def test_assignment_sampling_distribution():
    c = ghz_circuit()
    plan = plan_cuts(c, [1])
    draws = sample_subexperiment_terms(plan, 6000, seed=0)
    assert len(draws) == 6000
    counts = {}
    for assignment, sign in draws:
        counts[assignment] = counts.get(assignment, 0) + 1
        assert sign in (-1, 1)
    # CNOT cut: all six terms have |c|/gamma = 1/6 sampling probability.
    for n in counts.values():
        assert abs(n / 6000 - 1 / 6) < 0.03


def test_monte_carlo_reconstruction_unbiased():
    c = ghz_circuit()
    plan = plan_cuts(c, [1])
    tallies = execute_plan(plan, engine="exact", samples=4000, seed=8)
    q = reconstruct_distribution(tallies).weights
    assert np.abs(q - np.array([0.5, 0, 0, 0.5])).sum() < 0.1


def test_normalized_quasi_distribution():
    c = ghz_circuit()
    plan = plan_cuts(c, [1])
    tallies = execute_plan(plan, engine="sampled", shots=2000, seed=3)
    probs, clamped = reconstruct_distribution(tallies).normalized()
    assert probs.min() >= 0.0
    assert probs.sum() == pytest.approx(1.0)
    assert clamped >= 0.0


def test_required_shots_hoeffding():
    # No cuts: N = ceil(ln(2/delta) / (2 eps^2)).
    assert required_shots(0.1, 0.05) == math.ceil(math.log(2 / 0.05) / 0.02)
    # One CZ-angle cut triples gamma, so the budget scales by 9.
    n1 = required_shots(0.1, 0.05, phis=(math.pi / 4,))
    assert n1 == math.ceil(9 * math.log(2 / 0.05) / 0.02)


def test_sampling_overhead_product():
    c = Circuit(2, (GateOp("CZ", (0, 1)), GateOp("CZ", (0, 1))))
    plan = plan_cuts(c, [0, 1])
    assert plan.sampling_overhead == pytest.approx(9.0)
    assert plan.num_subexperiments == 36


def test_tallies_json_export():
    c = ghz_circuit()
    plan = plan_cuts(c, [1])
    tallies = execute_plan(plan, engine="sampled", shots=500, seed=1)
    doc = json.loads(tallies_to_json(tallies, c.width))
    assert len(doc) == 6 or "tallies" in doc
