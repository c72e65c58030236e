"""Gate-list circuit representation.

Bitstring convention, fixed project-wide: qubit 0 is the least significant
bit of an outcome index, so outcome ``x`` assigns bit ``(x >> q) & 1`` to
qubit ``q``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import (
    ArityMismatchError,
    IndexOutOfRangeError,
    ParseError,
    UnboundParameterError,
)

# Gate alphabet.  MEASURE_Z_MID is a mid-circuit Z measurement whose outcome
# eigenvalue (+1/-1) multiplies the shot weight; PROJ_PLUS / PROJ_MINUS are
# |0><0| / |1><1| projectors used only inside verification channels.
ONE_QUBIT_KINDS = frozenset(
    {"RX", "RY", "RZ", "H", "X", "Y", "Z", "MEASURE_Z_MID", "PROJ_PLUS", "PROJ_MINUS"}
)
TWO_QUBIT_KINDS = frozenset({"RZZ", "CZ", "CNOT"})
ROTATION_KINDS = frozenset({"RX", "RY", "RZ", "RZZ"})
ALL_KINDS = ONE_QUBIT_KINDS | TWO_QUBIT_KINDS


@dataclass(frozen=True)
class ParamRef:
    """Symbolic reference to a named parameter."""

    name: str


@dataclass(frozen=True)
class GateOp:
    kind: str
    qubits: tuple[int, ...]
    param: float | ParamRef | None = None
    slot: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))

    @property
    def is_symbolic(self) -> bool:
        return isinstance(self.param, ParamRef)


def _check_op(op: GateOp, width: int, params: tuple[str, ...]) -> None:
    if op.kind not in ALL_KINDS:
        raise ArityMismatchError(f"unknown gate kind {op.kind!r}")
    arity = 1 if op.kind in ONE_QUBIT_KINDS else 2
    if len(op.qubits) != arity:
        raise ArityMismatchError(f"{op.kind} expects {arity} qubits, got {len(op.qubits)}")
    if len(set(op.qubits)) != len(op.qubits):
        raise IndexOutOfRangeError(f"duplicate qubit indices in {op}")
    for q in op.qubits:
        if not 0 <= q < width:
            raise IndexOutOfRangeError(f"qubit {q} out of range for width {width}")
    if op.kind in ROTATION_KINDS:
        if op.param is None:
            raise ArityMismatchError(f"{op.kind} requires an angle parameter")
        if isinstance(op.param, ParamRef) and op.param.name not in params:
            raise UnboundParameterError(f"unknown parameter {op.param.name!r}")
    elif op.param is not None:
        raise ArityMismatchError(f"{op.kind} takes no parameter")
    if op.kind == "MEASURE_Z_MID":
        if op.slot is None:
            raise ArityMismatchError("MEASURE_Z_MID requires an outcome slot index")
    elif op.slot is not None:
        raise ArityMismatchError(f"{op.kind} takes no outcome slot")


@dataclass(frozen=True)
class Circuit:
    """Immutable ordered gate list over ``width`` qubits."""

    width: int
    ops: tuple[GateOp, ...] = ()
    params: tuple[str, ...] = ()

    def __post_init__(self):
        if self.width < 1:
            raise IndexOutOfRangeError("circuit width must be >= 1")
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "params", tuple(self.params))
        for op in self.ops:
            _check_op(op, self.width, self.params)

    @property
    def dim(self) -> int:
        return 1 << self.width

    @property
    def is_bound(self) -> bool:
        return not any(op.is_symbolic for op in self.ops)

    def append(self, op: GateOp) -> "Circuit":
        _check_op(op, self.width, self.params)
        return Circuit(self.width, self.ops + (op,), self.params)

    def extend(self, ops) -> "Circuit":
        circ = self
        for op in ops:
            circ = circ.append(op)
        return circ

    def num_mid_measurements(self) -> int:
        return sum(op.kind == "MEASURE_Z_MID" for op in self.ops)


def append(circuit: Circuit, op: GateOp) -> Circuit:
    return circuit.append(op)


def bind_parameters(circuit: Circuit, values: dict[str, float]) -> Circuit:
    """Replace every symbolic angle with its value from ``values``."""
    missing = {op.param.name for op in circuit.ops if op.is_symbolic} - set(values)
    if missing:
        raise UnboundParameterError(f"missing values for {sorted(missing)}")
    ops = tuple(
        GateOp(op.kind, op.qubits, float(values[op.param.name]), op.slot)
        if op.is_symbolic
        else op
        for op in circuit.ops
    )
    return Circuit(circuit.width, ops, ())


def connected_components(circuit: Circuit) -> list[frozenset[int]]:
    """Qubits grouped by transitive sharing of two-qubit gates.

    Single-qubit gates and mid-circuit measurements do not connect qubits.
    Components are returned sorted by smallest member.
    """
    parent = list(range(circuit.width))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for op in circuit.ops:
        if len(op.qubits) == 2:
            ra, rb = find(op.qubits[0]), find(op.qubits[1])
            if ra != rb:
                parent[rb] = ra
    groups: dict[int, set[int]] = {}
    for q in range(circuit.width):
        groups.setdefault(find(q), set()).add(q)
    return sorted((frozenset(g) for g in groups.values()), key=min)


# --- JSON serialization -----------------------------------------------------
# Schema: {"width": int, "params": [names], "ops": [{"kind", "qubits",
# "param": float | {"ref": name} | null, "slot": int | null}]}

def to_json_dict(circuit: Circuit) -> dict:
    ops = []
    for op in circuit.ops:
        if isinstance(op.param, ParamRef):
            param = {"ref": op.param.name}
        else:
            param = op.param
        ops.append({"kind": op.kind, "qubits": list(op.qubits), "param": param, "slot": op.slot})
    return {"width": circuit.width, "params": list(circuit.params), "ops": ops}


def to_json(circuit: Circuit) -> str:
    return json.dumps(to_json_dict(circuit))


def from_json_dict(doc: dict) -> Circuit:
    try:
        width = doc["width"]
        names = tuple(doc["params"])
        ops = []
        for entry in doc["ops"]:
            kind = entry["kind"]
            if kind not in ALL_KINDS:
                raise ParseError(f"unknown gate kind {kind!r}")
            param = entry.get("param")
            if isinstance(param, dict):
                param = ParamRef(param["ref"])
            elif param is not None:
                param = float(param)
            ops.append(GateOp(kind, tuple(entry["qubits"]), param, entry.get("slot")))
        return Circuit(width, tuple(ops), names)
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed circuit document: {exc}") from exc
    except (IndexOutOfRangeError, ArityMismatchError, UnboundParameterError) as exc:
        raise ParseError(f"invalid circuit: {exc}") from exc


def from_json(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return from_json_dict(doc)


# --- Small builders ---------------------------------------------------------

def ghz_circuit() -> Circuit:
    """Two-qubit GHZ preparation: H on qubit 0 followed by CNOT(0, 1)."""
    return Circuit(2).append(GateOp("H", (0,))).append(GateOp("CNOT", (0, 1)))
