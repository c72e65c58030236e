"""Variational classifier with gate-cut aware training.

The circuit interleaves trainable mixing blocks (per-qubit RZ-RY-RZ
rotations plus an entangling CNOT ring) with RX angle encoding of the
feature vector.  Measurement data reaches the class scores through one of
three heads (expected value, modulo, or parity), and training uses exact
parameter-shift gradients with an Adagrad update.

Two strategies connect training to cutting: ``fit_then_cut`` trains on the
uncut circuit and applies cuts only at evaluation time; ``cut_then_fit``
routes every forward and gradient evaluation through the cutting pipeline,
with gradient masking of parameters whose contribution falls below a
threshold (masks reset periodically).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import rng_stream
from .circuit import Circuit, GateOp, ParamRef, bind_parameters
from .cutting import crossing_indices, execute_plan, plan_cuts, reconstruct_distribution
from .errors import (
    BadRangeError,
    DimMismatchError,
    EmptyDatasetError,
    HeadConfigError,
    PersistenceError,
)
from .sim import CompiledCircuit, probabilities, run_statevector, sample_shots, empirical_signed_weights

HEADS = ("expected", "modulo", "parity")
STRATEGIES = ("fit_then_cut", "cut_then_fit")

HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class ModelConfig:
    n_qubits: int = 4
    n_classes: int = 3
    layers: int = 1
    depth: int = 2
    head: str = "parity"
    partition: tuple[int, ...] = (0, 1)  # qubits on the first side of the cut

    def __post_init__(self):
        if self.head not in HEADS:
            raise HeadConfigError(f"unknown head {self.head!r}")
        if self.n_classes > (1 << self.n_qubits):
            raise HeadConfigError("more classes than basis states")
        if self.head == "expected" and self.n_classes > self.n_qubits:
            raise HeadConfigError("expected-value head needs one qubit per class")

    @property
    def num_params(self) -> int:
        return self.layers * self.depth * self.n_qubits * 3

    @property
    def weight_shape(self) -> tuple[int, int, int, int]:
        return (self.layers, self.depth, self.n_qubits, 3)


def param_names(config: ModelConfig) -> list[str]:
    return [
        f"w{l}_{d}_{q}_{r}"
        for l in range(config.layers)
        for d in range(config.depth)
        for q in range(config.n_qubits)
        for r in range(3)
    ]


def init_weights(config: ModelConfig, seed: int) -> np.ndarray:
    """Small random angles; large-angle inits train noticeably worse here."""
    return rng_stream(seed, 5).normal(0.0, 0.1, size=config.weight_shape)


def _ring_pairs(n: int, sublayer: int):
    """Entangling ring for one mixing sub-layer.

    The ring range cycles as 1 + (sublayer mod (n-1)); each unordered qubit
    pair appears at most once per ring, so for n=4 the range-2 ring
    contributes two CNOTs rather than four.
    """
    r = 1 + sublayer % (n - 1)
    seen = set()
    for q in range(n):
        t = (q + r) % n
        pair = frozenset((q, t))
        if pair in seen:
            continue
        seen.add(pair)
        yield q, t


def build_model_circuit(
    config: ModelConfig, x: np.ndarray | None, weights: np.ndarray | None = None
) -> Circuit:
    """Mixing blocks followed by RX feature encoding, repeated per layer.

    With ``weights=None`` the rotation angles stay symbolic (named per
    :func:`param_names`); with ``x=None`` the encoding angles stay symbolic
    too (named ``x0``..``x{n-1}``).  Otherwise the circuit is fully bound.
    """
    if x is not None:
        x = np.asarray(x, dtype=float)
        if x.shape != (config.n_qubits,):
            raise DimMismatchError(f"expected {config.n_qubits} features, got {x.shape}")
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != config.weight_shape:
            raise DimMismatchError(
                f"expected weights {config.weight_shape}, got {weights.shape}"
            )
    n = config.n_qubits
    names: list[str] = param_names(config) if weights is None else []
    if x is None:
        names = names + [f"x{q}" for q in range(n)]
    ops: list[GateOp] = []
    kinds = ("RZ", "RY", "RZ")
    for l in range(config.layers):
        for d in range(config.depth):
            for q in range(n):
                for r, kind in enumerate(kinds):
                    if weights is None:
                        angle = ParamRef(f"w{l}_{d}_{q}_{r}")
                    else:
                        angle = float(weights[l, d, q, r])
                    ops.append(GateOp(kind, (q,), angle))
            for qa, qb in _ring_pairs(n, d):
                ops.append(GateOp("CNOT", (qa, qb)))
        for q in range(n):
            angle = ParamRef(f"x{q}") if x is None else float(x[q])
            ops.append(GateOp("RX", (q,), angle))
    return Circuit(n, tuple(ops), tuple(names))


# --- Measurement heads -------------------------------------------------------

def parity_class(b: int, n: int, m: int) -> int:
    """Class of bitstring b: low bits plus a parity of the remaining bits."""
    t = max(1, math.ceil(math.log2(m)))
    low = b & ((1 << t) - 1)
    parity = bin(b >> t).count("1") & 1
    return (low + parity) % m


def expectations_from_probs(probs: np.ndarray, n: int, m: int) -> np.ndarray:
    """Per-class Pauli-Z expectation of the first m qubits."""
    x = np.arange(probs.size)
    return np.array([(probs * (1.0 - 2.0 * ((x >> q) & 1))).sum() for q in range(m)])


_HEAD_MATRIX_CACHE: dict[tuple[str, int, int], np.ndarray] = {}


def head_matrix(config: ModelConfig) -> np.ndarray:
    """Linear map H with scores = H @ probs; every head is linear in probs."""
    key = (config.head, config.n_qubits, config.n_classes)
    if key in _HEAD_MATRIX_CACHE:
        return _HEAD_MATRIX_CACHE[key]
    n, m = config.n_qubits, config.n_classes
    x = np.arange(1 << n)
    if config.head == "expected":
        h = np.stack([1.0 - 2.0 * ((x >> q) & 1) for q in range(m)])
    elif config.head == "modulo":
        h = np.stack([(x % m == c).astype(float) for c in range(m)])
    else:
        classes = np.array([parity_class(b, n, m) for b in x])
        h = np.stack([(classes == c).astype(float) for c in range(m)])
    _HEAD_MATRIX_CACHE[key] = h
    return h


def scores_from_probs(config: ModelConfig, probs: np.ndarray) -> np.ndarray:
    if probs.shape != (1 << config.n_qubits,):
        raise DimMismatchError(f"expected {1 << config.n_qubits} probabilities")
    return head_matrix(config) @ probs


def apply_head(head: str, data: np.ndarray, m: int) -> np.ndarray:
    """Unnormalized class scores from measurement data.

    ``data`` is a probability vector over 2^n bitstrings for the modulo and
    parity heads, or a length-m expectation-value vector for the
    expected-value head.
    """
    data = np.asarray(data, dtype=float)
    if head == "expected":
        if data.shape != (m,):
            raise HeadConfigError(f"expected {m} expectation values")
        return data
    n = int(round(math.log2(data.size)))
    cfg = ModelConfig(n_qubits=n, n_classes=m, head=head)
    return scores_from_probs(cfg, data)


def softmax_nll(scores: np.ndarray, label: int) -> tuple[np.ndarray, float]:
    """Stabilized softmax probabilities and negative log-likelihood."""
    shifted = scores - scores.max()
    exp = np.exp(shifted)
    probs = exp / exp.sum()
    return probs, float(-(shifted[label] - math.log(exp.sum())))


# --- Forward evaluation ------------------------------------------------------

@dataclass(frozen=True)
class EvalMode:
    """How circuit outputs are obtained: exact or sampled, cut or uncut."""

    kind: str = "exact"  # exact | shots | cut_exact | cut_shots
    shots: int = 4096
    seed: int = 0
    qpd_samples: int | None = None

    def __post_init__(self):
        if self.kind not in ("exact", "shots", "cut_exact", "cut_shots"):
            raise BadRangeError(f"unknown evaluation mode {self.kind!r}")

    @property
    def is_cut(self) -> bool:
        return self.kind.startswith("cut")


@dataclass
class EvalCounter:
    """Tracks how many subexperiment executions a computation issued."""

    subexperiments: int = 0
    max_sample_shift: int = 0  # largest per-sample shift-evaluation cost seen


def _cut_probs(
    config: ModelConfig,
    circuit: Circuit,
    mode: EvalMode,
    tag: int,
    counter: EvalCounter | None,
) -> tuple[np.ndarray, float]:
    group = set(config.partition)
    plan = plan_cuts(circuit, crossing_indices(circuit, group))
    engine = "exact" if mode.kind == "cut_exact" else "sampled"
    tallies = execute_plan(
        plan,
        engine=engine,
        shots=mode.shots,
        seed=mode.seed,
        samples=mode.qpd_samples,
        stream_tag=tag,
    )
    if counter is not None:
        counter.subexperiments += len(tallies)
    quasi = reconstruct_distribution(tallies)
    return quasi.normalized()


def forward(
    config: ModelConfig,
    x: np.ndarray,
    weights: np.ndarray,
    mode: EvalMode = EvalMode(),
    *,
    tag: int = 0,
    counter: EvalCounter | None = None,
) -> np.ndarray:
    """Class probability vector for one sample."""
    scores = class_scores(config, x, weights, mode, tag=tag, counter=counter)
    return softmax_nll(scores, 0)[0]


def class_scores(
    config: ModelConfig,
    x: np.ndarray,
    weights: np.ndarray,
    mode: EvalMode,
    *,
    tag: int = 0,
    counter: EvalCounter | None = None,
) -> np.ndarray:
    circuit = build_model_circuit(config, x, weights)
    if mode.kind == "exact":
        probs = probabilities(run_statevector(circuit))
    elif mode.kind == "shots":
        records = sample_shots(circuit, mode.shots, mode.seed, stream_tag=tag)
        probs = np.clip(empirical_signed_weights(records, circuit.dim), 0.0, None)
    else:
        probs, _ = _cut_probs(config, circuit, mode, tag, counter)
    return scores_from_probs(config, probs)


# --- Parameter-shift gradients ----------------------------------------------

def grad_parameter_shift(
    config: ModelConfig,
    batch_x: np.ndarray,
    batch_y: np.ndarray,
    weights: np.ndarray,
    mode: EvalMode = EvalMode(),
    mask: np.ndarray | None = None,
    counter: EvalCounter | None = None,
    tag_base: int = 0,
) -> tuple[np.ndarray, float]:
    """Mean batch gradient via +-pi/2 parameter shifts, plus the mean loss.

    Masked parameters (mask False) are skipped and receive gradient zero.
    The loss gradient chains analytically through head, softmax, and NLL:
    d loss / d w_j = sum_m (p_m - onehot_m) (score_m(w+) - score_m(w-)) / 2.
    """
    p = config.num_params
    if mask is None:
        mask = np.ones(p, dtype=bool)
    if mask.shape != (p,):
        raise DimMismatchError("mask length must equal parameter count")
    flat = np.asarray(weights, dtype=float).reshape(-1)
    active = np.nonzero(mask)[0]
    grad = np.zeros(p)
    total_loss = 0.0
    b = len(batch_y)
    if mode.kind == "exact":
        # One vectorized pass over every (sample, shift) pair.
        names = param_names(config) + [f"x{q}" for q in range(config.n_qubits)]
        runner = CompiledCircuit(build_model_circuit(config, None, None), names)
        a = len(active)
        rows_per = 1 + 2 * a
        vals = np.empty((b * rows_per, p + config.n_qubits))
        for s in range(b):
            lo = s * rows_per
            vals[lo : lo + rows_per, :p] = flat
            vals[lo : lo + rows_per, p:] = batch_x[s]
            for i, j in enumerate(active):
                vals[lo + 1 + 2 * i, j] += HALF_PI
                vals[lo + 2 + 2 * i, j] -= HALF_PI
        states = runner.run(vals)
        scores = np.abs(states) ** 2 @ head_matrix(config).T
        for s, y in enumerate(batch_y):
            lo = s * rows_per
            probs0, loss = softmax_nll(scores[lo], int(y))
            dl_ds = probs0.copy()
            dl_ds[int(y)] -= 1.0
            ds = (scores[lo + 1 : lo + rows_per : 2] - scores[lo + 2 : lo + rows_per : 2]) / 2.0
            grad[active] += ds @ dl_ds
            total_loss += loss
        return grad / b, total_loss / b
    for s, (x, y) in enumerate(zip(batch_x, batch_y)):
        tag = tag_base + s * (2 * p + 1)
        scores0 = class_scores(config, x, weights, mode, tag=tag, counter=counter)
        probs0, loss = softmax_nll(scores0, int(y))
        dl_ds = probs0.copy()
        dl_ds[int(y)] -= 1.0
        before_shifts = counter.subexperiments if counter else 0
        for i, j in enumerate(active):
            up, dn = flat.copy(), flat.copy()
            up[j] += HALF_PI
            dn[j] -= HALF_PI
            s_up = class_scores(
                config, x, up.reshape(config.weight_shape), mode,
                tag=tag + 1 + 2 * i, counter=counter,
            )
            s_dn = class_scores(
                config, x, dn.reshape(config.weight_shape), mode,
                tag=tag + 2 + 2 * i, counter=counter,
            )
            grad[j] += float(dl_ds @ (s_up - s_dn) / 2.0)
        if counter is not None:
            counter.max_sample_shift = max(
                counter.max_sample_shift, counter.subexperiments - before_shifts
            )
        total_loss += loss
    return grad / b, total_loss / b


# --- Adagrad -----------------------------------------------------------------

ADAGRAD_EPS = 1e-10


@dataclass
class OptimizerState:
    accumulator: np.ndarray
    iteration: int = 0
    mask: np.ndarray | None = None  # True = gradient evaluated

    @classmethod
    def fresh(cls, num_params: int) -> "OptimizerState":
        return cls(np.zeros(num_params), 0, np.ones(num_params, dtype=bool))


def adagrad_step(
    state: OptimizerState,
    weights: np.ndarray,
    grads: np.ndarray,
    lr: float,
    weight_decay: float,
) -> np.ndarray:
    """One Adagrad update; masked (unevaluated) parameters stay untouched."""
    shape = weights.shape
    w = weights.reshape(-1).copy()
    g = grads + weight_decay * w
    active = state.mask if state.mask is not None else np.ones_like(w, dtype=bool)
    g = np.where(active, g, 0.0)
    state.accumulator = state.accumulator + g * g
    step = lr * g / (np.sqrt(state.accumulator) + ADAGRAD_EPS)
    w = np.where(active, w - step, w)
    state.iteration += 1
    return w.reshape(shape)


# --- Training ----------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    strategy: str = "fit_then_cut"
    learning_rate: float = 0.1
    weight_decay: float = 1e-4
    batch_size: int = 25
    iterations: int = 55
    shots: int | None = None  # None: exact engine
    qpd_samples: int | None = None
    mask_threshold: float = 1e-9
    mask_reset_period: int = 10
    seed: int = 42

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise BadRangeError("learning rate must be positive")
        if self.mask_threshold < 0.0:
            raise BadRangeError("mask threshold must be >= 0")
        if self.strategy not in STRATEGIES:
            raise BadRangeError(f"unknown strategy {self.strategy!r}")


@dataclass
class FitResult:
    weights: np.ndarray
    state: OptimizerState
    loss_history: list[float]
    backward_evals: list[int]  # cut subexperiment executions per iteration
    backward_shift_evals: list[int] = field(default_factory=list)  # largest per-sample shift cost


def _training_mode(train: TrainConfig) -> EvalMode:
    cut = train.strategy == "cut_then_fit"
    if train.shots is None:
        kind = "cut_exact" if cut else "exact"
    else:
        kind = "cut_shots" if cut else "shots"
    return EvalMode(kind, shots=train.shots or 4096, seed=train.seed,
                    qpd_samples=train.qpd_samples)


def fit(
    config: ModelConfig,
    train: TrainConfig,
    features: np.ndarray,
    labels: np.ndarray,
    initial_weights: np.ndarray | None = None,
) -> FitResult:
    """Train with seeded batch shuffling; deterministic given the config.

    ``cut_then_fit`` evaluates every forward and shift through the cutting
    pipeline and maintains a gradient mask: parameters whose gradient
    magnitude falls below the threshold are skipped until the next periodic
    mask reset.
    """
    if len(labels) == 0:
        raise EmptyDatasetError("training set is empty")
    n_samples = len(labels)
    weights = (
        np.array(initial_weights, dtype=float)
        if initial_weights is not None
        else init_weights(config, train.seed)
    )
    if weights.shape != config.weight_shape:
        raise DimMismatchError("initial weights have wrong shape")
    mode = _training_mode(train)
    masking = train.strategy == "cut_then_fit"
    state = OptimizerState.fresh(config.num_params)
    rng = rng_stream(train.seed, 6)
    order = rng.permutation(n_samples)
    cursor = 0
    losses: list[float] = []
    evals: list[int] = []
    shift_evals: list[int] = []
    for it in range(1, train.iterations + 1):
        if masking and it % train.mask_reset_period == 0:
            state.mask = np.ones(config.num_params, dtype=bool)
        if cursor >= n_samples:
            order = rng.permutation(n_samples)
            cursor = 0
        idx = order[cursor : cursor + train.batch_size]
        cursor += train.batch_size
        counter = EvalCounter()
        grad, loss = grad_parameter_shift(
            config,
            features[idx],
            labels[idx],
            weights,
            mode,
            mask=state.mask,
            counter=counter,
            tag_base=it << 20,
        )
        weights = adagrad_step(state, weights, grad, train.learning_rate, train.weight_decay)
        if masking:
            newly_masked = state.mask & (np.abs(grad) < train.mask_threshold)
            state.mask = state.mask & ~newly_masked
        losses.append(loss)
        evals.append(counter.subexperiments)
        shift_evals.append(counter.max_sample_shift)
    return FitResult(weights, state, losses, evals, shift_evals)


# --- Prediction and evaluation ----------------------------------------------

def predict(
    config: ModelConfig,
    weights: np.ndarray,
    x: np.ndarray,
    mode: EvalMode = EvalMode(),
    *,
    tag: int = 0,
) -> int:
    return int(np.argmax(forward(config, x, weights, mode, tag=tag)))


def score(
    config: ModelConfig,
    weights: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    mode: EvalMode = EvalMode(),
) -> float:
    hits = sum(
        predict(config, weights, x, mode, tag=i) == int(y)
        for i, (x, y) in enumerate(zip(features, labels))
    )
    return hits / len(labels)


def confusion(
    config: ModelConfig,
    weights: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    mode: EvalMode = EvalMode(),
) -> np.ndarray:
    """Counts matrix: rows are true labels, columns predictions."""
    m = config.n_classes
    out = np.zeros((m, m), dtype=int)
    for i, (x, y) in enumerate(zip(features, labels)):
        out[int(y), predict(config, weights, x, mode, tag=i)] += 1
    return out


# --- Model persistence -------------------------------------------------------

def save_model(path, config: ModelConfig, result: FitResult, seed: int) -> None:
    doc = {
        "schema_version": 1,
        "config": {
            "n_qubits": config.n_qubits,
            "n_classes": config.n_classes,
            "layers": config.layers,
            "depth": config.depth,
            "head": config.head,
            "partition": list(config.partition),
        },
        "weights": result.weights.reshape(-1).tolist(),
        "optimizer": {
            "accumulator": result.state.accumulator.tolist(),
            "iteration": result.state.iteration,
            "mask": result.state.mask.astype(int).tolist(),
        },
        "loss_history": result.loss_history,
        "seed": seed,
    }
    try:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise PersistenceError(f"cannot write {path}: {exc}") from exc


def load_model(path) -> tuple[ModelConfig, np.ndarray, dict]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise PersistenceError(f"cannot read {path}: {exc}") from exc
    cfg = doc["config"]
    config = ModelConfig(
        n_qubits=cfg["n_qubits"],
        n_classes=cfg["n_classes"],
        layers=cfg["layers"],
        depth=cfg["depth"],
        head=cfg["head"],
        partition=tuple(cfg["partition"]),
    )
    weights = np.array(doc["weights"], dtype=float).reshape(config.weight_shape)
    return config, weights, doc
