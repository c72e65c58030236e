"""Command-line experiment harness.

Four subcommands drive the main experiments and write machine-readable
reports: ``validate`` reconstructs cut circuits against exact distributions,
``train`` fits the variational classifier, ``eval-cut`` compares cut and
uncut predictions of a saved model, and ``noise-compare`` measures the
distribution error of cut versus uncut execution under a Pauli noise model.

Every command is deterministic for a fixed ``--seed``; reports echo the
effective configuration and separate metrics from wall-clock timing so that
metric blocks are byte-identical across repeated runs.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from ._rng import rng_stream
from .circuit import Circuit, GateOp, ghz_circuit
from .classifier import (
    EvalMode,
    ModelConfig,
    TrainConfig,
    build_model_circuit,
    confusion,
    fit,
    init_weights,
    load_model,
    predict,
    save_model,
    score,
)
from .cutting import (
    crossing_indices,
    execute_plan,
    plan_cuts,
    reconstruct_distribution,
    reconstruct_expectation,
)
from .data import load_iris, persist_results, scale_to_angle, split
from .errors import CutkitError, PersistenceError
from .sim import (
    NoiseModel,
    empirical_signed_weights,
    expectation_pauli,
    noisy_signed_weights,
    probabilities,
    run_statevector,
    sample_shots,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DOMAIN = 4
EXIT_CONSISTENCY = 5


def _haar_single_qubit_angles(rng: np.random.Generator) -> tuple[float, float, float]:
    """Euler angles (RZ, RY, RZ) of a Haar-random 2x2 unitary, up to phase."""
    alpha = rng.uniform(0.0, 2.0 * math.pi)
    gamma = rng.uniform(0.0, 2.0 * math.pi)
    beta = 2.0 * math.asin(math.sqrt(rng.uniform()))
    return alpha, beta, gamma


ENTANGLING_LAYERS = 3


def random_two_qubit_circuit(seed: int, entangling_layers: int = ENTANGLING_LAYERS) -> Circuit:
    """Haar-random single-qubit layers alternating with CZ entanglers."""
    rng = rng_stream(seed, 7)
    ops = []
    for layer in range(entangling_layers + 1):
        for q in range(2):
            a, b, g = _haar_single_qubit_angles(rng)
            ops.extend([GateOp("RZ", (q,), a), GateOp("RY", (q,), b), GateOp("RZ", (q,), g)])
        if layer < entangling_layers:
            ops.append(GateOp("CZ", (0, 1)))
    return Circuit(2, tuple(ops))


def total_deviation(q: np.ndarray, p: np.ndarray) -> float:
    """Sum over basis states of the absolute probability difference."""
    return float(np.abs(q - p).sum())


# --- validate ----------------------------------------------------------------

def _validate_circuit(circuit: Circuit, runs: int, shots: int, seed: int, exact: bool) -> dict:
    p_exact = probabilities(run_statevector(circuit))
    plan = plan_cuts(circuit, crossing_indices(circuit, {0}))
    observables = ["ZZ", "ZI", "IZ"]
    exact_exps = {obs: expectation_pauli(run_statevector(circuit), obs) for obs in observables}
    engine = "exact" if exact else "sampled"
    cut_devs, uncut_devs = [], []
    exp_errs = {obs: [] for obs in observables}
    mean_q = np.zeros(circuit.dim)
    for r in range(runs):
        tallies = execute_plan(plan, engine=engine, shots=shots, seed=seed, stream_tag=r)
        q = reconstruct_distribution(tallies).weights
        mean_q += q / runs
        cut_devs.append(total_deviation(q, p_exact))
        for obs in observables:
            est = reconstruct_expectation(tallies, obs)
            exp_errs[obs].append(abs(est - exact_exps[obs]))
        if exact:
            uncut_devs.append(0.0)
        else:
            records = sample_shots(circuit, shots, seed, stream_tag=(1 << 40) + r)
            w = empirical_signed_weights(records, circuit.dim)
            uncut_devs.append(total_deviation(w, p_exact))
    return {
        "cut_deviation_mean": float(np.mean(cut_devs)),
        "cut_deviation_std": float(np.std(cut_devs)),
        "cut_deviation_of_mean": total_deviation(mean_q, p_exact),
        "uncut_deviation_mean": float(np.mean(uncut_devs)),
        "uncut_deviation_std": float(np.std(uncut_devs)),
        "expectation_abs_error_mean": {
            obs: float(np.mean(v)) for obs, v in exp_errs.items()
        },
        "per_run_cut_deviation": [float(v) for v in cut_devs],
        "num_subexperiments": plan.num_subexperiments,
        "sampling_overhead": plan.sampling_overhead,
    }


def cmd_validate(args) -> int:
    t0 = time.monotonic()
    circuits = {
        "ghz": ghz_circuit(),
        "random": random_two_qubit_circuit(args.seed),
    }
    metrics = {
        name: _validate_circuit(c, args.runs, args.shots, args.seed, args.exact)
        for name, c in circuits.items()
    }
    report = {
        "schema_version": 1,
        "experiment": "validate",
        "config": {
            "seed": args.seed,
            "shots": args.shots,
            "runs": args.runs,
            "exact": args.exact,
        },
        "metrics": metrics,
        "wall_clock_s": time.monotonic() - t0,
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    persist_results(out / "validate_report.json", report)
    for name, m in metrics.items():
        print(
            f"{name}: cut deviation {m['cut_deviation_mean']:.5f} "
            f"+- {m['cut_deviation_std']:.5f} "
            f"(averaged distribution {m['cut_deviation_of_mean']:.5f}), "
            f"uncut {m['uncut_deviation_mean']:.5f}"
        )
    for m in metrics.values():
        recomputed = float(np.mean(m["per_run_cut_deviation"]))
        if abs(recomputed - m["cut_deviation_mean"]) > 1e-12:
            print("consistency check failed: aggregate != recomputation", file=sys.stderr)
            return EXIT_CONSISTENCY
    return EXIT_OK


# --- train -------------------------------------------------------------------

def cmd_train(args) -> int:
    t0 = time.monotonic()
    dataset = load_iris()
    train_set, test_set = split(dataset, seed=args.seed)
    x_train, x_test = train_set.features, test_set.features
    if args.scale:
        x_train, x_test = scale_to_angle(x_train), scale_to_angle(x_test)
    config = ModelConfig(head=args.model)
    train_cfg = TrainConfig(
        strategy=args.strategy.replace("-", "_"),
        learning_rate=args.lr,
        weight_decay=args.weight_decay,
        batch_size=args.batch_size,
        iterations=args.iterations,
        shots=None if args.exact else args.shots,
        qpd_samples=args.qpd_samples,
        mask_threshold=args.mask_threshold,
        mask_reset_period=args.mask_reset,
        seed=args.seed,
    )
    initial = None
    if args.warm_start:
        warm_config, warm_weights, _ = load_model(args.warm_start)
        if warm_config != config:
            print("warm-start model configuration does not match", file=sys.stderr)
            return EXIT_USAGE
        initial = warm_weights
    result = fit(config, train_cfg, x_train, train_set.labels, initial_weights=initial)
    acc_train = score(config, result.weights, x_train, train_set.labels)
    acc_test = score(config, result.weights, x_test, test_set.labels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / f"model_{args.model}_{train_cfg.strategy}.json"
    save_model(model_path, config, result, args.seed)
    report = {
        "schema_version": 1,
        "experiment": "train",
        "config": {
            "model": args.model,
            "strategy": train_cfg.strategy,
            "seed": args.seed,
            "lr": args.lr,
            "weight_decay": args.weight_decay,
            "batch_size": args.batch_size,
            "iterations": args.iterations,
            "shots": train_cfg.shots,
            "qpd_samples": args.qpd_samples,
            "mask_threshold": args.mask_threshold,
            "mask_reset": args.mask_reset,
            "scale": args.scale,
            "warm_start": args.warm_start,
        },
        "metrics": {
            "train_accuracy": acc_train,
            "test_accuracy": acc_test,
            "loss_history": result.loss_history,
            "final_loss": result.loss_history[-1],
            "backward_subexperiments": result.backward_evals,
        },
        "model_file": str(model_path),
        "wall_clock_s": time.monotonic() - t0,
    }
    persist_results(out / "train_report.json", report)
    print(
        f"{args.model}/{train_cfg.strategy}: train accuracy {acc_train:.3f}, "
        f"test accuracy {acc_test:.3f}, "
        f"loss {result.loss_history[0]:.4f} -> {result.loss_history[-1]:.4f}"
    )
    print(f"model written to {model_path}")
    return EXIT_OK


# --- eval-cut ----------------------------------------------------------------

def _confusion_csv(matrix: np.ndarray) -> str:
    lines = ["true\\pred," + ",".join(str(c) for c in range(matrix.shape[1]))]
    for r, row in enumerate(matrix):
        lines.append(f"{r}," + ",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def cmd_eval_cut(args) -> int:
    t0 = time.monotonic()
    config, weights, doc = load_model(args.model_file)
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    dataset = load_iris()
    _, test_set = split(dataset, seed=seed)
    x_test = scale_to_angle(test_set.features) if args.scale else test_set.features
    if args.exact:
        uncut_mode = EvalMode("exact")
        cut_mode = EvalMode("cut_exact")
    else:
        uncut_mode = EvalMode("shots", shots=args.shots, seed=seed)
        cut_mode = EvalMode("cut_shots", shots=args.shots, seed=seed)
    preds_uncut = [predict(config, weights, x, uncut_mode, tag=i) for i, x in enumerate(x_test)]
    preds_cut = [
        predict(config, weights, x, cut_mode, tag=(1 << 41) + i) for i, x in enumerate(x_test)
    ]
    agreement = float(np.mean([a == b for a, b in zip(preds_uncut, preds_cut)]))
    deviations = []
    for i, x in enumerate(x_test):
        circuit = build_model_circuit(config, x, weights)
        p_exact = probabilities(run_statevector(circuit))
        plan = plan_cuts(circuit, crossing_indices(circuit, set(config.partition)))
        tallies = execute_plan(
            plan,
            engine="exact" if args.exact else "sampled",
            shots=args.shots,
            seed=seed,
            stream_tag=(1 << 42) + i,
        )
        q = reconstruct_distribution(tallies).weights
        deviations.append(total_deviation(q, p_exact))
    labels = test_set.labels
    conf_uncut = np.zeros((config.n_classes, config.n_classes), dtype=int)
    conf_cut = np.zeros_like(conf_uncut)
    for y, pu, pc in zip(labels, preds_uncut, preds_cut):
        conf_uncut[int(y), pu] += 1
        conf_cut[int(y), pc] += 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "confusion_uncut.csv").write_text(_confusion_csv(conf_uncut))
    (out / "confusion_cut.csv").write_text(_confusion_csv(conf_cut))
    report = {
        "schema_version": 1,
        "experiment": "eval-cut",
        "config": {
            "model_file": str(args.model_file),
            "seed": seed,
            "shots": args.shots,
            "exact": args.exact,
            "scale": args.scale,
        },
        "metrics": {
            "uncut_accuracy": float(np.mean([p == int(y) for p, y in zip(preds_uncut, labels)])),
            "cut_accuracy": float(np.mean([p == int(y) for p, y in zip(preds_cut, labels)])),
            "agreement_rate": agreement,
            "mean_accumulated_deviation": float(np.mean(deviations)),
            "per_sample_deviation": [float(v) for v in deviations],
            "confusion_uncut": conf_uncut.tolist(),
            "confusion_cut": conf_cut.tolist(),
        },
        "wall_clock_s": time.monotonic() - t0,
    }
    persist_results(out / "eval_cut_report.json", report)
    print(
        f"agreement {agreement:.3f}, uncut accuracy "
        f"{report['metrics']['uncut_accuracy']:.3f}, cut accuracy "
        f"{report['metrics']['cut_accuracy']:.3f}, mean deviation "
        f"{report['metrics']['mean_accumulated_deviation']:.5f}"
    )
    conf_sum = int(conf_uncut.sum())
    if conf_sum != len(labels):
        print("consistency check failed: confusion counts != samples", file=sys.stderr)
        return EXIT_CONSISTENCY
    return EXIT_OK


# --- noise-compare -----------------------------------------------------------

def cmd_noise_compare(args) -> int:
    t0 = time.monotonic()
    config, weights, doc = load_model(args.model_file)
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    dataset = load_iris()
    _, test_set = split(dataset, seed=seed)
    x_test = scale_to_angle(test_set.features) if args.scale else test_set.features
    x = x_test[args.sample_index]
    circuit = build_model_circuit(config, x, weights)
    p_exact = probabilities(run_statevector(circuit))
    plan = plan_cuts(circuit, crossing_indices(circuit, set(config.partition)))
    noise = NoiseModel(p1=args.p1, p2=args.p2, p_ro=args.p_ro)
    uncut_runs = np.zeros((args.runs, circuit.dim))
    cut_runs = np.zeros_like(uncut_runs)
    for r in range(args.runs):
        uncut_runs[r] = noisy_signed_weights(circuit, noise, args.shots, seed, stream_tag=r)
        tallies = execute_plan(
            plan, engine="noisy", shots=args.shots, seed=seed, noise=noise, stream_tag=r
        )
        cut_runs[r] = reconstruct_distribution(tallies).weights
    uncut_devs = np.abs(uncut_runs - p_exact).sum(axis=1)
    cut_devs = np.abs(cut_runs - p_exact).sum(axis=1)
    metrics = {
        "uncut_error_mean": float(uncut_devs.mean()),
        "uncut_error_std": float(uncut_devs.std()),
        "cut_error_mean": float(cut_devs.mean()),
        "cut_error_std": float(cut_devs.std()),
        "cut_over_uncut_ratio": float(cut_devs.mean() / max(uncut_devs.mean(), 1e-300)),
        "per_run_uncut_error": [float(v) for v in uncut_devs],
        "per_run_cut_error": [float(v) for v in cut_devs],
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["bitstring,exact_p,uncut_mean,uncut_std,cut_mean,cut_std"]
    for b in range(circuit.dim):
        lines.append(
            f"{b:0{circuit.width}b},{p_exact[b]:.10f},"
            f"{uncut_runs[:, b].mean():.10f},{uncut_runs[:, b].std():.10f},"
            f"{cut_runs[:, b].mean():.10f},{cut_runs[:, b].std():.10f}"
        )
    (out / "noise_compare.csv").write_text("\n".join(lines) + "\n")
    report = {
        "schema_version": 1,
        "experiment": "noise-compare",
        "config": {
            "model_file": str(args.model_file),
            "seed": seed,
            "shots": args.shots,
            "runs": args.runs,
            "p1": args.p1,
            "p2": args.p2,
            "p_ro": args.p_ro,
            "sample_index": args.sample_index,
            "scale": args.scale,
        },
        "metrics": metrics,
        "wall_clock_s": time.monotonic() - t0,
    }
    persist_results(out / "noise_compare_report.json", report)
    print(
        f"uncut error {metrics['uncut_error_mean']:.4f} +- {metrics['uncut_error_std']:.4f}, "
        f"cut error {metrics['cut_error_mean']:.4f} +- {metrics['cut_error_std']:.4f}, "
        f"ratio {metrics['cut_over_uncut_ratio']:.3f}"
    )
    recomputed = float(np.mean(metrics["per_run_cut_error"]))
    if abs(recomputed - metrics["cut_error_mean"]) > 1e-12:
        print("consistency check failed: aggregate != recomputation", file=sys.stderr)
        return EXIT_CONSISTENCY
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser, seed_default=0) -> None:
    parser.add_argument("--seed", type=int, default=seed_default, help="master random seed")
    parser.add_argument("--shots", type=int, default=4096, help="shots per subexperiment")
    parser.add_argument("--runs", type=int, default=100, help="number of repetitions")
    parser.add_argument("--out", default="out", help="output directory for reports")
    parser.add_argument(
        "--exact", action="store_true", help="use the exact engine instead of sampling"
    )
    parser.add_argument(
        "--scale", action="store_true", help="min-max scale features to [0, pi]"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cutkit", description="circuit-cutting experiment harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="cut-reconstruction validation experiments")
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train", help="train the variational classifier")
    _add_common(p, seed_default=42)
    p.add_argument("--model", choices=("expected", "modulo", "parity"), default="parity")
    p.add_argument(
        "--strategy", choices=("fit-then-cut", "cut-then-fit"), default="fit-then-cut"
    )
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=25)
    p.add_argument("--iterations", type=int, default=55)
    p.add_argument("--warm-start", default=None, help="model file with initial weights")
    p.add_argument("--mask-threshold", type=float, default=1e-9)
    p.add_argument("--mask-reset", type=int, default=10)
    p.add_argument(
        "--qpd-samples", type=int, default=None,
        help="Monte-Carlo subexperiment sampling budget (default: full enumeration)",
    )
    p.set_defaults(func=cmd_train, exact=True)
    p.add_argument(
        "--sampled", dest="exact", action="store_false",
        help="use shot sampling during training instead of exact evaluation",
    )

    p = sub.add_parser("eval-cut", help="compare cut vs uncut predictions of a model")
    p.add_argument("model_file", help="trained model JSON file")
    _add_common(p, seed_default=None)
    p.set_defaults(func=cmd_eval_cut)

    p = sub.add_parser("noise-compare", help="cut vs uncut error under Pauli noise")
    p.add_argument("model_file", help="trained model JSON file")
    _add_common(p, seed_default=None)
    p.add_argument("--p1", type=float, default=0.0005, help="Pauli error rate after 1q gates")
    p.add_argument("--p2", type=float, default=0.05, help="Pauli error rate after 2q gates")
    p.add_argument("--p-ro", type=float, default=0.003, help="readout bit-flip probability")
    p.add_argument("--sample-index", type=int, default=0, help="test sample to evaluate")
    p.set_defaults(func=cmd_noise_compare, runs=50)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PersistenceError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CutkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
