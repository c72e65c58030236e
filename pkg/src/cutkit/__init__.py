"""Quantum circuit cutting toolkit.

Cuts two-qubit gates into signed mixtures of single-qubit operations and
mid-circuit measurements, reconstructs distributions and expectation values
from the weighted subexperiments, and trains a small variational classifier
either before or through the cutting pipeline.
"""
from .circuit import Circuit, GateOp, ParamRef, bind_parameters, ghz_circuit
from .classifier import (
    EvalMode,
    FitResult,
    ModelConfig,
    TrainConfig,
    build_model_circuit,
    fit,
    forward,
    init_weights,
    load_model,
    predict,
    save_model,
    score,
)
from .cutting import (
    CutPlan,
    QPDTerm,
    QuasiDistribution,
    WeightedTally,
    crossing_indices,
    cut_dress_gate,
    enumerate_subexperiments,
    execute_plan,
    gamma,
    plan_cuts,
    reconstruct_distribution,
    reconstruct_expectation,
    required_shots,
    subexperiment_circuit,
    zz_interaction_terms,
)
from .data import Dataset, load_iris, persist_results, scale_to_angle, split
from .errors import CutkitError
from .sim import (
    CompiledCircuit,
    NoiseModel,
    ShotRecord,
    expectation_pauli,
    noisy_signed_weights,
    noisy_trajectory_sample,
    probabilities,
    run_statevector,
    sample_shots,
    signed_measure,
)

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "GateOp",
    "ParamRef",
    "bind_parameters",
    "ghz_circuit",
    "EvalMode",
    "FitResult",
    "ModelConfig",
    "TrainConfig",
    "build_model_circuit",
    "fit",
    "forward",
    "init_weights",
    "load_model",
    "predict",
    "save_model",
    "score",
    "CutPlan",
    "QPDTerm",
    "QuasiDistribution",
    "WeightedTally",
    "crossing_indices",
    "cut_dress_gate",
    "enumerate_subexperiments",
    "execute_plan",
    "gamma",
    "plan_cuts",
    "reconstruct_distribution",
    "reconstruct_expectation",
    "required_shots",
    "subexperiment_circuit",
    "zz_interaction_terms",
    "Dataset",
    "load_iris",
    "persist_results",
    "scale_to_angle",
    "split",
    "CutkitError",
    "CompiledCircuit",
    "NoiseModel",
    "ShotRecord",
    "expectation_pauli",
    "noisy_signed_weights",
    "noisy_trajectory_sample",
    "probabilities",
    "run_statevector",
    "sample_shots",
    "signed_measure",
]
