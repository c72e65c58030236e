"""Training the variational Iris classifier with each readout head.

Trains the 4-qubit circuit model on the bundled Iris split for each of the
three readout heads (expected value, modulo, parity) using exact state
simulation and parameter-shift gradients, then reports test accuracy.
"""
from cutkit import EvalMode, ModelConfig, TrainConfig, fit, load_iris, score, split

seed = 42
train_set, test_set = split(load_iris(), seed=seed)
print(f"{len(train_set.labels)} training samples, {len(test_set.labels)} test samples")

for head in ("expected", "modulo", "parity"):
    config = ModelConfig(head=head)
    result = fit(config, TrainConfig(strategy="fit_then_cut", seed=seed),
                 train_set.features, train_set.labels)
    acc = score(config, result.weights, test_set.features, test_set.labels, EvalMode(kind="exact"))
    masked = int((~result.state.mask).sum()) if result.state.mask is not None else 0
    print(f"{head:>8}: final loss {result.loss_history[-1]:.4f}, "
          f"test accuracy {acc:.4f}, masked params {masked}/{config.num_params}")
