"""
Train a router and route queries
================================

End-to-end distillation on the bundled 60-query sample dataset: aggregate
tag means, build softmax targets, fit the linear router by minimizing
KL(targets || predictions) with mini-batch gradient descent, save a
self-describing checkpoint, and route fresh queries with it.

The CLI equivalent is:
    rewardroute train --data sample_dataset.jsonl --registry registry.json \
        --out router.ckpt --dimension 16384 --seed 7
    rewardroute route --checkpoint router.ckpt --query "..."
"""

import tempfile
from pathlib import Path

import numpy as np

from rewardroute import (
    FeaturizerConfig,
    TrainConfig,
    aggregate_tag_rewards,
    init_router,
    load_checkpoint,
    load_dataset,
    load_registry,
    route,
    save_checkpoint,
    train,
)
from rewardroute.fixtures import fixture_path

registry = load_registry(fixture_path("registry.json"))
dataset = load_dataset(fixture_path("sample_dataset.jsonl"), registry)
print(f"{len(dataset)} queries, models {list(registry.ids)}")

# ---------------------------------------------------------------------------
# distill: tag means -> blended targets -> KL minimization
# ---------------------------------------------------------------------------

table = aggregate_tag_rewards(dataset)
model = init_router(registry, FeaturizerConfig(dimension=16384), seed=7)
config = TrainConfig(learning_rate=0.5, epochs=60, beta=0.3, seed=7)
trained, report = train(model, dataset, table, config)

print("\nmean KL every 10 epochs:")
for epoch, loss in enumerate(report.epoch_losses, start=1):
    if epoch % 10 == 0 or epoch == 1:
        bar = "#" * int(loss * 2000)
        print(f"  {epoch:>2}  {loss:.5f}  {bar}")
print(f"final loss {report.final_loss:.5f} over {report.row_count} rows")

# ---------------------------------------------------------------------------
# checkpoint round trip: the file alone is enough to route
# ---------------------------------------------------------------------------

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "router.ckpt"
    save_checkpoint(trained, path)
    print(f"\ncheckpoint: {path.stat().st_size} bytes")
    restored = load_checkpoint(path)

queries = [
    "what is the integral of sin x over x",
    "write a python function that reverses a linked list",
    "draft a short letter to my landlord about the broken heater",
]
print("\nrouting with the restored checkpoint:")
for text in queries:
    model_id, probs = route(restored, text)
    dist = ", ".join(f"{m} {p:.2f}" for m, p in zip(registry.ids, probs))
    print(f"  -> {model_id:<11} [{dist}]   {text!r}")

# The restored model is bit-for-bit the one we trained.
checkpoint_match = (np.array_equal(trained.weights, restored.weights)
                    and np.array_equal(trained.bias, restored.bias))
print(f"\nrestored parameters identical: {checkpoint_match}")
