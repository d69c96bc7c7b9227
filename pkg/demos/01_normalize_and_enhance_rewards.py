"""
Reward normalization and tag-based label enhancement
====================================================

Raw reward-model scores arrive on an arbitrary scale. This walkthrough
turns them into routing targets: softmax normalization (with temperature),
then blending each query's rewards with the mean rewards of its tags to
average away per-query scorer noise.
"""

import numpy as np

from rewardroute import (
    aggregate_tag_rewards,
    enhance_labels,
    load_dataset,
    load_registry,
    normalize_rewards,
    reward_entropy,
)
from rewardroute.fixtures import fixture_path

np.set_printoptions(precision=4, suppress=True)

# ---------------------------------------------------------------------------
# softmax normalization: scale-free, shift-invariant, temperature-controlled
# ---------------------------------------------------------------------------

rewards = np.array([2.1, 0.3, 1.2])
print("raw rewards:      ", rewards)
print("normalized (T=1): ", normalize_rewards(rewards))
print("sharper (T=0.25): ", normalize_rewards(rewards, temperature=0.25))
print("flatter (T=4):    ", normalize_rewards(rewards, temperature=4.0))

# Adding a constant to every score never changes the distribution, so
# reward models that disagree about the zero point still agree here.
shifted = normalize_rewards(rewards + 1000.0)
print("after +1000 shift:", shifted, "(identical)")

# Entropy of the normalized vector measures how undecided the scores are:
# ln(K) for a flat vector, 0 for a one-hot one.
flat = normalize_rewards(np.zeros(3))
peaked = normalize_rewards(np.array([50.0, 0.0, 0.0]))
print(f"entropy flat {reward_entropy(flat):.4f} (ln 3 = {np.log(3):.4f}), "
      f"peaked {reward_entropy(peaked):.4f}")

# ---------------------------------------------------------------------------
# tag means from the bundled 60-query sample dataset
# ---------------------------------------------------------------------------

registry = load_registry(fixture_path("registry.json"))
dataset = load_dataset(fixture_path("sample_dataset.jsonl"), registry)
table = aggregate_tag_rewards(dataset)

print(f"\nmodels: {list(registry.ids)}")
print("mean reward per tag:")
for tag in sorted(table.means):
    print(f"  {tag:<14} {table.means[tag]}  (n={table.counts[tag]})")

# ---------------------------------------------------------------------------
# label enhancement: beta * per-query rewards + (1 - beta) * tag mean
# ---------------------------------------------------------------------------

row = dataset.rows[0]
print(f"\nquery {row.query.id}: {row.query.text!r}  tags {sorted(row.query.tags)}")
print("raw rewards:       ", row.rewards)
for beta in (1.0, 0.3, 0.0):
    blended = enhance_labels(row.rewards, row.query, table, beta)
    print(f"beta={beta:<4} -> targets {normalize_rewards(blended)}")

# beta=1 keeps the (noisy) per-query scores; beta=0 trusts the tag mean
# alone. Intermediate values trade scorer noise against tag granularity.
