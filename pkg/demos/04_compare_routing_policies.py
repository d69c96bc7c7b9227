"""
Router vs reward-ranking vs single models vs oracle
===================================================

A planted-expertise benchmark makes routing measurable: each topic cluster
has one model whose true reward is higher by a fixed margin, and observed
rewards add Gaussian noise. We train a router on one split, then compare
four policies on the benchmark's subsets:

  oracle        always picks the truly best model (upper bound)
  router        picks from the query text alone, one forward pass
  rmr           generates with every model and keeps the best-rewarded
                output (K inferences per query)
  single:<m>    always the same model (the strongest one is the baseline
                a router must beat)

Scored by mean task rank (average rank across subsets, lower is better)
and uplift rate (share of subsets won).
"""

from rewardroute import (
    DatasetLookupSource,
    FeaturizerConfig,
    SyntheticSpec,
    TrainConfig,
    aggregate_tag_rewards,
    evaluate_systems,
    holdout_split,
    init_router,
    make_synthetic_benchmark,
    routing_accuracy,
    train,
)

spec = SyntheticSpec(
    num_models=4,
    clusters={
        "minerals": ["quartz", "basalt", "feldspar", "gypsum", "mica", "olivine"],
        "sailing": ["jib", "halyard", "tack", "leeward", "mainsail", "rudder"],
        "grammar": ["clause", "gerund", "participle", "adverb", "conjunction", "tense"],
        "baking": ["dough", "yeast", "crumb", "proofing", "gluten", "sourdough"],
    },
    queries_per_cluster=120,
    expertise_margin=1.0,
    noise_sigma=0.4,
    seed=21,
)
dataset, oracle = make_synthetic_benchmark(spec)
print(f"{len(dataset)} queries, {len(dataset.registry)} models, "
      f"experts planted per cluster with margin {spec.expertise_margin}")

# ---------------------------------------------------------------------------
# train on 80%, judge every policy on the full benchmark's subsets
# ---------------------------------------------------------------------------

train_ds, eval_ds = holdout_split(dataset)
table = aggregate_tag_rewards(train_ds)
model = init_router(dataset.registry, FeaturizerConfig(dimension=16384), seed=21)
trained, _ = train(model, train_ds, table, TrainConfig(seed=21))

accuracy = routing_accuracy(trained, eval_ds, oracle)
print(f"held-out routing accuracy: {accuracy:.3f} over {len(eval_ds)} queries")

report = evaluate_systems(
    dataset, oracle, model=trained, source=DatasetLookupSource(dataset),
)
print("\naggregate over the four subsets:")
print(report.render_table())

# ---------------------------------------------------------------------------
# reading the table
# ---------------------------------------------------------------------------

print(f"""
The oracle wins every subset by construction, and the trained router ties
it (rank {report.mtr['router']:.2f}): with this much expertise margin, the
query text alone identifies the right model. rmr re-scores all
{len(dataset.registry)} models' outputs per query, so observed reward
noise misranks a slice of queries on every subset and it never wins one
outright (uplift {report.uplift['rmr']:.2f}) despite costing
{len(dataset.registry)}x the inference. Each single model wins exactly the
subset it is the planted expert for (uplift
{report.uplift['single:m0']:.2f} apiece).""")
