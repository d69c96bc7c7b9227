"""Reward-ranking baselines and seeded synthetic benchmarks.

Reward model ranking (RMR) scores one candidate output per registry model
and keeps the best-scored one; it is the strong-but-expensive baseline the
router is compared against. Oracle selection is the upper bound: argmax of
ground-truth preference. Desk-scale experiments run on synthetic planted-
expertise benchmarks where the oracle is known by construction.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .data import DatasetRow, ModelRegistry, Query, RewardDataset
from .errors import DataFormatError
from .features import stable_hash


def stub_response(model_id: str, query_text: str) -> str:
    """Placeholder backend output: '<model_id>:<query hash>'."""
    digest = hashlib.sha256(query_text.encode("utf-8")).hexdigest()[:12]
    return f"{model_id}:{digest}"


@dataclass(frozen=True)
class CandidateOutput:
    model_id: str
    response_text: str
    score: float | None = None


class RewardSource:
    """Scores all candidate outputs for one query, in registry order."""

    registry: ModelRegistry

    def score(self, query: Query, outputs: list[CandidateOutput]) -> np.ndarray:
        raise NotImplementedError


class DatasetLookupSource(RewardSource):
    """Returns the reward vector recorded for the query in a dataset."""

    def __init__(self, dataset: RewardDataset):
        self.registry = dataset.registry
        self._by_id = {row.query.id: row.rewards for row in dataset.rows}

    def score(self, query: Query, outputs: list[CandidateOutput]) -> np.ndarray:
        try:
            return self._by_id[query.id]
        except KeyError:
            raise DataFormatError(f"no recorded rewards for query {query.id!r}") from None


class PlantedExpertiseSource(RewardSource):
    """Noiseless rewards from a planted tag -> expert map.

    The expert model of the query's cluster scores `margin`, everyone else 0.
    """

    def __init__(self, registry: ModelRegistry, expertise: Mapping[str, str],
                 margin: float):
        if margin <= 0:
            raise ValueError(f"expertise margin must be positive, got {margin}")
        self.registry = registry
        self.margin = margin
        self._expert_index = {tag: registry.index_of(m) for tag, m in expertise.items()}

    def score(self, query: Query, outputs: list[CandidateOutput]) -> np.ndarray:
        rewards = np.zeros(len(self.registry), dtype=np.float64)
        for tag in sorted(query.tags):
            if tag in self._expert_index:
                rewards[self._expert_index[tag]] = self.margin
        return rewards


class NoisyWrapperSource(RewardSource):
    """Adds Gaussian noise to another source's rewards.

    Noise is drawn from a generator seeded by (seed, hash(query id)), so the
    same query always gets the same noisy rewards regardless of call order.
    """

    def __init__(self, inner: RewardSource, sigma: float, seed: int = 0):
        if sigma < 0:
            raise ValueError(f"noise sigma must be non-negative, got {sigma}")
        self.registry = inner.registry
        self.inner = inner
        self.sigma = sigma
        self.seed = seed

    def score(self, query: Query, outputs: list[CandidateOutput]) -> np.ndarray:
        base = self.inner.score(query, outputs)
        if self.sigma == 0:
            return base
        rng = np.random.default_rng((self.seed, stable_hash(query.id)))
        return base + rng.normal(0.0, self.sigma, size=len(base))


def _check_outputs_cover_registry(outputs: list[CandidateOutput],
                                  registry: ModelRegistry) -> None:
    seen = [o.model_id for o in outputs]
    missing = [m for m in registry.ids if m not in seen]
    if missing:
        raise DataFormatError(f"missing candidate output(s) for: {missing}")
    extra_or_dup = [m for m in seen if seen.count(m) > 1 or m not in registry.ids]
    if extra_or_dup:
        raise DataFormatError(f"duplicate or unregistered output(s): {sorted(set(extra_or_dup))}")


def rmr_select(
    query: Query,
    outputs: list[CandidateOutput],
    source: RewardSource,
) -> tuple[str, np.ndarray]:
    """Score every candidate output and keep the argmax model.

    Outputs must cover each registry model exactly once. Ties resolve to
    the lowest registry index. Returns (model_id, full reward vector).
    """
    _check_outputs_cover_registry(outputs, source.registry)
    rewards = source.score(query, outputs)
    choice = int(np.argmax(rewards))
    return source.registry.ids[choice], rewards


def oracle_select(query: Query, oracle_scores: np.ndarray,
                  registry: ModelRegistry) -> str:
    """Argmax of ground-truth preference; ties go to the lowest index."""
    scores = np.asarray(oracle_scores, dtype=np.float64)
    if scores.shape != (len(registry),):
        raise DataFormatError(
            f"oracle scores for query {query.id!r} have shape {scores.shape}, "
            f"expected ({len(registry)},)"
        )
    return registry.ids[int(np.argmax(scores))]


def candidate_outputs(query: Query, registry: ModelRegistry) -> list[CandidateOutput]:
    """Stub candidate outputs, one per registry model."""
    return [CandidateOutput(m, stub_response(m, query.text)) for m in registry.ids]


# ---------------------------------------------------------------------------
# synthetic planted-expertise benchmarks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a seeded planted-expertise benchmark.

    Each cluster has a disjoint word vocabulary and one expert model whose
    true reward exceeds all others by `expertise_margin`; observed rewards
    add Gaussian noise of `noise_sigma`. With no explicit expertise map the
    i-th cluster (in mapping order) belongs to the i-th model.
    """

    num_models: int
    clusters: dict[str, list[str]]
    queries_per_cluster: int
    expertise_margin: float
    noise_sigma: float
    seed: int
    expertise: dict[str, str] | None = None
    words_per_query: tuple[int, int] = (6, 12)

    def __post_init__(self):
        if self.num_models < 2:
            raise ValueError("need at least 2 models")
        if self.queries_per_cluster < 1:
            raise ValueError("queries_per_cluster must be positive")
        if self.expertise_margin <= 0:
            raise ValueError(f"expertise margin must be positive, got {self.expertise_margin}")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be non-negative")
        for tag, vocab in self.clusters.items():
            if not vocab:
                raise ValueError(f"cluster {tag!r} has an empty vocabulary")
        if self.expertise is None and len(self.clusters) != self.num_models:
            raise ValueError(
                f"{len(self.clusters)} clusters but {self.num_models} models; "
                "give an explicit expertise map or one cluster per model"
            )

    @classmethod
    def from_file(cls, path: str | Path) -> "SyntheticSpec":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataFormatError(f"cannot read synthetic spec {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"synthetic spec {path} is not valid JSON: {exc}") from exc
        try:
            return cls(
                num_models=int(raw["num_models"]),
                clusters={str(t): list(v) for t, v in raw["clusters"].items()},
                queries_per_cluster=int(raw["queries_per_cluster"]),
                expertise_margin=float(raw["expertise_margin"]),
                noise_sigma=float(raw["noise_sigma"]),
                seed=int(raw["seed"]),
                expertise=raw.get("expertise"),
                words_per_query=tuple(raw.get("words_per_query", (6, 12))),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"synthetic spec {path} is malformed: {exc}") from exc


def synthetic_registry(num_models: int) -> ModelRegistry:
    return ModelRegistry.from_ids([f"m{i}" for i in range(num_models)])


def make_synthetic_benchmark(
    spec: SyntheticSpec,
) -> tuple[RewardDataset, dict[str, np.ndarray]]:
    """Generate a dataset of cluster-sampled queries plus its oracle map.

    Query text is words drawn from the cluster vocabulary; the observed
    reward vector is the planted true vector plus Gaussian noise. The
    oracle map holds the noiseless true vectors keyed by query id. Fully
    deterministic given spec.seed.
    """
    registry = synthetic_registry(spec.num_models)
    if spec.expertise is not None:
        expertise = dict(spec.expertise)
    else:
        expertise = {tag: registry.ids[i] for i, tag in enumerate(spec.clusters)}
    for tag, model_id in expertise.items():
        registry.index_of(model_id)  # validates

    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.words_per_query
    rows: list[DatasetRow] = []
    oracle: dict[str, np.ndarray] = {}
    counter = 0
    for tag, vocab in spec.clusters.items():
        expert = registry.index_of(expertise[tag])
        true_rewards = np.zeros(spec.num_models, dtype=np.float64)
        true_rewards[expert] = spec.expertise_margin
        for _ in range(spec.queries_per_cluster):
            n_words = int(rng.integers(lo, hi + 1))
            words = [vocab[int(w)] for w in rng.integers(0, len(vocab), size=n_words)]
            qid = f"synth-{counter:05d}"
            counter += 1
            query = Query(id=qid, text=" ".join(words), tags=frozenset({tag}), subset=tag)
            observed = true_rewards + rng.normal(0.0, spec.noise_sigma, size=spec.num_models)
            rows.append(DatasetRow(query=query, rewards=observed))
            oracle[qid] = true_rewards.copy()
    return RewardDataset(registry=registry, rows=tuple(rows)), oracle
