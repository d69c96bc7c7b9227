"""Word n-gram overlap screening between training queries and benchmark sets.

A training row is dropped when it shares at least one token n-gram (default
n=6) with any benchmark query. Tokenization: lowercase, split on Unicode
whitespace, strip leading/trailing punctuation from each token, drop tokens
that become empty.
"""

from __future__ import annotations

import unicodedata
from typing import Iterable, Sequence

from .data import RewardDataset

NGram = tuple[str, ...]


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and _is_punct(token[start]):
        start += 1
    while end > start and _is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation per token."""
    tokens = []
    for raw in text.lower().split():
        tok = _strip_punct(raw)
        if tok:
            tokens.append(tok)
    return tokens


def token_ngrams(tokens: Sequence[str], n: int) -> list[NGram]:
    """All n consecutive-token windows, in text order. Empty if len < n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def text_ngrams(text: str, n: int) -> set[NGram]:
    return set(token_ngrams(tokenize(text), n))


def find_contaminated(
    dataset: RewardDataset,
    benchmark_queries: Iterable[str],
    n: int = 6,
) -> list[tuple[str, NGram]]:
    """Identify rows sharing a token n-gram with any benchmark query.

    Returns (query_id, matching n-gram) pairs in dataset order; the reported
    n-gram is the first shared one in the query's token order.
    """
    benchmark_grams: set[NGram] = set()
    for bench in benchmark_queries:
        benchmark_grams |= text_ngrams(bench, n)
    hits: list[tuple[str, NGram]] = []
    if not benchmark_grams:
        return hits
    for row in dataset.rows:
        for gram in token_ngrams(tokenize(row.query.text), n):
            if gram in benchmark_grams:
                hits.append((row.query.id, gram))
                break
    return hits


def decontaminate(
    dataset: RewardDataset,
    benchmark_queries: Iterable[str],
    n: int = 6,
) -> tuple[RewardDataset, list[str]]:
    """Drop every row overlapping the benchmark set; also return removed ids.

    An empty benchmark list removes nothing. Surviving rows keep their order.
    """
    removed = [qid for qid, _ in find_contaminated(dataset, benchmark_queries, n)]
    removed_set = set(removed)
    kept = [row for row in dataset.rows if row.query.id not in removed_set]
    return dataset.with_rows(kept), removed
