"""Similarity-ranked mapping recommendations.

Ranks candidate metrics for a control (or candidate controls of another
catalog for a source control) by TF-IDF cosine similarity over their texts.
Rankings are advisory: nothing changes evaluation until a human confirms a
mapping in the catalog store.

Scoring contract:
  * tokens: lowercased, split on non-alphanumeric runs, fixed stopword list
    removed, no stemming;
  * term weight: raw term count times idf, idf = ln(1 + N / df) over the
    candidate corpus;
  * score: cosine between the query vector and each candidate vector,
    with identical vectors short-circuited to exactly 1.0;
  * ties broken by candidate id ascending, ranks contiguous from 1.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Mapping

from .catalog import Control
from .clock import format_ts
from .errors import EmptyCandidateSet, EmptyControlText
from .metrics import Metric

# Classic minimal English stopword list (Lucene's default English set).
STOPWORDS = frozenset(
    """a an and are as at be but by for if in into is it no not of on or
    such that the their then there these they this to was will with""".split()
)

_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return [token for token in _TOKEN_SPLIT.split(text.lower()) if token and token not in STOPWORDS]


@dataclass(frozen=True)
class RankedCandidate:
    candidate_id: str
    score: float
    rank: int


class SimilarityIndex:
    """TF-IDF index over a fixed candidate corpus."""

    def __init__(self, documents: Mapping[str, str], built_at: datetime | None = None):
        if not documents:
            raise EmptyCandidateSet("cannot build an index over zero documents")
        self.built_at = format_ts(built_at) if built_at else None
        self._tokens: dict[str, list[str]] = {doc_id: tokenize(text) for doc_id, text in documents.items()}
        self.document_frequency: dict[str, int] = {}
        for tokens in self._tokens.values():
            for token in set(tokens):
                self.document_frequency[token] = self.document_frequency.get(token, 0) + 1
        n = len(self._tokens)
        self._idf = {token: math.log(1 + n / df) for token, df in self.document_frequency.items()}
        self._vectors = {doc_id: self._vectorize(tokens) for doc_id, tokens in self._tokens.items()}

    def _vectorize(self, tokens: list[str]) -> dict[str, float]:
        counts: dict[str, int] = {}
        for token in tokens:
            if token in self._idf:  # tokens outside the corpus vocabulary carry no weight
                counts[token] = counts.get(token, 0) + 1
        return {token: count * self._idf[token] for token, count in counts.items()}

    def query(self, text: str) -> list[RankedCandidate]:
        """Full ranking of all candidates for ``text``; caller truncates."""
        query_vector = self._vectorize(tokenize(text))
        scored = [
            (doc_id, _cosine(query_vector, vector)) for doc_id, vector in self._vectors.items()
        ]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return [
            RankedCandidate(candidate_id=doc_id, score=score, rank=position)
            for position, (doc_id, score) in enumerate(scored, start=1)
        ]


def _cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if not a or not b:
        return 0.0
    if a == b:
        return 1.0
    # Summation over sorted tokens keeps the score independent of dict order,
    # so sim(a, b) == sim(b, a) holds exactly and ties break reproducibly.
    dot = sum(a[token] * b[token] for token in sorted(a.keys() & b.keys()))
    norm_a = math.sqrt(sum(a[token] * a[token] for token in sorted(a)))
    norm_b = math.sqrt(sum(b[token] * b[token] for token in sorted(b)))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    # Parallel but non-identical vectors can land one ulp above 1.0.
    return min(1.0, dot / (norm_a * norm_b))


def _rank(query_text: str, documents: Mapping[str, str]) -> list[RankedCandidate]:
    if not documents:
        raise EmptyCandidateSet("no candidates to rank")
    return SimilarityIndex(documents).query(query_text)


def recommend_metrics(control: Control, candidates: Iterable[Metric]) -> list[RankedCandidate]:
    """Rank candidate metrics for one control by text similarity."""
    documents = {metric.id: metric.text_for_similarity() for metric in candidates}
    query = control.text_for_similarity()
    if not query.strip():
        raise EmptyControlText(f"control {control.id!r} has no text to match on")
    return _rank(query, documents)


def map_controls(source: Control, target_scheme_controls: Iterable[Control]) -> list[RankedCandidate]:
    """Rank another catalog's controls by similarity to a source control."""
    documents = {control.id: control.text_for_similarity() for control in target_scheme_controls}
    query = source.text_for_similarity()
    if not query.strip():
        raise EmptyControlText(f"control {source.id!r} has no text to match on")
    return _rank(query, documents)
