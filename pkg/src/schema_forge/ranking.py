"""Embedding-based relevance ranking: pick the documents closest to the topic.

Steps-genre documents bypass the quota; they always ride along with the
ranked selection.
"""

from __future__ import annotations

import hashlib
import math
import os
import re
from dataclasses import dataclass
from typing import Protocol

import requests

from .core import Document, InductionConfig, SchemaForgeError, Topic
from .generation import API_KEY_ENV

HASH_EMBEDDING_DIM = 512

_WORD = re.compile(r"[a-z0-9]+")


class DimensionMismatch(SchemaForgeError):
    pass


class ZeroVector(SchemaForgeError):
    pass


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding entries must be finite")

    @property
    def dimension(self) -> int:
        return len(self.values)


class EmbeddingProvider(Protocol):
    name: str

    def embed(self, text: str) -> EmbeddingVector: ...


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.dimension != b.dimension:
        raise DimensionMismatch(f"dimensions differ: {a.dimension} vs {b.dimension}")
    dot = sum(x * y for x, y in zip(a.values, b.values))
    norm_a = math.sqrt(sum(x * x for x in a.values))
    norm_b = math.sqrt(sum(y * y for y in b.values))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity undefined for an all-zero vector")
    return dot / (norm_a * norm_b)


def select_top_documents(
    documents: list[Document],
    topic: Topic,
    embedder: EmbeddingProvider,
    config: InductionConfig,
) -> list[Document]:
    """Keep the ranked_selection news/how-to documents most similar to the
    topic, plus every steps document unconditionally.

    Output is ordered by similarity descending, ties by document id; the
    result is independent of the input permutation.
    """
    if not documents:
        raise ValueError("at least one document is required")
    topic_vec = embedder.embed(topic.name)
    scored = sorted(
        ((cosine_similarity(embedder.embed(d.text), topic_vec), d) for d in documents),
        key=lambda pair: (-pair[0], pair[1].id),
    )
    ranked = [d for _, d in scored if d.genre != "steps"][: config.ranked_selection]
    keep = {d.id for d in ranked}
    return [d for _, d in scored if d.genre == "steps" or d.id in keep]


@dataclass
class HashEmbeddingProvider:
    """Deterministic fallback embedder: hashed term-frequency counts of
    lowercased alphanumeric tokens."""

    dimension: int = HASH_EMBEDDING_DIM
    name: str = "hash"

    def embed(self, text: str) -> EmbeddingVector:
        counts = [0.0] * self.dimension
        for word in _WORD.findall(text.lower()):
            digest = hashlib.sha256(word.encode("utf-8")).digest()
            counts[int.from_bytes(digest[:8], "big") % self.dimension] += 1.0
        return EmbeddingVector(tuple(counts))


@dataclass
class HttpEmbeddingProvider:
    """POST {"text": ...} to base_url, expect {"vector": [...]}."""

    base_url: str
    name: str = "http"
    timeout: float = 60.0
    api_key: str | None = None

    def embed(self, text: str) -> EmbeddingVector:
        key = self.api_key if self.api_key is not None else os.environ.get(API_KEY_ENV, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        try:
            resp = requests.post(self.base_url, json={"text": text}, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
            return EmbeddingVector(tuple(float(v) for v in payload["vector"]))
        except (requests.RequestException, KeyError, TypeError, ValueError) as exc:
            raise SchemaForgeError(f"embedding request failed: {exc}") from exc
