"""Keyword, vector, and hybrid retrieval over skill metadata.

Keyword scoring is BM25 (k1=1.2, b=0.75) with corpus statistics taken
over the whole index; category/tag filters restrict which documents are
scored and returned. Vector scoring is exact cosine over feature-hashed
embeddings. Hybrid fusion min-max normalizes each mode's scores over its
own candidate set and takes a weighted sum. All result lists sort by
(score desc, skill_id asc) so ties are deterministic.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import EmptyQuery, ZeroQueryVector

BM25_K1 = 1.2
BM25_B = 0.75
DEFAULT_DIM = 256

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop tokens under 2 chars."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


@dataclass
class EmbeddingVector:
    values: list[float]
    norm: float

    def cosine(self, other: "EmbeddingVector") -> float:
        if self.norm == 0.0 or other.norm == 0.0:
            return 0.0
        dot = sum(a * b for a, b in zip(self.values, other.values))
        return dot / (self.norm * other.norm)


def _vector(values: list[float]) -> EmbeddingVector:
    return EmbeddingVector(values=values, norm=math.sqrt(sum(v * v for v in values)))


def embed_fallback(text: str, dim: int = DEFAULT_DIM) -> EmbeddingVector:
    """Deterministic feature-hash embedding, L2-normalized.

    Each token lands in a bucket chosen by a stable MD5 hash, with another
    hash bit deciding the +/-1 contribution; contributions sum over the
    token multiset, so token order never matters. Empty text gives the
    zero vector.
    """
    values = [0.0] * dim
    for token in tokenize(text):
        digest = hashlib.md5(token.encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:4], "big") % dim
        sign = 1.0 if digest[4] & 1 else -1.0
        values[bucket] += sign
    norm = math.sqrt(sum(v * v for v in values))
    if norm > 0.0:
        values = [v / norm for v in values]
    # norm recomputed from the stored values (not assumed 1.0) so scores are
    # bit-identical to any independent reader of the persisted vector
    return _vector(values)


class SearchMode(str, Enum):
    KEYWORD = "keyword"
    VECTOR = "vector"
    HYBRID = "hybrid"


@dataclass
class IndexedDoc:
    skill_id: str
    text: str
    token_counts: dict[str, int]
    length: int


@dataclass
class SearchHit:
    skill_id: str
    score: float
    mode: SearchMode


@dataclass
class SearchFilters:
    category: str | None = None
    tags: list[str] = field(default_factory=list)

    def admits(self, category: str, tags: list[str]) -> bool:
        if self.category is not None and category != self.category:
            return False
        return all(t in tags for t in self.tags)


class SearchIndex:
    """Joint inverted index and vector table over skill metadata."""

    def __init__(self, dim: int = DEFAULT_DIM):
        self.dim = dim
        self.docs: dict[str, IndexedDoc] = {}
        self.vectors: dict[str, EmbeddingVector] = {}
        self.categories: dict[str, str] = {}
        self.tags: dict[str, list[str]] = {}
        self.postings: dict[str, set[str]] = {}

    def __len__(self) -> int:
        return len(self.docs)

    def add(self, skill_id: str, name: str, description: str, tags: list[str], category: str) -> None:
        """Add or replace one skill's metadata in the index."""
        if skill_id in self.docs:
            self.remove(skill_id)
        text = " ".join([name, description, *tags])
        tokens = tokenize(text)
        counts = dict(Counter(tokens))
        self.docs[skill_id] = IndexedDoc(skill_id=skill_id, text=text, token_counts=counts, length=len(tokens))
        self.vectors[skill_id] = embed_fallback(text, self.dim)
        self.categories[skill_id] = category
        self.tags[skill_id] = list(tags)
        for token in counts:
            self.postings.setdefault(token, set()).add(skill_id)

    def remove(self, skill_id: str) -> None:
        doc = self.docs.pop(skill_id, None)
        if doc is None:
            return
        self.vectors.pop(skill_id, None)
        self.categories.pop(skill_id, None)
        self.tags.pop(skill_id, None)
        for token in doc.token_counts:
            bucket = self.postings.get(token)
            if bucket:
                bucket.discard(skill_id)
                if not bucket:
                    del self.postings[token]

    def _candidates(self, filters: SearchFilters | None) -> set[str]:
        if filters is None:
            return set(self.docs)
        return {
            sid for sid in self.docs if filters.admits(self.categories[sid], self.tags[sid])
        }

    def _avgdl(self) -> float:
        if not self.docs:
            return 0.0
        return sum(d.length for d in self.docs.values()) / len(self.docs)

    def _idf(self, token: str) -> float:
        n = len(self.docs)
        df = len(self.postings.get(token, ()))
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def _bm25_scores(self, query_tokens: list[str], candidates: set[str]) -> dict[str, float]:
        avgdl = self._avgdl()
        scores: dict[str, float] = {}
        for token, qtf in Counter(query_tokens).items():
            idf = self._idf(token)
            for sid in self.postings.get(token, ()):
                if sid not in candidates:
                    continue
                doc = self.docs[sid]
                tf = doc.token_counts[token]
                denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * doc.length / avgdl)
                scores[sid] = scores.get(sid, 0.0) + qtf * idf * tf * (BM25_K1 + 1.0) / denom
        return scores

    def _cosine_scores(self, query: EmbeddingVector, candidates: set[str]) -> dict[str, float]:
        return {sid: query.cosine(self.vectors[sid]) for sid in candidates}


def _ranked(scores: dict[str, float], top_k: int, mode: SearchMode) -> list[SearchHit]:
    ordered = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return [SearchHit(skill_id=sid, score=score, mode=mode) for sid, score in ordered[:top_k]]


def keyword_search(
    index: SearchIndex, query: str, top_k: int = 10, filters: SearchFilters | None = None
) -> list[SearchHit]:
    """BM25 over the tokenized query; only token-matching docs are returned."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    tokens = tokenize(query)
    if not tokens:
        raise EmptyQuery(f"no searchable tokens in {query!r}")
    scores = index._bm25_scores(tokens, index._candidates(filters))
    return _ranked(scores, top_k, SearchMode.KEYWORD)


def vector_search(
    index: SearchIndex,
    query_vec: EmbeddingVector,
    top_k: int = 10,
    filters: SearchFilters | None = None,
) -> list[SearchHit]:
    """Exact cosine against every candidate vector."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    if query_vec.norm == 0.0:
        raise ZeroQueryVector("query vector is all zeros")
    scores = index._cosine_scores(query_vec, index._candidates(filters))
    return _ranked(scores, top_k, SearchMode.VECTOR)


def _minmax(scores: dict[str, float]) -> dict[str, float]:
    if not scores:
        return {}
    low = min(scores.values())
    high = max(scores.values())
    if high == low:
        return {sid: 1.0 for sid in scores}
    return {sid: (s - low) / (high - low) for sid, s in scores.items()}


def _pure_mode_hits(raw: dict[str, float], top_k: int) -> list[SearchHit]:
    # Degenerate weights must reproduce the pure mode's ranking exactly.
    # Ordering by the normalized scores instead could flip near-ties that
    # min-max collapses, so rank on the raw scores and report normalized ones.
    order = sorted(raw.items(), key=lambda item: (-item[1], item[0]))[:top_k]
    normalized = _minmax(raw)
    return [SearchHit(skill_id=sid, score=normalized[sid], mode=SearchMode.HYBRID) for sid, _ in order]


def hybrid_search(
    index: SearchIndex,
    query: str,
    top_k: int = 10,
    kw_weight: float = 0.5,
    vec_weight: float = 0.5,
    filters: SearchFilters | None = None,
) -> list[SearchHit]:
    """Weighted fusion of min-max-normalized keyword and vector scores.

    A document absent from one mode's candidate set contributes zero for
    that mode. Degenerate weights reduce to the corresponding pure mode.
    """
    if kw_weight < 0 or vec_weight < 0 or abs(kw_weight + vec_weight - 1.0) > 1e-9:
        raise ValueError("weights must be nonnegative and sum to 1")
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    tokens = tokenize(query)
    if not tokens:
        raise EmptyQuery(f"no searchable tokens in {query!r}")
    candidates = index._candidates(filters)

    if vec_weight == 0.0:
        return _pure_mode_hits(index._bm25_scores(tokens, candidates), top_k)
    if kw_weight == 0.0:
        return _pure_mode_hits(
            index._cosine_scores(embed_fallback(query, index.dim), candidates), top_k
        )

    kw_scores = _minmax(index._bm25_scores(tokens, candidates))
    vec_scores = _minmax(index._cosine_scores(embed_fallback(query, index.dim), candidates))
    fused = {
        sid: kw_weight * kw_scores.get(sid, 0.0) + vec_weight * vec_scores.get(sid, 0.0)
        for sid in set(kw_scores) | set(vec_scores)
    }
    return _ranked(fused, top_k, SearchMode.HYBRID)


KEYWORD_INDEX_VERSION = 1
VECTOR_INDEX_VERSION = 1


def save_index(index: SearchIndex, directory: Path) -> None:
    """Persist the index as its two documented files (keywords + vectors)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    keywords = {
        "version": KEYWORD_INDEX_VERSION,
        "docs": {
            sid: {
                "text": doc.text,
                "category": index.categories[sid],
                "tags": index.tags[sid],
            }
            for sid, doc in sorted(index.docs.items())
        },
    }
    vectors = {
        "version": VECTOR_INDEX_VERSION,
        "dim": index.dim,
        "vectors": {sid: vec.values for sid, vec in sorted(index.vectors.items())},
    }
    (directory / "keywords.json").write_text(json.dumps(keywords, indent=1, sort_keys=True))
    (directory / "vectors.json").write_text(json.dumps(vectors, indent=1, sort_keys=True))


def load_index(directory: Path) -> SearchIndex:
    """Rebuild an index from its persisted files."""
    directory = Path(directory)
    keywords = json.loads((directory / "keywords.json").read_text())
    vectors = json.loads((directory / "vectors.json").read_text())
    if keywords.get("version") != KEYWORD_INDEX_VERSION or vectors.get("version") != VECTOR_INDEX_VERSION:
        raise ValueError("unsupported index file version")
    index = SearchIndex(dim=vectors["dim"])
    for sid, doc in keywords["docs"].items():
        tokens = tokenize(doc["text"])
        counts = dict(Counter(tokens))
        index.docs[sid] = IndexedDoc(skill_id=sid, text=doc["text"], token_counts=counts, length=len(tokens))
        index.categories[sid] = doc["category"]
        index.tags[sid] = list(doc["tags"])
        for token in counts:
            index.postings.setdefault(token, set()).add(sid)
        index.vectors[sid] = _vector(list(map(float, vectors["vectors"][sid])))
    return index
