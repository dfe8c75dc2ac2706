"""Independent brute-force oracles.

Everything here is written straight from the definitions, using plain
loops and none of the library's index/metric code paths, so the tests
compare two independently derived answers.
"""

from __future__ import annotations

import hashlib
import math
import re
from collections import deque

_TOKEN = re.compile(r"[a-z0-9]+")


def oracle_tokens(text: str) -> list[str]:
    return [t for t in _TOKEN.findall(text.lower()) if len(t) >= 2]


def oracle_bm25_ranking(
    docs: list[tuple[str, str]],
    query: str,
    *,
    k1: float = 1.2,
    b: float = 0.75,
    admitted: set[str] | None = None,
) -> list[tuple[str, float]]:
    """Full BM25 ranking by (score desc, id asc), positive scores only.

    Corpus statistics (N, df, avgdl) always come from the whole doc list;
    ``admitted`` only restricts which docs may appear in the ranking.
    """
    tokenized = {doc_id: oracle_tokens(text) for doc_id, text in docs}
    n = len(docs)
    avgdl = sum(len(t) for t in tokenized.values()) / n if n else 0.0
    query_tokens = oracle_tokens(query)

    scores = []
    for doc_id, tokens in tokenized.items():
        if admitted is not None and doc_id not in admitted:
            continue
        score = 0.0
        for q in query_tokens:
            tf = tokens.count(q)
            if tf == 0:
                continue
            df = sum(1 for other in tokenized.values() if q in other)
            idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len(tokens) / avgdl))
        if score > 0.0:
            scores.append((doc_id, score))
    scores.sort(key=lambda pair: (-pair[1], pair[0]))
    return scores


def oracle_hash_embedding(text: str, dim: int) -> list[float]:
    """Reference feature hashing: md5 bucket, md5 sign bit, L2 normalize."""
    values = [0.0] * dim
    for token in oracle_tokens(text):
        digest = hashlib.md5(token.encode()).digest()
        bucket = int.from_bytes(digest[:4], "big") % dim
        values[bucket] += 1.0 if digest[4] & 1 else -1.0
    norm = math.sqrt(sum(v * v for v in values))
    return [v / norm for v in values] if norm else values


def oracle_cosine_ranking(
    vectors: dict[str, list[float]],
    query: list[float],
    admitted: set[str] | None = None,
) -> list[tuple[str, float]]:
    """Exact cosine ranking by (score desc, id asc) over all candidates."""
    qnorm = math.sqrt(sum(v * v for v in query))
    scores = []
    for doc_id, vec in vectors.items():
        if admitted is not None and doc_id not in admitted:
            continue
        vnorm = math.sqrt(sum(v * v for v in vec))
        if qnorm == 0.0 or vnorm == 0.0:
            scores.append((doc_id, 0.0))
            continue
        dot = sum(a * b for a, b in zip(query, vec))
        scores.append((doc_id, dot / (qnorm * vnorm)))
    scores.sort(key=lambda pair: (-pair[1], pair[0]))
    return scores


def oracle_mae(a: list[int], b: list[int]) -> float:
    total = 0
    for x, y in zip(a, b):
        total += x - y if x >= y else y - x
    return total / len(a)


def oracle_qwk(a: list[int], b: list[int], k: int = 3) -> float:
    """Confusion-matrix QWK from raw counts; 1.0 when expected
    disagreement is zero (identical constant raters)."""
    n = len(a)
    observed = [[0] * k for _ in range(k)]
    for x, y in zip(a, b):
        observed[x][y] += 1
    count_a = [sum(1 for x in a if x == i) for i in range(k)]
    count_b = [sum(1 for y in b if y == j) for j in range(k)]

    weighted_observed = 0.0
    weighted_expected = 0.0
    for i in range(k):
        for j in range(k):
            weight = ((i - j) / (k - 1)) ** 2
            weighted_observed += weight * observed[i][j]
            weighted_expected += weight * count_a[i] * count_b[j] / n
    if weighted_expected == 0.0:
        return 1.0
    return 1.0 - weighted_observed / weighted_expected


def oracle_components(edges: list[tuple[str, str]]) -> list[list[str]]:
    """Connected components by BFS, multi-member only, sorted."""
    adjacency: dict[str, set[str]] = {}
    for a, b in edges:
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    seen: set[str] = set()
    clusters = []
    for start in adjacency:
        if start in seen:
            continue
        component = []
        queue = deque([start])
        seen.add(start)
        while queue:
            node = queue.popleft()
            component.append(node)
            for neighbor in adjacency[node]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    queue.append(neighbor)
        if len(component) > 1:
            clusters.append(sorted(component))
    clusters.sort(key=lambda c: c[0])
    return clusters


def oracle_reachable(edges: list[tuple[str, str]], start: str) -> set[str]:
    """Nodes reachable from start following edges src->dst, start included."""
    adjacency: dict[str, list[str]] = {}
    for src, dst in edges:
        adjacency.setdefault(src, []).append(dst)
    seen = {start}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for nxt in adjacency.get(node, []):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def check_plan(edges: list[tuple[str, str]], target: str, plan: list[str]) -> None:
    """Validate a dependency plan: exact transitive scope, every edge
    direction honored (prerequisite before dependent), target last."""
    scope = oracle_reachable(edges, target)
    assert set(plan) == scope, f"plan scope {sorted(plan)} != {sorted(scope)}"
    assert plan[-1] == target
    assert len(set(plan)) == len(plan)
    position = {node: i for i, node in enumerate(plan)}
    for dependent, prerequisite in edges:
        if dependent in position and prerequisite in position:
            assert position[prerequisite] < position[dependent], (
                f"{prerequisite} must precede {dependent} in {plan}"
            )
