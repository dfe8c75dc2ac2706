"""Directed, typed multi-relational graph over skills.

Nodes are skills plus taxonomy entities (packages, categories, tags);
edges carry a relation type, a confidence in [0,1], and a provenance.
similar_to is symmetric and stored once with src < dst. Dependency cycles
are tolerated at insertion and rejected at planning time.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import (
    DependencyCycle,
    MalformedGraphFile,
    SelfLoop,
    UnknownNode,
)
from .model import SkillPackage, metadata_text
from .search import EmbeddingVector, embed_fallback


class RelationType(str, Enum):
    SIMILAR_TO = "similar_to"
    BELONG_TO = "belong_to"
    COMPOSE_WITH = "compose_with"
    DEPEND_ON = "depend_on"
    PACKAGED_IN = "packaged_in"
    IN_CATEGORY = "in_category"
    TAGGED_WITH = "tagged_with"


class Provenance(str, Enum):
    EMBEDDING_SIMILARITY = "embedding_similarity"
    DEPENDENCY_EXTRACTION = "dependency_extraction"
    TRACE_ALIGNMENT = "trace_alignment"
    JUDGE_INFERENCE = "judge_inference"
    MANUAL = "manual"


NODE_KINDS = ("skill", "package", "category", "tag")


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    rel: RelationType
    confidence: float
    provenance: Provenance

    def key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.rel.value)


def _canonical(edge: Edge) -> Edge:
    if edge.rel == RelationType.SIMILAR_TO and edge.dst < edge.src:
        return replace(edge, src=edge.dst, dst=edge.src)
    return edge


@dataclass
class SkillGraph:
    nodes: dict[str, str] = field(default_factory=dict)
    edges: dict[tuple[str, str, str], Edge] = field(default_factory=dict)

    def add_node(self, node_id: str, kind: str = "skill") -> None:
        if not node_id or any(c.isspace() for c in node_id):
            raise ValueError(f"node id must be non-empty with no whitespace: {node_id!r}")
        if kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind: {kind!r}")
        self.nodes[node_id] = kind

    def add_edge(self, edge: Edge) -> None:
        """Insert an edge; duplicates keep the higher-confidence record."""
        if edge.src == edge.dst:
            raise SelfLoop(f"{edge.src} -> {edge.dst}")
        for endpoint in (edge.src, edge.dst):
            if endpoint not in self.nodes:
                raise UnknownNode(endpoint)
        if not 0.0 <= edge.confidence <= 1.0:
            raise ValueError(f"confidence out of range: {edge.confidence}")
        edge = _canonical(edge)
        existing = self.edges.get(edge.key())
        if existing is None or edge.confidence > existing.confidence:
            self.edges[edge.key()] = edge

    def edges_of(self, rel: RelationType) -> list[Edge]:
        return [e for e in self.edges.values() if e.rel == rel]

    def incident(self, node_id: str) -> list[Edge]:
        return sorted(
            (e for e in self.edges.values() if node_id in (e.src, e.dst)),
            key=lambda e: e.key(),
        )

    def dependencies_of(self, node_id: str) -> list[str]:
        return sorted(e.dst for e in self.edges.values() if e.rel == RelationType.DEPEND_ON and e.src == node_id)


def execution_plan(graph: SkillGraph, skill_id: str) -> list[str]:
    """Every transitive prerequisite of the skill, dependencies first.

    Deterministic: ready nodes are emitted in lexicographic order. Raises
    DependencyCycle with one witness cycle when planning is impossible.
    """
    if skill_id not in graph.nodes:
        raise UnknownNode(skill_id)

    scope: set[str] = set()
    stack = [skill_id]
    while stack:
        node = stack.pop()
        if node in scope:
            continue
        scope.add(node)
        stack.extend(graph.dependencies_of(node))

    pending = {node: set(dep for dep in graph.dependencies_of(node) if dep in scope) for node in scope}
    dependents: dict[str, set[str]] = {node: set() for node in scope}
    for node, deps in pending.items():
        for dep in deps:
            dependents[dep].add(node)

    ready = [node for node, deps in pending.items() if not deps]
    heapq.heapify(ready)
    plan: list[str] = []
    while ready:
        node = heapq.heappop(ready)
        plan.append(node)
        for dependent in sorted(dependents[node]):
            pending[dependent].discard(node)
            if not pending[dependent]:
                heapq.heappush(ready, dependent)

    if len(plan) != len(scope):
        raise DependencyCycle(_witness_cycle({n for n in scope if pending[n]}, pending))
    return plan


def _witness_cycle(stuck: set[str], pending: dict[str, set[str]]) -> list[str]:
    start = min(stuck)
    seen: dict[str, int] = {}
    path: list[str] = []
    node = start
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        node = min(d for d in pending[node] if d in stuck)
    return path[seen[node] :] + [node]


def compose_pipeline(graph: SkillGraph, source_id: str, target_id: str) -> list[str] | None:
    """Shortest compose_with path, lexicographically smallest among ties."""
    for node in (source_id, target_id):
        if node not in graph.nodes:
            raise UnknownNode(node)
    forward: dict[str, list[str]] = {}
    backward: dict[str, list[str]] = {}
    for edge in graph.edges_of(RelationType.COMPOSE_WITH):
        forward.setdefault(edge.src, []).append(edge.dst)
        backward.setdefault(edge.dst, []).append(edge.src)

    dist_from = _bfs_dist(source_id, forward)
    if target_id not in dist_from:
        return None
    dist_to = _bfs_dist(target_id, backward)
    length = dist_from[target_id]

    path = [source_id]
    current = source_id
    for step in range(1, length + 1):
        nxt = min(
            n
            for n in forward.get(current, [])
            if dist_from.get(n) == step and dist_to.get(n) == length - step
        )
        path.append(nxt)
        current = nxt
    return path


def _bfs_dist(start: str, adjacency: dict[str, list[str]]) -> dict[str, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for neighbor in adjacency.get(node, []):
            if neighbor not in dist:
                dist[neighbor] = dist[node] + 1
                queue.append(neighbor)
    return dist


def redundancy_clusters(graph: SkillGraph) -> list[list[str]]:
    """Connected components over similar_to edges; singletons omitted."""
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for edge in graph.edges_of(RelationType.SIMILAR_TO):
        for node in (edge.src, edge.dst):
            parent.setdefault(node, node)
        union(edge.src, edge.dst)

    groups: dict[str, list[str]] = {}
    for node in parent:
        groups.setdefault(find(node), []).append(node)
    clusters = [sorted(members) for members in groups.values() if len(members) > 1]
    clusters.sort(key=lambda c: c[0])
    return clusters


GRAPH_HEADER = "skillgraph v1"


def serialize_graph(graph: SkillGraph) -> bytes:
    """Canonical line format: header, sorted nodes, sorted edges."""
    lines = [GRAPH_HEADER]
    for node_id in sorted(graph.nodes):
        lines.append(f"node {node_id} {graph.nodes[node_id]}")
    for key in sorted(graph.edges):
        edge = graph.edges[key]
        lines.append(
            f"edge {edge.src} {edge.dst} {edge.rel.value} {edge.confidence!r} {edge.provenance.value}"
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def load_graph(data: bytes) -> SkillGraph:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedGraphFile(f"not UTF-8: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0] != GRAPH_HEADER:
        raise MalformedGraphFile("missing or unknown header line")
    if not text.endswith("\n"):
        raise MalformedGraphFile("truncated file (missing trailing newline)")

    graph = SkillGraph()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(" ")
        try:
            if parts[0] == "node" and len(parts) == 3:
                graph.add_node(parts[1], parts[2])
            elif parts[0] == "edge" and len(parts) == 6:
                edge = Edge(
                    src=parts[1],
                    dst=parts[2],
                    rel=RelationType(parts[3]),
                    confidence=float(parts[4]),
                    provenance=Provenance(parts[5]),
                )
                graph.add_edge(edge)
            else:
                raise MalformedGraphFile(f"line {lineno}: unrecognized record {line!r}")
        except (ValueError, UnknownNode, SelfLoop) as exc:
            raise MalformedGraphFile(f"line {lineno}: {exc}") from exc
    return graph


@dataclass
class TraceStep:
    skill_id: str
    outcome: str  # "success" marks completion


def propose_candidates(
    skills: list[SkillPackage],
    embedder=None,
    threshold: float = 0.85,
    traces: list[list[TraceStep]] | None = None,
) -> list[Edge]:
    """Candidate edges from similarity, name references, and traces.

    similar_to: metadata-embedding cosine >= threshold, confidence = the
    cosine. depend_on: one skill's instructions naming another skill or
    its entry script (confidence 0.5). compose_with: a successful step
    directly followed by another skill inside one trace (confidence 0.5).
    """
    if not skills:
        raise ValueError("skills must be nonempty")
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    embed = embedder.embed if embedder is not None else embed_fallback

    candidates: dict[tuple[str, str, str], Edge] = {}

    def offer(edge: Edge) -> None:
        edge = _canonical(edge)
        existing = candidates.get(edge.key())
        if existing is None or edge.confidence > existing.confidence:
            candidates[edge.key()] = edge

    vectors: list[tuple[str, EmbeddingVector]] = [
        (pkg.id, embed(metadata_text(pkg.document.metadata))) for pkg in skills
    ]
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            id_a, vec_a = vectors[i]
            id_b, vec_b = vectors[j]
            if id_a == id_b:
                continue
            cos = vec_a.cosine(vec_b)
            if cos >= threshold:
                offer(
                    Edge(
                        src=min(id_a, id_b),
                        dst=max(id_a, id_b),
                        rel=RelationType.SIMILAR_TO,
                        confidence=max(0.0, min(1.0, cos)),
                        provenance=Provenance.EMBEDDING_SIMILARITY,
                    )
                )

    for dependent in skills:
        text = dependent.document.instructions.lower()
        for prerequisite in skills:
            if prerequisite.id == dependent.id:
                continue
            mentions = prerequisite.document.metadata.name in text
            entry = prerequisite.entry_point
            if entry and entry.lower() in text:
                mentions = True
            if mentions:
                offer(
                    Edge(
                        src=dependent.id,
                        dst=prerequisite.id,
                        rel=RelationType.DEPEND_ON,
                        confidence=0.5,
                        provenance=Provenance.DEPENDENCY_EXTRACTION,
                    )
                )

    known = {pkg.id for pkg in skills}
    for trace in traces or []:
        for first, second in zip(trace, trace[1:]):
            if first.outcome != "success":
                continue
            if first.skill_id not in known or second.skill_id not in known:
                continue
            if first.skill_id == second.skill_id:
                continue
            offer(
                Edge(
                    src=first.skill_id,
                    dst=second.skill_id,
                    rel=RelationType.COMPOSE_WITH,
                    confidence=0.5,
                    provenance=Provenance.TRACE_ALIGNMENT,
                )
            )

    return sorted(candidates.values(), key=lambda e: e.key())


class ThresholdRelationJudge:
    """Offline confirmation: accept candidates at or above a confidence bar."""

    def __init__(self, threshold: float = 0.9):
        self.threshold = threshold

    def confirm(self, candidates: list[Edge]) -> list[Edge]:
        return [e for e in candidates if e.confidence >= self.threshold]


def confirm_relations(candidates: list[Edge], judge=None) -> list[Edge]:
    """Filter candidate edges through a relation judge (may also retype)."""
    judge = judge or ThresholdRelationJudge()
    return judge.confirm(list(candidates))
