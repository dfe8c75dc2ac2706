"""The three-step skill lifecycle: discover, activate, execute.

Progressive disclosure is structural: discovery works entirely from the
store's metadata surface (search index built over name/description/tags),
activation loads the full document, and execution materializes resources
and runs the entry script in the sandbox. The store's access counters let
tests prove discovery performed zero document reads.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import providers
from .errors import NoEntryPoint, UnknownSkill
from .graph import SkillGraph, execution_plan
from .sandbox import SandboxLimits, SandboxOutcome, SandboxResult, run_sandbox
from .search import SearchIndex, hybrid_search
from .store import SkillStore

DISCOVERY_KW_WEIGHT = 0.5
DISCOVERY_VEC_WEIGHT = 0.5


@dataclass
class DiscoveryCandidate:
    skill_id: str
    name: str
    description: str
    relevance_score: float


@dataclass
class ActivatedSkill:
    skill_id: str
    instructions: str
    resources: list[tuple[str, int]]
    entry: str | None


@dataclass
class CostRecord:
    wall_time_ms: int
    peak_memory_bytes: int
    external_call_count: int


def build_metadata_index(store: SkillStore, dim: int = 256) -> SearchIndex:
    """Search index over the store's metadata surface only."""
    index = SearchIndex(dim=dim)
    for skill_id in store.ids():
        entry = store.read_metadata(skill_id)
        index.add(skill_id, entry.name, entry.description, entry.tags, entry.category)
    return index


def discover(
    task_text: str,
    store: SkillStore,
    top_k: int = 10,
    index: SearchIndex | None = None,
) -> list[DiscoveryCandidate]:
    """Rank skills for a task over minimal metadata; no instruction bodies."""
    if index is None:
        index = build_metadata_index(store)
    hits = hybrid_search(
        index, task_text, top_k=top_k, kw_weight=DISCOVERY_KW_WEIGHT, vec_weight=DISCOVERY_VEC_WEIGHT
    )
    candidates = []
    for hit in hits:
        entry = store.read_metadata(hit.skill_id)
        candidates.append(
            DiscoveryCandidate(
                skill_id=hit.skill_id,
                name=entry.name,
                description=entry.description,
                relevance_score=hit.score,
            )
        )
    return candidates


def activate(skill_id: str, store: SkillStore) -> ActivatedSkill:
    """Load the full instructions and enumerate (but not materialize) resources."""
    if skill_id not in store:
        raise UnknownSkill(skill_id)
    document = store.read_document(skill_id)
    return ActivatedSkill(
        skill_id=skill_id,
        instructions=document.instructions,
        resources=store.resource_listing(skill_id),
        entry=document.metadata.extra.get("entry") or None,
    )


def execute(
    activated: ActivatedSkill,
    args: tuple[str, ...] = (),
    limits: SandboxLimits | None = None,
    *,
    store: SkillStore,
    graph: SkillGraph | None = None,
) -> tuple[SandboxResult, CostRecord]:
    """Run the activated skill's entry script under sandbox limits.

    When a relation graph is supplied, dependency planning must succeed
    before any process starts (cycles abort the run). Text-only skills
    raise NoEntryPoint: following their instructions is the caller's job.
    """
    if activated.entry is None:
        raise NoEntryPoint(f"{activated.skill_id} bundles no entry script")
    if graph is not None and activated.skill_id in graph.nodes:
        execution_plan(graph, activated.skill_id)

    calls_before = providers.call_counter.value
    started = time.monotonic()
    pkg = store.load_package(activated.skill_id)
    result = run_sandbox(pkg, limits, args=args)
    wall_ms = int((time.monotonic() - started) * 1000)
    if result.outcome == SandboxOutcome.NO_ENTRY_POINT:
        raise NoEntryPoint(f"{activated.skill_id} entry script missing from package")

    cost = CostRecord(
        wall_time_ms=max(wall_ms, result.wall_time_ms),
        peak_memory_bytes=result.peak_memory_bytes,
        external_call_count=providers.call_counter.value - calls_before,
    )
    return result, cost
