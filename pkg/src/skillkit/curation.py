"""Repository admission pipeline.

Stages: exact deduplication (joint doc/structure hashes) -> rule
filtering -> categorization and tagging -> evaluation -> admission.
Near-duplicate detection is not removal; it becomes similar_to edges in
the relation graph.

Admission policy: a skill enters the repository iff Safety is not Poor,
Executability is not Poor, and at most one dimension overall is Poor.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from typing import Protocol

from .errors import ProviderUnavailable
from .evaluation import (
    Dimension,
    EvaluationReport,
    Grade,
    count_steps,
    evaluate,
)
from .model import (
    Category,
    SkillMetadata,
    SkillPackage,
    compute_fingerprint,
    normalize_name,
    validate_package,
)
from .sandbox import SandboxLimits
from .search import tokenize

MIN_INSTRUCTION_CHARS = 200
MIN_STEP_MARKERS = 2

PLACEHOLDER_MARKERS = ("todo", "fixme", "lorem ipsum", "tbd", "xxx")

STOPWORDS = frozenset(
    """a an the and or but for with to of in on at by from as is are be was were it its
    this that these those into your you use using used via per each any all can will
    should would could how what when where which while then than so not no do does
    done have has had if about over under more most less least other another same new
    also just like""".split()
)


@dataclass
class DuplicateRecord:
    dropped_id: str
    kept_id: str
    reason: str


def deduplicate(packages: list[SkillPackage]) -> tuple[list[SkillPackage], list[DuplicateRecord]]:
    """Drop exact duplicates: equal doc_hash AND equal structure_hash.

    The survivor of each group is the lexicographically smallest id (first
    occurrence wins ties); survivors otherwise keep input order. Idempotent
    and order-independent in outcome.
    """
    groups: dict[tuple[str, str], list[SkillPackage]] = {}
    order: list[tuple[str, str]] = []
    for pkg in packages:
        fp = compute_fingerprint(pkg)
        key = (fp.doc_hash, fp.structure_hash)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(pkg)

    survivors: list[SkillPackage] = []
    report: list[DuplicateRecord] = []
    for key in order:
        members = groups[key]
        keeper = min(members, key=lambda p: p.id)
        survivors.append(keeper)
        for pkg in members:
            if pkg is not keeper:
                report.append(
                    DuplicateRecord(
                        dropped_id=pkg.id,
                        kept_id=keeper.id,
                        reason="identical document and structure hashes",
                    )
                )
    return survivors, report


@dataclass
class FilterConfig:
    min_instruction_chars: int = MIN_INSTRUCTION_CHARS
    min_step_markers: int = MIN_STEP_MARKERS


@dataclass
class FilterDecision:
    keep: bool
    violations: list[str]


def filter_skill(pkg: SkillPackage, config: FilterConfig | None = None) -> FilterDecision:
    """Rule-based quality floor; reports every failed rule."""
    config = config or FilterConfig()
    meta = pkg.document.metadata
    instructions = pkg.document.instructions
    violations: list[str] = []

    if len(instructions.strip()) < config.min_instruction_chars:
        violations.append(
            f"too short: {len(instructions.strip())} chars < {config.min_instruction_chars}"
        )
    desc_slug = normalize_name(meta.description)
    if desc_slug == meta.name or meta.name.startswith(desc_slug + "-"):
        violations.append("description duplicates name")
    steps = count_steps(instructions)
    if steps < config.min_step_markers:
        violations.append(f"only {steps} step markers (need {config.min_step_markers})")
    haystack = f"{meta.description}\n{instructions}".lower()
    hits = sorted({m for m in PLACEHOLDER_MARKERS if m in haystack})
    if hits:
        violations.append(f"placeholder content: {', '.join(hits)}")

    return FilterDecision(keep=not violations, violations=violations)


class CategorizerProvider(Protocol):
    def categorize(self, metadata: SkillMetadata) -> tuple[Category, list[str]]: ...


def _load_category_table() -> list[tuple[re.Pattern, Category]]:
    raw = (
        importlib_resources.files("skillkit")
        .joinpath("data/category_keywords.tsv")
        .read_text(encoding="utf-8")
    )
    table = []
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        keyword, category = line.split("\t")
        table.append((re.compile(rf"\b{re.escape(keyword)}\b", re.I), Category.parse(category)))
    return table


class KeywordCategorizer:
    """Offline categorization: first matching table row, else Other; tags
    are the top-5 non-stopword tokens of name+description by frequency."""

    def __init__(self) -> None:
        self.table = _load_category_table()

    def categorize(self, metadata: SkillMetadata) -> tuple[Category, list[str]]:
        haystack = f"{metadata.name} {metadata.description}"
        category = Category.OTHER
        for pattern, cat in self.table:
            if pattern.search(haystack):
                category = cat
                break

        counts: dict[str, int] = {}
        first_seen: dict[str, int] = {}
        for i, token in enumerate(tokenize(haystack)):
            if token in STOPWORDS:
                continue
            counts[token] = counts.get(token, 0) + 1
            first_seen.setdefault(token, i)
        ranked = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
        tags = ranked[:5] or ["general"]
        return category, tags


def categorize_and_tag(
    pkg: SkillPackage, provider: CategorizerProvider | None = None
) -> tuple[Category, list[str]]:
    """Assign a category from the closed ten-set and 1..16 retrieval tags."""
    provider = provider or KeywordCategorizer()
    return provider.categorize(pkg.document.metadata)


def admission_passes(report: EvaluationReport) -> bool:
    if report.grade_of(Dimension.SAFETY) == Grade.POOR:
        return False
    if report.grade_of(Dimension.EXECUTABILITY) == Grade.POOR:
        return False
    poor = sum(1 for dim in Dimension if report.grade_of(dim) == Grade.POOR)
    return poor <= 1


@dataclass
class CurationReport:
    """Exhaustive, partitioning record of one consolidation run.

    input_count always equals |duplicates_removed| + |filtered_out| +
    |admitted| + |rejected|. The non-partition fields carry the pipeline's
    working products for callers that persist admitted skills.
    """

    input_count: int
    duplicates_removed: list[DuplicateRecord]
    filtered_out: list[tuple[str, list[str]]]
    admitted: list[str]
    rejected: list[tuple[str, EvaluationReport]]
    evaluations: dict[str, EvaluationReport] = field(default_factory=dict)
    assignments: dict[str, tuple[Category, list[str]]] = field(default_factory=dict)
    admitted_packages: list[SkillPackage] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "input_count": self.input_count,
            "duplicates_removed": [
                {"dropped_id": d.dropped_id, "kept_id": d.kept_id, "reason": d.reason}
                for d in self.duplicates_removed
            ],
            "filtered_out": [{"id": i, "violations": v} for i, v in self.filtered_out],
            "admitted": list(self.admitted),
            "rejected": [
                {"id": i, "grades": report.to_json()["grades"]} for i, report in self.rejected
            ],
        }


def consolidate(
    packages: list[SkillPackage],
    judge=None,
    *,
    categorizer: CategorizerProvider | None = None,
    filter_config: FilterConfig | None = None,
    sandbox_limits: SandboxLimits | None = None,
    with_sandbox: bool = True,
) -> CurationReport:
    """Run the full admission pipeline over a candidate corpus.

    A remote judge or categorizer that becomes unavailable is retried with
    the deterministic fallback; ProviderUnavailable propagates only if the
    fallback path fails too.
    """
    survivors, duplicates = deduplicate(packages)

    filtered_out: list[tuple[str, list[str]]] = []
    kept: list[SkillPackage] = []
    for pkg in survivors:
        validity = validate_package(pkg)
        if not validity.ok:
            filtered_out.append((pkg.id, validity.violations))
            continue
        decision = filter_skill(pkg, filter_config)
        if decision.keep:
            kept.append(pkg)
        else:
            filtered_out.append((pkg.id, decision.violations))

    report = CurationReport(
        input_count=len(packages),
        duplicates_removed=duplicates,
        filtered_out=filtered_out,
        admitted=[],
        rejected=[],
    )

    for pkg in kept:
        try:
            assignment = categorize_and_tag(pkg, categorizer)
        except ProviderUnavailable:
            assignment = categorize_and_tag(pkg, None)
        report.assignments[pkg.id] = assignment

        try:
            evaluation = evaluate(pkg, judge, limits=sandbox_limits, with_sandbox=with_sandbox)
        except ProviderUnavailable:
            evaluation = evaluate(pkg, None, limits=sandbox_limits, with_sandbox=with_sandbox)
        report.evaluations[pkg.id] = evaluation

        if admission_passes(evaluation):
            report.admitted.append(pkg.id)
            report.admitted_packages.append(pkg)
        else:
            report.rejected.append((pkg.id, evaluation))

    return report
