"""Five-dimension skill grading, sandbox-backed executability, and
rater-agreement metrics (MAE and quadratic weighted kappa).

Grades are ordinal: Poor=0, Average=1, Good=2. The deterministic rule
judge is an offline stand-in for a model-backed grader; both share one
contract so they interchange freely.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Protocol

from .errors import EmptyInput, LengthMismatch, ProviderUnavailable
from .model import SkillPackage
from .sandbox import SandboxLimits, SandboxOutcome, SandboxResult, run_sandbox


class Dimension(str, Enum):
    SAFETY = "safety"
    COMPLETENESS = "completeness"
    EXECUTABILITY = "executability"
    MAINTAINABILITY = "maintainability"
    COST_AWARENESS = "cost_awareness"


class Grade(IntEnum):
    POOR = 0
    AVERAGE = 1
    GOOD = 2

    @property
    def label(self) -> str:
        return {Grade.POOR: "Poor", Grade.AVERAGE: "Average", Grade.GOOD: "Good"}[self]

    @classmethod
    def parse(cls, value: str) -> "Grade":
        for member in cls:
            if member.label.lower() == value.strip().lower():
                return member
        raise ValueError(f"unknown grade: {value!r}")


NUM_GRADES = 3


@dataclass
class EvaluationReport:
    skill_id: str
    grades: dict[Dimension, tuple[Grade, str]]
    sandbox: SandboxResult | None
    judge_identity: str

    def __post_init__(self) -> None:
        missing = [d.value for d in Dimension if d not in self.grades]
        if missing:
            raise ValueError(f"grades missing dimensions: {missing}")
        for dim, (_, rationale) in self.grades.items():
            if not rationale.strip():
                raise ValueError(f"empty rationale for {dim.value}")

    def grade_of(self, dim: Dimension) -> Grade:
        return self.grades[dim][0]

    def to_json(self) -> dict:
        return {
            "skill_id": self.skill_id,
            "grades": {
                dim.value: {"level": grade.label.lower(), "rationale": rationale}
                for dim, (grade, rationale) in self.grades.items()
            },
            "sandbox": self.sandbox.to_json() if self.sandbox else None,
            "judge_identity": self.judge_identity,
        }


class JudgeProvider(Protocol):
    """Grading backend: remote model endpoint or the local rule judge."""

    identity: str

    def grade_skill(
        self, pkg: SkillPackage, sandbox: SandboxResult | None = None
    ) -> dict[Dimension, tuple[Grade, str]]: ...


# Patterns that gate Safety straight to Poor: destructive filesystem
# operations, raw device writes, credential exfiltration.
DENY_PATTERNS: list[tuple[str, re.Pattern]] = [
    ("recursive deletion", re.compile(r"rm\s+-[a-z]*[rf][a-z]*\s+[-a-z]*\s*(/|~|\$home|\*)", re.I)),
    ("recursive deletion", re.compile(r"shutil\.rmtree\(\s*['\"]\s*/", re.I)),
    ("raw device write", re.compile(r"\bdd\b[^\n]*of=/dev/", re.I)),
    ("raw device write", re.compile(r"\bmkfs(\.[a-z0-9]+)?\b", re.I)),
    ("credential exfiltration", re.compile(r"(curl|wget|scp|nc)\b[^\n]*(\.ssh|id_rsa|\.aws/credentials|api[_-]?key|secret)", re.I)),
    ("credential exfiltration", re.compile(r"(cat|base64)\b[^\n]*(id_rsa|\.aws/credentials)", re.I)),
]

_STEP_RE = re.compile(r"^\s*(?:\d+[.)]|[-*+])\s+\S", re.M)
_PREREQ_RE = re.compile(r"^\s*#*\s*prerequisites?\b", re.I | re.M)
_COST_RE = re.compile(
    r"(expected|estimated|typical)\s+(runtime|run\s*time|cost|duration)|runtime:|cost:|takes\s+(about|under|approximately|roughly)",
    re.I,
)


def count_steps(text: str) -> int:
    """Numbered lines or imperative bullets at line start."""
    return len(_STEP_RE.findall(text))


def _package_text(pkg: SkillPackage) -> str:
    chunks = [pkg.document.instructions]
    for _, data in pkg.resources:
        chunks.append(data.decode("utf-8", errors="replace"))
    return "\n".join(chunks)


def safety_violations(pkg: SkillPackage) -> list[str]:
    text = _package_text(pkg)
    hits = []
    for label, pattern in DENY_PATTERNS:
        if pattern.search(text):
            hits.append(label)
    return sorted(set(hits))


class RuleJudge:
    """Deterministic rubric grader. Offline, reproducible, documented."""

    identity = "rule-judge/1"

    def grade_skill(
        self, pkg: SkillPackage, sandbox: SandboxResult | None = None
    ) -> dict[Dimension, tuple[Grade, str]]:
        instructions = pkg.document.instructions
        grades: dict[Dimension, tuple[Grade, str]] = {}

        hits = safety_violations(pkg)
        if hits:
            grades[Dimension.SAFETY] = (Grade.POOR, f"deny patterns matched: {', '.join(hits)}")
        else:
            grades[Dimension.SAFETY] = (Grade.GOOD, "no deny patterns matched")

        steps = count_steps(instructions)
        has_prereq = bool(_PREREQ_RE.search(instructions))
        if steps >= 3 and has_prereq:
            grades[Dimension.COMPLETENESS] = (
                Grade.GOOD,
                f"{steps} steps with a prerequisites section",
            )
        elif steps >= 1:
            grades[Dimension.COMPLETENESS] = (
                Grade.AVERAGE,
                f"{steps} steps but no prerequisites section" if not has_prereq else f"only {steps} steps",
            )
        else:
            grades[Dimension.COMPLETENESS] = (Grade.POOR, "no step markers found")

        outcome = sandbox.outcome if sandbox else SandboxOutcome.NO_ENTRY_POINT
        if outcome == SandboxOutcome.SUCCEEDED:
            grades[Dimension.EXECUTABILITY] = (Grade.GOOD, "sandbox run succeeded")
        elif outcome in (SandboxOutcome.NONZERO_EXIT, SandboxOutcome.NO_ENTRY_POINT):
            reason = "entry exited nonzero" if outcome == SandboxOutcome.NONZERO_EXIT else "no entry point to verify"
            grades[Dimension.EXECUTABILITY] = (Grade.AVERAGE, reason)
        else:
            grades[Dimension.EXECUTABILITY] = (Grade.POOR, f"sandbox outcome: {outcome.value}")

        uncited = [p for p, _ in pkg.resources if p not in instructions]
        if len(pkg.resources) <= 10 and not uncited:
            grades[Dimension.MAINTAINABILITY] = (Grade.GOOD, "small bundle, every resource cited")
        else:
            reason = f"{len(pkg.resources)} resources" if len(pkg.resources) > 10 else f"uncited resources: {', '.join(uncited)}"
            grades[Dimension.MAINTAINABILITY] = (Grade.AVERAGE, reason)

        if _COST_RE.search(instructions):
            grades[Dimension.COST_AWARENESS] = (Grade.GOOD, "declares expected runtime or cost")
        else:
            grades[Dimension.COST_AWARENESS] = (Grade.AVERAGE, "no runtime or cost declaration")

        return grades


def rule_fallback_judge(pkg: SkillPackage, sandbox: SandboxResult | None = None) -> EvaluationReport:
    """Grade with the deterministic rubric only (no sandbox run here)."""
    judge = RuleJudge()
    return EvaluationReport(
        skill_id=pkg.id,
        grades=judge.grade_skill(pkg, sandbox),
        sandbox=sandbox,
        judge_identity=judge.identity,
    )


def evaluate(
    pkg: SkillPackage,
    judge: JudgeProvider | None = None,
    *,
    limits: SandboxLimits | None = None,
    with_sandbox: bool = True,
) -> EvaluationReport:
    """Grade all five dimensions; sandbox evidence caps Executability.

    A Timeout or MemoryExceeded run forces Executability to Poor and a
    nonzero exit caps it at Average, whatever the judge said.
    """
    judge = judge or RuleJudge()
    sandbox = run_sandbox(pkg, limits) if with_sandbox else None
    grades = dict(judge.grade_skill(pkg, sandbox))
    missing = [d for d in Dimension if d not in grades]
    if missing:
        raise ProviderUnavailable(f"judge returned no grade for: {[d.value for d in missing]}")

    if sandbox is not None:
        level, rationale = grades[Dimension.EXECUTABILITY]
        if sandbox.outcome in (SandboxOutcome.TIMEOUT, SandboxOutcome.MEMORY_EXCEEDED):
            grades[Dimension.EXECUTABILITY] = (
                Grade.POOR,
                f"{rationale}; capped: sandbox {sandbox.outcome.value}",
            )
        elif sandbox.outcome == SandboxOutcome.NONZERO_EXIT and level > Grade.AVERAGE:
            grades[Dimension.EXECUTABILITY] = (
                Grade.AVERAGE,
                f"{rationale}; capped: entry exited {sandbox.exit_code}",
            )

    return EvaluationReport(
        skill_id=pkg.id,
        grades=grades,
        sandbox=sandbox,
        judge_identity=judge.identity,
    )


def mae(a: list[Grade], b: list[Grade]) -> float:
    """Mean absolute difference of ordinal grades."""
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)}")
    if not a:
        raise EmptyInput("mae needs at least one pair")
    return sum(abs(int(x) - int(y)) for x, y in zip(a, b)) / len(a)


def qwk(a: list[Grade], b: list[Grade]) -> float:
    """Quadratic weighted kappa over the three grade levels.

    Weights are (i-j)^2/(K-1)^2; the expected matrix comes from the outer
    product of the two raters' marginals. When expected disagreement is
    zero (both raters constant and equal) the convention here is 1.0.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)}")
    if not a:
        raise EmptyInput("qwk needs at least one pair")
    n = len(a)
    k = NUM_GRADES
    observed = [[0.0] * k for _ in range(k)]
    for x, y in zip(a, b):
        observed[int(x)][int(y)] += 1.0
    row = [sum(observed[i][j] for j in range(k)) for i in range(k)]
    col = [sum(observed[i][j] for i in range(k)) for j in range(k)]
    num = 0.0
    den = 0.0
    for i in range(k):
        for j in range(k):
            w = (i - j) ** 2 / (k - 1) ** 2
            num += w * observed[i][j]
            den += w * row[i] * col[j] / n
    if den == 0.0:
        return 1.0
    return 1.0 - num / den


@dataclass
class DimensionAgreement:
    mae: float
    qwk: float
    n: int


def agreement_to_json(stats: dict["Dimension", "DimensionAgreement"]) -> dict:
    return {
        dim.value: {"mae": agreement.mae, "qwk": agreement.qwk, "n": agreement.n}
        for dim, agreement in stats.items()
    }


def agreement_stats(
    a: list[EvaluationReport], b: list[EvaluationReport]
) -> dict[Dimension, DimensionAgreement]:
    """Per-dimension MAE/QWK between two graders, paired by skill id."""
    by_id_b = {r.skill_id: r for r in b}
    paired = [(ra, by_id_b[ra.skill_id]) for ra in a if ra.skill_id in by_id_b]
    if not paired:
        raise EmptyInput("no shared skill ids between report sets")
    out = {}
    for dim in Dimension:
        la = [ra.grade_of(dim) for ra, _ in paired]
        lb = [rb.grade_of(dim) for _, rb in paired]
        out[dim] = DimensionAgreement(mae=mae(la, lb), qwk=qwk(la, lb), n=len(paired))
    return out


def aggregate_distribution(reports: list[EvaluationReport]) -> dict[Dimension, dict[Grade, int]]:
    """Grade counts per dimension; every dimension's counts sum to len(reports)."""
    dist = {dim: {grade: 0 for grade in Grade} for dim in Dimension}
    for report in reports:
        for dim in Dimension:
            dist[dim][report.grade_of(dim)] += 1
    return dist
