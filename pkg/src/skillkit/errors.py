"""Exception types shared across the package."""

from __future__ import annotations


class SkillKitError(Exception):
    """Base class for all library errors."""


class MalformedFrontmatter(SkillKitError):
    """SKILL.md frontmatter is structurally broken (delimiters, key lines)."""


class MissingField(SkillKitError):
    """A required frontmatter field is absent."""


class InvalidCategory(SkillKitError):
    """Category value is not one of the ten fixed categories."""


class MalformedArchive(SkillKitError):
    """Package archive bytes cannot be read."""


class ProviderUnavailable(SkillKitError):
    """Remote provider failed after bounded retries."""


class EmptyGeneration(SkillKitError):
    """Generation produced nothing usable from the source."""


class LengthMismatch(SkillKitError):
    """Paired label vectors differ in length."""


class EmptyInput(SkillKitError):
    """An operation that needs at least one element got none."""


class UnknownNode(SkillKitError):
    """Graph edge references a node that was never added."""


class SelfLoop(SkillKitError):
    """Graph edge with identical endpoints."""


class DependencyCycle(SkillKitError):
    """Dependency planning found a cycle; carries one witness cycle."""

    def __init__(self, cycle: list[str]):
        super().__init__(f"dependency cycle: {' -> '.join(cycle)}")
        self.cycle = cycle


class MalformedGraphFile(SkillKitError):
    """Graph file bytes cannot be parsed."""


class EmptyQuery(SkillKitError):
    """No tokens survived query tokenization."""


class ZeroQueryVector(SkillKitError):
    """Vector search received an all-zero query vector."""


class UnknownSkill(SkillKitError):
    """Skill id not present in the store."""

    def __init__(self, skill_id: str):
        super().__init__(f"unknown skill: {skill_id}")
        self.skill_id = skill_id


class SandboxUnavailable(SkillKitError):
    """This platform cannot enforce sandbox isolation; callers must not degrade silently."""


class NoEntryPoint(SkillKitError):
    """Execution was requested for a skill that declares no entry script."""
