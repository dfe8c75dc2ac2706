"""Skill creation from heterogeneous sources.

Four source kinds (trajectory logs, repository trees, extracted document
text, free prompts) feed a generator provider. The template fallback here
is a pure function of the input bytes: it scaffolds instructions from
fixed templates so the whole pipeline runs offline and reproducibly.
"""

from __future__ import annotations

import base64
import hashlib
import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyGeneration
from .model import (
    Category,
    NAME_MAX,
    SkillDocument,
    SkillMetadata,
    SkillPackage,
    build_package,
    check_relpath,
    normalize_relpath,
    validate_package,
)
from .providers import Draft, GeneratorProvider

REPO_PACKAGE_CAP = 5
SCRIPT_SUFFIXES = (".py", ".sh", ".js")

_LEAD_IN_RE = re.compile(
    r"^(please\s+)?(create|make|build|write|generate)\s+(a|an|the)\s+skill\s+(for|to|that|which)\s+",
    re.I,
)


class SourceKind(str, Enum):
    TRAJECTORY = "trajectory"
    REPOSITORY = "repository"
    DOCUMENT = "document"
    PROMPT = "prompt"


@dataclass
class TrajectoryStep:
    actor: str
    action: str
    observation: str


@dataclass
class SourceInput:
    kind: SourceKind
    prompt: str = ""
    document_text: str = ""
    document_name: str = ""
    steps: list[TrajectoryStep] = field(default_factory=list)
    tree: list[tuple[str, bytes]] = field(default_factory=list)

    @classmethod
    def from_prompt(cls, text: str) -> "SourceInput":
        return cls(kind=SourceKind.PROMPT, prompt=text)

    @classmethod
    def from_document(cls, text: str, filename: str) -> "SourceInput":
        return cls(kind=SourceKind.DOCUMENT, document_text=text, document_name=filename)

    @classmethod
    def from_trajectory(cls, steps: list[TrajectoryStep]) -> "SourceInput":
        return cls(kind=SourceKind.TRAJECTORY, steps=list(steps))

    @classmethod
    def from_repository(cls, tree: list[tuple[str, bytes]]) -> "SourceInput":
        normalized = [(normalize_relpath(p), data) for p, data in tree]
        for path, _ in normalized:
            problem = check_relpath(path)
            if problem:
                raise ValueError(f"repository tree: {problem}")
        return cls(kind=SourceKind.REPOSITORY, tree=normalized)

    def is_empty(self) -> bool:
        if self.kind == SourceKind.PROMPT:
            return not self.prompt.strip()
        if self.kind == SourceKind.DOCUMENT:
            return not self.document_text.strip()
        if self.kind == SourceKind.TRAJECTORY:
            return not self.steps
        return not self.tree

    def digest(self) -> str:
        h = hashlib.md5()
        h.update(self.kind.value.encode())
        if self.kind == SourceKind.PROMPT:
            h.update(self.prompt.encode())
        elif self.kind == SourceKind.DOCUMENT:
            h.update(self.document_name.encode() + b"\0" + self.document_text.encode())
        elif self.kind == SourceKind.TRAJECTORY:
            for step in self.steps:
                h.update(f"{step.actor}\0{step.action}\0{step.observation}\1".encode())
        else:
            for path, data in sorted(self.tree):
                h.update(path.encode() + b"\0" + hashlib.md5(data).digest())
        return h.hexdigest()[:12]

    def payload_json(self) -> dict:
        """Wire form for remote generator providers."""
        if self.kind == SourceKind.PROMPT:
            return {"text": self.prompt}
        if self.kind == SourceKind.DOCUMENT:
            return {"text": self.document_text, "filename": self.document_name}
        if self.kind == SourceKind.TRAJECTORY:
            return {
                "steps": [
                    {"actor": s.actor, "action": s.action, "observation": s.observation}
                    for s in self.steps
                ]
            }
        return {
            "entries": [
                {"path": p, "content_b64": base64.b64encode(d).decode()} for p, d in self.tree
            ]
        }


def _one_line(text: str, limit: int = 1000) -> str:
    flat = " ".join(text.split())
    if len(flat) > limit:
        flat = flat[: limit - 3].rstrip() + "..."
    return flat


def slugify(text: str, max_words: int = 10) -> str:
    words = re.findall(r"[a-z0-9]+", text.lower())[:max_words]
    slug = "-".join(words)
    return slug[:NAME_MAX].rstrip("-")


def _imperative(word: str) -> str:
    """Best-effort gerund stripping: converting -> convert, running -> run."""
    if word.endswith("ing") and len(word) > 5:
        base = word[:-3]
        if len(base) >= 2 and base[-1] == base[-2] and base[-1] not in "aeiou":
            base = base[:-1]
        return base
    return word


def _prompt_name(prompt: str) -> str:
    core = _LEAD_IN_RE.sub("", prompt.strip())
    words = re.findall(r"[A-Za-z0-9]+", core.lower())
    if not words:
        return ""
    words[0] = _imperative(words[0])
    return slugify(" ".join(words))


def _first_sentence(text: str) -> str:
    flat = " ".join(text.split())
    match = re.search(r"[.!?](\s|$)", flat)
    return flat[: match.end()].strip() if match else flat


class TemplateFallbackGenerator:
    """Deterministic generation: fixed templates, no model calls.

    Safe for concurrent use (stateless).
    """

    def generate(self, source: SourceInput) -> list[Draft]:
        if source.is_empty():
            return []
        if source.kind == SourceKind.PROMPT:
            return self._from_prompt(source)
        if source.kind == SourceKind.DOCUMENT:
            return self._from_document(source)
        if source.kind == SourceKind.TRAJECTORY:
            return self._from_trajectory(source)
        return self._from_repository(source)

    def _from_prompt(self, source: SourceInput) -> list[Draft]:
        name = _prompt_name(source.prompt)
        if not name:
            return []
        goal = _one_line(source.prompt)
        instructions = (
            f"Goal: {goal}\n"
            "\n"
            "Prerequisites:\n"
            "- A shell session in the workspace where the result should land.\n"
            "- Any input files or parameters the goal mentions, available locally.\n"
            "\n"
            "Steps:\n"
            "1. Restate the goal and list the concrete inputs and outputs it implies.\n"
            "2. Prepare the inputs: gather the files, parameters, and tools the goal names.\n"
            "3. Perform the core work the goal describes, checking intermediate results.\n"
            "4. Verify the final output satisfies the goal before declaring success.\n"
            "\n"
            "Expected runtime: under a minute for typical inputs.\n"
        )
        metadata = SkillMetadata(name=name, description=_one_line(source.prompt), category=Category.OTHER)
        return [Draft(document=SkillDocument(metadata=metadata, instructions=instructions))]

    def _from_document(self, source: SourceInput) -> list[Draft]:
        stem = re.sub(r"\.[A-Za-z0-9]+$", "", source.document_name or "document")
        name = slugify(f"follow {stem}") or "follow-document"
        paragraphs = [p.strip() for p in re.split(r"\n\s*\n", source.document_text) if p.strip()]
        sections = "\n\n".join(
            f"Section {i}:\n{para}" for i, para in enumerate(paragraphs, start=1)
        )
        instructions = (
            f"Goal: follow the guidance captured from `{source.document_name or 'the source document'}`.\n"
            "\n"
            "Prerequisites:\n"
            "- The context the document assumes: tools, accounts, or data it references.\n"
            "\n"
            "Steps:\n"
            "1. Read each section below in order before acting.\n"
            "2. Apply the guidance of every section to the task at hand.\n"
            "3. Confirm each section's outcome before moving to the next.\n"
            "\n"
            "Expected runtime: proportional to the document length; minutes, not hours.\n"
            "\n" + sections + "\n"
        )
        description = _first_sentence(source.document_text) or f"Guidance captured from {source.document_name}."
        metadata = SkillMetadata(name=name, description=_one_line(description), category=Category.OTHER)
        return [Draft(document=SkillDocument(metadata=metadata, instructions=instructions))]

    def _from_trajectory(self, source: SourceInput) -> list[Draft]:
        first_action = _one_line(source.steps[0].action, limit=60)
        name = slugify(f"replay {first_action}", max_words=6) or "replay-session"
        lines = []
        for i, step in enumerate(source.steps, start=1):
            action = _one_line(step.action, limit=200)
            observed = _one_line(step.observation, limit=120)
            suffix = f" (observed: {observed})" if observed else ""
            lines.append(f"{i}. {action}{suffix}")
        lines.append(f"{len(source.steps) + 1}. Confirm the final state matches the recorded session's outcome.")
        instructions = (
            f"Goal: reproduce a recorded {len(source.steps)}-step working session.\n"
            "\n"
            "Prerequisites:\n"
            "- The same tools and access the original session used.\n"
            "\n"
            "Steps:\n" + "\n".join(lines) + "\n"
            "\n"
            "Expected runtime: comparable to the original session.\n"
        )
        description = f"Replay a {len(source.steps)}-step recorded session starting with: {first_action}"
        metadata = SkillMetadata(name=name, description=_one_line(description), category=Category.OTHER)
        return [Draft(document=SkillDocument(metadata=metadata, instructions=instructions))]

    def _from_repository(self, source: SourceInput) -> list[Draft]:
        top_level = [(p, d) for p, d in source.tree if "/" not in p]
        scripts = sorted(p for p, _ in top_level if p.lower().endswith(SCRIPT_SUFFIXES))
        readme = next(
            (d for p, d in sorted(top_level) if p.lower().startswith("readme")), None
        )
        readme_text = readme.decode("utf-8", errors="replace") if readme else ""
        blobs = dict(source.tree)

        drafts = []
        for script in scripts[:REPO_PACKAGE_CAP]:
            stem = re.sub(r"\.[A-Za-z0-9]+$", "", script)
            runner = {"py": "python", "sh": "a POSIX shell", "js": "node"}[script.rsplit(".", 1)[1].lower()]
            excerpt = ""
            if readme_text.strip():
                paragraphs = [p.strip() for p in re.split(r"\n\s*\n", readme_text) if p.strip()]
                excerpt = "\n\nReference notes from the source tree:\n\n" + "\n\n".join(paragraphs[:2])
            instructions = (
                f"Goal: run the bundled `{script}` entry point from the packaged source tree.\n"
                "\n"
                "Prerequisites:\n"
                "- This package extracted into a working directory.\n"
                f"- An interpreter for the entry point ({runner}).\n"
                "\n"
                "Steps:\n"
                f"1. Review `{script}` and confirm it matches the task at hand.\n"
                "2. Change into the package root so relative paths resolve.\n"
                f"3. Execute `{script}` with {runner}.\n"
                "4. Inspect the exit status and captured output for errors.\n"
                "\n"
                "Resources:\n"
                f"- `{script}`: entry point bundled from the source tree.\n"
                "\n"
                "Expected runtime: depends on the script; typically under a minute."
                + excerpt
                + "\n"
            )
            description = (
                _first_sentence(readme_text)
                if readme_text.strip()
                else f"Run the {stem} entry point bundled from a source tree."
            )
            metadata = SkillMetadata(
                name=slugify(f"run {stem}") or "run-script",
                description=_one_line(description),
                category=Category.OTHER,
                extra={"entry": script},
            )
            drafts.append(
                Draft(
                    document=SkillDocument(metadata=metadata, instructions=instructions),
                    resources=[(script, blobs[script])],
                )
            )
        return drafts


def create_from_source(
    source: SourceInput, provider: GeneratorProvider | None = None
) -> list[SkillPackage]:
    """Generate candidate packages from one source.

    Every emitted package passes validate_package (drafts that do not are
    dropped), and carries a provenance note in the ``source`` frontmatter
    key. Raises EmptyGeneration when nothing usable comes out.
    """
    provider = provider or TemplateFallbackGenerator()
    if source.is_empty():
        raise EmptyGeneration(f"{source.kind.value} source is empty")
    source_tag = f"{source.kind.value}:{source.digest()}"

    packages = []
    for draft in provider.generate(source):
        if "source" not in draft.document.metadata.extra:
            draft.document.metadata.extra["source"] = source_tag
        pkg = build_package(draft.document, draft.resources)
        if validate_package(pkg).ok:
            packages.append(pkg)
    if not packages:
        raise EmptyGeneration(f"no usable skill from {source.kind.value} source")
    return packages


def template_fallback_generate(source: SourceInput) -> list[SkillPackage]:
    """Deterministic offline generation (same bytes in, same bytes out)."""
    return create_from_source(source, TemplateFallbackGenerator())
