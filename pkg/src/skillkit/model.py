"""Canonical skill package model.

A skill package is a directory-shaped bundle with one SKILL.md document
(frontmatter metadata plus markdown instructions) and optional resource
files. This module parses and serializes SKILL.md, validates package
invariants, and computes the MD5 fingerprints used for deduplication.

Frontmatter is deliberately minimal: a block between two ``---`` lines,
one ``key: value`` pair per line, literal string values. Unknown keys are
preserved verbatim so community metadata survives a round trip.
"""

from __future__ import annotations

import hashlib
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import InvalidCategory, MalformedFrontmatter, MissingField

SKILL_FILE = "SKILL.md"
NAME_MAX = 128
DESCRIPTION_MAX = 1024
TAGS_MAX = 16
DEFAULT_VERSION = "0.1.0"

_NAME_RE = re.compile(r"^[a-z0-9][a-z0-9-]*$")
_TAG_RE = re.compile(r"^[a-z0-9][a-z0-9_-]*$")

# Canonical frontmatter keys, in serialization order.
_KNOWN_KEYS = ("name", "description", "category", "tags", "version", "usage_conditions")


class Category(str, Enum):
    """The closed ten-way functional taxonomy. No runtime additions."""

    DEVELOPMENT = "Development"
    AIGC = "AIGC"
    RESEARCH = "Research"
    SCIENCE = "Science"
    BUSINESS = "Business"
    TESTING = "Testing"
    PRODUCTIVITY = "Productivity"
    SECURITY = "Security"
    LIFESTYLE = "Lifestyle"
    OTHER = "Other"

    @classmethod
    def parse(cls, value: str) -> "Category":
        for member in cls:
            if member.value.lower() == value.strip().lower():
                return member
        raise InvalidCategory(f"not one of the ten categories: {value!r}")


def normalize_name(name: str) -> str:
    """Lowercase and join whitespace runs with single hyphens. Idempotent."""
    return "-".join(name.lower().split())


def is_valid_name(name: str) -> bool:
    return bool(_NAME_RE.match(name)) and len(name) <= NAME_MAX


@dataclass
class SkillMetadata:
    """Frontmatter of a SKILL.md document.

    ``extra`` holds unknown keys verbatim, in original order, so that
    serialization is lossless for fields this library does not model.
    """

    name: str
    description: str
    category: Category = Category.OTHER
    tags: list[str] = field(default_factory=list)
    version: str = DEFAULT_VERSION
    usage_conditions: str = ""
    extra: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.name = normalize_name(self.name)
        if not self.name:
            raise MissingField("name")
        if not is_valid_name(self.name):
            raise MalformedFrontmatter(
                f"name {self.name!r} must match [a-z0-9][a-z0-9-]* and be <= {NAME_MAX} chars"
            )
        self.description = self.description.strip()
        if not self.description:
            raise MissingField("description")
        if len(self.description) > DESCRIPTION_MAX:
            raise MalformedFrontmatter(f"description exceeds {DESCRIPTION_MAX} chars")
        self.tags = _normalize_tags(self.tags)
        if not isinstance(self.category, Category):
            self.category = Category.parse(str(self.category))
        self.version = self.version.strip() or DEFAULT_VERSION
        self.usage_conditions = self.usage_conditions.strip()
        # Frontmatter is line-oriented; a newline in any value would not survive
        # a serialize/parse round trip.
        for label, value in [
            ("description", self.description),
            ("version", self.version),
            ("usage_conditions", self.usage_conditions),
            *((f"extra key {k!r}", v) for k, v in self.extra.items()),
        ]:
            if "\n" in value:
                raise MalformedFrontmatter(f"{label} must be a single line")
        for key in self.extra:
            if key in _KNOWN_KEYS or "\n" in key or not key.strip():
                raise MalformedFrontmatter(f"invalid extra key: {key!r}")


def _normalize_tags(tags: list[str]) -> list[str]:
    seen: list[str] = []
    for tag in tags:
        tag = tag.strip().lower()
        if not tag:
            continue
        if not _TAG_RE.match(tag):
            raise MalformedFrontmatter(f"tag {tag!r} is not a lowercase token")
        if tag not in seen:
            seen.append(tag)
    if len(seen) > TAGS_MAX:
        raise MalformedFrontmatter(f"more than {TAGS_MAX} tags")
    return seen


@dataclass
class SkillDocument:
    """Parsed SKILL.md: metadata plus the markdown instruction body."""

    metadata: SkillMetadata
    instructions: str

    def __post_init__(self) -> None:
        if not self.instructions.strip():
            raise MissingField("instructions")


def parse_skill_document(raw: bytes | str) -> SkillDocument:
    """Parse SKILL.md bytes into a document.

    Raises MalformedFrontmatter for structural problems, MissingField when
    name/description/instructions are absent, InvalidCategory for a bad
    category value. Unknown keys land in ``metadata.extra`` untouched.
    """
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedFrontmatter(f"document is not valid UTF-8: {exc}") from exc
    else:
        text = raw

    lines = text.split("\n")
    if not lines or lines[0].strip() != "---":
        raise MalformedFrontmatter("missing opening --- delimiter")
    close = None
    for i in range(1, len(lines)):
        if lines[i].strip() == "---":
            close = i
            break
    if close is None:
        raise MalformedFrontmatter("missing closing --- delimiter")

    fields: dict[str, str] = {}
    for line in lines[1:close]:
        if not line.strip():
            continue
        if ":" not in line:
            raise MalformedFrontmatter(f"unparseable frontmatter line: {line!r}")
        key, value = line.split(":", 1)
        key = key.strip()
        if not key:
            raise MalformedFrontmatter(f"empty key in line: {line!r}")
        if key in fields:
            raise MalformedFrontmatter(f"duplicate key: {key}")
        fields[key] = value.strip()

    if "name" not in fields:
        raise MissingField("name")
    if "description" not in fields:
        raise MissingField("description")

    category = Category.parse(fields["category"]) if "category" in fields else Category.OTHER
    tags = [t for t in fields.get("tags", "").split(",") if t.strip()]
    metadata = SkillMetadata(
        name=fields["name"],
        description=fields["description"],
        category=category,
        tags=tags,
        version=fields.get("version", DEFAULT_VERSION),
        usage_conditions=fields.get("usage_conditions", ""),
        extra={k: v for k, v in fields.items() if k not in _KNOWN_KEYS},
    )
    instructions = "\n".join(lines[close + 1 :])
    return SkillDocument(metadata=metadata, instructions=instructions)


def serialize_skill_document(doc: SkillDocument) -> str:
    """Render a document back to SKILL.md text (canonical key order)."""
    meta = doc.metadata
    out = ["---"]
    out.append(f"name: {meta.name}")
    out.append(f"description: {meta.description}")
    out.append(f"category: {meta.category.value}")
    if meta.tags:
        out.append(f"tags: {', '.join(meta.tags)}")
    out.append(f"version: {meta.version}")
    if meta.usage_conditions:
        out.append(f"usage_conditions: {meta.usage_conditions}")
    for key, value in meta.extra.items():
        out.append(f"{key}: {value}")
    out.append("---")
    return "\n".join(out) + "\n" + doc.instructions


def normalize_relpath(path: str) -> str:
    """Normalize a package-relative path: NFC, forward slashes, no ./ prefix."""
    path = unicodedata.normalize("NFC", path).replace("\\", "/")
    while path.startswith("./"):
        path = path[2:]
    return path


def check_relpath(path: str) -> str | None:
    """Return a violation message for an unsafe path, else None."""
    if not path:
        return "empty path"
    if path.startswith("/") or re.match(r"^[A-Za-z]:", path):
        return f"absolute path: {path}"
    parts = path.split("/")
    if ".." in parts:
        return f"path traversal: {path}"
    if "" in parts:
        return f"empty path segment: {path}"
    return None


@dataclass
class Fingerprint:
    """Identity pair: MD5 of the raw SKILL.md bytes and of the sorted listing."""

    doc_hash: str
    structure_hash: str


@dataclass
class SkillPackage:
    """A self-contained skill bundle.

    ``skill_md`` carries the exact SKILL.md bytes the package was built
    from (or the canonical serialization when built programmatically), so
    fingerprints are stable however the package came to exist.
    """

    id: str
    document: SkillDocument
    skill_md: bytes
    resources: list[tuple[str, bytes]] = field(default_factory=list)
    root_listing: list[str] = field(default_factory=list)

    @property
    def entry_point(self) -> str | None:
        """Declared entry script, from the ``entry`` frontmatter key."""
        return self.document.metadata.extra.get("entry") or None

    def resource_bytes(self, path: str) -> bytes:
        for p, data in self.resources:
            if p == path:
                return data
        raise KeyError(path)


def package_id(name: str, doc_hash: str) -> str:
    return f"{name}--{doc_hash[:8]}"


def md5_hex(data: bytes) -> str:
    return hashlib.md5(data).hexdigest()


def compute_fingerprint(pkg: SkillPackage) -> Fingerprint:
    """doc_hash = MD5(SKILL.md bytes); structure_hash = MD5 of the joined listing."""
    return Fingerprint(
        doc_hash=md5_hex(pkg.skill_md),
        structure_hash=md5_hex("\n".join(pkg.root_listing).encode("utf-8")),
    )


def build_package(document: SkillDocument, resources: list[tuple[str, bytes]] | None = None) -> SkillPackage:
    """Assemble a package from a document and resource blobs.

    The SKILL.md bytes are the canonical serialization; the id is the
    normalized name plus the first 8 hex chars of the doc hash.
    """
    resources = [(normalize_relpath(p), data) for p, data in (resources or [])]
    resources.sort(key=lambda item: item[0])
    skill_md = serialize_skill_document(document).encode("utf-8")
    listing = sorted({SKILL_FILE, *(p for p, _ in resources)})
    return SkillPackage(
        id=package_id(document.metadata.name, md5_hex(skill_md)),
        document=document,
        skill_md=skill_md,
        resources=resources,
        root_listing=listing,
    )


def load_package_dir(root: Path) -> SkillPackage:
    """Read a package from a directory containing SKILL.md and resources."""
    root = Path(root)
    skill_path = root / SKILL_FILE
    if not skill_path.is_file():
        raise MissingField(f"{SKILL_FILE} not found under {root}")
    skill_md = skill_path.read_bytes()
    document = parse_skill_document(skill_md)
    resources = []
    for path in sorted(root.rglob("*")):
        if not path.is_file():
            continue
        rel = normalize_relpath(path.relative_to(root).as_posix())
        if rel == SKILL_FILE:
            continue
        resources.append((rel, path.read_bytes()))
    listing = sorted({SKILL_FILE, *(p for p, _ in resources)})
    return SkillPackage(
        id=package_id(document.metadata.name, md5_hex(skill_md)),
        document=document,
        skill_md=skill_md,
        resources=resources,
        root_listing=listing,
    )


def extract_package(pkg: SkillPackage, dest: Path) -> Path:
    """Materialize the package files under ``dest`` (created if needed)."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    (dest / SKILL_FILE).write_bytes(pkg.skill_md)
    for rel, data in pkg.resources:
        target = dest / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
    return dest


@dataclass
class ValidationResult:
    ok: bool
    violations: list[str]


def validate_package(pkg: SkillPackage) -> ValidationResult:
    """Check every package invariant; collect all violations, never raise."""
    violations: list[str] = []
    listing = pkg.root_listing
    resource_paths = [p for p, _ in pkg.resources]

    if SKILL_FILE not in listing:
        violations.append(f"missing {SKILL_FILE} in root_listing")
    if SKILL_FILE in resource_paths:
        violations.append(f"{SKILL_FILE} also declared as a resource")
    if listing != sorted(listing):
        violations.append("root_listing not sorted")
    if len(set(listing)) != len(listing):
        violations.append("root_listing has duplicates")
    if len(set(resource_paths)) != len(resource_paths):
        violations.append("duplicate resource paths")

    for path in resource_paths:
        problem = check_relpath(path)
        if problem:
            violations.append(problem)
        elif path != normalize_relpath(path):
            violations.append(f"non-normalized path: {path}")
        if path not in listing:
            violations.append(f"unlisted resource: {path}")
    known = set(resource_paths) | {SKILL_FILE}
    for path in listing:
        if path not in known:
            violations.append(f"listing entry with no content: {path}")

    if not pkg.skill_md:
        violations.append("empty SKILL.md")
    if not pkg.document.instructions.strip():
        violations.append("empty instructions")

    expected_id = package_id(pkg.document.metadata.name, md5_hex(pkg.skill_md))
    if pkg.id != expected_id:
        violations.append(f"id {pkg.id!r} does not match content (expected {expected_id!r})")

    return ValidationResult(ok=not violations, violations=violations)


def metadata_text(meta: SkillMetadata) -> str:
    """The searchable text of a skill: name, description, tags."""
    parts = [meta.name, meta.description]
    parts.extend(meta.tags)
    return " ".join(parts)
