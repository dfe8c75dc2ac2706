"""Filesystem skill store.

Layout under one root directory:

    skills/<id>/          materialized package (SKILL.md + resources)
    manifest.json         id -> fingerprint, category, tags, grades, timestamps
    graph.txt             relation graph (canonical line format)
    index/                persisted search index files

The manifest is the source of truth and is always replaced atomically
(write-new-then-rename). Package directories are written before the
manifest commits, so an interrupted contribution leaves at worst an
orphan directory that verify() removes.

Metadata reads and document reads go through separate methods with
access counters, which is what lets lifecycle tests prove discovery
never touches instruction bodies.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import UnknownSkill
from .evaluation import Dimension, Grade
from .graph import SkillGraph, load_graph, serialize_graph
from .model import (
    SKILL_FILE,
    Category,
    SkillDocument,
    SkillPackage,
    compute_fingerprint,
    extract_package,
    load_package_dir,
    parse_skill_document,
)

MANIFEST_VERSION = 1


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class ManifestEntry:
    skill_id: str
    name: str
    description: str
    category: str
    tags: list[str]
    version: str
    doc_hash: str
    structure_hash: str
    grades: dict[str, str]
    created_at: str
    updated_at: str

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "category": self.category,
            "tags": self.tags,
            "version": self.version,
            "doc_hash": self.doc_hash,
            "structure_hash": self.structure_hash,
            "grades": self.grades,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_json(cls, skill_id: str, data: dict) -> "ManifestEntry":
        return cls(skill_id=skill_id, **{k: data[k] for k in (
            "name", "description", "category", "tags", "version",
            "doc_hash", "structure_hash", "grades", "created_at", "updated_at",
        )})


@dataclass
class AccessCounters:
    metadata_reads: int = 0
    document_reads: int = 0
    resource_reads: int = 0


@dataclass
class SkillStore:
    root: Path
    counters: AccessCounters = field(default_factory=AccessCounters)

    def __post_init__(self) -> None:
        self.root = Path(self.root)
        self._lock = threading.RLock()
        self.skills_dir.mkdir(parents=True, exist_ok=True)
        self.index_dir.mkdir(parents=True, exist_ok=True)
        self._manifest: dict[str, ManifestEntry] = {}
        if self.manifest_path.exists():
            raw = json.loads(self.manifest_path.read_text())
            if raw.get("version") != MANIFEST_VERSION:
                raise ValueError(f"unsupported manifest version: {raw.get('version')}")
            for skill_id, data in raw.get("skills", {}).items():
                self._manifest[skill_id] = ManifestEntry.from_json(skill_id, data)
        else:
            self._write_manifest()

    # -- paths ---------------------------------------------------------------

    @property
    def skills_dir(self) -> Path:
        return self.root / "skills"

    @property
    def index_dir(self) -> Path:
        return self.root / "index"

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    @property
    def graph_path(self) -> Path:
        return self.root / "graph.txt"

    def package_dir(self, skill_id: str) -> Path:
        return self.skills_dir / skill_id

    # -- manifest ------------------------------------------------------------

    def _write_manifest(self) -> None:
        payload = {
            "version": MANIFEST_VERSION,
            "skills": {sid: entry.to_json() for sid, entry in sorted(self._manifest.items())},
        }
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".manifest-", suffix=".json")
        try:
            with os.fdopen(fd, "w") as handle:
                json.dump(payload, handle, indent=1, sort_keys=True)
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(tmp, self.manifest_path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    def ids(self) -> list[str]:
        return sorted(self._manifest)

    def __contains__(self, skill_id: str) -> bool:
        return skill_id in self._manifest

    def __len__(self) -> int:
        return len(self._manifest)

    def find_fingerprint(self, doc_hash: str, structure_hash: str) -> str | None:
        for sid, entry in self._manifest.items():
            if entry.doc_hash == doc_hash and entry.structure_hash == structure_hash:
                return sid
        return None

    # -- reads ---------------------------------------------------------------

    def read_metadata(self, skill_id: str) -> ManifestEntry:
        """Name/description-level metadata only; never instruction bodies."""
        self.counters.metadata_reads += 1
        entry = self._manifest.get(skill_id)
        if entry is None:
            raise UnknownSkill(skill_id)
        return entry

    def read_document(self, skill_id: str) -> SkillDocument:
        """Full SKILL.md, parsed. Counted separately from metadata reads."""
        self.counters.document_reads += 1
        if skill_id not in self._manifest:
            raise UnknownSkill(skill_id)
        raw = (self.package_dir(skill_id) / SKILL_FILE).read_bytes()
        return parse_skill_document(raw)

    def resource_listing(self, skill_id: str) -> list[tuple[str, int]]:
        """(path, size) pairs for bundled resources, without reading contents."""
        if skill_id not in self._manifest:
            raise UnknownSkill(skill_id)
        base = self.package_dir(skill_id)
        listing = []
        for path in sorted(base.rglob("*")):
            if path.is_file() and path.name != SKILL_FILE:
                listing.append((path.relative_to(base).as_posix(), path.stat().st_size))
        return listing

    def load_package(self, skill_id: str) -> SkillPackage:
        self.counters.document_reads += 1
        self.counters.resource_reads += 1
        if skill_id not in self._manifest:
            raise UnknownSkill(skill_id)
        return load_package_dir(self.package_dir(skill_id))

    # -- writes --------------------------------------------------------------

    def add(
        self,
        pkg: SkillPackage,
        *,
        category: Category | None = None,
        tags: list[str] | None = None,
        grades: dict[Dimension, Grade] | None = None,
    ) -> ManifestEntry:
        """Admit a package: materialize files, then commit the manifest."""
        with self._lock:
            fp = compute_fingerprint(pkg)
            meta = pkg.document.metadata
            now = _utcnow()
            previous = self._manifest.get(pkg.id)

            staging = Path(tempfile.mkdtemp(dir=self.root, prefix=".staging-"))
            try:
                extract_package(pkg, staging / pkg.id)
                target = self.package_dir(pkg.id)
                if target.exists():
                    shutil.rmtree(target)
                os.replace(staging / pkg.id, target)
            finally:
                shutil.rmtree(staging, ignore_errors=True)

            entry = ManifestEntry(
                skill_id=pkg.id,
                name=meta.name,
                description=meta.description,
                category=(category or meta.category).value,
                tags=list(tags if tags is not None else meta.tags),
                version=meta.version,
                doc_hash=fp.doc_hash,
                structure_hash=fp.structure_hash,
                grades={d.value: g.label.lower() for d, g in (grades or {}).items()},
                created_at=previous.created_at if previous else now,
                updated_at=now,
            )
            self._manifest[pkg.id] = entry
            self._write_manifest()
            return entry

    def remove(self, skill_id: str) -> None:
        with self._lock:
            if skill_id not in self._manifest:
                raise UnknownSkill(skill_id)
            del self._manifest[skill_id]
            self._write_manifest()
            shutil.rmtree(self.package_dir(skill_id), ignore_errors=True)

    # -- graph ---------------------------------------------------------------

    def load_graph(self) -> SkillGraph:
        if not self.graph_path.exists():
            return SkillGraph()
        return load_graph(self.graph_path.read_bytes())

    def save_graph(self, graph: SkillGraph) -> None:
        with self._lock:
            fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".graph-", suffix=".txt")
            with os.fdopen(fd, "wb") as handle:
                handle.write(serialize_graph(graph))
            os.replace(tmp, self.graph_path)

    # -- integrity -----------------------------------------------------------

    def verify(self, repair: bool = False) -> list[str]:
        """Check manifest/directory correspondence and fingerprints.

        With repair=True, orphan package directories are deleted and
        manifest entries without directories are dropped, restoring the
        either-fully-admitted-or-absent invariant after a crash.
        """
        with self._lock:
            issues: list[str] = []
            on_disk = {p.name for p in self.skills_dir.iterdir() if p.is_dir()}

            for orphan in sorted(on_disk - set(self._manifest)):
                issues.append(f"orphan package directory: {orphan}")
                if repair:
                    shutil.rmtree(self.package_dir(orphan), ignore_errors=True)

            missing = [sid for sid in self._manifest if sid not in on_disk]
            for sid in sorted(missing):
                issues.append(f"manifest entry without package directory: {sid}")
                if repair:
                    del self._manifest[sid]

            for sid in self.ids():
                if sid not in on_disk:
                    continue
                pkg = load_package_dir(self.package_dir(sid))
                fp = compute_fingerprint(pkg)
                entry = self._manifest[sid]
                if (fp.doc_hash, fp.structure_hash) != (entry.doc_hash, entry.structure_hash):
                    issues.append(f"fingerprint mismatch: {sid}")

            if repair and missing:
                self._write_manifest()
            return issues

    # -- stats ---------------------------------------------------------------

    def stats(self) -> dict:
        """Totals, per-category counts, per-dimension grade distribution."""
        per_category = {c.value: 0 for c in Category}
        per_dimension = {d.value: {g.label.lower(): 0 for g in Grade} for d in Dimension}
        for entry in self._manifest.values():
            per_category[entry.category] = per_category.get(entry.category, 0) + 1
            for dim, level in entry.grades.items():
                if dim in per_dimension and level in per_dimension[dim]:
                    per_dimension[dim][level] += 1
        return {
            "total_skills": len(self._manifest),
            "per_category": per_category,
            "per_dimension": per_dimension,
        }
