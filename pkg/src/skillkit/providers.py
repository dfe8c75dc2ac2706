"""Pluggable model-backed providers with bounded retries.

Every model-dependent step (generation, judging, embedding) runs behind a
small protocol with a deterministic local fallback elsewhere in the
package, so the whole pipeline works offline. Remote implementations here
speak the documented JSON wire contracts over HTTP and raise
ProviderUnavailable after their retry budget.
"""

from __future__ import annotations

import base64
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol

import httpx

from .errors import ProviderUnavailable
from .evaluation import Dimension, Grade
from .model import SkillDocument, serialize_skill_document
from .search import EmbeddingVector, _vector

SCHEMA_VERSION = 1
RUBRIC_VERSION = 1


class _CallCounter:
    """Process-wide count of outbound provider calls (cost accounting)."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._count = 0

    def increment(self) -> None:
        with self._lock:
            self._count += 1

    @property
    def value(self) -> int:
        with self._lock:
            return self._count


call_counter = _CallCounter()


@dataclass
class Draft:
    """One generated skill draft: a parsed document plus suggested resources."""

    document: SkillDocument
    resources: list[tuple[str, bytes]] = field(default_factory=list)


class GeneratorProvider(Protocol):
    def generate(self, source) -> list[Draft]: ...


class EmbeddingProvider(Protocol):
    def embed(self, text: str) -> EmbeddingVector: ...


def _post_json(url: str, body: dict, timeout_ms: int, retries: int) -> dict:
    last_error: Exception | None = None
    for attempt in range(retries + 1):
        try:
            call_counter.increment()
            response = httpx.post(url, json=body, timeout=timeout_ms / 1000.0)
            if response.status_code >= 500:
                raise ProviderUnavailable(f"{url} returned {response.status_code}")
            response.raise_for_status()
            return response.json()
        except (httpx.HTTPError, ProviderUnavailable, ValueError) as exc:
            last_error = exc
            if attempt < retries:
                time.sleep(min(0.05 * (attempt + 1), 0.5))
    raise ProviderUnavailable(f"{url} unreachable after {retries + 1} attempts: {last_error}")


class RemoteGenerator:
    """POST {kind, payload, schema_version} -> {drafts: [...]}.

    Safe for concurrent calls; every call owns its HTTP request.
    """

    def __init__(self, endpoint: str, timeout_ms: int = 10000, retries: int = 2):
        self.endpoint = endpoint
        self.timeout_ms = timeout_ms
        self.retries = retries

    def generate(self, source) -> list[Draft]:
        from .creation import SourceInput  # local import; creation also imports Draft
        from .model import parse_skill_document

        assert isinstance(source, SourceInput)
        body = {"kind": source.kind.value, "payload": source.payload_json(), "schema_version": SCHEMA_VERSION}
        reply = _post_json(self.endpoint, body, self.timeout_ms, self.retries)
        drafts = []
        for item in reply.get("drafts", []):
            fm_lines = [f"{k}: {v}" for k, v in item.get("frontmatter", {}).items()]
            text = "---\n" + "\n".join(fm_lines) + "\n---\n" + item.get("instructions", "")
            document = parse_skill_document(text)
            resources = [
                (r["path"], base64.b64decode(r["content_b64"]))
                for r in item.get("resources", [])
            ]
            drafts.append(Draft(document=document, resources=resources))
        return drafts


class RemoteJudge:
    """POST {skill_document, rubric_version} -> {grades: {dim: {level, rationale}}}.

    Safe for concurrent calls; every call owns its HTTP request.
    """

    def __init__(self, endpoint: str, timeout_ms: int = 10000, retries: int = 2):
        self.endpoint = endpoint
        self.timeout_ms = timeout_ms
        self.retries = retries
        self.identity = f"remote-judge:{endpoint}"

    def grade_skill(self, pkg, sandbox=None) -> dict[Dimension, tuple[Grade, str]]:
        body = {
            "skill_document": serialize_skill_document(pkg.document),
            "rubric_version": RUBRIC_VERSION,
        }
        reply = _post_json(self.endpoint, body, self.timeout_ms, self.retries)
        grades: dict[Dimension, tuple[Grade, str]] = {}
        try:
            for dim_name, entry in reply["grades"].items():
                dim = Dimension(dim_name)
                grades[dim] = (Grade.parse(entry["level"]), entry["rationale"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ProviderUnavailable(f"judge reply malformed: {exc}") from exc
        return grades


class RemoteEmbedder:
    """POST {texts} -> {vectors}; one text per call keeps the contract simple."""

    def __init__(self, endpoint: str, dim: int = 256, timeout_ms: int = 10000, retries: int = 2):
        self.endpoint = endpoint
        self.dim = dim
        self.timeout_ms = timeout_ms
        self.retries = retries

    def embed(self, text: str) -> EmbeddingVector:
        reply = _post_json(self.endpoint, {"texts": [text]}, self.timeout_ms, self.retries)
        try:
            values = [float(v) for v in reply["vectors"][0]]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderUnavailable(f"embedder reply malformed: {exc}") from exc
        return _vector(values)
