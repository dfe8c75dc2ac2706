"""HTTP registry service.

Endpoints:
    POST /v1/search                keyword / vector / hybrid retrieval
    GET  /v1/skills/{id}           manifest metadata + grades
    GET  /v1/skills/{id}/archive   deterministic tar download
    POST /v1/skills                contribute (validate -> consolidate -> admit)
    GET  /v1/skills/{id}/relations typed edges incident to the skill
    GET  /v1/stats                 totals and grade distributions

Every non-2xx body is exactly {"status", "code", "message"}.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field

import anyio.to_thread
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from .archive import ARCHIVE_MEDIA_TYPE, pack_package, unpack_package
from .curation import consolidate
from .errors import (
    EmptyQuery,
    MalformedArchive,
    MalformedFrontmatter,
    MissingField,
    InvalidCategory,
    UnknownSkill,
)
from .evaluation import Dimension
from .lifecycle import build_metadata_index
from .model import compute_fingerprint
from .sandbox import SandboxLimits
from .search import (
    SearchFilters,
    SearchMode,
    embed_fallback,
    hybrid_search,
    keyword_search,
    save_index,
    vector_search,
)
from .store import SkillStore

logger = logging.getLogger("skillkit.service")

DEFAULT_TOP_K = 10
TOP_K_CAP = 100


@dataclass
class RegistryConfig:
    top_k_cap: int = TOP_K_CAP
    sandbox_limits: SandboxLimits = field(default_factory=lambda: SandboxLimits(wall_ms=5000))
    max_concurrent_contributions: int = 2
    auth_token: str | None = None
    index_dim: int = 256
    # remote judge endpoint for contribution grading; rule fallback when unset
    judge_endpoint: str | None = None


class ApiProblem(Exception):
    """Raised inside handlers; rendered as the exact ApiError body."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _problem_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"status": status, "code": code, "message": message},
    )


def create_app(store: SkillStore, config: RegistryConfig | None = None) -> FastAPI:
    config = config or RegistryConfig()
    app = FastAPI(title="skill registry", docs_url=None, redoc_url=None)

    state_lock = threading.Lock()
    contribution_slots = threading.BoundedSemaphore(config.max_concurrent_contributions)
    judge = None
    if config.judge_endpoint:
        from .providers import RemoteJudge

        judge = RemoteJudge(config.judge_endpoint)
    # Queries read whichever index object is current; writers build a fresh
    # one and swap the reference, so an in-flight search never observes a
    # half-updated index.
    snapshot = {"index": build_metadata_index(store, dim=config.index_dim)}

    @app.exception_handler(ApiProblem)
    async def _on_problem(request: Request, exc: ApiProblem):
        return _problem_response(exc.status, exc.code, exc.message)

    @app.exception_handler(StarletteHTTPException)
    async def _on_http_error(request: Request, exc: StarletteHTTPException):
        code = {404: "NotFound", 405: "MethodNotAllowed"}.get(exc.status_code, "HTTPError")
        return _problem_response(exc.status_code, code, str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def _on_validation(request: Request, exc: RequestValidationError):
        return _problem_response(422, "ValidationError", str(exc.errors()))

    @app.exception_handler(Exception)
    async def _on_crash(request: Request, exc: Exception):
        logger.exception("unhandled error on %s %s", request.method, request.url.path)
        return _problem_response(500, "Internal", "internal server error")

    @app.middleware("http")
    async def _log_requests(request: Request, call_next):
        started = time.monotonic()
        response = await call_next(request)
        millis = int((time.monotonic() - started) * 1000)
        logger.info(
            "%s %s %s %s %dms",
            time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            request.method,
            request.url.path,
            response.status_code,
            millis,
        )
        return response

    def _entry_or_404(skill_id: str):
        try:
            return store.read_metadata(skill_id)
        except UnknownSkill:
            raise ApiProblem(404, "UnknownSkill", f"unknown skill: {skill_id}")

    @app.post("/v1/search")
    async def search_endpoint(request: Request):
        try:
            body = await request.json()
        except Exception:
            raise ApiProblem(400, "MalformedBody", "request body must be a JSON object")
        if not isinstance(body, dict):
            raise ApiProblem(400, "MalformedBody", "request body must be a JSON object")

        mode_raw = body.get("mode")
        try:
            mode = SearchMode(mode_raw)
        except ValueError:
            raise ApiProblem(
                400, "InvalidMode", f"mode must be one of keyword|vector|hybrid, got {mode_raw!r}"
            )

        query = body.get("query")
        if not isinstance(query, str) or not query.strip():
            raise ApiProblem(400, "EmptyQuery", "query must be a non-empty string")

        top_k = body.get("top_k", DEFAULT_TOP_K)
        if not isinstance(top_k, int) or isinstance(top_k, bool) or not 1 <= top_k <= config.top_k_cap:
            raise ApiProblem(
                422, "TopKOutOfRange", f"top_k must be an integer in [1, {config.top_k_cap}]"
            )

        category = body.get("category")
        tags = body.get("tags") or []
        if category is not None and not isinstance(category, str):
            raise ApiProblem(400, "MalformedBody", "category must be a string")
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise ApiProblem(400, "MalformedBody", "tags must be a list of strings")
        filters = SearchFilters(category=category, tags=list(tags))

        index = snapshot["index"]
        try:
            if mode == SearchMode.KEYWORD:
                hits = keyword_search(index, query, top_k=top_k, filters=filters)
            elif mode == SearchMode.VECTOR:
                hits = vector_search(
                    index, embed_fallback(query, index.dim), top_k=top_k, filters=filters
                )
            else:
                hits = hybrid_search(index, query, top_k=top_k, filters=filters)
        except EmptyQuery as exc:
            raise ApiProblem(400, "EmptyQuery", str(exc))

        results = []
        for hit in hits:
            entry = store.read_metadata(hit.skill_id)
            results.append(
                {
                    "skill_id": hit.skill_id,
                    "name": entry.name,
                    "description": entry.description,
                    "category": entry.category,
                    "tags": entry.tags,
                    "score": hit.score,
                }
            )
        return {"results": results}

    @app.get("/v1/skills/{skill_id}")
    async def get_skill(skill_id: str):
        entry = _entry_or_404(skill_id)
        return {"skill_id": skill_id, **entry.to_json()}

    @app.get("/v1/skills/{skill_id}/archive")
    async def get_archive(skill_id: str):
        _entry_or_404(skill_id)
        pkg = store.load_package(skill_id)
        return Response(content=pack_package(pkg), media_type=ARCHIVE_MEDIA_TYPE)

    @app.get("/v1/skills/{skill_id}/relations")
    async def get_relations(skill_id: str):
        _entry_or_404(skill_id)
        graph = store.load_graph()
        edges = graph.incident(skill_id) if skill_id in graph.nodes else []
        return {
            "skill_id": skill_id,
            "relations": [
                {
                    "src": e.src,
                    "dst": e.dst,
                    "rel": e.rel.value,
                    "confidence": e.confidence,
                    "provenance": e.provenance.value,
                }
                for e in edges
            ],
        }

    @app.get("/v1/stats")
    async def get_stats():
        return store.stats()

    @app.post("/v1/skills", status_code=201)
    async def contribute(request: Request):
        if config.auth_token is not None:
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {config.auth_token}":
                raise ApiProblem(401, "Unauthorized", "missing or invalid bearer token")

        data = await request.body()
        if not data:
            raise ApiProblem(400, "MalformedArchive", "empty request body")
        try:
            pkg = unpack_package(data)
        except (MalformedArchive, MalformedFrontmatter, MissingField, InvalidCategory) as exc:
            raise ApiProblem(400, "MalformedArchive", str(exc))

        def admit() -> dict:
            with contribution_slots:
                fp = compute_fingerprint(pkg)
                existing = store.find_fingerprint(fp.doc_hash, fp.structure_hash)
                if existing is not None:
                    raise ApiProblem(
                        409, "Duplicate", f"fingerprint-identical skill already exists: {existing}"
                    )

                report = consolidate([pkg], judge, sandbox_limits=config.sandbox_limits)
                if report.filtered_out:
                    _, violations = report.filtered_out[0]
                    raise ApiProblem(422, "Rejected", f"filtered out: {'; '.join(violations)}")
                if report.rejected:
                    _, evaluation = report.rejected[0]
                    summary = ", ".join(
                        f"{dim.value}={evaluation.grade_of(dim).label.lower()}" for dim in Dimension
                    )
                    raise ApiProblem(422, "Rejected", f"admission policy rejected: {summary}")

                evaluation = report.evaluations[pkg.id]
                category, tags = report.assignments[pkg.id]
                grades = {dim: evaluation.grade_of(dim) for dim in Dimension}
                with state_lock:
                    store.add(pkg, category=category, tags=tags, grades=grades)
                    fresh = build_metadata_index(store, dim=config.index_dim)
                    save_index(fresh, store.index_dir)
                    snapshot["index"] = fresh
                return {
                    "skill_id": pkg.id,
                    "grades": {dim.value: grade.label.lower() for dim, grade in grades.items()},
                }

        # admission runs sandboxes and disk writes; keep the event loop free
        return await anyio.to_thread.run_sync(admit)

    return app


def serve(store: SkillStore, host: str = "127.0.0.1", port: int = 8750, config: RegistryConfig | None = None):
    """Run the registry under uvicorn (blocking)."""
    import uvicorn

    app = create_app(store, config)
    uvicorn.run(app, host=host, port=port, log_level="info")
