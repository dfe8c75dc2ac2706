"""Command-line surface: search, download, create, evaluate, analyze, stats, serve.

Works against a local store directory or a remote registry URL (exactly
one per invocation). Configuration precedence: flags > environment > config
file > defaults. Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import httpx

from .archive import unpack_package
from .creation import SourceInput, TrajectoryStep, create_from_source
from .curation import consolidate
from .errors import SkillKitError, UnknownSkill
from .evaluation import Dimension, evaluate
from .graph import (
    Edge,
    Provenance,
    RelationType,
    SkillGraph,
    confirm_relations,
    propose_candidates,
    ThresholdRelationJudge,
)
from .model import compute_fingerprint, extract_package, load_package_dir
from .sandbox import SandboxLimits
from .search import SearchFilters, SearchMode, embed_fallback, hybrid_search, keyword_search, vector_search
from .store import SkillStore

ENV_STORE = "SKILLKIT_STORE"
ENV_REGISTRY = "SKILLKIT_REGISTRY"
ENV_OUTPUT = "SKILLKIT_OUTPUT"
ENV_CONFIG = "SKILLKIT_CONFIG"


@dataclass
class CliConfig:
    store_path: str | None
    registry_url: str | None
    output: str

    @property
    def remote(self) -> bool:
        return self.registry_url is not None


class UsageError(Exception):
    pass


class OperationalError(Exception):
    pass


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}")


def resolve_config(args: argparse.Namespace) -> CliConfig:
    """flags > env > file > defaults; exactly one of store/registry active."""
    file_cfg = _load_config_file(args.config or os.environ.get(ENV_CONFIG))
    layers = [
        (args.store, args.registry),
        (os.environ.get(ENV_STORE), os.environ.get(ENV_REGISTRY)),
        (file_cfg.get("store_path"), file_cfg.get("registry_url")),
    ]
    store_path = registry_url = None
    for store, registry in layers:
        if store or registry:
            store_path, registry_url = store, registry
            break
    if store_path and registry_url:
        raise UsageError("--store and --registry are mutually exclusive")
    if not store_path and not registry_url:
        raise UsageError("one of --store or --registry is required")

    output = args.output or os.environ.get(ENV_OUTPUT) or file_cfg.get("output") or "human"
    if output not in ("human", "json"):
        raise UsageError(f"unknown output format: {output}")
    return CliConfig(store_path=store_path, registry_url=registry_url, output=output)


def _emit(config: CliConfig, payload: dict, human_lines: list[str]) -> None:
    if config.output == "json":
        print(json.dumps(payload, indent=1, sort_keys=True))
    else:
        for line in human_lines:
            print(line)


def _api(config: CliConfig, method: str, path: str, **kwargs) -> httpx.Response:
    url = config.registry_url.rstrip("/") + path
    try:
        response = httpx.request(method, url, timeout=30.0, **kwargs)
    except httpx.HTTPError as exc:
        raise OperationalError(f"registry unreachable: {exc}")
    if response.status_code >= 400:
        try:
            body = response.json()
            raise OperationalError(f"{body.get('code', response.status_code)}: {body.get('message', '')}")
        except (ValueError, KeyError):
            raise OperationalError(f"registry returned {response.status_code}")
    return response


# -- subcommands ---------------------------------------------------------------


def cmd_search(config: CliConfig, args: argparse.Namespace) -> dict:
    if config.remote:
        body = {"query": args.query, "mode": args.mode, "top_k": args.top_k}
        if args.category:
            body["category"] = args.category
        if args.tag:
            body["tags"] = args.tag
        return _api(config, "POST", "/v1/search", json=body).json()

    store = SkillStore(Path(config.store_path))
    from .lifecycle import build_metadata_index

    index = build_metadata_index(store)
    filters = SearchFilters(category=args.category, tags=args.tag or [])
    mode = SearchMode(args.mode)
    if mode == SearchMode.KEYWORD:
        hits = keyword_search(index, args.query, top_k=args.top_k, filters=filters)
    elif mode == SearchMode.VECTOR:
        hits = vector_search(index, embed_fallback(args.query, index.dim), top_k=args.top_k, filters=filters)
    else:
        hits = hybrid_search(index, args.query, top_k=args.top_k, filters=filters)
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


def _search_lines(payload: dict) -> list[str]:
    results = payload.get("results", [])
    if not results:
        return ["no matches"]
    lines = [f"{'score':>8}  {'skill':<40} description"]
    for row in results:
        desc = row["description"]
        if len(desc) > 60:
            desc = desc[:57] + "..."
        lines.append(f"{row['score']:>8.4f}  {row['skill_id']:<40} {desc}")
    return lines


def cmd_download(config: CliConfig, args: argparse.Namespace) -> dict:
    dest = Path(args.dest)
    if config.remote:
        meta = _api(config, "GET", f"/v1/skills/{args.id}").json()
        archive = _api(config, "GET", f"/v1/skills/{args.id}/archive").content
        pkg = unpack_package(archive)
        fp = compute_fingerprint(pkg)
        if (fp.doc_hash, fp.structure_hash) != (meta["doc_hash"], meta["structure_hash"]):
            raise OperationalError("archive fingerprint does not match registry metadata; not extracting")
    else:
        store = SkillStore(Path(config.store_path))
        pkg = store.load_package(args.id)
        entry = store.read_metadata(args.id)
        fp = compute_fingerprint(pkg)
        if (fp.doc_hash, fp.structure_hash) != (entry.doc_hash, entry.structure_hash):
            raise OperationalError("stored package does not match its manifest fingerprint")
    target = extract_package(pkg, dest / pkg.id)
    return {"skill_id": pkg.id, "path": str(target)}


def _read_source(args: argparse.Namespace) -> SourceInput:
    chosen = [
        name
        for name, value in [
            ("--from-prompt", args.from_prompt),
            ("--from-dir", args.from_dir),
            ("--from-doc", args.from_doc),
            ("--from-trajectory", args.from_trajectory),
        ]
        if value
    ]
    if len(chosen) != 1:
        raise UsageError("create needs exactly one of --from-prompt/--from-dir/--from-doc/--from-trajectory")

    if args.from_prompt:
        return SourceInput.from_prompt(args.from_prompt)
    if args.from_doc:
        path = Path(args.from_doc)
        if not path.is_file():
            raise OperationalError(f"document not found: {path}")
        return SourceInput.from_document(path.read_text(encoding="utf-8", errors="replace"), path.name)
    if args.from_trajectory:
        path = Path(args.from_trajectory)
        if not path.is_file():
            raise OperationalError(f"trajectory file not found: {path}")
        records = json.loads(path.read_text())
        steps = [
            TrajectoryStep(
                actor=r.get("actor", "agent"),
                action=r.get("action", ""),
                observation=r.get("observation", ""),
            )
            for r in records
        ]
        return SourceInput.from_trajectory(steps)
    root = Path(args.from_dir)
    if not root.is_dir():
        raise OperationalError(f"directory not found: {root}")
    tree = [
        (p.relative_to(root).as_posix(), p.read_bytes())
        for p in sorted(root.rglob("*"))
        if p.is_file()
    ]
    return SourceInput.from_repository(tree)


def cmd_create(config: CliConfig, args: argparse.Namespace) -> dict:
    if config.remote:
        raise UsageError("create runs against a local store")
    source = _read_source(args)
    packages = create_from_source(source)
    dest = Path(args.dest)
    created = []
    for pkg in packages:
        path = extract_package(pkg, dest / pkg.id)
        created.append({"skill_id": pkg.id, "path": str(path)})

    admitted: list[str] = []
    if args.admit:
        store = SkillStore(Path(config.store_path))
        report = consolidate(packages, sandbox_limits=SandboxLimits(wall_ms=args.wall_ms))
        for pkg in report.admitted_packages:
            category, tags = report.assignments[pkg.id]
            evaluation = report.evaluations[pkg.id]
            grades = {dim: evaluation.grade_of(dim) for dim in Dimension}
            store.add(pkg, category=category, tags=tags, grades=grades)
            admitted.append(pkg.id)
    return {"created": created, "admitted": admitted}


def cmd_evaluate(config: CliConfig, args: argparse.Namespace) -> dict:
    target = Path(args.target)
    if target.is_dir():
        pkg = load_package_dir(target)
    else:
        if config.remote:
            raise UsageError("evaluate needs a local package directory or a local store id")
        store = SkillStore(Path(config.store_path))
        pkg = store.load_package(args.target)
    limits = SandboxLimits(wall_ms=args.wall_ms, mem_bytes=args.mem_mb * 1024 * 1024)
    report = evaluate(pkg, limits=limits)
    return report.to_json()


def _evaluate_lines(payload: dict) -> list[str]:
    lines = [f"skill: {payload['skill_id']}  (judge: {payload['judge_identity']})"]
    for dim, entry in payload["grades"].items():
        lines.append(f"  {dim:<16} {entry['level']:<8} {entry['rationale']}")
    sandbox = payload.get("sandbox")
    if sandbox:
        lines.append(
            f"  sandbox: {sandbox['outcome']} exit={sandbox['exit_code']} "
            f"wall={sandbox['wall_time_ms']}ms peak={sandbox['peak_memory_bytes']}B"
        )
    return lines


def cmd_analyze(config: CliConfig, args: argparse.Namespace) -> dict:
    if config.remote:
        raise UsageError("analyze runs against a local store")
    store = SkillStore(Path(config.store_path))
    graph = SkillGraph()
    packages = []
    for skill_id in store.ids():
        entry = store.read_metadata(skill_id)
        graph.add_node(skill_id, "skill")
        category_node = f"category:{entry.category}"
        if category_node not in graph.nodes:
            graph.add_node(category_node, "category")
        graph.add_edge(Edge(skill_id, category_node, RelationType.IN_CATEGORY, 1.0, Provenance.MANUAL))
        for tag in entry.tags:
            tag_node = f"tag:{tag}"
            if tag_node not in graph.nodes:
                graph.add_node(tag_node, "tag")
            graph.add_edge(Edge(skill_id, tag_node, RelationType.TAGGED_WITH, 1.0, Provenance.MANUAL))
        packages.append(store.load_package(skill_id))

    if packages:
        candidates = propose_candidates(packages, threshold=args.threshold)
        confirmed = confirm_relations(candidates, ThresholdRelationJudge(args.confirm_threshold))
        for edge in confirmed:
            graph.add_edge(edge)
    store.save_graph(graph)

    counts: dict[str, int] = {}
    for edge in graph.edges.values():
        counts[edge.rel.value] = counts.get(edge.rel.value, 0) + 1
    return {"nodes": len(graph.nodes), "edges": dict(sorted(counts.items()))}


def cmd_stats(config: CliConfig, args: argparse.Namespace) -> dict:
    if config.remote:
        return _api(config, "GET", "/v1/stats").json()
    store = SkillStore(Path(config.store_path))
    return store.stats()


def _stats_lines(payload: dict) -> list[str]:
    lines = [f"total skills: {payload['total_skills']}", "", "per category:"]
    for category, count in sorted(payload["per_category"].items()):
        lines.append(f"  {category:<14} {count}")
    lines.append("")
    lines.append(f"{'dimension':<16} {'good':>6} {'average':>8} {'poor':>6}")
    for dim, dist in sorted(payload["per_dimension"].items()):
        lines.append(f"  {dim:<16} {dist.get('good', 0):>6} {dist.get('average', 0):>8} {dist.get('poor', 0):>6}")
    return lines


def cmd_serve(config: CliConfig, args: argparse.Namespace) -> dict:
    if config.remote:
        raise UsageError("serve needs a local store")
    from .service import RegistryConfig, serve

    store = SkillStore(Path(config.store_path))
    store.verify(repair=True)
    serve(store, host=args.host, port=args.port, config=RegistryConfig())
    return {}


# -- wiring --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skillkit",
        description="Create, curate, evaluate, relate, search, serve, and run agent skill packages.",
    )
    parser.add_argument("--store", help="path to a local store directory")
    parser.add_argument("--registry", help="base URL of a remote registry")
    parser.add_argument("--output", choices=("human", "json"), help="output format")
    parser.add_argument("--config", help="JSON config file (flags > env > file)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="rank skills for a query")
    p.add_argument("query")
    p.add_argument("--mode", choices=[m.value for m in SearchMode], default="hybrid")
    p.add_argument("--top-k", type=int, default=10, dest="top_k")
    p.add_argument("--category")
    p.add_argument("--tag", action="append")
    p.set_defaults(func=cmd_search, lines=_search_lines)

    p = sub.add_parser("download", help="extract a stored skill package")
    p.add_argument("id")
    p.add_argument("--dest", default=".")
    p.set_defaults(func=cmd_download, lines=lambda d: [f"extracted {d['skill_id']} -> {d['path']}"])

    p = sub.add_parser("create", help="generate skill packages from a source")
    p.add_argument("--from-prompt")
    p.add_argument("--from-dir")
    p.add_argument("--from-doc")
    p.add_argument("--from-trajectory")
    p.add_argument("--dest", default="./created-skills")
    p.add_argument("--admit", action="store_true", help="run admission and store accepted skills")
    p.add_argument("--wall-ms", type=int, default=5000)
    p.set_defaults(
        func=cmd_create,
        lines=lambda d: [f"created {c['skill_id']} -> {c['path']}" for c in d["created"]]
        + [f"admitted {sid}" for sid in d["admitted"]],
    )

    p = sub.add_parser("evaluate", help="grade a package directory or stored skill")
    p.add_argument("target")
    p.add_argument("--wall-ms", type=int, default=5000)
    p.add_argument("--mem-mb", type=int, default=256)
    p.set_defaults(func=cmd_evaluate, lines=_evaluate_lines)

    p = sub.add_parser("analyze", help="rebuild the relation graph over the store")
    p.add_argument("--threshold", type=float, default=0.85)
    p.add_argument("--confirm-threshold", type=float, default=0.9)
    p.set_defaults(
        func=cmd_analyze,
        lines=lambda d: [f"nodes: {d['nodes']}"] + [f"  {rel:<14} {n}" for rel, n in d["edges"].items()],
    )

    p = sub.add_parser("stats", help="repository quality distributions")
    p.set_defaults(func=cmd_stats, lines=_stats_lines)

    p = sub.add_parser("serve", help="run the registry HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.set_defaults(func=cmd_serve, lines=lambda d: [])

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    output = args.output or os.environ.get(ENV_OUTPUT, "human")
    try:
        config = resolve_config(args)
        payload = args.func(config, args)
        _emit(config, payload, args.lines(payload))
        return 0
    except UsageError as exc:
        _fail(output, "usage", str(exc))
        return 2
    except (OperationalError, SkillKitError, OSError) as exc:
        code = "unknown-skill" if isinstance(exc, UnknownSkill) else "operational"
        _fail(output, code, str(exc))
        return 1


def _fail(output: str, code: str, message: str) -> None:
    if output == "json":
        print(json.dumps({"status": "error", "code": code, "message": message}))
    else:
        print(f"error: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
