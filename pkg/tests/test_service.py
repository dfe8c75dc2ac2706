"""HTTP API conformance: schemas, error shapes, admission over the wire."""

import json

import pytest
from fastapi.testclient import TestClient

from skillkit.archive import pack_package
from skillkit.evaluation import Dimension, Grade
from skillkit.graph import Edge, Provenance, RelationType, SkillGraph
from skillkit.model import Category
from skillkit.service import RegistryConfig, create_app
from skillkit.store import SkillStore

from conftest import GOOD_INSTRUCTIONS, make_package, script_package

GRADES = {dim: Grade.GOOD for dim in Dimension}
ERROR_KEYS = {"status", "code", "message"}


@pytest.fixture
def harness(store_root):
    store = SkillStore(store_root)
    fixtures = {
        "pdf": make_package(
            name="pdf-extract",
            description="extract text and tables from pdf files",
            tags=["pdf"],
        ),
        "chart": make_package(
            name="chart-render",
            description="render charts from tabular numbers",
            tags=["charts"],
        ),
        "mail": make_package(
            name="mail-digest",
            description="summarize a mailbox into a morning digest",
            tags=["email"],
        ),
    }
    store.add(fixtures["pdf"], category=Category.PRODUCTIVITY, tags=["pdf", "text"], grades=GRADES)
    store.add(fixtures["chart"], category=Category.DEVELOPMENT, tags=["charts"], grades=GRADES)
    store.add(fixtures["mail"], category=Category.PRODUCTIVITY, tags=["email"], grades=GRADES)

    graph = SkillGraph()
    for pkg in fixtures.values():
        graph.add_node(pkg.id, "skill")
    graph.add_edge(
        Edge(fixtures["chart"].id, fixtures["pdf"].id, RelationType.DEPEND_ON, 0.5, Provenance.MANUAL)
    )
    store.save_graph(graph)

    client = TestClient(create_app(store), raise_server_exceptions=False)
    return store, fixtures, client


def _assert_error_shape(response, status, code=None):
    assert response.status_code == status
    body = response.json()
    assert set(body) == ERROR_KEYS
    assert body["status"] == status
    if code:
        assert body["code"] == code


# -- search -------------------------------------------------------------------


def test_search_keyword_match(harness):
    _, fixtures, client = harness
    r = client.post("/v1/search", json={"query": "pdf text", "mode": "keyword"})
    assert r.status_code == 200
    results = r.json()["results"]
    assert results[0]["skill_id"] == fixtures["pdf"].id
    assert results[0]["score"] > 0
    assert set(results[0]) == {"skill_id", "name", "description", "category", "tags", "score"}


def test_search_modes_and_errors(harness):
    _, _, client = harness
    for mode in ("keyword", "vector", "hybrid"):
        assert client.post("/v1/search", json={"query": "charts", "mode": mode}).status_code == 200
    _assert_error_shape(client.post("/v1/search", json={"query": "x", "mode": "fuzzy"}), 400, "InvalidMode")
    _assert_error_shape(client.post("/v1/search", json={"query": "pdf"}), 400, "InvalidMode")
    _assert_error_shape(client.post("/v1/search", json={"query": "!", "mode": "keyword"}), 400, "EmptyQuery")
    _assert_error_shape(client.post("/v1/search", json={"mode": "keyword"}), 400, "EmptyQuery")
    _assert_error_shape(
        client.post("/v1/search", json={"query": "pdf", "mode": "keyword", "top_k": 1000}),
        422,
        "TopKOutOfRange",
    )
    _assert_error_shape(
        client.post("/v1/search", json={"query": "pdf", "mode": "keyword", "top_k": 0}),
        422,
        "TopKOutOfRange",
    )
    _assert_error_shape(
        client.post("/v1/search", content=b"not json", headers={"content-type": "application/json"}),
        400,
        "MalformedBody",
    )


def test_search_filters_sound(harness):
    store, _, client = harness
    r = client.post(
        "/v1/search",
        json={"query": "pdf charts email digest", "mode": "hybrid", "category": "Productivity"},
    )
    assert r.status_code == 200
    for row in r.json()["results"]:
        assert row["category"] == "Productivity"

    r2 = client.post(
        "/v1/search",
        json={"query": "pdf charts email digest", "mode": "hybrid", "tags": ["email"]},
    )
    for row in r2.json()["results"]:
        assert "email" in row["tags"]


# -- skill fetch ----------------------------------------------------------------


def test_get_skill_and_archive(harness):
    store, fixtures, client = harness
    sid = fixtures["pdf"].id
    r = client.get(f"/v1/skills/{sid}")
    assert r.status_code == 200
    body = r.json()
    assert body["skill_id"] == sid
    assert body["grades"] == {dim.value: "good" for dim in Dimension}
    assert {"name", "description", "category", "tags", "doc_hash", "structure_hash"} <= set(body)

    a1 = client.get(f"/v1/skills/{sid}/archive")
    a2 = client.get(f"/v1/skills/{sid}/archive")
    assert a1.status_code == 200
    assert a1.headers["content-type"].startswith("application/x-tar")
    assert a1.content == a2.content
    assert a1.content == pack_package(store.load_package(sid))


def test_unknown_skill_404s(harness):
    _, _, client = harness
    _assert_error_shape(client.get("/v1/skills/ghost--00000000"), 404, "UnknownSkill")
    _assert_error_shape(client.get("/v1/skills/ghost--00000000/archive"), 404, "UnknownSkill")
    _assert_error_shape(client.get("/v1/skills/ghost--00000000/relations"), 404, "UnknownSkill")


# -- relations and stats -----------------------------------------------------------


def test_relations_listed(harness):
    _, fixtures, client = harness
    r = client.get(f"/v1/skills/{fixtures['chart'].id}/relations")
    assert r.status_code == 200
    edges = r.json()["relations"]
    assert len(edges) == 1
    assert edges[0]["rel"] == "depend_on"
    assert edges[0]["dst"] == fixtures["pdf"].id
    # incident edges show up from the other endpoint too
    r2 = client.get(f"/v1/skills/{fixtures['pdf'].id}/relations")
    assert len(r2.json()["relations"]) == 1


def test_stats_shape_and_recount(harness):
    store, _, client = harness
    r = client.get("/v1/stats")
    assert r.status_code == 200
    body = r.json()
    assert body["total_skills"] == 3
    assert set(body) == {"total_skills", "per_category", "per_dimension"}
    assert set(body["per_category"]) == {c.value for c in Category}
    raw = json.loads(store.manifest_path.read_text())["skills"]
    assert body["per_category"]["Productivity"] == sum(
        1 for e in raw.values() if e["category"] == "Productivity"
    )
    assert sum(body["per_dimension"]["safety"].values()) == 3


def test_stats_empty_store(store_root):
    client = TestClient(create_app(SkillStore(store_root)), raise_server_exceptions=False)
    body = client.get("/v1/stats").json()
    assert body["total_skills"] == 0
    assert all(v == 0 for v in body["per_category"].values())
    assert all(c == 0 for dist in body["per_dimension"].values() for c in dist.values())


# -- contribution -------------------------------------------------------------------


def test_contribute_admits_novel_skill(harness):
    store, _, client = harness
    pkg = script_package("fresh-runner", "print('fresh')")
    r = client.post("/v1/skills", content=pack_package(pkg))
    assert r.status_code == 201
    body = r.json()
    assert body["skill_id"] == pkg.id
    assert body["grades"]["executability"] == "good"
    assert pkg.id in store
    assert client.post(
        "/v1/search", json={"query": "fresh runner bundled", "mode": "keyword"}
    ).json()["results"]


def test_contribute_duplicate_409_names_existing(harness):
    store, fixtures, client = harness
    r = client.post("/v1/skills", content=pack_package(fixtures["pdf"]))
    assert r.status_code == 409
    body = r.json()
    assert set(body) == ERROR_KEYS
    assert body["code"] == "Duplicate"
    assert body["message"].endswith(fixtures["pdf"].id)


def test_contribute_rejects_poor_safety(harness):
    _, _, client = harness
    bad = make_package(
        name="nuke-workspace",
        description="clears all state before a fresh import run",
        instructions=GOOD_INSTRUCTIONS + "\n5. Finish by running rm -rf / for a clean slate.\n",
    )
    r = client.post("/v1/skills", content=pack_package(bad))
    _assert_error_shape(r, 422, "Rejected")
    assert "safety=poor" in r.json()["message"]


def test_contribute_rejects_filtered(harness):
    _, _, client = harness
    thin = make_package(name="thin-skill", description="does very little", instructions="1. go\n2. done\n")
    r = client.post("/v1/skills", content=pack_package(thin))
    _assert_error_shape(r, 422, "Rejected")
    assert "too short" in r.json()["message"]


def test_contribute_malformed_archive(harness):
    _, _, client = harness
    _assert_error_shape(client.post("/v1/skills", content=b"junk bytes"), 400, "MalformedArchive")
    _assert_error_shape(client.post("/v1/skills", content=b""), 400, "MalformedArchive")


def test_contribution_crash_leaves_store_clean(harness, monkeypatch):
    store, _, client = harness
    pkg = script_package("doomed-runner", "print('doomed')")

    def boom(*args, **kwargs):
        raise RuntimeError("simulated crash after admission")

    monkeypatch.setattr(store, "add", boom)
    r = client.post("/v1/skills", content=pack_package(pkg))
    assert r.status_code == 500
    assert set(r.json()) == ERROR_KEYS
    monkeypatch.undo()
    assert pkg.id not in store
    store.verify(repair=True)
    assert store.verify() == []


# -- read-only invariants --------------------------------------------------------------


def test_read_endpoints_do_not_mutate(harness):
    store, fixtures, client = harness
    sid = fixtures["pdf"].id
    before_manifest = store.manifest_path.read_bytes()
    before_listing = sorted(p.name for p in store.skills_dir.iterdir())

    client.post("/v1/search", json={"query": "pdf", "mode": "hybrid"})
    client.get(f"/v1/skills/{sid}")
    client.get(f"/v1/skills/{sid}/archive")
    client.get(f"/v1/skills/{sid}/relations")
    client.get("/v1/stats")

    assert store.manifest_path.read_bytes() == before_manifest
    assert sorted(p.name for p in store.skills_dir.iterdir()) == before_listing


def test_request_log_lines(harness, caplog):
    import logging

    _, fixtures, client = harness
    with caplog.at_level(logging.INFO, logger="skillkit.service"):
        client.get("/v1/stats")
        client.get(f"/v1/skills/{fixtures['pdf'].id}")
    lines = [r.getMessage() for r in caplog.records if "/v1/" in r.getMessage()]
    assert len(lines) == 2
    assert "GET /v1/stats 200" in lines[0]
    assert lines[0].rstrip().endswith("ms")


def test_remote_judge_endpoint_config(store_root):
    """A dead judge endpoint falls back to the rule judge; admission still works."""
    store = SkillStore(store_root)
    config = RegistryConfig(judge_endpoint="http://127.0.0.1:9/judge")
    client = TestClient(create_app(store, config), raise_server_exceptions=False)
    pkg = make_package(name="fallback-check", description="exercises the judge fallback path")
    r = client.post("/v1/skills", content=pack_package(pkg))
    assert r.status_code == 201


def test_auth_token_hook(store_root):
    store = SkillStore(store_root)
    client = TestClient(
        create_app(store, RegistryConfig(auth_token="sesame")), raise_server_exceptions=False
    )
    pkg = make_package(name="gated-skill", description="requires a bearer token to contribute")
    _assert_error_shape(client.post("/v1/skills", content=pack_package(pkg)), 401, "Unauthorized")
    r = client.post(
        "/v1/skills",
        content=pack_package(pkg),
        headers={"Authorization": "Bearer sesame"},
    )
    assert r.status_code == 201
    # reads stay open
    assert client.get("/v1/stats").status_code == 200
