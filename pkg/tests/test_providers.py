"""Remote provider wire contracts and retry behavior, against a local stub."""

import json
import threading
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from skillkit.creation import SourceInput, create_from_source
from skillkit.errors import ProviderUnavailable
from skillkit.evaluation import Dimension, Grade, evaluate
from skillkit.providers import RemoteEmbedder, RemoteGenerator, RemoteJudge, call_counter

from conftest import make_package


@contextmanager
def stub_server(handler_fn):
    """Serve handler_fn(path, body_dict) -> (status, reply_dict) locally."""
    calls = []

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("content-length", 0))
            body = json.loads(self.rfile.read(length) or b"{}")
            calls.append((self.path, body))
            status, reply = handler_fn(self.path, body)
            payload = json.dumps(reply).encode()
            self.send_response(status)
            self.send_header("content-type", "application/json")
            self.send_header("content-length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}", calls
    finally:
        server.shutdown()
        server.server_close()


def test_remote_generator_wire_contract():
    def handler(path, body):
        assert body["kind"] == "prompt"
        assert body["payload"] == {"text": "make tea properly"}
        assert body["schema_version"] == 1
        return 200, {
            "drafts": [
                {
                    "frontmatter": {
                        "name": "brew-tea",
                        "description": "brews tea the right way every time",
                        "entry": "brew.sh",
                    },
                    "instructions": "Steps:\n1. Boil water to temperature.\n2. Steep for the right time.\n"
                    + "x" * 200,
                    "resources": [{"path": "brew.sh", "content_b64": "ZWNobyB0ZWEK"}],
                }
            ]
        }

    with stub_server(handler) as (url, calls):
        packages = create_from_source(
            SourceInput.from_prompt("make tea properly"), RemoteGenerator(url)
        )
    assert len(calls) == 1
    (pkg,) = packages
    assert pkg.document.metadata.name == "brew-tea"
    assert pkg.entry_point == "brew.sh"
    assert pkg.resource_bytes("brew.sh") == b"echo tea\n"
    assert pkg.document.metadata.extra["source"].startswith("prompt:")


def test_remote_judge_wire_contract():
    def handler(path, body):
        assert "skill_document" in body
        assert body["rubric_version"] == 1
        assert body["skill_document"].startswith("---\n")
        return 200, {
            "grades": {
                dim.value: {"level": "good", "rationale": "stub judge approves"}
                for dim in Dimension
            }
        }

    pkg = make_package()
    with stub_server(handler) as (url, _):
        report = evaluate(pkg, RemoteJudge(url), with_sandbox=False)
    assert all(report.grade_of(dim) == Grade.GOOD for dim in Dimension)
    assert report.judge_identity.startswith("remote-judge:")


def test_remote_judge_malformed_reply_is_provider_unavailable():
    with stub_server(lambda path, body: (200, {"grades": {"safety": {"level": "shiny"}}})) as (url, _):
        with pytest.raises(ProviderUnavailable):
            evaluate(make_package(), RemoteJudge(url, retries=0), with_sandbox=False)


def test_remote_embedder_wire_contract():
    def handler(path, body):
        assert body == {"texts": ["hello world"]}
        return 200, {"vectors": [[3.0, 4.0]]}

    with stub_server(handler) as (url, _):
        vec = RemoteEmbedder(url, dim=2).embed("hello world")
    assert vec.values == [3.0, 4.0]
    assert vec.norm == pytest.approx(5.0)


def test_bounded_retries_then_provider_unavailable():
    attempts = []

    def handler(path, body):
        attempts.append(1)
        return 503, {"error": "overloaded"}

    with stub_server(handler) as (url, _):
        judge = RemoteJudge(url, retries=2)
        with pytest.raises(ProviderUnavailable):
            judge.grade_skill(make_package())
    assert len(attempts) == 3  # initial try plus two retries


def test_unreachable_endpoint_counts_calls_and_raises():
    before = call_counter.value
    judge = RemoteJudge("http://127.0.0.1:9/judge", retries=1, timeout_ms=300)
    with pytest.raises(ProviderUnavailable):
        judge.grade_skill(make_package())
    assert call_counter.value == before + 2
