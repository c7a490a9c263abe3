"""Protocol conformance for the adapter, including round-trips with the engine.

The engine package (docmbr) is installed alongside in this workspace; it is
consumed purely through the wire protocol.
"""

from __future__ import annotations

import json
import sys
import urllib.error
import urllib.request
from pathlib import Path

import pytest

from metric_adapter import (AdapterConfig, AdapterServer, ScoringService,
                            StubCosine, WideStubCosine)

DATA = Path(__file__).parent / "data"


def _service(metric="stub", batch_size=32) -> ScoringService:
    return ScoringService(AdapterConfig(metric=metric, batch_size=batch_size,
                                        port=0))


@pytest.fixture()
def server():
    srv = AdapterServer(_service(), port=0)
    srv.start_background()
    yield srv
    srv.shutdown()


# --- local scoring semantics -------------------------------------------------

def test_self_pair_scores_exactly_one():
    backend = StubCosine()
    for text in ["abc", "", "長い日本語の文です。", "x " * 50]:
        assert backend.score_texts([(text, text)]) == [1.0]


def test_scores_lie_in_unit_interval():
    service = _service()
    pairs = [(f"text number {i}", f"other text {j}")
             for i in range(10) for j in range(10)]
    for value in service.score(pairs, "stub"):
        assert 0.0 <= value <= 1.0


def test_wide_metric_is_clamped_by_the_service():
    service = _service()
    pairs = [("aaa", "bbb"), ("same", "same"), ("ccc", "ddd")]
    raw = WideStubCosine().score_texts(pairs)
    assert min(raw) < 0.0 or max(raw) > 1.0  # the fake metric really misbehaves
    clamped = service.score(pairs, "stub-wide")
    assert all(0.0 <= v <= 1.0 for v in clamped)
    assert clamped[1] == 1.0  # 2*1-0.5 = 1.5, clamped back to 1.0


def test_batch_order_preserved_across_chunking():
    pairs = [(f"hyp {i}", f"ref {i % 3}") for i in range(23)]
    one_shot = _service(batch_size=64).score(pairs, "stub")
    chunked = _service(batch_size=4).score(pairs, "stub")
    assert one_shot == chunked
    assert len(one_shot) == len(pairs)


def test_golden_file_determinism():
    golden = json.loads((DATA / "golden_stub_scores.json").read_text(encoding="utf-8"))
    pairs = [tuple(p) for p in golden["pairs"]]
    assert StubCosine().score_texts(pairs) == golden["scores"]


def test_config_invariants():
    with pytest.raises(ValueError):
        AdapterConfig(port=8080, stdio=True)   # two transports
    with pytest.raises(ValueError):
        AdapterConfig()                        # no transport
    with pytest.raises(ValueError):
        AdapterConfig(port=0, batch_size=0)
    with pytest.raises(ValueError):
        ScoringService(AdapterConfig(metric="no-such-metric", port=0))


# --- HTTP transport ------------------------------------------------------------

def _post(endpoint: str, body: dict):
    request = urllib.request.Request(
        endpoint + "/v1/score", data=json.dumps(body).encode(),
        headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(request, timeout=5) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read())


def test_http_score_and_health(server):
    status, payload = _post(server.endpoint, {
        "pairs": [{"hyp": "a b c", "ref": "a b c"}, {"hyp": "a", "ref": "b"}],
        "metric": "stub"})
    assert status == 200
    assert payload["scores"][0] == 1.0
    assert 0.0 <= payload["scores"][1] <= 1.0

    with urllib.request.urlopen(server.endpoint + "/v1/health", timeout=5) as resp:
        health = json.loads(resp.read())
    assert health["metric"] == "stub"
    assert "stub-wide" in health["metrics_available"]


def test_http_rejects_malformed_requests(server):
    for body in ({}, {"pairs": []}, {"pairs": [{"hyp": "a"}]},
                 {"pairs": [{"hyp": "a", "ref": "b"}], "metric": "nope"}):
        status, payload = _post(server.endpoint, body)
        assert status == 400
        assert "error" in payload


def test_http_clamps_wide_metric(server):
    status, payload = _post(server.endpoint, {
        "pairs": [{"hyp": "left text", "ref": "right text"},
                  {"hyp": "same", "ref": "same"}],
        "metric": "stub-wide"})
    assert status == 200
    assert all(0.0 <= v <= 1.0 for v in payload["scores"])


# --- round trips with the engine client ---------------------------------------

def test_engine_http_client_round_trip(server):
    docmbr = pytest.importorskip("docmbr")
    client = docmbr.HttpAdapterClient(server.endpoint, metric="stub", timeout=5.0)
    pairs = [("the cat sleeps", "the cat sleeps"),
             ("the cat sleeps", "a dog runs"),
             ("alpha beta", "beta alpha")]
    remote = client.score_texts(pairs)
    local = _service().score(pairs, "stub")
    assert len(remote) == len(local)
    for r, l in zip(remote, local):
        assert abs(r - l) <= 1e-6


def test_engine_stdio_client_round_trip():
    docmbr = pytest.importorskip("docmbr")
    client = docmbr.StdioAdapterClient(
        [sys.executable, "-m", "metric_adapter.cli", "--stdio"], metric="stub")
    try:
        pairs = [("x y z", "x y z"), ("x y z", "p q r")]
        remote = client.score_texts(pairs)
        local = _service().score(pairs, "stub")
        for r, l in zip(remote, local):
            assert abs(r - l) <= 1e-6
    finally:
        client.close()


def test_engine_decode_through_adapter(tmp_path, server):
    """Full integration: the engine CLI decodes with the adapter as u_s."""
    docmbr_cli = pytest.importorskip("docmbr.cli")
    instances = tmp_path / "inst.jsonl"
    instances.write_text(json.dumps({
        "id": "adapterrun",
        "candidates": ["The cat sleeps. The dog runs.",
                       "The dog runs. The cat sleeps.",
                       "Entirely unrelated words here."]}) + "\n")
    out = tmp_path / "out.jsonl"
    code = docmbr_cli.main([
        "decode", "--input", str(instances), "--output", str(out),
        "--utility", "adapter", "--adapter-endpoint", server.endpoint,
        "--adapter-metric", "stub"])
    assert code == 0
    row = json.loads(out.read_text())
    assert row["selected_index"] in (0, 1)  # the reorder twins beat the outlier
    assert len(row["expected_utilities"]) == 3


def test_stdio_error_reporting():
    service = _service()
    assert "error" in service.handle_line("this is not json")
    assert "error" in service.handle_line('{"pairs": []}')
    good = service.handle_line('{"pairs": [{"hyp": "a", "ref": "a"}]}')
    assert good == {"scores": [1.0]}
