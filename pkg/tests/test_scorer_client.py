import socket

import pytest

from keyrank.errors import ConfigError
from keyrank.scorer_client import (
    ClientConfig,
    ConnectivityError,
    ProtocolViolationError,
    RemoteError,
    RemoteScorer,
    ScoreRequest,
    score_batch,
)
from keyrank.scoring import ReferenceScorer
from keyrank.stub_server import StubScorerServer

ENCODER = 'Text: "Prompt based keyphrase extraction scores noun phrase candidates."'


def decoders(n):
    return [f'This text mainly talks about "candidate number {i}"' for i in range(n)]


@pytest.fixture
def stub():
    with StubScorerServer() as server:
        yield server


def cfg_for(server, **kw):
    kw.setdefault("backoff", 0.01)
    return ClientConfig(server.url, **kw)


@pytest.mark.parametrize("n", [1, 2, 5, 17])
def test_alignment_survives_batch_splitting(stub, n):
    req = ScoreRequest(ENCODER, decoders(n))
    split = score_batch(cfg_for(stub, max_batch=16), req)
    whole = score_batch(cfg_for(stub, max_batch=1000), req)
    assert split.results == whole.results
    assert list(split.results) == ReferenceScorer().score(ENCODER, decoders(n))
    assert [r.text() for r in split.results] == decoders(n)


def test_seventeen_texts_take_two_requests(stub):
    score_batch(cfg_for(stub, max_batch=16), ScoreRequest(ENCODER, decoders(17)))
    assert [len(r["decoder_texts"]) for r in stub.requests] == [16, 1]


def test_concurrent_chunks_keep_order(stub):
    req = ScoreRequest(ENCODER, decoders(23))
    resp = score_batch(cfg_for(stub, max_batch=2, max_concurrency=6), req)
    assert [r.text() for r in resp.results] == decoders(23)
    assert len(stub.requests) == 12


def test_empty_request_rejected_before_any_call(stub):
    with pytest.raises(ValueError):
        ScoreRequest(ENCODER, [])
    with pytest.raises(ValueError):
        ScoreRequest(ENCODER, ["ok", ""])
    assert stub.requests == []


def test_positive_logprob_is_protocol_violation():
    with StubScorerServer(fault="positive_logprob") as server:
        with pytest.raises(ProtocolViolationError) as err:
            score_batch(cfg_for(server), ScoreRequest(ENCODER, decoders(3)))
    assert err.value.index == 2


def test_offending_index_is_global_across_chunks():
    with StubScorerServer(fault="positive_logprob") as server:
        with pytest.raises(ProtocolViolationError) as err:
            score_batch(cfg_for(server, max_batch=4, max_concurrency=1),
                        ScoreRequest(ENCODER, decoders(4)))
    assert err.value.index == 3


def test_missing_result_is_protocol_violation():
    with StubScorerServer(fault="drop_result") as server:
        with pytest.raises(ProtocolViolationError, match="expected 2 results"):
            score_batch(cfg_for(server), ScoreRequest(ENCODER, decoders(2)))


def test_token_reconstruction_failure():
    with StubScorerServer(fault="bad_tokens") as server:
        with pytest.raises(ProtocolViolationError) as err:
            score_batch(cfg_for(server), ScoreRequest(ENCODER, decoders(2)))
    assert err.value.index == 0


def test_retry_recovers_without_duplicates():
    with StubScorerServer(fail_first=2) as server:
        resp = score_batch(cfg_for(server, max_retries=2), ScoreRequest(ENCODER, decoders(3)))
        assert len(server.requests) == 3
    assert [r.text() for r in resp.results] == decoders(3)


def test_server_error_after_retries():
    with StubScorerServer(fail_first=10) as server:
        with pytest.raises(RemoteError) as err:
            score_batch(cfg_for(server, max_retries=1), ScoreRequest(ENCODER, decoders(1)))
        assert len(server.requests) == 2
    assert err.value.status == 503
    assert "unavailable" in err.value.server_message


def test_client_error_not_retried(stub):
    cfg = ClientConfig(stub.url + "/wrong", backoff=0.01)
    with pytest.raises(RemoteError) as err:
        score_batch(cfg, ScoreRequest(ENCODER, decoders(1)))
    assert err.value.status == 404
    assert len(stub.requests) == 0


def _closed_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_unreachable_server_is_connectivity_error():
    cfg = ClientConfig(f"http://127.0.0.1:{_closed_port()}", max_retries=1, backoff=0.01, timeout=2)
    with pytest.raises(ConnectivityError):
        score_batch(cfg, ScoreRequest(ENCODER, decoders(1)))


def test_bearer_token_passed_through(stub):
    with RemoteScorer(cfg_for(stub, bearer_token="s3cret")) as scorer:
        scorer.score(ENCODER, decoders(1))
    assert stub.headers[0].get("Authorization") == "Bearer s3cret"


def test_config_validation(monkeypatch):
    with pytest.raises(ConfigError):
        ClientConfig("http://x", max_batch=0)
    monkeypatch.delenv("KEYRANK_SCORER_URL", raising=False)
    with pytest.raises(ConfigError):
        ClientConfig.from_env()
    monkeypatch.setenv("KEYRANK_SCORER_URL", "http://example.invalid:1")
    assert ClientConfig.from_env().score_url == "http://example.invalid:1/v1/score"
