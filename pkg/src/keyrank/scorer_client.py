"""HTTP client for an external forced-decoding log-probability server.

Protocol::

    POST {endpoint_url}/v1/score
    {"encoder_text": str, "decoder_texts": [str, ...]}

    200 {"results": [{"tokens": [str, ...], "logprobs": [float, ...]}, ...]}
    4xx {"error": str}

Log-probs are natural logs. Each result's tokens, concatenated, must equal
the corresponding decoder text.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import httpx

from .errors import ConfigError, KeyrankError
from .scoring import AlignmentError, TokenLogProbs, check_reconstruction

log = logging.getLogger(__name__)

ENV_ENDPOINT = "KEYRANK_SCORER_URL"


class ScorerClientError(KeyrankError):
    pass


class ConnectivityError(ScorerClientError):
    pass


class ProtocolViolationError(ScorerClientError):
    def __init__(self, message: str, index: int | None = None):
        where = f" (result index {index})" if index is not None else ""
        super().__init__(message + where)
        self.index = index


class RemoteError(ScorerClientError):
    def __init__(self, status: int, message: str):
        super().__init__(f"server returned {status}: {message}")
        self.status = status
        self.server_message = message


@dataclass(frozen=True)
class ScoreRequest:
    encoder_text: str
    decoder_texts: tuple[str, ...]

    def __init__(self, encoder_text: str, decoder_texts: Sequence[str]):
        object.__setattr__(self, "encoder_text", encoder_text)
        object.__setattr__(self, "decoder_texts", tuple(decoder_texts))
        if not self.decoder_texts:
            raise ValueError("decoder_texts must not be empty")
        for i, d in enumerate(self.decoder_texts):
            if not d:
                raise ValueError(f"decoder_texts[{i}] is empty")


@dataclass(frozen=True)
class ScoreResponse:
    results: tuple[TokenLogProbs, ...]


@dataclass(frozen=True)
class ClientConfig:
    endpoint_url: str
    timeout: float = 60.0
    max_batch: int = 16
    max_retries: int = 2
    backoff: float = 0.5
    max_concurrency: int = 4
    bearer_token: str | None = None

    def __post_init__(self):
        if not self.endpoint_url:
            raise ConfigError("endpoint_url is required")
        if self.max_batch < 1:
            raise ConfigError("max_batch must be >= 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")

    @classmethod
    def from_env(cls, endpoint_url: str | None = None, **kwargs) -> "ClientConfig":
        url = endpoint_url or os.environ.get(ENV_ENDPOINT)
        if not url:
            raise ConfigError(f"no scorer endpoint given and {ENV_ENDPOINT} is unset")
        return cls(url, **kwargs)

    @property
    def score_url(self) -> str:
        return self.endpoint_url.rstrip("/") + "/v1/score"


def _parse_results(payload, decoder_texts: Sequence[str], offset: int) -> list[TokenLogProbs]:
    if not isinstance(payload, dict) or not isinstance(payload.get("results"), list):
        raise ProtocolViolationError("response lacks a 'results' array")
    results = payload["results"]
    if len(results) != len(decoder_texts):
        raise ProtocolViolationError(
            f"expected {len(decoder_texts)} results, got {len(results)}")
    out = []
    for j, (item, text) in enumerate(zip(results, decoder_texts)):
        idx = offset + j
        if not isinstance(item, dict):
            raise ProtocolViolationError("result is not an object", idx)
        tokens, logprobs = item.get("tokens"), item.get("logprobs")
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise ProtocolViolationError("'tokens' must be an array of strings", idx)
        if not isinstance(logprobs, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in logprobs):
            raise ProtocolViolationError("'logprobs' must be an array of numbers", idx)
        if len(tokens) != len(logprobs):
            raise ProtocolViolationError(
                f"{len(tokens)} tokens but {len(logprobs)} log-probs", idx)
        for lp in logprobs:
            if math.isnan(lp) or lp > 0:
                raise ProtocolViolationError(f"log-prob {lp!r} is not <= 0", idx)
        try:
            check_reconstruction(tokens, text)
        except AlignmentError as exc:
            raise ProtocolViolationError(str(exc), idx) from exc
        out.append(TokenLogProbs(tokens, logprobs))
    return out


def _post_chunk(client: httpx.Client, cfg: ClientConfig, encoder_text: str,
                chunk: Sequence[str], offset: int) -> list[TokenLogProbs]:
    body = {"encoder_text": encoder_text, "decoder_texts": list(chunk)}
    attempt = 0
    while True:
        try:
            resp = client.post(cfg.score_url, json=body)
        except httpx.TransportError as exc:
            failure: Exception = exc
        else:
            if resp.status_code == 200:
                try:
                    payload = resp.json()
                except ValueError as exc:
                    raise ProtocolViolationError(f"response is not JSON: {exc}") from exc
                return _parse_results(payload, chunk, offset)
            message = _error_message(resp)
            if resp.status_code < 500:
                raise RemoteError(resp.status_code, message)
            failure = RemoteError(resp.status_code, message)
        if attempt >= cfg.max_retries:
            if isinstance(failure, RemoteError):
                raise failure
            raise ConnectivityError(
                f"could not reach {cfg.score_url} after {attempt + 1} attempt(s): {failure}"
            ) from failure
        delay = cfg.backoff * (2 ** attempt)
        log.warning("scorer request failed (%s); retrying in %.2fs", failure, delay)
        time.sleep(delay)
        attempt += 1


def _error_message(resp: httpx.Response) -> str:
    try:
        payload = resp.json()
        if isinstance(payload, dict) and isinstance(payload.get("error"), str):
            return payload["error"]
    except ValueError:
        pass
    return resp.text.strip() or resp.reason_phrase


def score_batch(cfg: ClientConfig, req: ScoreRequest,
                client: httpx.Client | None = None) -> ScoreResponse:
    """Score every decoder text in ``req``, splitting into ``max_batch`` chunks.

    Chunks may be in flight concurrently; results come back in request order.
    """
    texts = req.decoder_texts
    chunks = [(i, texts[i:i + cfg.max_batch]) for i in range(0, len(texts), cfg.max_batch)]
    headers = {"Authorization": f"Bearer {cfg.bearer_token}"} if cfg.bearer_token else None
    owned = client is None
    if owned:
        client = httpx.Client(timeout=cfg.timeout, headers=headers)
    try:
        if len(chunks) == 1 or cfg.max_concurrency == 1:
            parts = [_post_chunk(client, cfg, req.encoder_text, c, off) for off, c in chunks]
        else:
            with ThreadPoolExecutor(max_workers=min(cfg.max_concurrency, len(chunks))) as pool:
                futures = [pool.submit(_post_chunk, client, cfg, req.encoder_text, c, off)
                           for off, c in chunks]
                parts = [f.result() for f in futures]
    finally:
        if owned:
            client.close()
    return ScoreResponse(tuple(r for part in parts for r in part))


class RemoteScorer:
    """Scoring backend that forwards to a log-probability server."""

    label = "remote"

    def __init__(self, cfg: ClientConfig):
        self.cfg = cfg
        headers = {"Authorization": f"Bearer {cfg.bearer_token}"} if cfg.bearer_token else None
        self._client = httpx.Client(timeout=cfg.timeout, headers=headers)

    def score(self, encoder_text: str, decoder_texts: Sequence[str]) -> list[TokenLogProbs]:
        resp = score_batch(self.cfg, ScoreRequest(encoder_text, decoder_texts), self._client)
        return list(resp.results)

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
