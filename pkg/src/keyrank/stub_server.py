"""A local log-probability server speaking the scorer wire protocol.

Backed by :class:`~keyrank.scoring.ReferenceScorer`. Used by the test suite
and handy for exercising ``--scorer remote`` without a model host::

    python -m keyrank.stub_server --port 8765
"""

from __future__ import annotations

import argparse
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .scoring import ReferenceScorer


class StubScorerServer:
    """Serve ``/v1/score`` on a background thread.

    ``fault`` injects protocol violations for tests: ``"positive_logprob"``,
    ``"drop_result"``, ``"bad_tokens"``. ``fail_first`` makes the first N
    requests answer 503.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0, fault: str | None = None,
                 fail_first: int = 0):
        self.scorer = ReferenceScorer()
        self.fault = fault
        self.fail_first = fail_first
        self.requests: list[dict] = []
        self.headers: list[dict] = []
        self._lock = threading.Lock()
        self._httpd = ThreadingHTTPServer((host, port), self._handler())
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def respond(self, body: dict) -> tuple[int, dict]:
        enc, decs = body.get("encoder_text"), body.get("decoder_texts")
        if not isinstance(enc, str) or not isinstance(decs, list) or not decs \
                or not all(isinstance(d, str) and d for d in decs):
            return 400, {"error": "expected encoder_text and non-empty decoder_texts"}
        results = [{"tokens": list(t.tokens), "logprobs": list(t.logprobs)}
                   for t in self.scorer.score(enc, decs)]
        if self.fault == "positive_logprob":
            results[-1]["logprobs"][0] = 0.3
        elif self.fault == "drop_result":
            results.pop()
        elif self.fault == "bad_tokens":
            results[0]["tokens"][0] = results[0]["tokens"][0] + "?"
        return 200, {"results": results}

    def _handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, format, *args):
                pass

            def _send(self, status: int, payload: dict):
                data = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json; charset=utf-8")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_POST(self):
                if self.path.rstrip("/") != "/v1/score":
                    self._send(404, {"error": f"no route {self.path}"})
                    return
                length = int(self.headers.get("Content-Length", 0))
                try:
                    body = json.loads(self.rfile.read(length).decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError):
                    self._send(400, {"error": "body is not JSON"})
                    return
                with server._lock:
                    server.requests.append(body)
                    server.headers.append(dict(self.headers))
                    failing = server.fail_first > 0
                    if failing:
                        server.fail_first -= 1
                if failing:
                    self._send(503, {"error": "temporarily unavailable"})
                    return
                self._send(*server.respond(body if isinstance(body, dict) else {}))

        return Handler

    def start(self) -> "StubScorerServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def main(argv=None):
    parser = argparse.ArgumentParser(description="Reference log-prob stub server")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8765)
    args = parser.parse_args(argv)
    server = StubScorerServer(args.host, args.port)
    print(f"serving {server.url}/v1/score", flush=True)
    try:
        server._httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server._httpd.server_close()


if __name__ == "__main__":
    main()
