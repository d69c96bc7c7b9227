"""Deterministic stand-in for a model backend.

Answers POST {"query": ...} with {"text": "<model_id>:<hash12>", "model_id": ...}
where the text matches stub_response() from the ranking module, so a gateway
response can be checked against an offline routing decision exactly. Supports
an artificial delay and a forced-failure mode for exercising timeout and
error paths.

Runnable standalone:

    python -m rewardroute.stub_backend --model-id m0 --port 9001
"""

from __future__ import annotations

import argparse
import json
import logging
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .ranking import stub_response

logger = logging.getLogger(__name__)


class _StubServer(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 256

    def __init__(self, addr, handler, backend: "StubBackend"):
        self.backend = backend
        super().__init__(addr, handler)


class _StubHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.0"

    def log_message(self, fmt, *args):
        logger.debug("stub backend: " + fmt, *args)

    def do_POST(self):
        backend: StubBackend = self.server.backend  # type: ignore[attr-defined]
        backend.count_hit()
        if backend.delay_ms > 0:
            time.sleep(backend.delay_ms / 1000.0)
        if backend.fail:
            self.send_response(500)
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
            query = payload["query"]
        except (ValueError, KeyError, UnicodeDecodeError):
            self.send_response(400)
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        body = json.dumps({
            "text": stub_response(backend.model_id, query),
            "model_id": backend.model_id,
        }).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class StubBackend:
    """One fake model server; start() binds and serves on a daemon thread."""

    def __init__(self, model_id: str, host: str = "127.0.0.1", port: int = 0,
                 delay_ms: float = 0.0, fail: bool = False):
        self.model_id = model_id
        self.host = host
        self.delay_ms = delay_ms
        self.fail = fail
        self._hits = 0
        self._lock = threading.Lock()
        self._server = _StubServer((host, port), _StubHandler, self)
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def endpoint(self) -> str:
        return f"http://{self.host}:{self.port}/"

    @property
    def hits(self) -> int:
        with self._lock:
            return self._hits

    def count_hit(self) -> None:
        with self._lock:
            self._hits += 1

    def start(self) -> "StubBackend":
        self._thread = threading.Thread(
            target=lambda: self._server.serve_forever(poll_interval=0.05),
            name=f"stub-{self.model_id}", daemon=True,
        )
        self._thread.start()
        return self

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join()
            self._thread = None


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="run a stub model backend")
    parser.add_argument("--model-id", required=True)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=0)
    parser.add_argument("--delay-ms", type=float, default=0.0)
    args = parser.parse_args(argv)
    backend = StubBackend(args.model_id, host=args.host, port=args.port,
                          delay_ms=args.delay_ms)
    backend.start()
    print(f"stub backend {args.model_id} listening on {backend.endpoint}")
    try:
        while True:
            time.sleep(1.0)
    except KeyboardInterrupt:
        backend.shutdown()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
