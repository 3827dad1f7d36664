"""HTTP review service for a running (or finished) search.

Read endpoints serve immutable snapshots so slow clients never touch
the search loop; the only write path is the intervention queue, which
the engine drains at iteration boundaries.  The event stream replays
the audit trail as server-sent events.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .search import InterventionConflict, InterventionNotFound, SearchEngine

STREAM_POLL_SECS = 0.05


class ReviewServer:
    """Wraps a ThreadingHTTPServer bound to one engine."""

    def __init__(self, engine: SearchEngine, host: str = "127.0.0.1",
                 port: int = 8765):
        self.engine = engine
        handler = _make_handler(engine)
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.host, self.port = self.httpd.server_address[:2]
        self._thread: "threading.Thread | None" = None

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever,
                                        name="review-server", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)
            self._thread = None

    @property
    def address(self) -> str:
        return f"http://{self.host}:{self.port}"


def _make_handler(engine: SearchEngine):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            pass

        def _cors(self) -> None:
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")

        def _json(self, status: int, payload) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self._cors()
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_OPTIONS(self):
            self.send_response(204)
            self._cors()
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            path = self.path.split("?", 1)[0].rstrip("/") or "/"
            if path == "/tree":
                self._json(200, engine.snapshot or {})
            elif path == "/reward-trace":
                snapshot = engine.snapshot or {}
                self._json(200, {
                    "reward_trace": snapshot.get("reward_trace", []),
                    "done": snapshot.get("done", False),
                    "best_reward": snapshot.get("best_reward"),
                })
            elif path == "/interventions":
                self._json(200, {"interventions": engine.queue.snapshot()})
            elif path == "/events":
                self._stream_events()
            else:
                self._json(404, {"error": f"no such resource {path!r}"})

        def do_POST(self):
            parts = [p for p in self.path.split("?", 1)[0].split("/") if p]
            if (len(parts) != 3 or parts[0] != "interventions"
                    or parts[2] != "decision"):
                self._json(404, {"error": f"no such resource {self.path!r}"})
                return
            try:
                item_id = int(parts[1])
            except ValueError:
                self._json(404, {"error": f"bad intervention id {parts[1]!r}"})
                return
            length = int(self.headers.get("Content-Length") or 0)
            try:
                body = json.loads(self.rfile.read(length) or b"{}")
                decision = body["decision"]
            except (json.JSONDecodeError, KeyError, UnicodeDecodeError):
                self._json(400, {"error": "body must be JSON with a decision key"})
                return
            if decision not in ("approved", "rejected"):
                self._json(400, {"error": f"unknown decision {decision!r}"})
                return
            try:
                item = engine.queue.decide(item_id, decision)
            except InterventionNotFound:
                self._json(404, {"error": f"no intervention {item_id}"})
                return
            except InterventionConflict as exc:
                self._json(409, {"error": str(exc)})
                return
            self._json(200, {"item": item.to_dict()})

        def _stream_events(self):
            self.send_response(200)
            self._cors()
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.end_headers()
            position = 0
            try:
                while True:
                    records = engine.trail.records
                    while position < len(records):
                        line = records[position].to_json_line()
                        self.wfile.write(f"data: {line}\n\n".encode("utf-8"))
                        position += 1
                    self.wfile.flush()
                    snapshot = engine.snapshot or {}
                    if snapshot.get("done") and position >= len(engine.trail.records):
                        self.wfile.write(b"event: done\ndata: {}\n\n")
                        self.wfile.flush()
                        return
                    time.sleep(STREAM_POLL_SECS)
            except (BrokenPipeError, ConnectionResetError):
                return

    return Handler
