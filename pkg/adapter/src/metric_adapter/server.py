"""HTTP transport: POST /v1/score and GET /v1/health on a threading server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .service import BadRequest, ScoringService


def _make_handler(service: ScoringService):
    class Handler(BaseHTTPRequestHandler):
        server_version = "metric-adapter"
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):
            pass

        def _send_json(self, status: int, payload: dict,
                       extra_headers: dict[str, str] | None = None) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            for key, value in (extra_headers or {}).items():
                self.send_header(key, value)
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path == "/v1/health":
                self._send_json(200, service.health())
            else:
                self._send_json(404, {"error": f"unknown path {self.path}"})

        def do_POST(self):
            if self.path != "/v1/score":
                self._send_json(404, {"error": f"unknown path {self.path}"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length).decode("utf-8"))
            except (ValueError, UnicodeDecodeError) as err:
                self._send_json(400, {"error": f"malformed request body: {err}"})
                return
            try:
                self._send_json(200, service.handle_request(payload))
            except BadRequest as err:
                self._send_json(400, {"error": str(err)})
            except Exception as err:  # model failure
                self._send_json(503, {"error": f"scoring failed: {err}"},
                                {"Retry-After": "1"})

    return Handler


class AdapterServer:
    """Owns the listening socket; start/stop friendly for tests and the CLI."""

    def __init__(self, service: ScoringService, host: str = "127.0.0.1",
                 port: int = 0) -> None:
        self._httpd = ThreadingHTTPServer((host, port), _make_handler(service))
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def endpoint(self) -> str:
        host = self._httpd.server_address[0]
        return f"http://{host}:{self.port}"

    def start_background(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def shutdown(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
