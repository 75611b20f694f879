"""HTTP server for the fixture network.

Routes:
    POST /login                      -> {"token": ...} for valid seed credentials
    POST /logout                     -> invalidates the presented token
    GET  /profile/{id}/about         -> About page (auth required)
    GET  /profile/{id}/friends?page=k
    GET  /profile/{id}/timeline?page=k
    GET  /truth/{id}                 -> ground-truth JSON (disabled by --no-truth)

Profile routes without a valid ``Authorization: Bearer`` token get a 401
login wall that contains no profile data. Fault injection: profiles in
``fault_profiles`` serve a truncated About page (the leading 45% of the
bytes), which reliably cuts off the trailing friend-count element.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from ..errors import BindFailure
from .network import FixtureNetwork, expected_secret
from .pages import (
    LOGIN_WALL,
    render_about,
    render_friends_page,
    render_timeline_page,
)

log = logging.getLogger(__name__)

TRUNCATE_AT = 0.45


class FixtureService:
    """An in-process fixture server; start() binds, stop() tears down."""

    def __init__(self, network: FixtureNetwork, host: str = "127.0.0.1",
                 port: int = 0, *, page_size: int = 20,
                 truth_enabled: bool = True) -> None:
        self.network = network
        self.page_size = page_size
        self.truth_enabled = truth_enabled
        self._requested = (host, port)
        self._sessions: dict[str, str] = {}
        self._lock = threading.Lock()
        self.fault_profiles: set[str] = set()
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # -- lifecycle --

    def start(self) -> "FixtureService":
        host, port = self._requested
        handler = _make_handler(self)
        try:
            self._server = ThreadingHTTPServer((host, port), handler)
        except OSError as exc:
            raise BindFailure(f"{host}:{port}", str(exc)) from exc
        self._server.daemon_threads = True
        self._thread = threading.Thread(
            target=self._server.serve_forever, name="fixture-http", daemon=True
        )
        self._thread.start()
        log.info("fixture server listening on %s", self.base_url)
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    @property
    def address(self) -> tuple[str, int]:
        assert self._server is not None, "server not started"
        return self._server.server_address[:2]

    @property
    def base_url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    # -- session control --

    def login(self, login_name: str, secret: str) -> str | None:
        if login_name not in self.network.profiles:
            return None
        if secret != expected_secret(login_name):
            return None
        token = uuid.uuid4().hex
        with self._lock:
            self._sessions[token] = login_name
        return token

    def token_owner(self, token: str | None) -> str | None:
        if not token:
            return None
        with self._lock:
            return self._sessions.get(token)

    def logout(self, token: str) -> bool:
        with self._lock:
            return self._sessions.pop(token, None) is not None

    def invalidate_all_sessions(self) -> None:
        with self._lock:
            self._sessions.clear()

    # -- fault injection --

    def set_fault_profiles(self, profile_ids: set[str]) -> None:
        self.fault_profiles = set(profile_ids)


def _make_handler(service: FixtureService) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        server_version = "fixture/1"
        # headers and body go out as separate writes; without TCP_NODELAY
        # the body sits in Nagle's buffer waiting on a delayed ACK
        disable_nagle_algorithm = True

        def log_message(self, fmt: str, *args) -> None:  # noqa: A003
            log.debug("%s " + fmt, self.client_address[0], *args)

        def _reply(self, status: int, body: bytes,
                   content_type: str = "text/html; charset=utf-8") -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _reply_json(self, status: int, payload: dict) -> None:
            self._reply(status, json.dumps(payload).encode("utf-8"),
                        "application/json")

        def _bearer_token(self) -> str | None:
            header = self.headers.get("Authorization", "")
            if header.startswith("Bearer "):
                return header[len("Bearer "):].strip()
            return None

        def do_GET(self) -> None:  # noqa: N802
            parts = urlparse(self.path)
            segments = [s for s in parts.path.split("/") if s]

            if segments[:1] == ["truth"] and len(segments) == 2:
                self._serve_truth(segments[1])
                return
            if segments[:1] == ["profile"] and len(segments) in (2, 3):
                self._serve_profile(segments, parts.query)
                return
            self._reply(404, b"not found", "text/plain")

        def _serve_truth(self, pid: str) -> None:
            if not service.truth_enabled:
                self._reply(404, b"not found", "text/plain")
                return
            if pid not in service.network.profiles:
                self._reply_json(404, {"error": "unknown_profile"})
                return
            record = service.network.profile(pid).to_dict()
            record["friends"] = list(service.network.friends(pid))
            self._reply_json(200, record)

        def _serve_profile(self, segments: list[str], query: str) -> None:
            # authentication first: the wall must not even confirm existence
            if service.token_owner(self._bearer_token()) is None:
                self._reply(401, LOGIN_WALL.encode("utf-8"))
                return
            pid = segments[1]
            if pid not in service.network.profiles:
                self._reply(404, b"not found", "text/plain")
                return
            if len(segments) == 2:
                self.send_response(302)
                self.send_header("Location", f"/profile/{pid}/about")
                self.send_header("Content-Length", "0")
                self.end_headers()
                return
            sub = segments[2]
            try:
                page_no = int(parse_qs(query).get("page", ["1"])[0])
            except ValueError:
                self._reply(404, b"bad page", "text/plain")
                return
            try:
                if sub == "about":
                    html = render_about(service.network, pid)
                    if pid in service.fault_profiles:
                        html = html[: int(len(html) * TRUNCATE_AT)]
                elif sub == "friends":
                    html = render_friends_page(service.network, pid, page_no,
                                               service.page_size)
                elif sub == "timeline":
                    html = render_timeline_page(service.network, pid, page_no,
                                                service.page_size)
                else:
                    self._reply(404, b"not found", "text/plain")
                    return
            except IndexError:
                self._reply(404, b"no such page", "text/plain")
                return
            self._reply(200, html.encode("utf-8"))

        def do_POST(self) -> None:  # noqa: N802
            parts = urlparse(self.path)
            if parts.path == "/login":
                length = int(self.headers.get("Content-Length", "0"))
                try:
                    payload = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError:
                    payload = {}
                token = service.login(str(payload.get("login", "")),
                                      str(payload.get("secret", "")))
                if token is None:
                    self._reply_json(401, {"error": "bad_credentials"})
                else:
                    self._reply_json(200, {"token": token})
                return
            if parts.path == "/logout":
                token = self._bearer_token()
                if token and service.logout(token):
                    self._reply_json(200, {"ok": True})
                else:
                    self._reply_json(401, {"error": "no_session"})
                return
            self._reply(404, b"not found", "text/plain")

    return Handler


def serve(network: FixtureNetwork, bind: str = "127.0.0.1:8480", *,
          page_size: int = 20, truth_enabled: bool = True) -> FixtureService:
    """Start a fixture server on ``host:port`` (port 0 = ephemeral)."""
    host, _, port_text = bind.partition(":")
    try:
        port = int(port_text) if port_text else 8480
    except ValueError:
        raise BindFailure(bind, "port is not an integer") from None
    service = FixtureService(network, host or "127.0.0.1", port,
                             page_size=page_size, truth_enabled=truth_enabled)
    return service.start()
