"""HTTP service for running listening sessions.

Serves one trial at a time per session, stores responses through the
append-only session log, and optionally hosts a static directory with
the browser client.  Built on the standard library's threading HTTP
server; state is the session directory itself, so a killed process
loses nothing that was acknowledged.
"""

import json
import re
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from prosorc.experiment import MANIFEST_NAME, Session, load_session, record_response

_TRIAL_RE = re.compile(r"^/api/sessions/([^/]+)/trial$")
_STATUS_RE = re.compile(r"^/api/sessions/([^/]+)/status$")
_RESPONSE_RE = re.compile(r"^/api/sessions/([^/]+)/response$")
_AUDIO_RE = re.compile(r"^/api/audio/([^/]+)/(\d+)\.wav$")

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
    ".map": "application/json",
    ".wav": "audio/wav",
}


class SessionStore:
    """All sessions under one root directory, each with its own write lock."""

    def __init__(self, root):
        self.root = Path(root)
        self._sessions: dict[str, tuple[Session, threading.Lock]] = {}
        for directory in self._scan(self.root):
            session = load_session(directory)
            if session.session_id in self._sessions:
                raise ValueError(
                    f"duplicate session_id {session.session_id!r} under {self.root}")
            self._sessions[session.session_id] = (session, threading.Lock())
        if not self._sessions:
            raise ValueError(f"no sessions found under {self.root}")

    @staticmethod
    def _scan(root: Path) -> list[Path]:
        if (root / MANIFEST_NAME).exists():
            return [root]
        return sorted(p.parent for p in root.glob(f"*/{MANIFEST_NAME}"))

    @property
    def session_ids(self) -> list[str]:
        return sorted(self._sessions)

    def get(self, session_id: str) -> tuple[Session, threading.Lock]:
        return self._sessions[session_id]


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def store(self) -> SessionStore:
        return self.server.store

    @property
    def static_dir(self):
        return self.server.static_dir

    def log_message(self, fmt, *args):
        if self.server.verbose:
            super().log_message(fmt, *args)

    def _send_bytes(self, data: bytes, content_type: str,
                    status=HTTPStatus.OK) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        if not content_type.startswith("audio/"):
            self.send_header("Cache-Control", "no-store")
        self.end_headers()
        self.wfile.write(data)

    def _send_json(self, obj, status=HTTPStatus.OK) -> None:
        self._send_bytes(json.dumps(obj).encode("utf-8"), "application/json",
                         status)

    def _fail(self, status: HTTPStatus, message: str) -> None:
        self._send_json({"error": message}, status)

    def do_OPTIONS(self):
        self.send_response(HTTPStatus.NO_CONTENT)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        path = self.path.split("?", 1)[0]
        if m := _TRIAL_RE.match(path):
            return self._get_trial(m.group(1))
        if m := _STATUS_RE.match(path):
            return self._get_status(m.group(1))
        if m := _AUDIO_RE.match(path):
            return self._get_audio(m.group(1), int(m.group(2)))
        if path.startswith("/api/"):
            return self._fail(HTTPStatus.NOT_FOUND, f"no such endpoint: {path}")
        return self._get_static(path)

    def do_POST(self):
        # read the body up front so error replies on keep-alive
        # connections never leave unread bytes to corrupt the next request
        raw = self._read_body()
        path = self.path.split("?", 1)[0]
        if m := _RESPONSE_RE.match(path):
            return self._post_response(m.group(1), raw)
        return self._fail(HTTPStatus.NOT_FOUND, f"no such endpoint: {path}")

    def _read_body(self) -> bytes:
        if "chunked" in self.headers.get("Transfer-Encoding", "").lower():
            self.close_connection = True
            return b""
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length > 0 else b""

    def _lookup(self, session_id: str):
        try:
            return self.store.get(session_id)
        except KeyError:
            self._fail(HTTPStatus.NOT_FOUND, f"unknown session: {session_id}")
            return None

    def _get_trial(self, session_id: str) -> None:
        found = self._lookup(session_id)
        if found is None:
            return
        session, lock = found
        with lock:
            answered = session.answered
            if answered >= session.n_trials:
                return self._send_json({"done": True})
            left, right = session.presented_options
            self._send_json({
                "trial_index": answered,
                "audio_url": f"/api/audio/{session_id}/{answered}.wav",
                "options": [left, right],
                "progress": {"answered": answered, "total": session.n_trials},
            })

    def _get_status(self, session_id: str) -> None:
        found = self._lookup(session_id)
        if found is None:
            return
        session, lock = found
        with lock:
            self._send_json({"status": session.status,
                             "answered": session.answered,
                             "total": session.n_trials})

    def _get_audio(self, session_id: str, trial_index: int) -> None:
        found = self._lookup(session_id)
        if found is None:
            return
        session, _ = found
        if not 0 <= trial_index < session.n_trials:
            return self._fail(HTTPStatus.NOT_FOUND,
                              f"no trial {trial_index} in session {session_id}")
        wav_path = session.trial_audio_path(trial_index)
        if not wav_path.exists():
            return self._fail(HTTPStatus.NOT_FOUND,
                              f"audio missing for trial {trial_index}")
        self._send_bytes(wav_path.read_bytes(), "audio/wav")

    def _post_response(self, session_id: str, raw: bytes) -> None:
        found = self._lookup(session_id)
        if found is None:
            return
        session, lock = found

        try:
            body = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError):
            return self._fail(HTTPStatus.BAD_REQUEST, "body is not valid JSON")
        if not isinstance(body, dict):
            return self._fail(HTTPStatus.BAD_REQUEST, "body must be a JSON object")

        trial_index = body.get("trial_index")
        choice = body.get("choice")
        rt_ms = body.get("rt_ms")
        if not isinstance(trial_index, int) or isinstance(trial_index, bool):
            return self._fail(HTTPStatus.BAD_REQUEST, "trial_index must be an integer")
        if not isinstance(choice, str):
            return self._fail(HTTPStatus.BAD_REQUEST, "choice must be a string")
        if not isinstance(rt_ms, (int, float)) or isinstance(rt_ms, bool):
            return self._fail(HTTPStatus.BAD_REQUEST, "rt_ms must be a number")

        with lock:
            if session.answered >= session.n_trials:
                return self._fail(HTTPStatus.CONFLICT, "session is already complete")
            if trial_index != session.answered:
                return self._fail(
                    HTTPStatus.CONFLICT,
                    f"trial {trial_index} is not current; next is {session.answered}")
            try:
                record_response(session, trial_index, choice, rt_ms)
            except ValueError as exc:
                return self._fail(HTTPStatus.BAD_REQUEST, str(exc))
            self._send_json({"ok": True})

    def _get_static(self, path: str) -> None:
        if self.static_dir is None:
            return self._fail(HTTPStatus.NOT_FOUND, "no static directory configured")
        rel = path.lstrip("/") or "index.html"
        base = Path(self.static_dir).resolve()
        target = (base / rel).resolve()
        if base not in target.parents and target != base:
            return self._fail(HTTPStatus.NOT_FOUND, "not found")
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            return self._fail(HTTPStatus.NOT_FOUND, f"not found: {path}")
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send_bytes(target.read_bytes(), ctype)


class ExperimentServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, store: SessionStore, address=("127.0.0.1", 0),
                 static_dir=None, verbose: bool = False):
        self.store = store
        self.static_dir = static_dir
        self.verbose = verbose
        super().__init__(address, _Handler)


def make_server(session_root, port: int = 0, host: str = "127.0.0.1",
                static_dir=None, verbose: bool = False) -> ExperimentServer:
    """Create (but do not start) a server for every session under session_root."""
    store = SessionStore(session_root)
    return ExperimentServer(store, (host, port), static_dir=static_dir,
                            verbose=verbose)


def serve(session_root, port: int = 8000, host: str = "127.0.0.1",
          static_dir=None) -> None:
    """Serve sessions until interrupted."""
    server = make_server(session_root, port=port, host=host,
                         static_dir=static_dir, verbose=True)
    ids = ", ".join(server.store.session_ids)
    print(f"serving sessions [{ids}] at http://{host}:{server.server_address[1]}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
