"""HTTP service hosting interactive preference-based optimization sessions.

The service exposes the ask/tell loop of :class:`PWASpOptimizer` over a
small JSON protocol (one outstanding comparison per session):

* ``POST /sessions`` ``{problem | benchmark, configs}`` -> ``{session_id}``
* ``GET /sessions/{id}/query`` -> the pending pair (``202`` while the
  next acquisition is still being computed, ``{"done": true}`` after the
  comparison budget is exhausted)
* ``POST /sessions/{id}/preference`` ``{"outcome": -1|0|1}``
* ``GET /sessions/{id}/history`` -> full comparison record
* ``DELETE /sessions/{id}``

Sessions are persisted after every preference as a whole-state JSON
snapshot (problem + configs + outcome list); a restarted service replays
the snapshot through the deterministic optimizer, reproducing the exact
session state.  All mutations of one session serialize behind its lock;
acquisition solves run on a worker thread off the request path.
"""

from __future__ import annotations

import json
import re
import threading
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .acquisition import AcquisitionConfig
from .benchmarks import get_benchmark
from .driver import PWASpOptimizer
from .problem import InfeasibleProblemError, Point, ValidationError, problem_from_dict
from .surrogate import FitConfig


class ServiceError(Exception):
    def __init__(self, status, message):
        super().__init__(message)
        self.status = status
        self.message = message


def _describe(problem, point: Point):
    labels = {}
    for name, val in zip(problem.x_names, point.x):
        labels[name] = float(val)
    for name, val in zip(problem.y_names, point.y):
        labels[name] = int(val)
    for i, (name, cls) in enumerate(zip(problem.z_names, point.z)):
        labels[name] = problem.z_labels[i][int(cls)]
    return {"values": point.as_list(), "labels": labels}


class Session:
    """One preference session: optimizer, pending pair, snapshot bookkeeping."""

    def __init__(self, session_id, spec):
        self.id = session_id
        self.spec = spec  # serializable: problem/benchmark + configs
        self.lock = threading.RLock()
        self.outcomes: list[int] = []
        self.pairs: list = []      # decoded (incumbent, candidate) per comparison
        self.pending = None        # decoded pair awaiting an outcome
        self.computing = False
        self.error = None
        self.optimizer = self._build_optimizer()

    def _build_optimizer(self):
        spec = self.spec
        if "benchmark" in spec:
            problem = get_benchmark(spec["benchmark"]).problem
        else:
            problem = problem_from_dict(spec["problem"])
        cfg = spec.get("configs", {})
        fit = FitConfig(K_init=int(cfg.get("k", 20)))
        acq = AcquisitionConfig(strategy=cfg.get("strategy", "multi-step"),
                                delta=float(cfg.get("delta", 1.0)))
        return PWASpOptimizer(problem, n_init=int(cfg.get("n_init", 8)),
                              n_max=int(cfg.get("n_max", 30)),
                              fit_config=fit, acq_config=acq,
                              seed=int(cfg.get("seed", 0)))

    @property
    def problem(self):
        return self.optimizer.problem

    def replay(self, outcomes):
        for outcome in outcomes:
            pair = self.optimizer.ask()
            self.pairs.append(pair)
            self.optimizer.tell(outcome)
            self.outcomes.append(int(outcome))

    def start_compute(self):
        """Compute the next pair on a worker thread (no-op if done/pending)."""
        with self.lock:
            if self.pending is not None or self.computing or self.optimizer.exhausted():
                return
            self.computing = True

        def work():
            try:
                pair = self.optimizer.ask()
                with self.lock:
                    self.pending = pair
                    self.error = None
            except Exception as exc:  # surfaced on the next query
                with self.lock:
                    self.error = str(exc)
            finally:
                with self.lock:
                    self.computing = False

        threading.Thread(target=work, daemon=True).start()

    def query_state(self):
        with self.lock:
            opt = self.optimizer
            base = {"n": len(self.outcomes), "n_max": opt.n_max,
                    "comparisons_total": opt.n_max - 1}
            if self.error:
                raise ServiceError(500, self.error)
            if self.pending is not None:
                a, b = self.pending
                base["pair"] = [_describe(self.problem, a), _describe(self.problem, b)]
                return 200, base
            if opt.exhausted():
                base["done"] = True
                base["incumbent"] = _describe(self.problem, opt.best()[0])
                return 200, base
            base["status"] = "pending"
            return 202, base

    def tell(self, outcome):
        with self.lock:
            if not isinstance(outcome, int) or outcome not in (-1, 0, 1):
                raise ServiceError(422, "outcome must be -1, 0, or 1")
            if self.pending is None:
                raise ServiceError(409, "no pending query for this session")
            pair = self.pending
            self.pending = None
            self.pairs.append(pair)
            self.optimizer.tell(outcome)
            self.outcomes.append(int(outcome))
            incumbent = _describe(self.problem, self.optimizer.best()[0])
            state = {"accepted": True, "incumbent": incumbent,
                     "n": len(self.outcomes), "n_max": self.optimizer.n_max,
                     "done": self.optimizer.exhausted()}
        self.start_compute()
        return state

    def history(self):
        with self.lock:
            records = []
            for k, (pair, outcome) in enumerate(zip(self.pairs, self.outcomes)):
                records.append({
                    "iter": k + 1,
                    "pair": [_describe(self.problem, pair[0]), _describe(self.problem, pair[1])],
                    "outcome": outcome,
                })
            return {
                "session_id": self.id,
                "n_init": self.optimizer.n_init,
                "n_max": self.optimizer.n_max,
                "comparisons": records,
                "incumbent": _describe(self.problem, self.optimizer.best()[0]),
                "done": self.optimizer.exhausted(),
            }

    def snapshot(self):
        with self.lock:
            return {"session_id": self.id, "spec": self.spec, "outcomes": list(self.outcomes)}


class PreferenceService:
    """Session registry + persistence; the HTTP handler delegates here."""

    def __init__(self, state_dir):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()

    def _snapshot_path(self, session_id):
        return self.state_dir / f"{session_id}.json"

    def persist(self, session: Session):
        path = self._snapshot_path(session.id)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(session.snapshot(), sort_keys=True), encoding="utf-8")
        tmp.replace(path)

    def create(self, payload):
        if not isinstance(payload, dict) or not ({"problem", "benchmark"} & set(payload)):
            raise ServiceError(422, "body must carry 'problem' or 'benchmark'")
        spec = {k: payload[k] for k in ("problem", "benchmark", "configs") if k in payload}
        session_id = uuid.uuid4().hex[:12]
        try:
            session = Session(session_id, spec)
        except (ValidationError, InfeasibleProblemError, KeyError, ValueError) as exc:
            raise ServiceError(422, f"invalid session spec: {exc}")
        with self.lock:
            self.sessions[session_id] = session
        self.persist(session)
        session.start_compute()
        return {"session_id": session_id, "n_max": session.optimizer.n_max}

    def get(self, session_id) -> Session:
        with self.lock:
            session = self.sessions.get(session_id)
        if session is None:
            session = self._restore(session_id)
        if session is None:
            raise ServiceError(404, f"unknown session {session_id}")
        return session

    def _restore(self, session_id):
        path = self._snapshot_path(session_id)
        if not path.is_file():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        session = Session(session_id, data["spec"])
        session.replay(data["outcomes"])
        with self.lock:
            self.sessions[session_id] = session
        session.start_compute()
        return session

    def tell(self, session_id, payload):
        session = self.get(session_id)
        if not isinstance(payload, dict) or "outcome" not in payload:
            raise ServiceError(422, "body must carry 'outcome'")
        outcome = payload["outcome"]
        if isinstance(outcome, bool) or not isinstance(outcome, int):
            raise ServiceError(422, "outcome must be an integer -1, 0, or 1")
        state = session.tell(outcome)
        self.persist(session)
        return state

    def delete(self, session_id):
        session = self.get(session_id)
        with self.lock:
            self.sessions.pop(session_id, None)
        self._snapshot_path(session_id).unlink(missing_ok=True)
        return {"deleted": session.id}


_ROUTES = re.compile(r"^/sessions(?:/(?P<sid>[A-Za-z0-9-]+)(?:/(?P<leaf>query|preference|history))?)?/?$")


class _Handler(BaseHTTPRequestHandler):
    service: PreferenceService = None

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status, payload):
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(body)

    def _body(self):
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        try:
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except json.JSONDecodeError:
            raise ServiceError(422, "request body is not valid JSON")

    def _dispatch(self, method):
        match = _ROUTES.match(self.path.split("?")[0])
        if not match:
            raise ServiceError(404, "unknown endpoint")
        sid, leaf = match.group("sid"), match.group("leaf")
        svc = self.service
        if method == "POST" and sid is None:
            return 201, svc.create(self._body())
        if sid is None:
            raise ServiceError(405, "method not allowed")
        if method == "GET" and leaf == "query":
            return svc.get(sid).query_state()
        if method == "GET" and leaf == "history":
            return 200, svc.get(sid).history()
        if method == "POST" and leaf == "preference":
            return 200, svc.tell(sid, self._body())
        if method == "DELETE" and leaf is None:
            return 200, svc.delete(sid)
        raise ServiceError(405, "method not allowed")

    def _handle(self, method):
        try:
            status, payload = self._dispatch(method)
            self._send(status, payload)
        except ServiceError as exc:
            self._send(exc.status, {"error": exc.message})
        except Exception as exc:  # pragma: no cover - defensive
            self._send(500, {"error": str(exc)})

    def do_GET(self):
        self._handle("GET")

    def do_POST(self):
        self._handle("POST")

    def do_DELETE(self):
        self._handle("DELETE")

    def do_OPTIONS(self):
        self._send(204, {})


def make_server(host="127.0.0.1", port=0, state_dir="pwaopt-sessions"):
    service = PreferenceService(state_dir)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((host, port), handler)
    return server, service


def serve_forever(host="127.0.0.1", port=8711, state_dir="pwaopt-sessions"):
    server, _ = make_server(host, port, state_dir)
    print(f"pwaopt service listening on http://{host}:{server.server_address[1]} "
          f"(state dir: {state_dir})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
