"""Minimal HTTP service exposing the routing engine.

POST /route with {"question": ..., "golds": [...]} runs one episode and
returns its record; rewards are included only when golds are supplied.
GET /health reports liveness.  A semaphore bounds in-flight episodes; the
shared cost window gives the service online cost normalization across
requests.
"""

from __future__ import annotations

import json
import signal
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .config import RunConfig
from .engine import run_episode
from .rewards import CostWindow, cost_reward


class RoutingHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, run: RunConfig, max_inflight: int):
        from .cli import _policy_factory

        super().__init__(address, _Handler)
        self.run_config = run
        self.policy_factory = _policy_factory(run)
        self.window = CostWindow(run.reward.window_capacity)
        for cost in run.eval_warmup_costs:
            cost_reward(self.window, cost, run.reward)
        self.inflight = threading.Semaphore(max_inflight)


class _Handler(BaseHTTPRequestHandler):
    server: RoutingHTTPServer

    def log_message(self, *args) -> None:  # quiet by default
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:
        if self.path != "/health":
            self._send_json(404, {"error": "not found"})
            return
        self._send_json(
            200, {"status": "ok", "models": len(self.server.run_config.pool)}
        )

    def do_POST(self) -> None:
        if self.path != "/route":
            self._send_json(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length) or b"{}")
            question = payload["question"]
            if not isinstance(question, str) or not question.strip():
                raise ValueError("question must be a nonempty string")
            golds = payload.get("golds")
            if golds is not None and (
                not isinstance(golds, list)
                or not golds
                or not all(isinstance(g, str) for g in golds)
            ):
                raise ValueError("golds must be a nonempty list of strings")
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            self._send_json(400, {"error": str(exc)})
            return

        if not self.server.inflight.acquire(blocking=False):
            self._send_json(503, {"error": "too many in-flight requests"})
            return
        try:
            from .cli import _QuestionOnly

            run = self.server.run_config
            task = _QuestionOnly(question, golds)
            policy = self.server.policy_factory(task)
            episode = run_episode(
                question,
                golds,
                policy,
                run.pool,
                self.server.window,
                run.engine,
                run.reward,
            )
            record = episode.to_record()
            if record["rewards"] is None:
                del record["rewards"]
            self._send_json(200, record)
        except Exception as exc:  # a failed episode must not kill the server
            self._send_json(500, {"error": str(exc)})
        finally:
            self.server.inflight.release()


def build_server(
    run: RunConfig, host: str = "127.0.0.1", port: int = 8777, max_inflight: int = 8
) -> RoutingHTTPServer:
    return RoutingHTTPServer((host, port), run, max_inflight)


def serve_forever(
    run: RunConfig, host: str, port: int, max_inflight: int = 8
) -> None:
    server = build_server(run, host, port, max_inflight)

    def _stop(signum, frame):
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGINT, _stop)
    signal.signal(signal.SIGTERM, _stop)
    try:
        server.serve_forever()
    finally:
        server.server_close()
