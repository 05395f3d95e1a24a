"""HTTP session service for stepwise exploration.

Sessions live in memory with idle-TTL eviction. Each session holds named
frames and an append-only step log; applying a step runs the explanation
pipeline synchronously up to a timeout, after which the caller gets a retry
token and computation finishes in the background. Frames are immutable, so
only the commit of a finished step needs the per-session lock.
"""

from __future__ import annotations

import io
import os
import threading
import time
import uuid
from concurrent.futures import Future, ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeoutError
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import DataError, EngineError, OpSyntaxError
from .frame import DataFrame, ingest_csv
from .measures import SamplingConfig
from .ops import make_step, parse_operation
from .pipeline import ExplainConfig, RankWeights, explain_step
from .render import build_payload

AUTO_SAMPLING_ROWS = 50000
DEFAULT_SAMPLE_SIZE = 5000


def thread_cap() -> int:
    """Worker-thread ceiling, settable via EDA_EXPLAIN_THREADS."""
    raw = os.environ.get("EDA_EXPLAIN_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 4


@dataclass
class ServiceConfig:
    session_ttl: float = 3600.0
    upload_cap: int = 50 * 1024 * 1024
    step_timeout: float = 30.0
    bearer_token: Optional[str] = None
    cors_origins: tuple = ("*",)


class Session:
    def __init__(self, sid: str):
        self.id = sid
        self.frames: dict[str, DataFrame] = {}
        self.step_log: list[dict] = []
        self.pending: dict[str, Future] = {}
        self.lock = threading.Lock()
        self.touched = time.monotonic()

    def touch(self):
        self.touched = time.monotonic()


class SessionStore:
    def __init__(self, ttl: float):
        self.ttl = ttl
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def sweep(self):
        now = time.monotonic()
        with self._lock:
            dead = [sid for sid, s in self._sessions.items() if now - s.touched > self.ttl]
            for sid in dead:
                del self._sessions[sid]

    def create(self) -> Session:
        self.sweep()
        session = Session(uuid.uuid4().hex)
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, sid: str) -> Optional[Session]:
        self.sweep()
        with self._lock:
            session = self._sessions.get(sid)
        if session is not None:
            session.touch()
        return session


class StepRequest(BaseModel):
    op: Union[str, dict]
    inputs: list[str]
    output: str
    config: dict = {}


def _frame_summary(frame: DataFrame, sample_rows: int = 5) -> dict:
    return {
        "name": frame.name,
        "row_count": frame.row_count,
        "columns": [
            {"name": c.name, "dtype": str(c.dtype)} for c in frame.columns
        ],
        "sample": [list(r) for r in frame.head_rows(sample_rows)],
    }


def _engine_config(raw: dict, largest_input: int) -> ExplainConfig:
    exact = bool(raw.get("exact", False))
    sample_size = raw.get("sample_size")
    seed = int(raw.get("seed", 0))
    if exact:
        sampling = None
    elif sample_size is not None or largest_input > AUTO_SAMPLING_ROWS:
        sampling = SamplingConfig(
            enabled=True,
            sample_size=int(sample_size) if sample_size is not None else DEFAULT_SAMPLE_SIZE,
            seed=seed,
        )
    else:
        sampling = None
    weights = raw.get("weights")
    return ExplainConfig(
        bin_counts=tuple(raw.get("bins", (5, 10))),
        sampling=sampling,
        measure=raw.get("measure"),
        columns=raw.get("columns"),
        top_k=raw.get("top_k"),
        weights=RankWeights(*weights) if weights else RankWeights(),
        mine_m2o=not raw.get("no_m2o", False),
        exact_interventions=True if exact else None,
    )


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    cfg = config if config is not None else ServiceConfig()
    store = SessionStore(cfg.session_ttl)
    executor = ThreadPoolExecutor(max_workers=thread_cap())

    app = FastAPI(title="eda-explain service")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cfg.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _error(status: int, message: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"detail": message})

    def _authorized(request: Request) -> bool:
        if cfg.bearer_token is None:
            return True
        return request.headers.get("authorization") == f"Bearer {cfg.bearer_token}"

    @app.middleware("http")
    async def _auth_middleware(request: Request, call_next):
        if request.url.path != "/healthz" and not _authorized(request):
            return JSONResponse(status_code=401, content={"detail": "missing or bad token"})
        return await call_next(request)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session():
        session = store.create()
        return {"session_id": session.id}

    @app.post("/sessions/{sid}/frames", status_code=201)
    async def upload_frame(sid: str, file: UploadFile = File(...), name: str = Form(None)):
        session = store.get(sid)
        if session is None:
            return _error(404, f"unknown session {sid!r}")
        body = await file.read()
        if len(body) > cfg.upload_cap:
            return _error(413, f"upload exceeds the {cfg.upload_cap} byte cap")
        frame_name = name or Path(file.filename or "frame").stem
        with session.lock:
            if frame_name in session.frames:
                return _error(409, f"frame {frame_name!r} already exists")
        try:
            frame = ingest_csv(io.StringIO(body.decode("utf-8")), name=frame_name)
        except UnicodeDecodeError:
            return _error(400, "upload is not valid UTF-8")
        except DataError as exc:
            return _error(400, str(exc))
        with session.lock:
            if frame_name in session.frames:
                return _error(409, f"frame {frame_name!r} already exists")
            session.frames[frame_name] = frame
        return _frame_summary(frame)

    def _run_step(session: Session, req: StepRequest):
        op = parse_operation(req.op)
        inputs = [session.frames[n] for n in req.inputs]
        engine_cfg = _engine_config(req.config, max(f.row_count for f in inputs))
        step = make_step(op, inputs)
        explanations = explain_step(step, engine_cfg)
        payload = build_payload(step, explanations)
        out_frame = DataFrame(req.output, step.output.columns)
        with session.lock:
            if req.output in session.frames:
                raise FileExistsError(req.output)
            session.frames[req.output] = out_frame
            session.step_log.append(
                {
                    "op": payload["step"]["op"],
                    "inputs": list(req.inputs),
                    "output": req.output,
                    "n_explanations": len(explanations),
                    "captions": [e.caption for e in explanations],
                }
            )
        return {
            "output": _frame_summary(out_frame, sample_rows=50),
            "explanations": payload,
        }

    def _step_outcome(future: Future):
        try:
            return future.result(timeout=0), None
        except OpSyntaxError as exc:
            return None, _error(400, f"bad operation: {exc}")
        except FileExistsError as exc:
            return None, _error(409, f"frame {exc.args[0]!r} already exists")
        except (DataError, EngineError, ValueError) as exc:
            return None, _error(400, str(exc))

    @app.post("/sessions/{sid}/steps")
    def apply_step(sid: str, req: StepRequest):
        session = store.get(sid)
        if session is None:
            return _error(404, f"unknown session {sid!r}")
        missing = [n for n in req.inputs if n not in session.frames]
        if missing:
            return _error(404, f"unknown frame(s): {', '.join(missing)}")
        if not req.inputs:
            return _error(400, "a step needs at least one input frame")
        if req.output in session.frames:
            return _error(409, f"frame {req.output!r} already exists")

        future = executor.submit(_run_step, session, req)
        try:
            future.result(timeout=cfg.step_timeout)
        except FutureTimeoutError:
            token = uuid.uuid4().hex
            session.pending[token] = future
            return JSONResponse(
                status_code=202,
                content={"retry_token": token, "detail": "still computing; poll the token"},
            )
        except Exception:
            pass  # surfaced via _step_outcome below
        result, err = _step_outcome(future)
        return err if err is not None else result

    @app.get("/sessions/{sid}/steps/{token}")
    def poll_step(sid: str, token: str):
        session = store.get(sid)
        if session is None:
            return _error(404, f"unknown session {sid!r}")
        future = session.pending.get(token)
        if future is None:
            return _error(404, f"unknown retry token {token!r}")
        if not future.done():
            return JSONResponse(
                status_code=202,
                content={"retry_token": token, "detail": "still computing; poll the token"},
            )
        del session.pending[token]
        result, err = _step_outcome(future)
        return err if err is not None else result

    @app.get("/sessions/{sid}/history")
    def history(sid: str):
        session = store.get(sid)
        if session is None:
            return _error(404, f"unknown session {sid!r}")
        return {"steps": list(session.step_log)}

    @app.get("/sessions/{sid}/frames")
    def list_frames(sid: str):
        session = store.get(sid)
        if session is None:
            return _error(404, f"unknown session {sid!r}")
        return {
            "frames": [
                {"name": f.name, "row_count": f.row_count,
                 "columns": [{"name": c.name, "dtype": str(c.dtype)} for c in f.columns]}
                for f in session.frames.values()
            ]
        }

    return app
