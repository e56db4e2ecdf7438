"""HTTP face of the control server.

Read endpoints are open; issuing commands and logging out require a bearer
token from /api/login.  The event stream is server-sent events, shared by
any number of consoles.  These paths are the platform's external interface
and are consumed by the bundled dashboard.
"""

from __future__ import annotations

import json
import queue
from typing import Iterator

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.responses import PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from .core import AuthError, CommandError, ControlServer, LockedOutError

KEEPALIVE_S = 15.0


def sse_stream(server: ControlServer,
               keepalive_s: float = KEEPALIVE_S) -> Iterator[str]:
    """Server-sent-event chunks for one subscriber, until closed."""
    q = server.bus.subscribe()
    try:
        yield ": connected\n\n"
        while True:
            try:
                ev = q.get(timeout=keepalive_s)
            except queue.Empty:
                yield ": keepalive\n\n"
                continue
            yield f"event: {ev['type']}\ndata: {json.dumps(ev)}\n\n"
    finally:
        server.bus.unsubscribe(q)


class LoginBody(BaseModel):
    username: str
    password: str


class CommandBody(BaseModel):
    device: str
    action: str
    duration_s: float | None = None
    target: str | None = None


def create_app(server: ControlServer, runner=None,
               static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="agrolink control server", docs_url="/api/docs",
                  openapi_url="/api/openapi.json")

    def require_user(authorization: str | None = Header(default=None)) -> str:
        token = None
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[7:].strip()
        try:
            return server.authenticate(token)
        except AuthError as exc:
            raise HTTPException(status_code=401, detail=str(exc))

    @app.post("/api/login")
    def login(body: LoginBody):
        try:
            token = server.login(body.username, body.password)
        except LockedOutError as exc:
            raise HTTPException(status_code=423, detail=str(exc))
        except AuthError as exc:
            raise HTTPException(status_code=401, detail=str(exc))
        return {"token": token, "user": body.username}

    @app.post("/api/logout", status_code=204)
    def logout(authorization: str | None = Header(default=None),
               user: str = Depends(require_user)):
        server.logout(authorization[7:].strip())
        return None

    @app.get("/api/status")
    def status():
        return {"sim_time": server.sim_time, "rows": server.status_rows()}

    @app.get("/api/control")
    def control():
        return {"sim_time": server.sim_time, "rows": server.control_rows()}

    @app.post("/api/command", status_code=201)
    def command(body: CommandBody, user: str = Depends(require_user)):
        try:
            env = server.issue_command(user, body.device, body.action,
                                       body.duration_s, body.target)
        except CommandError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return env.to_dict()

    @app.get("/api/commands")
    def commands():
        return {"commands": server.command_list()}

    @app.get("/api/history/{kind}")
    def history(kind: str, limit: int = 500):
        try:
            entries = server.history_for(kind, limit=max(1, min(limit, 10_000)))
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no sensor {kind!r}")
        return {"kind": kind, "entries": entries}

    @app.get("/api/history/{kind}/csv")
    def history_csv(kind: str):
        try:
            text = server.history_csv(kind)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no sensor {kind!r}")
        return PlainTextResponse(text, media_type="text/csv", headers={
            "Content-Disposition": f'attachment; filename="{kind}.csv"'})

    @app.get("/api/health")
    def health():
        info = {"ok": True, "sim_time": server.sim_time}
        if runner is not None:
            info["frames_ok"] = runner.gateway.frames_ok
            info["frames_rejected"] = runner.gateway.frames_rejected
        return info

    @app.get("/api/events")
    def events():
        return StreamingResponse(sse_stream(server),
                                 media_type="text/event-stream",
                                 headers={"Cache-Control": "no-cache"})

    if static_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="dashboard")

    return app
