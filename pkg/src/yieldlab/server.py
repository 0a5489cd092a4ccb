"""HTTP portal for the game: token login, status, runs, history, download,
leaderboard, and admin controls.

The API layer adds no game semantics: every endpoint delegates to the
engine under the game lock, so server-visible state always equals the
state produced by applying the same calls to the engine directly.

Tokens ride in the ``?token=`` query parameter (header ``X-Token`` also
accepted). Player-facing payloads are built from explicit whitelists and
never contain true yields or noise-schedule parameters; leaderboard
output exposes only normalized ratios (de-noised views) or the player's
own observed values (raw views).
"""

from __future__ import annotations

import math
import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import store
from .engine import Game, validate_token
from .errors import (
    DuplicateTokenError,
    FieldValidationError,
    MalformedTokenError,
    RunRejectedError,
    RunsNotOpenError,
    UnknownTokenError,
)
from .leaderboard import VIEWS, leaderboard_payload
from .simulate import NUTRIENTS

PAGE_SIZE = 10


def _error(status: int, kind: str, message: str, field: str | None = None) -> JSONResponse:
    body = {"error": kind, "message": message}
    if field is not None:
        body["field"] = field
    return JSONResponse(status_code=status, content=body)


def _public_record(record) -> dict:
    d = {"run_id": record.run_id, "week": record.week}
    d.update({n: getattr(record.point, n) for n in NUTRIENTS})
    d["reps"] = record.reps
    d["cost"] = record.cost
    d["yields"] = list(record.yields)
    return d


def create_app(game: Game, admin_token: str, store_path=None,
               static_dir=None) -> FastAPI:
    """Wire the endpoints around one game instance.

    With ``store_path`` set, every mutating operation commits a snapshot.
    ``static_dir`` optionally serves a built browser client at /app.
    """
    app = FastAPI(title="yieldlab", docs_url=None, redoc_url=None)

    def token_of(request: Request) -> str:
        return request.query_params.get("token") or request.headers.get("X-Token") or ""

    def player(request: Request):
        token = token_of(request)
        validate_token(token)
        return game.account(token)

    def persist() -> None:
        if store_path is not None:
            store.save(game, store_path)

    @app.exception_handler(MalformedTokenError)
    async def _malformed(request, exc):
        return _error(422, "validation", str(exc), field="token")

    @app.exception_handler(UnknownTokenError)
    async def _unknown(request, exc):
        return _error(401, "auth", str(exc))

    @app.exception_handler(FieldValidationError)
    async def _invalid(request, exc):
        return _error(422, "validation", str(exc), field=exc.field)

    @app.exception_handler(RunRejectedError)
    async def _rejected(request, exc):
        return _error(409, "run_rejected", str(exc))

    @app.exception_handler(RunsNotOpenError)
    async def _not_open(request, exc):
        return _error(409, "runs_not_open", str(exc))

    @app.exception_handler(DuplicateTokenError)
    async def _duplicate(request, exc):
        return _error(409, "duplicate_token", str(exc))

    @app.get("/status")
    async def status(request: Request):
        acct = player(request)
        with game.lock:
            return {
                "label": acct.label,
                "spent": acct.spent,
                "accrued": acct.accrued,
                "balance": acct.balance,
                "can_run": game.can_run(acct),
                "current_week": game.clock.current_week,
                "total_weeks": game.clock.total_weeks,
            }

    @app.post("/run")
    async def run(request: Request):
        acct = player(request)
        try:
            body = await request.json()
        except Exception:
            raise FieldValidationError("body", "request body must be a JSON object")
        if not isinstance(body, dict):
            raise FieldValidationError("body", "request body must be a JSON object")
        fields = {k: v for k, v in body.items() if k in NUTRIENTS}
        record = game.execute_run(acct.token, fields, body.get("reps"))
        persist()
        return {"run": _public_record(record)}

    @app.get("/history")
    async def history(request: Request, page: int = 1):
        acct = player(request)
        with game.lock:
            newest_first = [_public_record(r) for r in reversed(acct.runs)]
        total = len(newest_first)
        pages = max(1, math.ceil(total / PAGE_SIZE))
        page = min(max(1, page), pages)
        start = (page - 1) * PAGE_SIZE
        return {
            "page": page,
            "pages": pages,
            "page_size": PAGE_SIZE,
            "total": total,
            "runs": newest_first[start:start + PAGE_SIZE],
        }

    @app.get("/download")
    async def download(request: Request):
        acct = player(request)
        with game.lock:
            text = store.export_player_file(acct)
        return PlainTextResponse(text, media_type="text/csv")

    @app.get("/leaderboard")
    async def leaderboard(view: str = "by_week_denoised"):
        if view not in VIEWS:
            raise FieldValidationError("view", f"view must be one of {', '.join(VIEWS)}")
        return leaderboard_payload(game, view)

    def require_admin(request: Request) -> None:
        if token_of(request) != admin_token:
            raise UnknownTokenError("admin credential required")

    @app.post("/admin/advance")
    async def admin_advance(request: Request):
        require_admin(request)
        advanced = game.advance_week()
        persist()
        body = {"advanced": advanced, "current_week": game.clock.current_week}
        if not advanced:
            body["warning"] = f"clock is clamped at week {game.clock.total_weeks}"
        return body

    @app.post("/admin/provision")
    async def admin_provision(request: Request, player_token: str = ""):
        require_admin(request)
        if not player_token:
            raise FieldValidationError("player_token", "player_token is missing")
        acct = game.provision(player_token)
        persist()
        return {
            "token": acct.token,
            "balance": acct.balance,
            "runs": len(acct.runs),
            "created_week": acct.created_week,
        }

    @app.get("/")
    async def root():
        return {"service": "yieldlab", "endpoints": [
            "/status", "/run", "/history", "/download", "/leaderboard",
            "/admin/advance", "/admin/provision",
        ]}

    if static_dir and os.path.isdir(static_dir):
        app.mount("/app", StaticFiles(directory=static_dir, html=True), name="app")

    return app
