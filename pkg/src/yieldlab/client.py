"""Clients for playing the game: in-process against a Game, or over HTTP.

Both expose the same small surface (status, history, submit, download,
plus the admin operations) so agents and the CLI are transport-agnostic.
HTTP errors are mapped back onto the package's exception types.
"""

from __future__ import annotations

import httpx

from . import store
from .engine import Game
from .errors import (
    FieldValidationError,
    RunRejectedError,
    RunsNotOpenError,
    UnknownTokenError,
    YieldLabError,
)
from .server import _public_record
from .simulate import NUTRIENTS


class LocalClient:
    """Plays directly against an in-process Game."""

    def __init__(self, game: Game, token: str):
        self.game = game
        self.token = token

    def status(self) -> dict:
        acct = self.game.account(self.token)
        with self.game.lock:
            return {
                "label": acct.label,
                "spent": acct.spent,
                "accrued": acct.accrued,
                "balance": acct.balance,
                "can_run": self.game.can_run(acct),
                "current_week": self.game.clock.current_week,
                "total_weeks": self.game.clock.total_weeks,
            }

    def history(self) -> list:
        acct = self.game.account(self.token)
        with self.game.lock:
            return [_public_record(r) for r in acct.runs]

    def submit(self, fields: dict, reps: int) -> dict:
        record = self.game.execute_run(self.token, fields, reps)
        return _public_record(record)

    def download(self) -> str:
        return store.export_player_file(self.game.account(self.token))


class LocalAdmin:
    def __init__(self, game: Game):
        self.game = game

    def advance(self) -> bool:
        return self.game.advance_week()

    def provision(self, token: str):
        return self.game.provision(token)


def _raise_for(body: dict, status: int):
    kind = body.get("error")
    message = body.get("message", "")
    if kind == "run_rejected":
        raise RunRejectedError(message)
    if kind == "runs_not_open":
        raise RunsNotOpenError(message)
    if kind == "validation":
        raise FieldValidationError(body.get("field", "?"), message)
    if kind == "auth":
        raise UnknownTokenError(message)
    raise YieldLabError(f"server error {status}: {message or body}")


class HttpClient:
    """Plays against a served game over HTTP (token in the query string)."""

    def __init__(self, base_url: str, token: str, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.token = token
        self.http = client or httpx.Client(timeout=30.0)

    def _check(self, r: httpx.Response):
        if r.status_code >= 400:
            try:
                body = r.json()
            except ValueError:
                body = {}
            _raise_for(body, r.status_code)
        return r

    def status(self) -> dict:
        r = self._check(self.http.get(f"{self.base_url}/status",
                                      params={"token": self.token}))
        return r.json()

    def history(self) -> list:
        runs = []
        page = 1
        while True:
            r = self._check(self.http.get(
                f"{self.base_url}/history",
                params={"token": self.token, "page": page}))
            body = r.json()
            runs.extend(body["runs"])
            if page >= body["pages"]:
                break
            page += 1
        runs.reverse()  # history pages are newest-first; return oldest-first
        return runs

    def submit(self, fields: dict, reps: int) -> dict:
        payload = {n: fields[n] for n in NUTRIENTS}
        payload["reps"] = reps
        r = self._check(self.http.post(f"{self.base_url}/run",
                                       params={"token": self.token}, json=payload))
        return r.json()["run"]

    def download(self) -> str:
        r = self._check(self.http.get(f"{self.base_url}/download",
                                      params={"token": self.token}))
        return r.text


class HttpAdmin:
    def __init__(self, base_url: str, admin_token: str,
                 client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.admin_token = admin_token
        self.http = client or httpx.Client(timeout=30.0)

    def advance(self) -> bool:
        r = self.http.post(f"{self.base_url}/admin/advance",
                           params={"token": self.admin_token})
        r.raise_for_status()
        return bool(r.json()["advanced"])

    def provision(self, token: str) -> dict:
        r = self.http.post(f"{self.base_url}/admin/provision",
                           params={"token": self.admin_token, "player_token": token})
        if r.status_code >= 400:
            _raise_for(r.json(), r.status_code)
        return r.json()
