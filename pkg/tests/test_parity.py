"""Server side of the shared client/server validation vectors.

The same JSON file drives the browser client's tests; both sides must
accept and reject identically, naming the same offending field.
"""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from yieldlab.engine import Game, GameConfig
from yieldlab.server import create_app

VECTORS = json.loads(
    (Path(__file__).resolve().parent.parent / "shared" / "validation-vectors.json")
    .read_text())


@pytest.fixture()
def client():
    game = Game(GameConfig(seed=55, max_input=float(VECTORS["max_input"])))
    game.provision("ab1234")
    game.advance_week()
    game.account("ab1234").balance = 10**6  # vectors probe validation, not gating
    return TestClient(create_app(game, admin_token="admin-secret"))


@pytest.mark.parametrize("case", VECTORS["cases"], ids=lambda c: c["name"])
def test_server_matches_vector(client, case):
    body = dict(case["fields"])
    if case["reps"] is not None:
        body["reps"] = case["reps"]
    r = client.post("/run", params={"token": "ab1234"}, json=body)
    if case["valid"]:
        assert r.status_code == 200, r.text
        assert "run" in r.json()
    else:
        assert r.status_code == 422, r.text
        assert r.json()["error"] == "validation"
        assert r.json()["field"] == case["field"]
