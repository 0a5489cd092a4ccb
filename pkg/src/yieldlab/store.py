"""Durable persistence and the player-facing export format.

Snapshots are single versioned JSON documents written atomically
(temp file + rename inside an exclusive commit section), holding the
seed, schedule, clock, RNG state, shared design, and every account.
Loading a snapshot reproduces balances, records, and the observation
stream bit-exactly; loading then saving is byte identity.

The export is a CSV with the fixed header
``week,N,P,K,Na,Ca,Mg,Nx,y1,...,y10``, newest run first, unused
replicate columns filled with the literal token ``NA``, and floats
rendered with full round-trip precision.

Initial-design rows are zero-cost gifts, so recomputing spend from an
export sums replicate costs over rows with week >= 1 only.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass

import numpy as np

from .engine import Game, GameConfig, PlayerAccount, RunRecord, replicate_cost
from .errors import SnapshotError
from .simulate import (
    MAX_REPS,
    NUTRIENTS,
    InputPoint,
    rng_from_jsonable,
    rng_state_to_jsonable,
)

SNAPSHOT_VERSION = 1

EXPORT_HEADER = "week,N,P,K,Na,Ca,Mg,Nx," + ",".join(f"y{i}" for i in range(1, MAX_REPS + 1))

_save_lock = threading.Lock()


# -- snapshots ---------------------------------------------------------------

def game_to_snapshot(game: Game) -> dict:
    with game.lock:
        return {
            "format_version": SNAPSHOT_VERSION,
            "config": game.config.to_dict(),
            "clock": {
                "current_week": game.clock.current_week,
                "total_weeks": game.clock.total_weeks,
                "weekly_allowance": game.clock.weekly_allowance,
            },
            "rng_state": rng_state_to_jsonable(game.rng),
            "initial_design": [
                {"point": point.to_dict(), "yields": list(yields)}
                for point, yields in game.initial_design
            ],
            "accounts": [
                {
                    "token": a.token,
                    "created_week": a.created_week,
                    "balance": a.balance,
                    "accrued_weeks": sorted(a.accrued_weeks),
                    "runs": [r.to_dict() for r in a.runs],
                }
                for a in (game.accounts[t] for t in sorted(game.accounts))
            ],
        }


def game_from_snapshot(snapshot: dict) -> Game:
    version = snapshot.get("format_version")
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported snapshot format_version: {version!r}")
    game = Game(GameConfig.from_dict(snapshot["config"]), _defer_init=True)
    clock = snapshot["clock"]
    game.clock.current_week = int(clock["current_week"])
    game.clock.total_weeks = int(clock["total_weeks"])
    game.clock.weekly_allowance = int(clock["weekly_allowance"])
    game.rng = rng_from_jsonable(snapshot["rng_state"])
    game.initial_design = [
        (InputPoint.from_dict(d["point"]), tuple(float(v) for v in d["yields"]))
        for d in snapshot["initial_design"]
    ]
    for a in snapshot["accounts"]:
        account = PlayerAccount(
            token=a["token"],
            created_week=int(a["created_week"]),
            balance=int(a["balance"]),
            accrued_weeks=set(int(w) for w in a["accrued_weeks"]),
        )
        for r in a["runs"]:
            account.runs.append(RunRecord(
                run_id=int(r["run_id"]),
                week=int(r["week"]),
                point=InputPoint.from_dict({n: r[n] for n in NUTRIENTS}),
                reps=int(r["reps"]),
                cost=int(r["cost"]),
                yields=tuple(float(v) for v in r["yields"]),
            ))
        game.accounts[account.token] = account
    return game


def snapshot_bytes(game: Game) -> bytes:
    doc = game_to_snapshot(game)
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()


def save(game: Game, path) -> None:
    """Atomic commit: write to a temp file in the same directory, fsync,
    rename. Concurrent saves serialize; the last committed snapshot wins."""
    path = os.fspath(path)
    data = snapshot_bytes(game)
    with _save_lock:
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(prefix=".snapshot-", dir=directory)
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(data)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def load(path) -> Game:
    """Load a snapshot. Missing or corrupt files raise SnapshotError naming
    the file; there is no silent reset."""
    path = os.fspath(path)
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise SnapshotError(f"cannot read snapshot {path!r}: {e}") from e
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise SnapshotError(f"snapshot {path!r} is corrupt: {e}") from e
    try:
        return game_from_snapshot(doc)
    except (KeyError, TypeError, ValueError) as e:
        raise SnapshotError(f"snapshot {path!r} is malformed: {e}") from e


# -- alternate layout: one file per player ------------------------------------
#
# The same snapshot content split across a directory: game.json holds
# everything but the accounts, and each account lives in players/<token>.json
# (close to a backend that keeps one database file per player). Both
# layouts round-trip through the same in-memory snapshot document.

def save_split(game: Game, directory) -> None:
    """Commit a game as a directory of per-player files plus game.json."""
    directory = os.fspath(directory)
    players_dir = os.path.join(directory, "players")
    os.makedirs(players_dir, exist_ok=True)
    doc = game_to_snapshot(game)
    accounts = doc.pop("accounts")
    with _save_lock:
        def commit(path: str, payload) -> None:
            data = (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode()
            fd, tmp = tempfile.mkstemp(prefix=".split-", dir=os.path.dirname(path))
            try:
                with os.fdopen(fd, "wb") as f:
                    f.write(data)
                    f.flush()
                    os.fsync(f.fileno())
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise

        doc["player_tokens"] = [a["token"] for a in accounts]
        commit(os.path.join(directory, "game.json"), doc)
        for account in accounts:
            commit(os.path.join(players_dir, f"{account['token']}.json"), account)


def load_split(directory) -> Game:
    """Load a per-player-file game directory; errors name the missing file."""
    directory = os.fspath(directory)
    game_path = os.path.join(directory, "game.json")
    try:
        with open(game_path, "rb") as f:
            doc = json.loads(f.read())
    except OSError as e:
        raise SnapshotError(f"cannot read snapshot {game_path!r}: {e}") from e
    except json.JSONDecodeError as e:
        raise SnapshotError(f"snapshot {game_path!r} is corrupt: {e}") from e
    tokens = doc.pop("player_tokens", [])
    doc["accounts"] = []
    for token in tokens:
        player_path = os.path.join(directory, "players", f"{token}.json")
        try:
            with open(player_path, "rb") as f:
                doc["accounts"].append(json.loads(f.read()))
        except OSError as e:
            raise SnapshotError(f"cannot read player file {player_path!r}: {e}") from e
        except json.JSONDecodeError as e:
            raise SnapshotError(f"player file {player_path!r} is corrupt: {e}") from e
    try:
        return game_from_snapshot(doc)
    except (KeyError, TypeError, ValueError) as e:
        raise SnapshotError(f"snapshot directory {directory!r} is malformed: {e}") from e


# -- player export -----------------------------------------------------------

def _fmt(v: float) -> str:
    # repr of a Python float round-trips exactly
    return repr(float(v))


def export_player_file(account: PlayerAccount) -> str:
    """CSV export of the account's history, newest run first, NA-padded."""
    lines = [EXPORT_HEADER]
    for r in reversed(account.runs):
        cells = [str(r.week)]
        cells += [_fmt(getattr(r.point, n)) for n in NUTRIENTS]
        ys = [_fmt(v) for v in r.yields]
        ys += ["NA"] * (MAX_REPS - len(ys))
        lines.append(",".join(cells + ys))
    return "\n".join(lines) + "\n"


@dataclass
class ExportRow:
    week: int
    point: InputPoint
    yields: tuple

    @property
    def reps(self) -> int:
        return len(self.yields)


def parse_export(text: str) -> list:
    """Parse an export back into rows (newest first, as written)."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != EXPORT_HEADER:
        raise ValueError(f"unexpected export header: {lines[0] if lines else ''!r}")
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != 8 + MAX_REPS:
            raise ValueError(f"malformed export row: {ln!r}")
        week = int(cells[0])
        point = InputPoint.from_dict(dict(zip(NUTRIENTS, map(float, cells[1:8]))))
        yields = tuple(float(c) for c in cells[8:] if c != "NA")
        rows.append(ExportRow(week=week, point=point, yields=yields))
    return rows


def export_to_arrays(text: str):
    """Toolkit view of an export: replicate-expanded arrays.

    Returns (columns, y, weeks): ``columns`` maps each input name to a
    1-D array with one entry per observation, ``y`` is the matching
    noisy yields, ``weeks`` the matching week indices.
    """
    rows = parse_export(text)
    cols = {n: [] for n in NUTRIENTS}
    y, weeks = [], []
    for r in rows:
        for v in r.yields:
            for n in NUTRIENTS:
                cols[n].append(getattr(r.point, n))
            y.append(v)
            weeks.append(r.week)
    return ({n: np.array(c) for n, c in cols.items()},
            np.array(y), np.array(weeks, dtype=int))


def recompute_spend(rows) -> int:
    """Total spend implied by an export: replicate costs of all play-week
    rows (week >= 1); week-0 design rows were free."""
    return sum(replicate_cost(r.reps) for r in rows if r.week >= 1)
