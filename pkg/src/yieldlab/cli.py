"""Command-line interface: run games, provision players, advance weeks,
play scripted agents, and emit leaderboard reports (CSV plus rendered
figures).

A game lives in a snapshot file (``--store``). Commands that mutate a
local game commit a new snapshot atomically. ``provision``, ``advance``
and ``play`` can instead target a served game with ``--url`` (admin
operations need ``--admin-token``).
"""

from __future__ import annotations

import json
import sys

import click

from . import store
from .agents import STRATEGIES, StrategyConfig, make_strategy, play_season
from .client import HttpAdmin, HttpClient, LocalAdmin, LocalClient
from .engine import Game, GameConfig
from .errors import YieldLabError
from .figures import emit_leaderboard
from .gp import GPConfig, gp_fit, suggest_next
from .simulate import NUTRIENTS, NoiseSchedule


def _load_config(path, overrides: dict) -> GameConfig:
    base = GameConfig().to_dict()
    if path:
        with open(path) as f:
            base.update(json.load(f))
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    if isinstance(base.get("schedule"), NoiseSchedule):
        base["schedule"] = base["schedule"].to_dict()
    return GameConfig.from_dict(base)


@click.group()
def main():
    """Sequential-experiment yield game and solver toolkit."""


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path(),
              help="Snapshot file to create.")
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="JSON game config; flags override its fields.")
@click.option("--seed", type=int, help="Game seed.")
@click.option("--weeks", type=int, help="Total play weeks.")
@click.option("--allowance", type=int, help="Weekly unit allowance.")
@click.option("--force", is_flag=True, help="Overwrite an existing snapshot.")
def init(store_path, config_path, seed, weeks, allowance, force):
    """Create a fresh game snapshot."""
    import os

    if os.path.exists(store_path) and not force:
        raise click.ClickException(f"{store_path} exists; use --force to overwrite")
    config = _load_config(config_path, {
        "seed": seed, "total_weeks": weeks, "weekly_allowance": allowance})
    game = Game(config)
    store.save(game, store_path)
    click.echo(f"initialized game (seed {config.seed}) at {store_path}")


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--admin-token", required=True,
              help="Credential for /admin endpoints.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--static-dir", type=click.Path(),
              help="Serve a built browser client at /app.")
def serve(store_path, admin_token, host, port, static_dir):
    """Serve a game over HTTP, committing snapshots on every change."""
    import uvicorn

    from .server import create_app

    game = store.load(store_path)
    app = create_app(game, admin_token=admin_token, store_path=store_path,
                     static_dir=static_dir)
    click.echo(f"serving {store_path} on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


def _admin_for(store_path, url, admin_token):
    if url:
        if not admin_token:
            raise click.ClickException("--url needs --admin-token for admin operations")
        return None, HttpAdmin(url, admin_token)
    game = store.load(store_path)
    return game, LocalAdmin(game)


@main.command()
@click.argument("token")
@click.option("--store", "store_path", type=click.Path(exists=True))
@click.option("--url", help="Target a served game instead of a local snapshot.")
@click.option("--admin-token", help="Admin credential (with --url).")
def provision(token, store_path, url, admin_token):
    """Create a player account (token: 2-4 letters + 4 digits)."""
    if not url and not store_path:
        raise click.ClickException("need --store or --url")
    game, admin = _admin_for(store_path, url, admin_token)
    try:
        result = admin.provision(token)
    except YieldLabError as e:
        raise click.ClickException(str(e))
    if game is not None:
        store.save(game, store_path)
        click.echo(f"provisioned {token}: balance {result.balance}, "
                   f"{len(result.runs)} seeded runs")
    else:
        click.echo(f"provisioned {token}: balance {result['balance']}, "
                   f"{result['runs']} seeded runs")


@main.command()
@click.option("--store", "store_path", type=click.Path(exists=True))
@click.option("--url", help="Target a served game.")
@click.option("--admin-token", help="Admin credential (with --url).")
@click.option("--weeks", default=1, show_default=True, type=int,
              help="How many weeks to advance.")
def advance(store_path, url, admin_token, weeks):
    """Advance the game clock, accruing every account's allowance."""
    if not url and not store_path:
        raise click.ClickException("need --store or --url")
    game, admin = _admin_for(store_path, url, admin_token)
    moved = 0
    for _ in range(weeks):
        if not admin.advance():
            click.echo("clock is at the final week; not advancing")
            break
        moved += 1
    if game is not None:
        store.save(game, store_path)
        click.echo(f"advanced {moved} week(s); current week {game.clock.current_week}")
    else:
        click.echo(f"advanced {moved} week(s)")


@main.command()
@click.option("--strategy", required=True, type=click.Choice(STRATEGIES))
@click.option("--token", required=True)
@click.option("--store", "store_path", type=click.Path(exists=True))
@click.option("--url", help="Play against a served game.")
@click.option("--admin-token", help="Admin credential to drive the clock (with --url).")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--weeks", type=int, help="Play only this many weeks.")
@click.option("--search-lo", default=0.5, show_default=True, type=float)
@click.option("--search-hi", default=25.0, show_default=True, type=float)
@click.option("--transcript", "transcript_path", type=click.Path(),
              help="Write the season transcript JSON here.")
def play(strategy, token, store_path, url, admin_token, seed, weeks,
         search_lo, search_hi, transcript_path):
    """Play a scripted season; exits 0 only if the season completes."""
    if not url and not store_path:
        raise click.ClickException("need --store or --url")
    if url:
        client = HttpClient(url, token)
        admin = HttpAdmin(url, admin_token) if admin_token else None
        if admin is None:
            raise click.ClickException("--url needs --admin-token to drive the week clock")
        game = None
    else:
        game = store.load(store_path)
        if token not in game.accounts:
            raise click.ClickException(f"token {token!r} is not provisioned")
        client = LocalClient(game, token)
        admin = LocalAdmin(game)
    agent = make_strategy(StrategyConfig(
        name=strategy, seed=seed, search_lo=search_lo, search_hi=search_hi))
    transcript = play_season(agent, client, admin, weeks=weeks)
    if game is not None:
        store.save(game, store_path)
    if transcript_path:
        with open(transcript_path, "w") as f:
            f.write(transcript.to_json())
    status = transcript.final_status
    click.echo(f"{strategy} season for {token}: {transcript.unique_runs()} runs, "
               f"spent {status['spent']}, balance {status['balance']}")
    if not transcript.completed:
        sys.exit(1)


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--out", "outdir", required=True, type=click.Path(),
              help="Directory for the CSV series and rendered PNGs.")
def leaderboard(store_path, outdir):
    """Emit the four leaderboard views as CSV files plus figures."""
    game = store.load(store_path)
    written = emit_leaderboard(game, outdir)
    for view, paths in written.items():
        click.echo(f"{view}: {paths['csv']} {paths['png']}")


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--token", required=True)
@click.option("--out", "out_path", type=click.Path(),
              help="Write the CSV here (default: stdout).")
def export(store_path, token, out_path):
    """Write a player's history as the canonical CSV export."""
    game = store.load(store_path)
    try:
        text = store.export_player_file(game.account(token))
    except YieldLabError as e:
        raise click.ClickException(str(e))
    if out_path:
        with open(out_path, "w") as f:
            f.write(text)
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True),
              help="A downloaded player export.")
@click.option("--mode", default="ei", show_default=True,
              type=click.Choice(["ei", "mean"]))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--search-lo", default=0.5, show_default=True, type=float)
@click.option("--search-hi", default=25.0, show_default=True, type=float)
def suggest(csv_path, mode, seed, search_lo, search_hi):
    """Turn an export file into a suggested next run (JSON on stdout)."""
    import numpy as np

    with open(csv_path) as f:
        columns, y, _ = store.export_to_arrays(f.read())
    X = np.column_stack([columns[n] for n in NUTRIENTS])
    model = gp_fit(X, -y, GPConfig(n_starts=4, seed=seed))
    suggestion = suggest_next(
        model, (np.full(7, search_lo), np.full(7, search_hi)), mode=mode,
        rng=np.random.default_rng(seed))
    doc = suggestion.to_dict()
    doc["point"] = dict(zip(NUTRIENTS, doc["point"]))
    mu, _ = model.predict(suggestion.point.reshape(1, -1))
    doc["predicted_yield"] = -float(mu[0])
    click.echo(json.dumps(doc, indent=2))


if __name__ == "__main__":
    main()
