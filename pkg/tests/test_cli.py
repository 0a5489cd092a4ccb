"""CLI flows: init, provision, advance, play, leaderboard, export, suggest."""

import json
import os

import pytest
from click.testing import CliRunner

from yieldlab.cli import main
from yieldlab.store import EXPORT_HEADER, load


@pytest.fixture()
def runner():
    return CliRunner()


def init_game(runner, tmp_path, seed=77):
    path = tmp_path / "game.json"
    r = runner.invoke(main, ["init", "--store", str(path), "--seed", str(seed)])
    assert r.exit_code == 0, r.output
    return path


class TestInit:
    def test_creates_snapshot(self, runner, tmp_path):
        path = init_game(runner, tmp_path)
        game = load(path)
        assert game.clock.current_week == 0
        assert game.config.seed == 77

    def test_refuses_overwrite_without_force(self, runner, tmp_path):
        path = init_game(runner, tmp_path)
        r = runner.invoke(main, ["init", "--store", str(path), "--seed", "1"])
        assert r.exit_code != 0
        r = runner.invoke(main, ["init", "--store", str(path), "--seed", "1", "--force"])
        assert r.exit_code == 0

    def test_config_file_with_flag_override(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 5, "weekly_allowance": 50}))
        path = tmp_path / "game.json"
        r = runner.invoke(main, ["init", "--store", str(path),
                                 "--config", str(cfg), "--seed", "9"])
        assert r.exit_code == 0, r.output
        game = load(path)
        assert game.config.seed == 9              # flag wins
        assert game.config.weekly_allowance == 50  # config file applies


class TestProvisionAdvance:
    def test_provision_and_advance(self, runner, tmp_path):
        path = init_game(runner, tmp_path)
        r = runner.invoke(main, ["provision", "ab1234", "--store", str(path)])
        assert r.exit_code == 0, r.output
        r = runner.invoke(main, ["advance", "--store", str(path), "--weeks", "2"])
        assert r.exit_code == 0, r.output
        game = load(path)
        assert game.clock.current_week == 2
        assert game.account("ab1234").balance == 300

    def test_provision_bad_token(self, runner, tmp_path):
        path = init_game(runner, tmp_path)
        r = runner.invoke(main, ["provision", "nope", "--store", str(path)])
        assert r.exit_code != 0

    def test_advance_clamps(self, runner, tmp_path):
        path = init_game(runner, tmp_path)
        r = runner.invoke(main, ["advance", "--store", str(path), "--weeks", "99"])
        assert r.exit_code == 0
        assert load(path).clock.current_week == 13
        assert "not advancing" in r.output


class TestPlay:
    def test_replicator_short_season(self, runner, tmp_path):
        path = init_game(runner, tmp_path)
        runner.invoke(main, ["provision", "rp5678", "--store", str(path)])
        out = tmp_path / "transcript.json"
        r = runner.invoke(main, [
            "play", "--strategy", "replicator", "--token", "rp5678",
            "--store", str(path), "--seed", "3", "--weeks", "2",
            "--transcript", str(out)])
        assert r.exit_code == 0, r.output
        doc = json.loads(out.read_text())
        assert doc["completed"] is True
        assert len(doc["weeks"]) == 2
        game = load(path)
        assert game.clock.current_week == 2
        assert len(game.account("rp5678").runs) > game.config.design_points

    def test_play_requires_provisioned_token(self, runner, tmp_path):
        path = init_game(runner, tmp_path)
        r = runner.invoke(main, ["play", "--strategy", "replicator",
                                 "--token", "zz9999", "--store", str(path)])
        assert r.exit_code != 0


class TestReports:
    def test_leaderboard_emits_csv_and_png(self, runner, tmp_path):
        path = init_game(runner, tmp_path)
        runner.invoke(main, ["provision", "ab1234", "--store", str(path)])
        runner.invoke(main, ["provision", "cd5678", "--store", str(path)])
        runner.invoke(main, ["play", "--strategy", "replicator", "--token",
                             "ab1234", "--store", str(path), "--weeks", "1"])
        outdir = tmp_path / "boards"
        r = runner.invoke(main, ["leaderboard", "--store", str(path),
                                 "--out", str(outdir)])
        assert r.exit_code == 0, r.output
        files = sorted(os.listdir(outdir))
        assert len([f for f in files if f.endswith(".csv")]) == 4
        assert len([f for f in files if f.endswith(".png")]) == 4

    def test_export_stdout_and_file(self, runner, tmp_path):
        path = init_game(runner, tmp_path)
        runner.invoke(main, ["provision", "ab1234", "--store", str(path)])
        r = runner.invoke(main, ["export", "--store", str(path), "--token", "ab1234"])
        assert r.exit_code == 0
        assert r.output.splitlines()[0] == EXPORT_HEADER
        out = tmp_path / "mine.csv"
        r = runner.invoke(main, ["export", "--store", str(path),
                                 "--token", "ab1234", "--out", str(out)])
        assert r.exit_code == 0
        assert out.read_text().splitlines()[0] == EXPORT_HEADER

    def test_suggest_from_export(self, runner, tmp_path):
        path = init_game(runner, tmp_path)
        runner.invoke(main, ["provision", "ab1234", "--store", str(path)])
        csv_path = tmp_path / "mine.csv"
        runner.invoke(main, ["export", "--store", str(path), "--token", "ab1234",
                             "--out", str(csv_path)])
        r = runner.invoke(main, ["suggest", "--csv", str(csv_path), "--seed", "1"])
        assert r.exit_code == 0, r.output
        doc = json.loads(r.output)
        assert set(doc["point"]) == {"N", "P", "K", "Na", "Ca", "Mg", "Nx"}
        assert doc["mode"] in ("ei", "mean")
        assert doc["predicted_yield"] > 0


class TestServe:
    def test_serve_builds_app_and_runs(self, runner, tmp_path, monkeypatch):
        path = init_game(runner, tmp_path)
        captured = {}

        def fake_run(app, **kw):
            captured["app"] = app
            captured.update(kw)

        import uvicorn

        monkeypatch.setattr(uvicorn, "run", fake_run)
        r = runner.invoke(main, ["serve", "--store", str(path),
                                 "--admin-token", "adm-tok", "--port", "9009"])
        assert r.exit_code == 0, r.output
        assert captured["port"] == 9009
        routes = {route.path for route in captured["app"].routes}
        assert {"/status", "/run", "/history", "/download", "/leaderboard",
                "/admin/advance", "/admin/provision"} <= routes
