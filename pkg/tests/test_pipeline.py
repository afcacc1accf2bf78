"""Tests for the solver pipeline, the CLI entry point and the run ledger."""

import json
import os
from unittest.mock import patch

import pytest


def _path(data_dir, name):
    return os.path.join(data_dir, name)


def _bad_equilibrium(path):
    payload = {
        "format": "equilibrium",
        "phi": "swap",
        "N": 8,
        "support": [{"profile": [["1", "0"], ["1", "0"]], "weight": "1"}],
    }
    with open(path, 'w') as f:
        json.dump(payload, f)
    return str(path)


class TestCli:
    """Test commands end to end through main.run."""

    def test_solve_then_verify(self, data_dir, tmp_path):
        """Test that a solved file verifies with exit code 0."""
        from main import run

        out = str(tmp_path / "pd_ce.json")
        assert run(["solve", "--game", _path(data_dir, "prisoners_dilemma.json"), "--phi", "swap", "--out", out]) == 0
        with open(out) as f:
            data = json.load(f)
        assert data["format"] == "equilibrium"
        assert data["support"] == [{"profile": [["0", "1"], ["0", "1"]], "weight": "1"}]
        assert all(c["max_benefit"] == "0" for c in data["certificate"])

        code = run(["verify", "--game", _path(data_dir, "prisoners_dilemma.json"), "--phi", "swap",
                    "--equilibrium", out])
        assert code == 0

    def test_output_is_deterministic(self, data_dir, tmp_path):
        """Test that two runs write identical files."""
        from main import run

        first, second = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        for out in (first, second):
            assert run(["solve", "--game", _path(data_dir, "matching_pennies.json"), "--phi", "swap",
                        "--out", out]) == 0
        with open(first) as a, open(second) as b:
            assert a.read() == b.read()

    def test_verify_violation(self, data_dir, tmp_path):
        """Test that a non-equilibrium file gives exit code 3."""
        from main import run

        bad = _bad_equilibrium(tmp_path / "bad.json")
        code = run(["verify", "--game", _path(data_dir, "prisoners_dilemma.json"), "--phi", "swap",
                    "--equilibrium", bad])
        assert code == 3

    def test_missing_game(self, tmp_path):
        """Test that a missing input file gives exit code 1."""
        from main import run

        assert run(["solve", "--game", str(tmp_path / "nope.json"), "--phi", "swap"]) == 1

    def test_invalid_xml(self, tmp_path):
        """Test that broken XML gives exit code 1."""
        from main import run

        path = tmp_path / "broken.xml"
        path.write_text("<efg players='2'")
        assert run(["info", "--game", str(path)]) == 1

    def test_bad_arguments(self, data_dir):
        """Test that an unknown deviation family gives exit code 1."""
        from main import run

        assert run(["solve", "--game", _path(data_dir, "prisoners_dilemma.json"), "--phi", "internal"]) == 1

    def test_bruteforce(self, data_dir, tmp_path, capsys):
        """Test the brute-force command on matching pennies."""
        from main import run

        out = str(tmp_path / "mp_bf.json")
        assert run(["bruteforce", "--game", _path(data_dir, "matching_pennies.json"), "--phi", "swap",
                    "--out", out]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary == {"feasible": True, "profiles": 4, "support_size": 4}
        with open(out) as f:
            assert json.load(f)["format"] == "bruteforce"

    def test_saddle_with_transcript(self, data_dir, tmp_path):
        """Test the saddle command with a transcript next to the result."""
        from main import run

        out = str(tmp_path / "rps.json")
        assert run(["saddle", "--game", _path(data_dir, "rps.json"), "--out", out, "--transcript"]) == 0
        with open(out) as f:
            data = json.load(f)
        assert data["value"] == "0"
        assert data["x"] == ["1/3", "1/3", "1/3"]
        with open(out + ".transcript.txt") as f:
            assert f.readline().strip() == "# run 0"

    def test_info(self, data_dir, capsys):
        """Test the info command on Kuhn poker."""
        from main import run

        assert run(["info", "--game", _path(data_dir, "kuhn.xml"), "--phi", "swap"]) == 0
        info = json.loads(capsys.readouterr().out)
        assert info["dimensions"] == [13, 13]
        assert info["N"] == 338
        assert len(info["deviations"]) == 2

    def test_seeded_instance(self):
        """Test that --seed replaces --game."""
        from main import run

        assert run(["info", "--seed", "3", "--phi", "constant"]) == 0

    def test_self_map_failure(self, data_dir, tmp_path):
        """Test that a deviation leaving the strategy set gives exit code 1."""
        from main import run

        devs = {
            "format": "deviations",
            "deviations": [{
                "player": 0,
                "matrix_dim": 2,
                "polytope": {"dim": 4, "eq": [
                    {"coeffs": ["1", "0", "0", "0"], "bound": "2"},
                    {"coeffs": ["0", "1", "0", "0"], "bound": "0"},
                    {"coeffs": ["0", "0", "1", "0"], "bound": "0"},
                    {"coeffs": ["0", "0", "0", "1"], "bound": "0"},
                ]},
            }],
        }
        path = tmp_path / "devs.json"
        path.write_text(json.dumps(devs))
        code = run(["solve", "--game", _path(data_dir, "prisoners_dilemma.json"), "--phi", f"file:{path}"])
        assert code == 1

    def test_exported_deviations_solve(self, data_dir, tmp_path):
        """Test that deviation sets written by info can be solved against as a file set."""
        from main import run

        devs = str(tmp_path / "pd_constant.json")
        game = _path(data_dir, "prisoners_dilemma.json")
        assert run(["info", "--game", game, "--phi", "constant", "--out", devs]) == 0
        with open(devs) as f:
            data = json.load(f)
        assert data["format"] == "deviations"
        assert [d["player"] for d in data["deviations"]] == [0, 1]
        assert run(["solve", "--game", game, "--phi", f"file:{devs}"]) == 0

    def test_seeded_game_saved(self, tmp_path, capsys):
        """Test that a seeded run writes the generated game next to its output."""
        from main import run

        out = str(tmp_path / "seeded.json")
        assert run(["info", "--seed", "3", "--phi", "swap", "--out", out]) == 0
        first = json.loads(capsys.readouterr().out)
        saved = out + ".game.json"
        assert os.path.exists(saved)
        assert run(["info", "--game", saved, "--phi", "swap"]) == 0
        second = json.loads(capsys.readouterr().out)
        assert second["dimensions"] == first["dimensions"]
        assert second["N"] == first["N"]

    def test_record_flag(self, data_dir, test_db):
        """Test that --record stores the run through a ledger session."""
        from main import run
        from src.database import crud

        with patch('src.database.session.create_tables') as mock_tables, \
                patch('src.database.session.SessionLocal', return_value=test_db):
            code = run(["saddle", "--game", _path(data_dir, "rps.json"), "--record"])
        assert code == 0
        mock_tables.assert_called_once()
        runs = crud.get_runs(test_db)
        assert len(runs) == 1
        assert runs[0].command == 'saddle'


class TestSolverPipeline:
    """Test stage handling of the pipeline."""

    def _config(self, data_dir, **kwargs):
        from src.core.schemas import RunConfig

        return RunConfig(command='solve', game=_path(data_dir, "prisoners_dilemma.json"), phi='swap', **kwargs)

    def test_stages_reported(self, data_dir):
        """Test that every stage reports success."""
        from src.core.pipeline import PipelineStage, SolverPipeline

        ok, result = SolverPipeline().run(self._config(data_dir))
        assert ok
        assert list(result['stages']) == PipelineStage.ALL_STAGES
        assert result['data']['support_size'] == 1
        assert result['exit_code'] == 0

    @patch('src.core.pipeline.solve_phi_equilibrium')
    def test_solver_error(self, mock_solve, data_dir):
        """Test that a solver error gives exit code 2."""
        from src.core.exceptions import VerificationFailedAfterMaxEscalations
        from src.core.pipeline import SolverPipeline

        mock_solve.side_effect = VerificationFailedAfterMaxEscalations("no verified mixture")
        ok, result = SolverPipeline().run(self._config(data_dir))
        assert not ok
        assert result['exit_code'] == 2
        assert result['stages']['solve']['success'] is False
        assert 'no verified mixture' in result['error']

    @patch('src.core.pipeline.solve_phi_equilibrium')
    def test_unexpected_error(self, mock_solve, data_dir):
        """Test that an unexpected exception is contained."""
        from src.core.pipeline import SolverPipeline

        mock_solve.side_effect = RuntimeError("boom")
        ok, result = SolverPipeline().run(self._config(data_dir))
        assert not ok
        assert result['exit_code'] == 2
        assert 'RuntimeError' in result['error']

    def test_exit_codes(self):
        """Test the mapping from errors to exit codes."""
        from src.core.exceptions import GameFormatError, NoFixedPoint
        from src.core.pipeline import EXIT_PARSE, EXIT_SOLVER, exit_code_for

        assert exit_code_for(GameFormatError("bad")) == EXIT_PARSE
        assert exit_code_for(FileNotFoundError()) == EXIT_PARSE
        assert exit_code_for(NoFixedPoint("none")) == EXIT_SOLVER


class TestLedger:
    """Test recording runs in the ledger database."""

    def test_record_solve(self, data_dir, test_db):
        """Test that a recorded solve stores the run and its support."""
        from src.core.pipeline import SolverPipeline
        from src.core.schemas import RunConfig
        from src.database import crud

        config = RunConfig(command='solve', game=_path(data_dir, "prisoners_dilemma.json"), phi='swap', record=True)
        ok, _ = SolverPipeline().run(config, test_db)
        assert ok
        runs = crud.get_runs(test_db)
        assert len(runs) == 1
        assert runs[0].command == 'solve'
        assert runs[0].support_size == 1
        assert runs[0].n_bound == 8
        assert len(runs[0].game_digest) == 64
        support = crud.get_support(test_db, runs[0].id)
        assert json.loads(support[0].profile_json) == [["0", "1"], ["0", "1"]]
        assert support[0].weight == "1"

    def test_record_failure_not_fatal(self, data_dir, test_db):
        """Test that a ledger error does not fail the run."""
        from src.core.pipeline import SolverPipeline
        from src.core.schemas import RunConfig

        config = RunConfig(command='saddle', game=_path(data_dir, "rps.json"), record=True)
        with patch('src.database.crud.create_run', side_effect=Exception("Database error")):
            ok, result = SolverPipeline().run(config, test_db)
        assert ok
        assert result['exit_code'] == 0

    def test_crud_filters(self, test_db):
        """Test listing runs by command."""
        from src.database import crud

        for command in ('solve', 'saddle', 'solve'):
            crud.create_run(test_db, {'command': command, 'status': 'ok'})
        assert len(crud.get_runs(test_db)) == 3
        assert len(crud.get_runs(test_db, command='solve')) == 2
        assert len(crud.get_runs(test_db, skip=1, limit=1)) == 1
        assert crud.get_run(test_db, 99) is None
