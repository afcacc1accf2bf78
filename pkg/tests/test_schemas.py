"""Tests for the file-format models and input validators."""

from fractions import Fraction

import pytest
from pydantic import ValidationError


class TestRationalFields:
    """Test rational parsing in the file models."""

    def test_literals(self):
        """Test fractions, decimals, unicode minus and plain integers."""
        from src.core.schemas import RowSchema

        row = RowSchema(coeffs=["3/4", "0.25", "−7/4", 2], bound="-1")
        assert row.coeffs == [Fraction(3, 4), Fraction(1, 4), Fraction(-7, 4), 2]
        assert row.bound == -1

    def test_float_rejected(self):
        """Test that JSON floats are refused."""
        from src.core.schemas import RowSchema

        with pytest.raises(ValidationError):
            RowSchema.model_validate_json('{"coeffs": [0.5], "bound": "1"}')

    def test_serialized_as_strings(self):
        """Test that rationals are written as p/q strings."""
        from src.core.schemas import RowSchema

        row = RowSchema(coeffs=[Fraction(1, 3), 4], bound=0)
        assert row.model_dump(mode='json') == {"coeffs": ["1/3", "4"], "bound": "0"}

    def test_unknown_keys_rejected(self):
        """Test that extra keys are refused."""
        from src.core.schemas import RowSchema

        with pytest.raises(ValidationError):
            RowSchema(coeffs=["1"], bound="1", comment="x")


class TestFileModels:
    """Test shape checks of the file models."""

    def test_polytope_row_width(self):
        """Test that a row of the wrong width is refused."""
        from src.core.schemas import PolytopeFile

        with pytest.raises(ValidationError):
            PolytopeFile(dim=2, ineq=[{"coeffs": ["1"], "bound": "0"}])

    def test_deviation_dim(self):
        """Test that the polytope must have d^2 + aux coordinates."""
        from src.core.schemas import DeviationSchema

        with pytest.raises(ValidationError):
            DeviationSchema(player=0, matrix_dim=2, polytope={"dim": 3})
        assert DeviationSchema(player=0, matrix_dim=2, aux_dims=1, polytope={"dim": 5}).aux_dims == 1

    def test_duplicate_players(self):
        """Test that two sets for one player are refused."""
        from src.core.schemas import DeviationFile

        entry = {"player": 0, "matrix_dim": 1, "polytope": {"dim": 1}}
        with pytest.raises(ValidationError):
            DeviationFile(deviations=[entry, entry])

    def test_nfg_shape(self):
        """Test that payoff tensors must match the action counts."""
        from src.core.schemas import NfgFile

        with pytest.raises(ValidationError):
            NfgFile(players=2, actions=[2, 2], payoffs=[["1", "2", "3"], ["1", "2", "3", "4"]])

    def test_matrix_rectangular(self):
        """Test that ragged matrices are refused."""
        from src.core.schemas import MatrixFile

        with pytest.raises(ValidationError):
            MatrixFile(A=[["1", "2"], ["3"]])


class TestRunConfig:
    """Test CLI configuration checks."""

    def test_phi_required(self):
        """Test that solve needs --phi."""
        from src.core.schemas import RunConfig

        with pytest.raises(ValidationError):
            RunConfig(command='solve', game='g.json')

    def test_unknown_phi(self):
        """Test that unknown families are refused."""
        from src.core.schemas import RunConfig

        with pytest.raises(ValidationError):
            RunConfig(command='solve', game='g.json', phi='internal')

    def test_verify_needs_equilibrium(self):
        """Test that verify needs --equilibrium."""
        from src.core.schemas import RunConfig

        with pytest.raises(ValidationError):
            RunConfig(command='verify', game='g.json', phi='swap')

    def test_game_or_seed(self):
        """Test that an instance source is required."""
        from src.core.schemas import RunConfig

        with pytest.raises(ValidationError):
            RunConfig(command='info')
        assert RunConfig(command='info', seed=1).seed == 1

    def test_file_family(self):
        """Test the deviation path of a file family."""
        from src.core.schemas import RunConfig

        config = RunConfig(command='solve', game='g.xml', phi='file:devs.json')
        assert config.phi_family == 'file'
        assert config.deviation_path == 'devs.json'


class TestInputValidator:
    """Test input validators."""

    def test_missing_file(self):
        """Test validation of a nonexistent file."""
        from src.core.validators import InputValidator

        ok, error = InputValidator.validate_game_file("/nonexistent/game.json")
        assert not ok
        assert "not found" in error

    def test_empty_file(self, tmp_path):
        """Test validation of an empty file."""
        from src.core.validators import InputValidator

        path = tmp_path / "game.json"
        path.write_bytes(b"")
        ok, error = InputValidator.validate_game_file(str(path))
        assert not ok
        assert "empty" in error

    def test_wrong_extension(self, tmp_path):
        """Test validation of an unsupported extension."""
        from src.core.validators import InputValidator

        path = tmp_path / "game.nfg"
        path.write_text("x")
        ok, _ = InputValidator.validate_game_file(str(path))
        assert not ok

    def test_file_too_large(self, tmp_path):
        """Test validation of an oversized file."""
        from unittest.mock import patch

        from src.core.validators import InputValidator

        path = tmp_path / "game.json"
        path.write_text("{}")
        with patch('os.path.getsize', return_value=InputValidator.MAX_FILE_SIZE + 1):
            ok, error = InputValidator.validate_game_file(str(path))
        assert not ok
        assert "too large" in error

    def test_deviation_dims(self, pd_game):
        """Test that matrix sizes must match strategy dimensions."""
        from src.core.validators import InputValidator
        from src.services.deviations import make_swap_deviations

        ok, _ = InputValidator.validate_deviation_dims(pd_game, [make_swap_deviations(2, 0), make_swap_deviations(2, 1)])
        assert ok
        ok, error = InputValidator.validate_deviation_dims(pd_game, [make_swap_deviations(2, 0), make_swap_deviations(3, 1)])
        assert not ok
        assert "player 1" in error

    def test_self_map(self, pd_game):
        """Test that a matrix leaving the simplex fails the self-map check."""
        from src.core.validators import InputValidator
        from src.services.deviations import deviation_from_polytope
        from src.services.polytope import HPolytope

        doubling = deviation_from_polytope(0, 2, HPolytope.singleton([2, 0, 0, 0]))
        ok, error = InputValidator.validate_self_map(pd_game, doubling)
        assert not ok
        assert "player 0" in error

    def test_self_map_trigger(self, data_dir):
        """Test that the sample trigger set maps strategies into the treeplex."""
        import os

        from src.core.validators import InputValidator
        from src.utils.file_handler import load_deviations, load_game

        game = load_game(os.path.join(data_dir, "two_action.xml"))
        (dev,) = load_deviations(os.path.join(data_dir, "trigger_two_action.json"))
        ok, _ = InputValidator.validate_self_map(game, dev)
        assert ok
