"""Input validators for the pipeline. Every check returns ``(is_valid, error_message)``."""

import os
from typing import Sequence, Tuple

from ..services.deviations import DeviationSet
from ..services.games import PolyhedralGame
from ..services.polytope import separate
from ..utils.logger import logger
from .config import settings
from .exceptions import DimensionTooLarge


class InputValidator:
    """Validates input files and deviation sets before solving."""

    # Maximum input file size (20MB)
    MAX_FILE_SIZE = 20971520
    GAME_EXTENSIONS = ('.json', '.xml')

    @staticmethod
    def validate_input_file(file_path: str, extensions: Sequence[str] = ('.json',)) -> Tuple[bool, str]:
        if not os.path.exists(file_path):
            error = f"File not found: {file_path}"
            logger.error(error)
            return False, error

        file_size = os.path.getsize(file_path)
        if file_size > InputValidator.MAX_FILE_SIZE:
            error = f"File too large: {file_size} bytes (max {InputValidator.MAX_FILE_SIZE})"
            logger.error(error)
            return False, error

        if file_size == 0:
            error = "File is empty"
            logger.error(error)
            return False, error

        if not file_path.lower().endswith(tuple(extensions)):
            error = f"Unsupported extension for {file_path} (expected {', '.join(extensions)})"
            logger.error(error)
            return False, error
        return True, ""

    @staticmethod
    def validate_game_file(file_path: str) -> Tuple[bool, str]:
        return InputValidator.validate_input_file(file_path, InputValidator.GAME_EXTENSIONS)

    @staticmethod
    def validate_deviation_dims(game: PolyhedralGame, devs: Sequence[DeviationSet]) -> Tuple[bool, str]:
        if len(devs) != game.n_players:
            return False, f"expected {game.n_players} deviation sets, got {len(devs)}"
        for p, dev in enumerate(devs):
            if dev.player != p:
                return False, f"deviation set {p} belongs to player {dev.player}"
            if dev.matrix_dim != game.dimension(p):
                return False, (f"player {p}: deviation matrices are {dev.matrix_dim}x{dev.matrix_dim}, "
                               f"strategies have dimension {game.dimension(p)}")
        return True, ""

    @staticmethod
    def validate_self_map(game: PolyhedralGame, dev: DeviationSet) -> Tuple[bool, str]:
        """
        Every deviation vertex must map every pure strategy back into the
        strategy polytope. Skipped (and reported valid) when either vertex
        list is too large to enumerate.
        """
        p = dev.player
        A_p = game.strategy_polytope(p)
        if game.n_pure(p) > settings.self_map_check_max_vertices:
            logger.warning(f"self-map check skipped for player {p}: {game.n_pure(p)} pure strategies")
            return True, ""
        try:
            matrices = dev.vertices()
        except DimensionTooLarge as e:
            logger.warning(f"self-map check skipped for player {p}: {e.message}")
            return True, ""
        if len(matrices) > settings.self_map_check_max_vertices:
            logger.warning(f"self-map check skipped for player {p}: {len(matrices)} deviation vertices")
            return True, ""
        strategies = game.pure_strategies(p)
        for k, B in enumerate(matrices):
            for s in strategies:
                if not separate(A_p, B @ s).inside:
                    error = f"player {p}: deviation vertex {k} maps a pure strategy outside the strategy set"
                    logger.error(error)
                    return False, error
        logger.info(f"Self-map check passed for player {p}: {len(matrices)} x {len(strategies)} pairs")
        return True, ""
