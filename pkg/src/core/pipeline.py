"""
Solver pipeline orchestrator.

Pipeline flow: Load → Validate → Solve → Certify → Output
"""

import json
import random
import time
from typing import Any, Callable, Dict, List, Optional, Tuple

from lxml import etree
from pydantic import ValidationError
from sqlalchemy.orm import Session

from ..services.exact_arith import format_rat
from ..services.games import NormalFormGame, PolyhedralGame, random_instance, random_zero_sum
from ..services.phi_core import build_deviations, solve_phi_equilibrium
from ..services.saddle import solve_matrix_game
from ..services.verifier import VerificationResult, brute_force_equilibrium, verify_equilibrium
from ..utils import file_handler
from ..utils.logger import logger
from .exceptions import EahError, GameFormatError
from .schemas import BruteForceFile, RunConfig, SaddleFile
from .validators import InputValidator

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_SOLVER = 2
EXIT_VIOLATION = 3


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, (GameFormatError, ValidationError, etree.XMLSyntaxError, FileNotFoundError)):
        return EXIT_PARSE
    if isinstance(error, json.JSONDecodeError):
        return EXIT_PARSE
    return EXIT_SOLVER


class PipelineStage:
    """Represents a stage in the solver pipeline."""

    LOAD = "load"
    VALIDATE = "validate"
    SOLVE = "solve"
    CERTIFY = "certify"
    OUTPUT = "output"

    ALL_STAGES = [LOAD, VALIDATE, SOLVE, CERTIFY, OUTPUT]


class StageFailed(Exception):
    """A stage reported failure without raising a solver error."""

    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


class SolverPipeline:
    """Runs one CLI command through the staged pipeline."""

    def __init__(self):
        self.validator = InputValidator()
        self.state: Dict[str, Any] = {}

    def run(self, config: RunConfig, db: Optional[Session] = None) -> Tuple[bool, Dict]:
        """
        Run a command through every stage.

        Args:
            config: validated run configuration
            db: ledger session, used only with ``config.record``

        Returns:
            Tuple of (success, result_dict); ``result['exit_code']`` is the process status
        """
        self.state = {'config': config, 'db': db, 'started': time.monotonic()}
        result = {
            'success': False,
            'command': config.command,
            'stages': {},
            'data': None,
            'error': None,
            'exit_code': EXIT_OK,
        }
        stages: List[Tuple[str, Callable[[], str]]] = [
            (PipelineStage.LOAD, self._stage_load),
            (PipelineStage.VALIDATE, self._stage_validate),
            (PipelineStage.SOLVE, self._stage_solve),
            (PipelineStage.CERTIFY, self._stage_certify),
            (PipelineStage.OUTPUT, self._stage_output),
        ]
        total = len(stages)
        for i, (name, stage) in enumerate(stages, start=1):
            logger.info(f"[STAGE {i}/{total}] {name.upper()}")
            try:
                message = stage()
            except StageFailed as e:
                return self._fail(result, name, str(e), e.exit_code)
            except (EahError, ValidationError, etree.XMLSyntaxError, FileNotFoundError,
                    json.JSONDecodeError) as e:
                return self._fail(result, name, f"{type(e).__name__}: {e}", exit_code_for(e))
            except Exception as e:
                logger.exception(f"Pipeline error in stage {name}")
                return self._fail(result, name, f"{type(e).__name__}: {e}", EXIT_SOLVER)
            result['stages'][name] = {'success': True, 'message': message}
            logger.info(f"[OK] {message}")

        result['success'] = True
        result['data'] = self.state.get('summary')
        logger.info("[OK] Pipeline completed successfully!")
        return True, result

    def _fail(self, result: Dict, stage: str, error: str, exit_code: int) -> Tuple[bool, Dict]:
        result['stages'][stage] = {'success': False, 'message': error}
        result['error'] = error
        result['exit_code'] = exit_code
        result['data'] = self.state.get('summary')
        logger.error(f"[ERROR] {stage} failed: {error}")
        return False, result

    # ------------------------------------------------------------------
    # stages
    # ------------------------------------------------------------------

    def _stage_load(self) -> str:
        config: RunConfig = self.state['config']
        rng = random.Random(config.seed) if config.seed is not None else None
        if config.command == 'saddle':
            if config.game is not None:
                self._check_file(config.game, ('.json',))
                self.state['matrix'] = file_handler.load_matrix(config.game)
            else:
                self.state['matrix'] = random_zero_sum(rng, rng.randint(2, 4), rng.randint(2, 4))
            m, n = self.state['matrix'].shape
            return f"Loaded {m}x{n} matrix game"

        if config.game is not None:
            ok, error = self.validator.validate_game_file(config.game)
            if not ok:
                raise StageFailed(error, EXIT_PARSE)
            game = file_handler.load_game(config.game)
        else:
            game = random_instance(rng)
        self.state['game'] = game

        if config.phi_family == 'file':
            self._check_file(config.deviation_path, ('.json',))
            self.state['file_devs'] = file_handler.load_deviations(config.deviation_path)
        if config.command == 'verify':
            self._check_file(config.equilibrium, ('.json',))
            _, support = file_handler.load_equilibrium(config.equilibrium)
            self.state['support'] = support
        return f"Loaded {type(game).__name__} with dimensions {game.dimensions}"

    def _stage_validate(self) -> str:
        config: RunConfig = self.state['config']
        if config.command == 'saddle' or config.phi is None:
            return "Nothing to validate beyond parsing"
        game: PolyhedralGame = self.state['game']
        devs = build_deviations(game, config.phi_family, self.state.get('file_devs'))
        ok, error = self.validator.validate_deviation_dims(game, devs)
        if not ok:
            raise StageFailed(error, EXIT_PARSE)
        if config.phi_family == 'file':
            for dev in devs:
                ok, error = self.validator.validate_self_map(game, dev)
                if not ok:
                    raise StageFailed(error, EXIT_PARSE)
        self.state['devs'] = devs
        return f"Deviation sets ready: {[dev.kind for dev in devs]}"

    def _stage_solve(self) -> str:
        config: RunConfig = self.state['config']
        options = self._saddle_options(config)
        if config.command == 'solve':
            eq = solve_phi_equilibrium(self.state['game'], self.state['devs'], **options)
            self.state['equilibrium'] = eq
            return f"Support size {eq.support_size} (N = {eq.n_bound})"
        if config.command == 'bruteforce':
            report = brute_force_equilibrium(self.state['game'], self.state['devs'])
            self.state['report'] = report
            return f"Brute force over {len(report.profiles)} profiles: feasible={report.feasible}"
        if config.command == 'saddle':
            value, x, solution = solve_matrix_game(self.state['matrix'], **options)
            self.state['saddle'] = (value, x, solution)
            return f"Game value {format_rat(value)}, mixture of {solution.support_size} responses"
        return "Nothing to solve"

    def _stage_certify(self) -> str:
        config: RunConfig = self.state['config']
        if config.command in ('solve', 'verify'):
            if config.command == 'solve':
                # re-read the serialized support so the file itself is what gets certified
                schema = file_handler.equilibrium_to_schema(self.state['equilibrium'], config.phi)
                support = file_handler.support_from_schema(schema.support)
                self.state['schema'] = schema
            else:
                support = self.state['support']
            verdict = verify_equilibrium(self.state['game'], self.state['devs'], support)
            self.state['verdict'] = verdict
            if not verdict.passed:
                self.state['summary'] = self._violation_summary(verdict)
                raise StageFailed(self._violation_message(verdict), EXIT_VIOLATION)
            return "Certificate verified exactly"
        if config.command == 'saddle':
            value, x, solution = self.state['saddle']
            A = self.state['matrix']
            guaranteed = min(A.vecmat(x))
            if guaranteed != value:
                raise StageFailed(f"mixed strategy guarantees {guaranteed}, value is {value}", EXIT_SOLVER)
            return "Mixed strategy attains the game value"
        return "No certificate required"

    def _stage_output(self) -> str:
        config: RunConfig = self.state['config']
        summary = self._summary()
        self.state['summary'] = summary
        if config.out:
            payload = self._payload()
            if payload is not None:
                file_handler.save_model(config.out, payload)
            if config.game is None and isinstance(self.state.get('game'), NormalFormGame):
                file_handler.save_model(file_handler.seed_game_path(config.out),
                                        file_handler.nfg_to_schema(self.state['game']))
        if config.transcript:
            self._write_transcript()
        if config.record:
            self._record(summary)
        return f"Results for {config.command} ready"

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------

    def _check_file(self, path: str, extensions) -> None:
        ok, error = self.validator.validate_input_file(path, extensions)
        if not ok:
            raise StageFailed(error, EXIT_PARSE)

    @staticmethod
    def _saddle_options(config: RunConfig) -> Dict[str, Any]:
        options: Dict[str, Any] = {}
        if config.r_exp is not None:
            options['r_exp'] = config.r_exp
        if config.eps_exp is not None:
            options['eps_exp'] = config.eps_exp
        if config.escalation_cap is not None:
            options['escalation_cap'] = config.escalation_cap
        return options

    def _payload(self):
        config: RunConfig = self.state['config']
        if config.command == 'solve':
            return self.state['schema']
        if config.command == 'bruteforce':
            report = self.state['report']
            eq = report.equilibrium
            return BruteForceFile(
                phi=config.phi,
                feasible=report.feasible,
                profiles=len(report.profiles),
                support=file_handler.support_to_schema(eq.support) if eq else [],
                certificate=file_handler.certificates_to_schema(eq.certificate) if eq else [],
            )
        if config.command == 'saddle':
            value, x, solution = self.state['saddle']
            m = len(x)
            return SaddleFile(
                value=value,
                x=list(x),
                support=[{'profile': [list(r.x_handle[:m])], 'weight': w} for r, w in solution.mixture],
                stats=solution.stats.as_dict(),
            )
        if config.command == 'info' and 'devs' in self.state:
            return file_handler.deviations_to_schema(self.state['devs'])
        return None

    def _summary(self) -> Dict[str, Any]:
        config: RunConfig = self.state['config']
        if config.command == 'solve':
            eq = self.state['equilibrium']
            return {'support_size': eq.support_size, 'N': eq.n_bound, **eq.stats}
        if config.command == 'verify':
            verdict: VerificationResult = self.state['verdict']
            return {'passed': True,
                    'max_benefit': [format_rat(c.max_benefit) for c in verdict.certificates]}
        if config.command == 'bruteforce':
            report = self.state['report']
            support = report.equilibrium.support_size if report.equilibrium else 0
            return {'feasible': report.feasible, 'profiles': len(report.profiles), 'support_size': support}
        if config.command == 'saddle':
            value, x, solution = self.state['saddle']
            return {'value': format_rat(value), 'x': [format_rat(v) for v in x],
                    'support_size': solution.support_size, **solution.stats.as_dict()}
        game: PolyhedralGame = self.state['game']
        info = game.describe()
        if 'devs' in self.state:
            info['deviations'] = [dev.describe() for dev in self.state['devs']]
        return info

    @staticmethod
    def _violation_summary(verdict: VerificationResult) -> Dict[str, Any]:
        v = verdict.violation
        return {'passed': False, 'player': v.player, 'benefit': format_rat(v.benefit), 'reason': v.reason}

    @staticmethod
    def _violation_message(verdict: VerificationResult) -> str:
        v = verdict.violation
        who = f"player {v.player}" if v.player is not None else "distribution"
        return f"Violation: {who}, {v.reason}, benefit {format_rat(v.benefit)}"

    def _write_transcript(self) -> None:
        config: RunConfig = self.state['config']
        if config.command == 'solve':
            transcripts = self.state['equilibrium'].transcripts
        elif config.command == 'saddle':
            transcripts = self.state['saddle'][2].transcripts
        else:
            return
        text = "".join(f"# run {k}\n{t.dump()}" for k, t in enumerate(transcripts))
        file_handler.save_text(file_handler.transcript_path(config.out), text)

    def _record(self, summary: Dict[str, Any]) -> None:
        db: Optional[Session] = self.state.get('db')
        if db is None:
            logger.warning("--record given without a ledger session; skipping")
            return
        try:
            from ..database import crud

            config: RunConfig = self.state['config']
            run = crud.create_run(db, {
                'command': config.command,
                'game_path': config.game or f"seed:{config.seed}",
                'game_digest': file_handler.file_digest(config.game) if config.game else None,
                'phi': config.phi,
                'status': 'ok',
                'support_size': summary.get('support_size'),
                'n_bound': summary.get('N'),
                'ger_calls': summary.get('ger_calls'),
                'iterations': summary.get('iterations'),
                'escalations': summary.get('escalations'),
                'elapsed_ms': int((time.monotonic() - self.state['started']) * 1000),
            })
            support = []
            if config.command == 'solve':
                support = self.state['equilibrium'].support
            elif config.command == 'bruteforce' and self.state['report'].equilibrium:
                support = self.state['report'].equilibrium.support
            for profile, weight in support:
                crud.add_support(db, run.id, json.dumps(profile.to_lists()), format_rat(weight))
            logger.info(f"Recorded run {run.id}")
        except Exception as e:
            logger.error(f"Recording failed: {e}")

