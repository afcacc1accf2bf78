import argparse
import json
import sys
from typing import List, Optional

from pydantic import ValidationError

from src.core.pipeline import EXIT_PARSE, SolverPipeline
from src.core.schemas import RunConfig
from src.utils.logger import logger

COMMANDS = ('solve', 'verify', 'bruteforce', 'saddle', 'info')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eahkit",
        description="Exact saddle points and linear Phi-equilibria in rational arithmetic",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--game", help="game file: .json (normal form or matrix) or .xml (game tree)")
    parser.add_argument("--phi", help="deviation family: swap, constant or file:<path>")
    parser.add_argument("--equilibrium", help="equilibrium file to check (verify)")
    parser.add_argument("--out", help="result file")
    parser.add_argument("--transcript", action="store_true", help="dump ellipsoid transcripts next to --out")
    parser.add_argument("--ellipsoid-R-exp", dest="r_exp", type=int, help="radius exponent override")
    parser.add_argument("--ellipsoid-eps-exp", dest="eps_exp", type=int, help="volume threshold exponent override")
    parser.add_argument("--escalation-cap", dest="escalation_cap", type=int)
    parser.add_argument("--seed", type=int, help="generate a random instance instead of reading --game")
    parser.add_argument("--record", action="store_true", help="store the run in the ledger database")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(**vars(args))
    except ValidationError as e:
        for err in e.errors():
            print(f"error: {err['msg']}", file=sys.stderr)
        return EXIT_PARSE

    db, sessions = None, None
    if config.record:
        from src.database.session import create_tables, get_db

        try:
            create_tables()
            sessions = get_db()
            db = next(sessions)
        except Exception as e:
            logger.error(f"Ledger unavailable: {e}")

    try:
        ok, result = SolverPipeline().run(config, db)
    finally:
        if sessions is not None:
            sessions.close()

    if result['data'] is not None:
        print(json.dumps(result['data'], indent=2, default=str))
    if not ok:
        print(result['error'], file=sys.stderr)
    return result['exit_code']


if __name__ == "__main__":
    sys.exit(run())
