import hashlib
import os
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Type, TypeVar

from pydantic import BaseModel

from ..core.exceptions import GameFormatError
from ..core.schemas import (
    CertificateSchema, DeviationFile, DeviationSchema, EquilibriumFile, MatrixFile, NfgFile, PolytopeFile,
    RowSchema, SupportEntrySchema,
)
from ..services.deviations import DeviationSet, deviation_from_polytope
from ..services.efg_parser import GameTreeParser
from ..services.exact_arith import RatMat, RatVec
from ..services.games import (
    MixtureEquilibrium, NormalFormGame, PlayerCertificate, PolyhedralGame, PureProfile, efg_build_sequence_form,
)
from ..services.polytope import HPolytope
from .logger import logger

M = TypeVar('M', bound=BaseModel)


def read_bytes(file_path: str) -> bytes:
    with open(file_path, 'rb') as f:
        return f.read()


def file_digest(file_path: str) -> str:
    """sha256 of a file, recorded with each run."""
    return hashlib.sha256(read_bytes(file_path)).hexdigest()


def load_model(file_path: str, model: Type[M]) -> M:
    return model.model_validate_json(read_bytes(file_path))


def save_model(file_path: str, payload: BaseModel) -> str:
    directory = os.path.dirname(os.path.abspath(file_path))
    os.makedirs(directory, exist_ok=True)
    with open(file_path, 'w', encoding='utf-8') as f:
        f.write(payload.model_dump_json(indent=2))
        f.write('\n')
    logger.info(f"Wrote {file_path}")
    return file_path


def save_text(file_path: str, text: str) -> str:
    with open(file_path, 'w', encoding='utf-8') as f:
        f.write(text)
    logger.info(f"Wrote {file_path}")
    return file_path


# ----------------------------------------------------------------------
# games
# ----------------------------------------------------------------------

def load_game(file_path: str) -> PolyhedralGame:
    """``.json`` files hold normal-form games, ``.xml`` files game trees."""
    extension = os.path.splitext(file_path)[1].lower()
    if extension == '.xml':
        tree = GameTreeParser().parse(read_bytes(file_path))
        game = efg_build_sequence_form(tree)
    elif extension == '.json':
        game = nfg_from_schema(load_model(file_path, NfgFile))
    else:
        raise GameFormatError(f"unsupported game file extension: {extension or '(none)'}")
    logger.info(f"Loaded {type(game).__name__} from {file_path}: dimensions {game.dimensions}")
    return game


def nfg_from_schema(data: NfgFile) -> NormalFormGame:
    return NormalFormGame(data.actions, data.payoffs)


def nfg_to_schema(game: NormalFormGame) -> NfgFile:
    return NfgFile(players=game.n_players, actions=game.actions, payoffs=[list(t) for t in game.payoffs])


def load_matrix(file_path: str) -> RatMat:
    data = load_model(file_path, MatrixFile)
    return RatMat(data.A, ncols=len(data.A[0]))


# ----------------------------------------------------------------------
# polytopes and deviation sets
# ----------------------------------------------------------------------

def polytope_from_schema(data: PolytopeFile) -> HPolytope:
    return HPolytope.from_rows(
        data.dim,
        [(r.coeffs, r.bound) for r in data.ineq],
        [(r.coeffs, r.bound) for r in data.eq],
    )


def polytope_to_schema(P: HPolytope) -> PolytopeFile:
    return PolytopeFile(
        dim=P.dim,
        ineq=[RowSchema(coeffs=list(r.coeffs), bound=r.bound) for r in P.ineq],
        eq=[RowSchema(coeffs=list(r.coeffs), bound=r.bound) for r in P.eq],
    )


def deviations_from_schema(data: DeviationFile) -> List[DeviationSet]:
    return [deviation_from_polytope(d.player, d.matrix_dim, polytope_from_schema(d.polytope),
                                    aux_dims=d.aux_dims, includes_identity=d.includes_identity)
            for d in data.deviations]


def deviations_to_schema(devs: Sequence[DeviationSet]) -> DeviationFile:
    return DeviationFile(deviations=[
        DeviationSchema(player=d.player, matrix_dim=d.matrix_dim, aux_dims=d.aux_dims,
                        includes_identity=d.includes_identity, polytope=polytope_to_schema(d.polytope))
        for d in devs
    ])


def load_deviations(file_path: str) -> List[DeviationSet]:
    devs = deviations_from_schema(load_model(file_path, DeviationFile))
    logger.info(f"Loaded {len(devs)} deviation set(s) from {file_path}")
    return devs


# ----------------------------------------------------------------------
# equilibria
# ----------------------------------------------------------------------

def support_to_schema(support: Sequence[Tuple[PureProfile, Fraction]]) -> List[SupportEntrySchema]:
    return [SupportEntrySchema(profile=[list(s) for s in profile.strategies], weight=w) for profile, w in support]


def support_from_schema(entries: Sequence[SupportEntrySchema]) -> List[Tuple[PureProfile, Fraction]]:
    return [(PureProfile(tuple(RatVec(s) for s in e.profile)), e.weight) for e in entries]


def certificates_to_schema(certificates: Sequence[PlayerCertificate]) -> List[CertificateSchema]:
    return [CertificateSchema(player=c.player, max_benefit=c.max_benefit, by_vertices=c.by_vertices, by_lp=c.by_lp)
            for c in certificates]


def equilibrium_to_schema(eq: MixtureEquilibrium, phi: str) -> EquilibriumFile:
    # ordering by profile keeps the output independent of discovery order
    support = sorted(eq.support, key=lambda item: item[0].strategies)
    return EquilibriumFile(
        phi=phi,
        N=eq.n_bound,
        support=support_to_schema(support),
        certificate=certificates_to_schema(eq.certificate),
        stats={k: v for k, v in eq.stats.items() if isinstance(v, (int, str, bool))},
    )


def load_equilibrium(file_path: str) -> Tuple[EquilibriumFile, List[Tuple[PureProfile, Fraction]]]:
    data = load_model(file_path, EquilibriumFile)
    return data, support_from_schema(data.support)


def transcript_path(out: Optional[str]) -> str:
    base = out if out else os.path.join('.', 'eahkit')
    return f"{base}.transcript.txt"


def seed_game_path(out: str) -> str:
    return f"{out}.game.json"
