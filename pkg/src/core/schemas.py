"""Pydantic models for the on-disk formats and for the CLI run configuration."""

from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, PlainSerializer, PlainValidator, model_validator

from ..services.exact_arith import format_rat, rat


def _to_rat(value: Any) -> Fraction:
    try:
        return rat(value)
    except TypeError as e:
        raise ValueError(str(e)) from e


Rational = Annotated[Fraction, PlainValidator(_to_rat), PlainSerializer(format_rat, return_type=str)]

ORIENTATION = "B[b][a] moves weight from source a to target b; entries row-major, index b*d + a"


class _Model(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra='forbid')


class RowSchema(_Model):
    coeffs: List[Rational]
    bound: Rational


class PolytopeFile(_Model):
    dim: int = Field(ge=1)
    ineq: List[RowSchema] = Field(default_factory=list)
    eq: List[RowSchema] = Field(default_factory=list)

    @model_validator(mode='after')
    def check_widths(self):
        for kind, rows in (('ineq', self.ineq), ('eq', self.eq)):
            for i, row in enumerate(rows):
                if len(row.coeffs) != self.dim:
                    raise ValueError(f"{kind} row {i} has {len(row.coeffs)} coefficients, expected {self.dim}")
        return self


class DeviationSchema(_Model):
    player: int = Field(ge=0)
    matrix_dim: int = Field(ge=1)
    aux_dims: int = Field(default=0, ge=0)
    includes_identity: bool = False
    orientation: str = ORIENTATION
    polytope: PolytopeFile

    @model_validator(mode='after')
    def check_dim(self):
        expected = self.matrix_dim ** 2 + self.aux_dims
        if self.polytope.dim != expected:
            raise ValueError(f"polytope dim {self.polytope.dim} differs from matrix_dim^2 + aux_dims = {expected}")
        return self


class DeviationFile(_Model):
    format: Literal['deviations'] = 'deviations'
    deviations: List[DeviationSchema] = Field(min_length=1)

    @model_validator(mode='after')
    def unique_players(self):
        players = [d.player for d in self.deviations]
        if len(players) != len(set(players)):
            raise ValueError("at most one deviation set per player")
        return self


class NfgFile(_Model):
    format: Literal['nfg'] = 'nfg'
    players: int = Field(ge=1)
    actions: List[int]
    labels: Optional[List[List[str]]] = None
    # one tensor per player, row-major over joint actions, last player fastest
    payoffs: List[List[Rational]]

    @model_validator(mode='after')
    def check_shape(self):
        if len(self.actions) != self.players:
            raise ValueError("one action count per player expected")
        if any(a < 1 for a in self.actions):
            raise ValueError("every player needs at least one action")
        if len(self.payoffs) != self.players:
            raise ValueError("one payoff tensor per player expected")
        size = 1
        for a in self.actions:
            size *= a
        for p, tensor in enumerate(self.payoffs):
            if len(tensor) != size:
                raise ValueError(f"payoff tensor of player {p} has {len(tensor)} entries, expected {size}")
        if self.labels is not None:
            if [len(names) for names in self.labels] != self.actions:
                raise ValueError("action labels do not match the action counts")
        return self


class MatrixFile(_Model):
    """Zero-sum matrix game: the row player maximizes ``x.Ay``."""
    format: Literal['matrix'] = 'matrix'
    A: List[List[Rational]] = Field(min_length=1)

    @model_validator(mode='after')
    def rectangular(self):
        width = len(self.A[0])
        if width == 0 or any(len(r) != width for r in self.A):
            raise ValueError("matrix rows must be non-empty and of equal length")
        return self


class SupportEntrySchema(_Model):
    profile: List[List[Rational]]
    weight: Rational


class CertificateSchema(_Model):
    player: int
    max_benefit: Rational
    by_vertices: Optional[Rational] = None
    by_lp: Optional[Rational] = None


class EquilibriumFile(_Model):
    format: Literal['equilibrium'] = 'equilibrium'
    phi: str
    N: int = 0
    support: List[SupportEntrySchema]
    certificate: List[CertificateSchema] = Field(default_factory=list)
    stats: Dict[str, Any] = Field(default_factory=dict)


class BruteForceFile(_Model):
    format: Literal['bruteforce'] = 'bruteforce'
    phi: str
    feasible: bool
    profiles: int
    support: List[SupportEntrySchema] = Field(default_factory=list)
    certificate: List[CertificateSchema] = Field(default_factory=list)


class SaddleFile(_Model):
    format: Literal['saddle'] = 'saddle'
    value: Rational
    x: List[Rational]
    support: List[SupportEntrySchema]
    stats: Dict[str, Any] = Field(default_factory=dict)


class RunConfig(_Model):
    command: Literal['solve', 'verify', 'bruteforce', 'saddle', 'info']
    game: Optional[str] = None
    phi: Optional[str] = None
    equilibrium: Optional[str] = None
    out: Optional[str] = None
    transcript: bool = False
    r_exp: Optional[int] = Field(default=None, ge=1)
    eps_exp: Optional[int] = Field(default=None, ge=1)
    escalation_cap: Optional[int] = Field(default=None, ge=0)
    seed: Optional[int] = None
    record: bool = False

    @model_validator(mode='after')
    def check_command(self):
        if self.command in ('solve', 'verify', 'bruteforce') and not self.phi:
            raise ValueError(f"--phi is required for {self.command}")
        if self.phi is not None and self.phi not in ('swap', 'constant') and not self.phi.startswith('file:'):
            raise ValueError("--phi must be swap, constant or file:<path>")
        if self.phi is not None and self.phi.startswith('file:') and len(self.phi) == len('file:'):
            raise ValueError("--phi file: needs a path")
        if self.command == 'verify' and not self.equilibrium:
            raise ValueError("verify needs --equilibrium")
        if self.game is None and self.seed is None:
            raise ValueError("either --game or --seed is required")
        return self

    @property
    def deviation_path(self) -> Optional[str]:
        if self.phi and self.phi.startswith('file:'):
            return self.phi[len('file:'):]
        return None

    @property
    def phi_family(self) -> Optional[str]:
        if self.phi is None:
            return None
        return 'file' if self.phi.startswith('file:') else self.phi
