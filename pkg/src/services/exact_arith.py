"""
Exact rational scalars, vectors and matrices.

Every value is a ``fractions.Fraction`` in canonical reduced form; vectors and
matrices are immutable tuples of them with a fixed shape. The linear algebra
helpers (row reduction, rank, null space, determinant) never leave the
rationals.
"""

from fractions import Fraction
from typing import Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

from ..core.exceptions import DimensionMismatch

Rat = Fraction
EncodingLength = int
RatLike = Union[int, Fraction, str]

_MINUS_SIGNS = ("−", "–")


def rat(value: RatLike) -> Fraction:
    """Coerce ``value`` to a Fraction. Floats are rejected on purpose."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        return Fraction(int(value))
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        for sign in _MINUS_SIGNS:
            text = text.replace(sign, "-")
        if not text:
            raise ValueError("empty rational literal")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"invalid rational literal: {value!r}") from e
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def format_rat(value: RatLike) -> str:
    """Serialize as ``p/q`` (``p`` when q = 1)."""
    q = rat(value)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


class RatVec(Sequence[Fraction]):
    """Immutable vector of exact rationals."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[RatLike] = ()):
        self._entries: Tuple[Fraction, ...] = tuple(rat(e) for e in entries)

    @classmethod
    def zeros(cls, n: int) -> "RatVec":
        return cls._wrap((Fraction(0),) * n)

    @classmethod
    def unit(cls, n: int, i: int) -> "RatVec":
        entries = [Fraction(0)] * n
        entries[i] = Fraction(1)
        return cls._wrap(tuple(entries))

    @classmethod
    def _wrap(cls, entries: Tuple[Fraction, ...]) -> "RatVec":
        vec = cls.__new__(cls)
        vec._entries = entries
        return vec

    @property
    def dim(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> Tuple[Fraction, ...]:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return RatVec._wrap(self._entries[index])
        return self._entries[index]

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self._entries)

    def __eq__(self, other) -> bool:
        if isinstance(other, RatVec):
            return self._entries == other._entries
        if isinstance(other, (tuple, list)):
            return len(other) == len(self._entries) and all(
                a == rat(b) for a, b in zip(self._entries, other))
        return NotImplemented

    def __lt__(self, other: "RatVec") -> bool:
        return self._entries < other._entries

    def __hash__(self) -> int:
        return hash(self._entries)

    def __repr__(self) -> str:
        return "RatVec([" + ", ".join(format_rat(e) for e in self._entries) + "])"

    def _check(self, other: "RatVec") -> None:
        if len(other) != len(self._entries):
            raise DimensionMismatch(
                "vector dimensions differ", {"left": len(self._entries), "right": len(other)})

    def __add__(self, other: "RatVec") -> "RatVec":
        self._check(other)
        return RatVec._wrap(tuple(a + b for a, b in zip(self._entries, other)))

    def __sub__(self, other: "RatVec") -> "RatVec":
        self._check(other)
        return RatVec._wrap(tuple(a - b for a, b in zip(self._entries, other)))

    def __neg__(self) -> "RatVec":
        return RatVec._wrap(tuple(-a for a in self._entries))

    def __mul__(self, scalar: RatLike) -> "RatVec":
        s = rat(scalar)
        return RatVec._wrap(tuple(a * s for a in self._entries))

    __rmul__ = __mul__

    def __truediv__(self, scalar: RatLike) -> "RatVec":
        s = rat(scalar)
        return RatVec._wrap(tuple(a / s for a in self._entries))

    def dot(self, other: Sequence[Fraction]) -> Fraction:
        if len(other) != len(self._entries):
            raise DimensionMismatch(
                "vector dimensions differ", {"left": len(self._entries), "right": len(other)})
        return sum((a * b for a, b in zip(self._entries, other) if a), Fraction(0))

    def is_zero(self) -> bool:
        return not any(self._entries)

    def concat(self, other: Iterable[RatLike]) -> "RatVec":
        return RatVec(self._entries + tuple(rat(e) for e in other))

    def to_strings(self) -> List[str]:
        return [format_rat(e) for e in self._entries]


class RatMat:
    """Immutable dense matrix of exact rationals."""

    __slots__ = ("_rows", "_shape")

    def __init__(self, rows: Iterable[Iterable[RatLike]], ncols: Optional[int] = None):
        body = tuple(tuple(rat(e) for e in row) for row in rows)
        if ncols is None:
            ncols = len(body[0]) if body else 0
        for row in body:
            if len(row) != ncols:
                raise DimensionMismatch("ragged matrix rows", {"expected": ncols, "got": len(row)})
        self._rows = body
        self._shape = (len(body), ncols)

    @classmethod
    def identity(cls, n: int) -> "RatMat":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], ncols=n)

    @classmethod
    def zeros(cls, m: int, n: int) -> "RatMat":
        return cls([[0] * n for _ in range(m)], ncols=n)

    @classmethod
    def from_flat(cls, flat: Sequence[RatLike], m: int, n: int) -> "RatMat":
        """Reshape a row-major flat sequence of length m*n."""
        if len(flat) != m * n:
            raise DimensionMismatch("flat length does not match shape", {"len": len(flat), "shape": (m, n)})
        return cls([flat[i * n:(i + 1) * n] for i in range(m)], ncols=n)

    @property
    def shape(self) -> Tuple[int, int]:
        return self._shape

    @property
    def rows(self) -> Tuple[Tuple[Fraction, ...], ...]:
        return self._rows

    def row(self, i: int) -> RatVec:
        return RatVec._wrap(self._rows[i])

    def col(self, j: int) -> RatVec:
        return RatVec._wrap(tuple(r[j] for r in self._rows))

    def __getitem__(self, index: Tuple[int, int]) -> Fraction:
        i, j = index
        return self._rows[i][j]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RatMat):
            return NotImplemented
        return self._shape == other._shape and self._rows == other._rows

    def __hash__(self) -> int:
        return hash((self._shape, self._rows))

    def __repr__(self) -> str:
        body = "; ".join(" ".join(format_rat(e) for e in r) for r in self._rows)
        return f"RatMat[{body}]"

    @property
    def T(self) -> "RatMat":
        m, n = self._shape
        return RatMat([[self._rows[i][j] for i in range(m)] for j in range(n)], ncols=m)

    def flatten(self) -> RatVec:
        return RatVec._wrap(tuple(e for r in self._rows for e in r))

    def __add__(self, other: "RatMat") -> "RatMat":
        if self._shape != other._shape:
            raise DimensionMismatch("matrix shapes differ", {"left": self._shape, "right": other._shape})
        return RatMat([[a + b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)],
                      ncols=self._shape[1])

    def __sub__(self, other: "RatMat") -> "RatMat":
        if self._shape != other._shape:
            raise DimensionMismatch("matrix shapes differ", {"left": self._shape, "right": other._shape})
        return RatMat([[a - b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)],
                      ncols=self._shape[1])

    def scale(self, scalar: RatLike) -> "RatMat":
        s = rat(scalar)
        return RatMat([[a * s for a in r] for r in self._rows], ncols=self._shape[1])

    def __matmul__(self, other):
        m, n = self._shape
        if isinstance(other, RatVec) or (isinstance(other, (tuple, list)) and not isinstance(other, RatMat)):
            if len(other) != n:
                raise DimensionMismatch("matrix-vector shapes differ", {"matrix": self._shape, "vector": len(other)})
            return RatVec._wrap(tuple(
                sum((a * b for a, b in zip(r, other) if a), Fraction(0)) for r in self._rows))
        if isinstance(other, RatMat):
            p, q = other._shape
            if p != n:
                raise DimensionMismatch("matrix shapes differ", {"left": self._shape, "right": other._shape})
            cols = other.T._rows
            return RatMat([[sum((a * b for a, b in zip(r, c) if a), Fraction(0)) for c in cols]
                           for r in self._rows], ncols=q)
        return NotImplemented

    def vecmat(self, vec: Sequence[Fraction]) -> RatVec:
        """Row vector times matrix: ``vec^T M``."""
        m, n = self._shape
        if len(vec) != m:
            raise DimensionMismatch("vector-matrix shapes differ", {"matrix": self._shape, "vector": len(vec)})
        out = [Fraction(0)] * n
        for coef, r in zip(vec, self._rows):
            if coef:
                for j, a in enumerate(r):
                    if a:
                        out[j] += coef * a
        return RatVec._wrap(tuple(out))


class Inequality(NamedTuple):
    """``coeffs . x <= bound``."""
    coeffs: RatVec
    bound: Fraction


def _rat_bits(q: Fraction) -> int:
    num_bits = max(1, abs(q.numerator).bit_length())
    den_bits = max(1, (q.denominator - 1).bit_length())
    return num_bits + den_bits + 2


def encoding_length(obj) -> EncodingLength:
    """Total bit count of a rational object (scalar, vector, matrix or inequality)."""
    if isinstance(obj, (Fraction, int)) and not isinstance(obj, bool):
        return _rat_bits(rat(obj))
    if isinstance(obj, Inequality):
        return encoding_length(obj.coeffs) + _rat_bits(obj.bound)
    if isinstance(obj, RatMat):
        return sum(_rat_bits(e) for r in obj.rows for e in r)
    if isinstance(obj, str):
        return _rat_bits(rat(obj))
    return sum(encoding_length(e) for e in obj)


# --------------------------------------------------------------------------
# Row reduction over the rationals
# --------------------------------------------------------------------------

def rref(rows: Sequence[Sequence[Fraction]], ncols: int) -> Tuple[List[List[Fraction]], List[int]]:
    """Reduced row echelon form. Returns (nonzero rows, pivot columns)."""
    mat = [list(r) for r in rows]
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        if r >= len(mat):
            break
        pivot = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        pv = mat[r][c]
        if pv != 1:
            mat[r] = [e / pv for e in mat[r]]
        prow = mat[r]
        nz = [j for j in range(c, len(prow)) if prow[j] != 0]
        for i in range(len(mat)):
            if i != r:
                f = mat[i][c]
                if f:
                    row_i = mat[i]
                    for j in nz:
                        row_i[j] -= f * prow[j]
        pivots.append(c)
        r += 1
    return mat[:r], pivots


def rank(rows: Sequence[Sequence[Fraction]], ncols: int) -> int:
    return len(rref(rows, ncols)[1])


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> List[RatVec]:
    """Basis of ``{d : row . d = 0 for every row}``, one vector per free column."""
    reduced, pivots = rref(rows, ncols)
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -reduced[r][free]
        basis.append(RatVec._wrap(tuple(vec)))
    return basis


def solve_linear(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Optional[RatVec]:
    """Unique solution of a square nonsingular system, or None when singular."""
    n = len(rows)
    aug = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    reduced, pivots = rref(aug, n + 1)
    if pivots != list(range(n)):
        return None
    return RatVec._wrap(tuple(reduced[i][n] for i in range(n)))


def independent_rows(rows: Sequence[Sequence[Fraction]], ncols: int) -> List[int]:
    """Indices of a maximal linearly independent subset, greedily in order."""
    chosen: List[int] = []
    basis: List[List[Fraction]] = []
    pivots: List[int] = []
    for idx, row in enumerate(rows):
        vec = list(row)
        for b, pc in zip(basis, pivots):
            f = vec[pc]
            if f:
                vec = [x - f * y for x, y in zip(vec, b)]
        lead = next((j for j in range(ncols) if vec[j] != 0), None)
        if lead is None:
            continue
        pv = vec[lead]
        vec = [x / pv for x in vec]
        # keep basis reduced on the new pivot column
        for k, b in enumerate(basis):
            f = b[lead]
            if f:
                basis[k] = [x - f * y for x, y in zip(b, vec)]
        basis.append(vec)
        pivots.append(lead)
        chosen.append(idx)
        if len(chosen) == ncols:
            break
    return chosen


def determinant(mat: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(mat)
    a = [list(map(rat, r)) for r in mat]
    det = Fraction(1)
    for c in range(n):
        pivot = next((i for i in range(c, n) if a[i][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            a[c], a[pivot] = a[pivot], a[c]
            det = -det
        pv = a[c][c]
        det *= pv
        for i in range(c + 1, n):
            f = a[i][c] / pv
            if f:
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return det
