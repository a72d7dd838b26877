"""Dense linear algebra over exact rationals.

Every algebraic decider in this package runs on `fractions.Fraction`
entries, so equalities (normalizer membership, commutation) are decided
bit-exactly instead of up to a tolerance.  Kernel computation uses
fraction-free (Bareiss) elimination to keep intermediate integers small.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction

__all__ = [
    "Rational",
    "RationalMatrix",
    "DimensionError",
    "SingularMatrixError",
    "parse_rational",
    "format_rational",
    "mat_mul",
    "mat_inverse",
    "matrix_rank",
    "solve_linear_subspace",
]


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class SingularMatrixError(ArithmeticError):
    """A square matrix required to be invertible is singular."""


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse "p/q" (or "p") into a Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(str(text).strip())


def format_rational(q: Fraction) -> str:
    """Render a Fraction as "p/q", omitting the denominator when it is 1."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _coerce(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"entries must be exact rationals, got {type(value).__name__}")


class RationalMatrix:
    """Immutable dense matrix with Fraction entries, stored row-major."""

    __slots__ = ("rows", "cols", "_entries")

    def __init__(self, rows: int, cols: int, entries: Iterable):
        entries = tuple(_coerce(x) for x in entries)
        if rows <= 0 or cols <= 0:
            raise DimensionError("matrix dimensions must be positive")
        if len(entries) != rows * cols:
            raise DimensionError(
                f"expected {rows * cols} entries, got {len(entries)}"
            )
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "_entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("RationalMatrix is immutable")

    @classmethod
    def from_rows(cls, row_lists: Sequence[Sequence]) -> "RationalMatrix":
        rows = len(row_lists)
        if rows == 0:
            raise DimensionError("need at least one row")
        cols = len(row_lists[0])
        if any(len(r) != cols for r in row_lists):
            raise DimensionError("ragged rows")
        return cls(rows, cols, (x for r in row_lists for x in r))

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls(n, n, (Fraction(int(i == j)) for i in range(n) for j in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls(rows, cols, (Fraction(0) for _ in range(rows * cols)))

    @classmethod
    def diagonal(cls, values: Sequence) -> "RationalMatrix":
        vals = [_coerce(v) for v in values]
        n = len(vals)
        return cls(n, n, (vals[i] if i == j else Fraction(0) for i in range(n) for j in range(n)))

    # -- access ----------------------------------------------------------

    @property
    def entries(self) -> tuple:
        return self._entries

    def __getitem__(self, key) -> Fraction:
        i, j = key
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(key)
        return self._entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self._entries[i * self.cols : (i + 1) * self.cols]

    def column(self, j: int) -> tuple:
        return tuple(self._entries[i * self.cols + j] for i in range(self.rows))

    def row_lists(self) -> list:
        return [list(self.row(i)) for i in range(self.rows)]

    def block(self, r0: int, r1: int, c0: int, c1: int) -> "RationalMatrix":
        """Submatrix with rows r0..r1-1 and columns c0..c1-1."""
        return RationalMatrix(
            r1 - r0,
            c1 - c0,
            (self._entries[i * self.cols + j] for i in range(r0, r1) for j in range(c0, c1)),
        )

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def _require_square(self, op: str) -> None:
        if not self.is_square:
            raise DimensionError(f"{op} requires a square matrix, got {self.rows}x{self.cols}")

    # -- arithmetic ------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RationalMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self._entries == other._entries
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self._entries))

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.rows != other.rows or self.cols != other.cols:
            raise DimensionError("shape mismatch in addition")
        return RationalMatrix(
            self.rows, self.cols, (a + b for a, b in zip(self._entries, other._entries))
        )

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.rows != other.rows or self.cols != other.cols:
            raise DimensionError("shape mismatch in subtraction")
        return RationalMatrix(
            self.rows, self.cols, (a - b for a, b in zip(self._entries, other._entries))
        )

    def __neg__(self) -> "RationalMatrix":
        return RationalMatrix(self.rows, self.cols, (-a for a in self._entries))

    def __mul__(self, other):
        if isinstance(other, RationalMatrix):
            return mat_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, scalar) -> "RationalMatrix":
        s = _coerce(scalar)
        return RationalMatrix(self.rows, self.cols, (s * a for a in self._entries))

    def __pow__(self, n: int) -> "RationalMatrix":
        self._require_square("power")
        if n < 0:
            return mat_inverse(self) ** (-n)
        result = RationalMatrix.identity(self.rows)
        base = self
        while n:
            if n & 1:
                result = mat_mul(result, base)
            base = mat_mul(base, base)
            n >>= 1
        return result

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(
            self.cols,
            self.rows,
            (self._entries[i * self.cols + j] for j in range(self.cols) for i in range(self.rows)),
        )

    def trace(self) -> Fraction:
        self._require_square("trace")
        return sum((self[i, i] for i in range(self.rows)), Fraction(0))

    def inverse(self) -> "RationalMatrix":
        return mat_inverse(self)

    def is_zero(self) -> bool:
        return all(x == 0 for x in self._entries)

    def to_float_rows(self) -> list:
        return [[float(x) for x in self.row(i)] for i in range(self.rows)]

    def __repr__(self) -> str:
        rows = "; ".join(
            " ".join(format_rational(x) for x in self.row(i)) for i in range(self.rows)
        )
        return f"RationalMatrix({self.rows}x{self.cols}: {rows})"


def mat_mul(a: RationalMatrix, b: RationalMatrix) -> RationalMatrix:
    """Exact matrix product; raises DimensionError on shape mismatch."""
    if a.cols != b.rows:
        raise DimensionError(f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}")
    ae, be = a.entries, b.entries
    n, k, m = a.rows, a.cols, b.cols
    out = []
    for i in range(n):
        arow = ae[i * k : (i + 1) * k]
        for j in range(m):
            acc = Fraction(0)
            for p in range(k):
                x = arow[p]
                if x:
                    acc += x * be[p * m + j]
            out.append(acc)
    return RationalMatrix(n, m, out)


def mat_inverse(a: RationalMatrix) -> RationalMatrix:
    """Exact inverse via Gauss-Jordan; raises SingularMatrixError if singular."""
    a._require_square("inverse")
    n = a.rows
    work = [list(a.row(i)) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot_row = next((r for r in range(col, n) if work[r][col] != 0), None)
        if pivot_row is None:
            raise SingularMatrixError("matrix is singular")
        work[col], work[pivot_row] = work[pivot_row], work[col]
        pivot = work[col][col]
        work[col] = [x / pivot for x in work[col]]
        for r in range(n):
            if r != col and work[r][col] != 0:
                factor = work[r][col]
                work[r] = [x - factor * y for x, y in zip(work[r], work[col])]
    return RationalMatrix(n, n, (work[i][n + j] for i in range(n) for j in range(n)))


def _integer_rows(rows: list) -> list:
    """Clear denominators row by row so Bareiss elimination stays in the integers."""
    out = []
    for row in rows:
        scale = 1
        for x in row:
            scale = scale * x.denominator // math.gcd(scale, x.denominator)
        out.append([int(x * scale) for x in row])
    return out


def _bareiss_echelon(int_rows: list, width: int) -> tuple:
    """Fraction-free forward elimination; returns (echelon rows, pivot columns)."""
    m = [row[:] for row in int_rows]
    n_rows = len(m)
    pivot_cols = []
    r = 0
    prev = 1
    for c in range(width):
        pivot_row = next((i for i in range(r, n_rows) if m[i][c] != 0), None)
        if pivot_row is None:
            continue
        m[r], m[pivot_row] = m[pivot_row], m[r]
        p = m[r][c]
        for i in range(r + 1, n_rows):
            mic = m[i][c]
            row_i, row_r = m[i], m[r]
            for j in range(c, width):
                row_i[j] = (p * row_i[j] - mic * row_r[j]) // prev
        pivot_cols.append(c)
        prev = p
        r += 1
        if r == n_rows:
            break
    return m[:r], pivot_cols


def matrix_rank(rows) -> int:
    """Exact rank of a list of rational row vectors (or a RationalMatrix)."""
    if isinstance(rows, RationalMatrix):
        rows = rows.row_lists()
    rows = [[_coerce(x) for x in row] for row in rows]
    if not rows:
        return 0
    width = len(rows[0])
    _, pivots = _bareiss_echelon(_integer_rows(rows), width)
    return len(pivots)


def solve_linear_subspace(
    constraint_rows: Sequence[Sequence], num_unknowns: int | None = None
) -> list:
    """Exact basis of the joint nullspace of the given linear functionals.

    Each constraint row is a vector of coefficients over a common unknown
    space.  Returns a (possibly empty) list of Fraction tuples; an empty
    constraint list yields the standard basis of the full space, which
    requires `num_unknowns`.
    """
    rows = []
    width = num_unknowns
    for row in constraint_rows:
        row = [_coerce(x) for x in row]
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DimensionError("constraint rows act on different spaces")
        rows.append(row)
    if width is None:
        raise DimensionError("num_unknowns is required for an empty constraint list")
    rows = [row for row in rows if any(x != 0 for x in row)]
    if not rows:
        return [
            tuple(Fraction(int(i == j)) for j in range(width)) for i in range(width)
        ]
    echelon, pivot_cols = _bareiss_echelon(_integer_rows(rows), width)
    pivot_set = set(pivot_cols)
    basis = []
    for free_col in (c for c in range(width) if c not in pivot_set):
        sol = [Fraction(0)] * width
        sol[free_col] = Fraction(1)
        for k in reversed(range(len(pivot_cols))):
            pc = pivot_cols[k]
            acc = Fraction(0)
            row = echelon[k]
            for j in range(pc + 1, width):
                if row[j] and sol[j]:
                    acc += Fraction(row[j]) * sol[j]
            sol[pc] = -acc / row[pc]
        basis.append(tuple(sol))
    return basis
