"""Exact deciders for coorbit compatibility and the symmetry group dimension.

An invertible matrix is compatible with a shearlet dilation group iff it
normalizes the group.  Concretely: the matrix must preserve the dual
orbit (block form with first column lambda*e_1), factor as
lambda * shear * diag(1, B), and the block B must be an algebra
automorphism of the shearing span (the C-map identity) that commutes
with the reduced scaling matrix diag(lambda_2..lambda_d).  All checks
here are bit-exact over the rationals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .exact_linalg import (
    RationalMatrix,
    SingularMatrixError,
    mat_inverse,
    mat_mul,
    parse_rational,
    solve_linear_subspace,
)
from .shearlet_core import (
    ShearletGroupSpec,
    _ensure_valid,
    c_basis,
    c_matrix,
    shear_from_t,
    span_coordinates,
    structure_constants,
)

__all__ = [
    "NotInSOError",
    "ZeroLeadingCoefficientError",
    "FailedCondition",
    "SOBlockForm",
    "Factorization",
    "NormalizerCheck",
    "CompatibilityVerdict",
    "SymmetryGroupReport",
    "decompose_S_O",
    "factorize",
    "is_in_normalizer_S",
    "commutes_with_scaling",
    "is_coorbit_compatible",
    "symmetry_group_report",
    "toeplitz_automorphism_matrix",
    "normalizes_group_brute_force",
    "derivation_constraint_rows",
    "scaling_commutation_rows",
]


class NotInSOError(ValueError):
    """The matrix does not preserve the dual orbit (first column not lambda*e_1)."""


class ZeroLeadingCoefficientError(ValueError):
    """A Toeplitz automorphism needs a nonzero leading coefficient c_2."""


class FailedCondition(enum.Enum):
    NONE = "NONE"
    NOT_IN_S_O = "NOT_IN_S_O"
    NOT_IN_NORMALIZER_S = "NOT_IN_NORMALIZER_S"
    NOT_COMMUTING_WITH_Y = "NOT_COMMUTING_WITH_Y"


@dataclass(frozen=True)
class SOBlockForm:
    """Block form (lambda, z; 0, B) of an orbit-preserving matrix."""

    lam: Fraction
    z: tuple
    B: RationalMatrix


@dataclass(frozen=True)
class Factorization:
    """Unique factorization A = lam * M(shear_t)^{-1} * diag(1, A1_B)."""

    lam: Fraction
    shear_t: tuple
    A1_B: RationalMatrix

    def reassemble(self, spec: ShearletGroupSpec) -> RationalMatrix:
        h = mat_inverse(shear_from_t(spec, self.shear_t).matrix)
        a1 = _embed_block(self.A1_B)
        return mat_mul(h, a1).scale(self.lam)


@dataclass(frozen=True)
class NormalizerCheck:
    passed: bool
    failing_index: Optional[int] = None  # basis index i in 2..d
    lhs: Optional[RationalMatrix] = None  # B^{-1} C(e_i) B
    rhs: Optional[RationalMatrix] = None  # C(B^T e_i)


@dataclass(frozen=True)
class CompatibilityVerdict:
    compatible: bool
    failed_condition: FailedCondition
    factorization: Optional[Factorization] = None
    witness: Optional[NormalizerCheck] = None


@dataclass(frozen=True)
class SymmetryGroupReport:
    """Dimension data for the group of compatible dilations.

    dim_B_component is the dimension of the tangent space at the identity
    of the admissible block group (derivations commuting with the reduced
    scaling matrix), i.e. the dimension of its connected component.
    """

    d: int
    dim_total: int
    dim_B_component: int
    derivation_dim: int
    commutant_blocks: tuple
    lower_bound: int
    upper_bound: int

    @property
    def bounds_check(self) -> tuple:
        return (self.dim_total >= self.lower_bound, self.dim_total <= self.upper_bound)

    @property
    def attains_smallest_known_dim(self) -> bool:
        """True when dim_total hits d+1, the smallest value seen in examples."""
        return self.dim_total == self.d + 1


def _embed_block(b: RationalMatrix) -> RationalMatrix:
    """diag(1, B) as a (n+1)x(n+1) matrix."""
    n = b.rows
    rows = [[Fraction(1)] + [Fraction(0)] * n]
    for i in range(n):
        rows.append([Fraction(0)] + list(b.row(i)))
    return RationalMatrix.from_rows(rows)


def decompose_S_O(a: RationalMatrix) -> SOBlockForm:
    """Split an orbit-preserving matrix into (lambda, z, B) blocks.

    Raises NotInSOError when the first column is not a multiple of e_1,
    SingularMatrixError when lambda = 0 or the block B is singular.
    """
    if not a.is_square:
        raise NotInSOError(f"expected a square matrix, got {a.rows}x{a.cols}")
    d = a.rows
    if d < 2:
        raise NotInSOError("need dimension >= 2")
    for i in range(1, d):
        if a[i, 0] != 0:
            raise NotInSOError(
                f"entry ({i + 1},1) = {a[i, 0]} is nonzero; first column must be lambda*e_1"
            )
    lam = a[0, 0]
    if lam == 0:
        raise SingularMatrixError("matrix is singular (lambda = 0)")
    b = a.block(1, d, 1, d)
    mat_inverse(b)  # raises SingularMatrixError if the block is singular
    return SOBlockForm(lam=lam, z=tuple(a.row(0)[1:]), B=b)


def factorize(spec: ShearletGroupSpec, a: RationalMatrix) -> Factorization:
    """Exact factorization A = lam * h * diag(1, A1_B) with h in the shearing group.

    The shear is pinned by the first row: with z' = z/lam and B' = B/lam,
    the inverse shear is M(z'') for z'' = -z' B'^{-1}, which makes the
    remaining factor fix e_1 and have first row (1, 0, ..., 0).
    """
    _ensure_valid(spec)
    if a.rows != spec.d:
        raise NotInSOError(f"matrix size {a.rows} does not match group dimension {spec.d}")
    block = decompose_S_O(a)
    lam = block.lam
    z_prime = [x / lam for x in block.z]
    b_prime = block.B.scale(Fraction(1) / lam)
    b_prime_inv = mat_inverse(b_prime)
    n = spec.d - 1
    z_dbl = tuple(
        -sum((z_prime[k] * b_prime_inv[k, j] for k in range(n)), Fraction(0))
        for j in range(n)
    )
    h_inv = shear_from_t(spec, z_dbl).matrix
    a_prime = _embed_block(b_prime) + RationalMatrix.from_rows(
        [[Fraction(0)] + list(z_prime)] + [[Fraction(0)] * (n + 1) for _ in range(n)]
    )
    a1 = mat_mul(h_inv, a_prime)
    return Factorization(lam=lam, shear_t=z_dbl, A1_B=a1.block(1, spec.d, 1, spec.d))


def is_in_normalizer_S(spec: ShearletGroupSpec, b: RationalMatrix) -> NormalizerCheck:
    """Exact test of B^{-1} C(e_i) B = C(B^T e_i) on every basis vector.

    Both sides are linear in t, so checking the canonical coordinate
    vectors is exhaustive.  The witness carries the first failing index
    with both sides evaluated.
    """
    _ensure_valid(spec)
    n = spec.d - 1
    if b.rows != n or b.cols != n:
        raise NotInSOError(f"block must be {n}x{n} for this group")
    b_inv = mat_inverse(b)
    blocks = c_basis(spec)
    for i in range(n):
        lhs = mat_mul(b_inv, mat_mul(blocks[i], b))
        rhs = c_matrix(spec, b.row(i))  # B^T e_i is the i-th row of B
        if lhs != rhs:
            return NormalizerCheck(False, failing_index=i + 2, lhs=lhs, rhs=rhs)
    return NormalizerCheck(True)


def commutes_with_scaling(spec: ShearletGroupSpec, b: RationalMatrix) -> bool:
    """True iff B commutes with diag(lambda_2..lambda_d), i.e. b_ij = 0 across distinct exponents."""
    _ensure_valid(spec)
    n = spec.d - 1
    if b.rows != n or b.cols != n:
        raise NotInSOError(f"block must be {n}x{n} for this group")
    lams = spec.lambdas
    return all(
        b[i, j] == 0
        for i in range(n)
        for j in range(n)
        if lams[i] != lams[j]
    )


def is_coorbit_compatible(spec: ShearletGroupSpec, a: RationalMatrix) -> CompatibilityVerdict:
    """Full compatibility verdict: orbit block form, factorization, normalizer, commutation.

    Incompatibility is a verdict, never an exception; errors are reserved
    for malformed inputs (wrong sizes, singular matrices).
    """
    _ensure_valid(spec)
    try:
        factorization = factorize(spec, a)
    except NotInSOError:
        return CompatibilityVerdict(False, FailedCondition.NOT_IN_S_O)
    check = is_in_normalizer_S(spec, factorization.A1_B)
    if not check.passed:
        return CompatibilityVerdict(
            False,
            FailedCondition.NOT_IN_NORMALIZER_S,
            factorization=factorization,
            witness=check,
        )
    if not commutes_with_scaling(spec, factorization.A1_B):
        return CompatibilityVerdict(
            False, FailedCondition.NOT_COMMUTING_WITH_Y, factorization=factorization
        )
    return CompatibilityVerdict(True, FailedCondition.NONE, factorization=factorization)


# -- dimension of the symmetry group ----------------------------------------


def derivation_constraint_rows(spec: ShearletGroupSpec) -> list:
    """Linear constraints on a block D making it a derivation of the shearing algebra.

    Unknowns are the entries of D (images in columns), flattened row-major;
    one row per (i, j, output coordinate q) from
    D(X_i X_j) = D(X_i) X_j + X_i D(X_j) expressed in structure constants.
    """
    table = structure_constants(spec)
    n = spec.d - 1
    rows = []
    for i in range(n):
        for j in range(n):
            cij = table[i][j]
            for q in range(n):
                row = [Fraction(0)] * (n * n)
                for m in range(n):
                    if cij[m]:
                        row[q * n + m] += cij[m]
                for p in range(n):
                    if table[p][j][q]:
                        row[p * n + i] -= table[p][j][q]
                    if table[i][p][q]:
                        row[p * n + j] -= table[i][p][q]
                if any(x != 0 for x in row):
                    rows.append(row)
    return rows


def scaling_commutation_rows(spec: ShearletGroupSpec) -> list:
    """Constraints D_pq = 0 whenever lambda_p != lambda_q."""
    n = spec.d - 1
    lams = spec.lambdas
    rows = []
    for p in range(n):
        for q in range(n):
            if lams[p] != lams[q]:
                row = [Fraction(0)] * (n * n)
                row[p * n + q] = Fraction(1)
                rows.append(row)
    return rows


def commutant_blocks(spec: ShearletGroupSpec) -> tuple:
    """Partition of the index set {2..d} by equal scaling exponents."""
    groups: dict = {}
    for idx, lam in enumerate(spec.lambdas):
        groups.setdefault(lam, []).append(idx + 2)
    return tuple(tuple(v) for _, v in sorted(groups.items(), key=lambda kv: kv[1][0]))


def symmetry_group_report(spec: ShearletGroupSpec) -> SymmetryGroupReport:
    """Dimension of the compatible-dilation group via the exact linear solve.

    dim_total = d + dim_B_component: one scaling parameter, d-1 shear
    parameters, plus the block degrees of freedom (derivations of the
    shearing algebra commuting with the reduced scaling matrix).
    """
    _ensure_valid(spec)
    n = spec.d - 1
    deriv_rows = derivation_constraint_rows(spec)
    derivation_dim = len(solve_linear_subspace(deriv_rows, num_unknowns=n * n))
    combined = deriv_rows + scaling_commutation_rows(spec)
    dim_b = len(solve_linear_subspace(combined, num_unknowns=n * n))
    return SymmetryGroupReport(
        d=spec.d,
        dim_total=spec.d + dim_b,
        dim_B_component=dim_b,
        derivation_dim=derivation_dim,
        commutant_blocks=commutant_blocks(spec),
        lower_bound=spec.d,
        upper_bound=spec.d * spec.d - spec.d + 1,
    )


# -- Toeplitz automorphisms --------------------------------------------------


def toeplitz_automorphism_matrix(d: int, c: Sequence) -> RationalMatrix:
    """Block matrix of the Toeplitz-algebra automorphism sending X_2 to sum c_i X_i.

    Row j-2 holds the coordinates of b_j = (sum c_i X_i)^{j-1} in the
    canonical basis; for d=4 this is
    [[c2, c3, c4], [0, c2^2, 2 c2 c3], [0, 0, c2^3]].
    The result satisfies the normalizer identity for the Toeplitz group.
    """
    from .shearlet_core import _combine, make_toeplitz_group

    coeffs = tuple(parse_rational(x) for x in c)
    if len(coeffs) != d - 1:
        raise ValueError(f"need {d - 1} coefficients c_2..c_d for dimension {d}")
    if coeffs[0] == 0:
        raise ZeroLeadingCoefficientError("c_2 must be nonzero")
    spec = make_toeplitz_group(0, d)
    b2 = _combine(spec, coeffs)
    rows = []
    power = b2
    for _ in range(d - 1):
        coords = span_coordinates(spec, power)
        if coords is None:  # cannot happen: the span is an algebra
            raise ArithmeticError("power left the shearing span")
        rows.append(list(coords))
        power = mat_mul(power, b2)
    return RationalMatrix.from_rows(rows)


# -- independent brute-force oracle ------------------------------------------


def normalizes_group_brute_force(spec: ShearletGroupSpec, a: RationalMatrix) -> bool:
    """Conjugation test on a generating set, independent of the factorization route.

    Checks that A X_i A^{-1} stays in the shearing span for every basis
    element (by linearity this normalizes the whole shearing group) and
    that A Y A^{-1} = c Y + X with X in the span (so conjugation preserves
    the full Lie algebra).  Everything is exact; no e^r is ever evaluated.
    """
    _ensure_valid(spec)
    if a.rows != spec.d or a.cols != spec.d:
        return False
    a_inv = mat_inverse(a)  # SingularMatrixError propagates: malformed input
    for x in spec.basis:
        conj = mat_mul(a, mat_mul(x, a_inv))
        if span_coordinates(spec, conj) is None:
            return False
    y = spec.scaling_generator()
    conj_y = mat_mul(a, mat_mul(y, a_inv))
    c = conj_y[0, 0]
    residue = conj_y - y.scale(c)
    return span_coordinates(spec, residue) is not None
