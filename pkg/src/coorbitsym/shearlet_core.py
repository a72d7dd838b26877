"""Construction, validation and parametrization of shearlet dilation groups.

A group is described by its ambient dimension d, the canonical basis
X_2..X_d of the shearing algebra (strictly upper triangular, with first
row e_i), and the diagonal scaling exponents (1, lambda_2..lambda_d).
Group elements are handled in (sign, r, t) coordinates where the matrix
is sign * exp(-r Y) * (I + sum t_j X_j)^{-1}; pure-shear arithmetic is
exact, anything involving e^r runs in float mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .exact_linalg import (
    RationalMatrix,
    format_rational,
    mat_inverse,
    mat_mul,
    parse_rational,
)

__all__ = [
    "ShearletGroupSpec",
    "GroupElementCoords",
    "ShearMatrixForm",
    "ValidationCheck",
    "ValidationReport",
    "InvalidSpecError",
    "ExactnessError",
    "OrbitError",
    "make_standard_group",
    "make_toeplitz_group",
    "validate_spec",
    "shear_from_t",
    "c_matrix",
    "c_basis",
    "span_coordinates",
    "group_mul_coords",
    "group_inverse_coords",
    "conjugate_shear_by_scaling",
    "orbit_map",
    "orbit_map_inverse",
    "identity_coords",
]


class InvalidSpecError(ValueError):
    """The group description violates a structural invariant."""


class ExactnessError(ArithmeticError):
    """The requested exact operation would need to evaluate e^r."""


class OrbitError(ValueError):
    """A frequency point left the open dual orbit (first coordinate 0)."""


@dataclass(frozen=True)
class ShearletGroupSpec:
    """Dimension, canonical shearing basis X_2..X_d and scaling exponents.

    `lambdas` holds (lambda_2..lambda_d); the leading exponent is fixed
    to 1 by construction, so the scaling generator is always
    Y = diag(1, lambda_2, ..., lambda_d).
    """

    d: int
    basis: tuple
    lambdas: tuple
    kind: str = "custom"

    def scaling_generator(self) -> RationalMatrix:
        """Y = diag(1, lambda_2..lambda_d)."""
        return RationalMatrix.diagonal((Fraction(1),) + self.lambdas)

    def __repr__(self) -> str:
        lams = ", ".join(format_rational(x) for x in self.lambdas)
        return f"ShearletGroupSpec(d={self.d}, kind={self.kind!r}, lambdas=({lams}))"


@dataclass(frozen=True)
class GroupElementCoords:
    """(sign, r, t) coordinates of the element sign * exp(-rY) (I + sum t_j X_j)^{-1}."""

    sign: int
    r: object
    t: tuple

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "t", tuple(self.t))


@dataclass(frozen=True)
class ShearMatrixForm:
    """A shear I + sum t_i X_i together with its coordinates and C(t) block."""

    matrix: RationalMatrix
    t: tuple
    c_block: RationalMatrix


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]


def identity_coords(spec: ShearletGroupSpec) -> GroupElementCoords:
    return GroupElementCoords(1, Fraction(0), tuple(Fraction(0) for _ in range(spec.d - 1)))


# -- constructors ---------------------------------------------------------


def make_standard_group(lambdas: Sequence) -> ShearletGroupSpec:
    """Shearing basis X_i = e_1 e_i^T (all shears in the first row)."""
    lams = tuple(parse_rational(x) for x in lambdas)
    d = len(lams) + 1
    if d < 2:
        raise InvalidSpecError("need at least one scaling exponent (d >= 2)")
    basis = []
    for i in range(1, d):
        entries = [Fraction(0)] * (d * d)
        entries[i] = Fraction(1)
        basis.append(RationalMatrix(d, d, entries))
    return ShearletGroupSpec(d=d, basis=tuple(basis), lambdas=lams, kind="standard")


def make_toeplitz_group(delta, d: int) -> ShearletGroupSpec:
    """Toeplitz shearing basis X_j = X_2^(j-1) with exponents 1 - (j-1)*delta."""
    if d < 2:
        raise InvalidSpecError("Toeplitz groups need d >= 2")
    delta = parse_rational(delta)
    shift_entries = [Fraction(0)] * (d * d)
    for k in range(d - 1):
        shift_entries[k * d + k + 1] = Fraction(1)
    x2 = RationalMatrix(d, d, shift_entries)
    basis = [x2]
    for _ in range(d - 2):
        basis.append(mat_mul(basis[-1], x2))
    lams = tuple(Fraction(1) - j * delta for j in range(1, d))
    return ShearletGroupSpec(d=d, basis=tuple(basis), lambdas=lams, kind="toeplitz")


# -- span membership and the C map ----------------------------------------


def span_coordinates(spec: ShearletGroupSpec, m: RationalMatrix):
    """Coordinates of m in the canonical basis, or None if m is outside the span.

    Candidate coordinates are read off the first row (X_i contributes the
    (1, i) entry only there) and verified by exact reassembly.
    """
    if m.rows != spec.d or m.cols != spec.d:
        return None
    coords = tuple(m[0, j] for j in range(1, spec.d))
    candidate = _combine(spec, coords)
    if candidate == m and m[0, 0] == 0:
        return coords
    return None


def _combine(spec: ShearletGroupSpec, coords: Sequence) -> RationalMatrix:
    d = spec.d
    total = [Fraction(0)] * (d * d)
    for c, x in zip(coords, spec.basis):
        if c:
            for idx, v in enumerate(x.entries):
                if v:
                    total[idx] += c * v
    return RationalMatrix(d, d, total)


def shear_from_t(spec: ShearletGroupSpec, t: Sequence) -> ShearMatrixForm:
    """The shear I + sum t_i X_i, exposing the lower-right block map C(t)."""
    _ensure_valid(spec)
    coords = tuple(parse_rational(x) for x in t)
    if len(coords) != spec.d - 1:
        raise InvalidSpecError(f"expected {spec.d - 1} shear coordinates")
    body = _combine(spec, coords)
    matrix = RationalMatrix.identity(spec.d) + body
    return ShearMatrixForm(matrix=matrix, t=coords, c_block=body.block(1, spec.d, 1, spec.d))


def c_matrix(spec: ShearletGroupSpec, t: Sequence) -> RationalMatrix:
    """C(t): the lower-right (d-1)x(d-1) block of sum t_i X_i."""
    coords = tuple(parse_rational(x) for x in t)
    return _combine(spec, coords).block(1, spec.d, 1, spec.d)


@lru_cache(maxsize=None)
def c_basis(spec: ShearletGroupSpec) -> tuple:
    """C(e_i) for the canonical coordinate vectors, i = 2..d."""
    return tuple(x.block(1, spec.d, 1, spec.d) for x in spec.basis)


@lru_cache(maxsize=None)
def structure_constants(spec: ShearletGroupSpec) -> tuple:
    """table[i][j] = coordinates of X_{i+2} X_{j+2} in the canonical basis.

    Only available for validated specs (products must stay in the span).
    """
    _ensure_valid(spec)
    n = spec.d - 1
    table = []
    for i in range(n):
        row = []
        for j in range(n):
            coords = span_coordinates(spec, mat_mul(spec.basis[i], spec.basis[j]))
            row.append(coords)
        table.append(tuple(row))
    return tuple(table)


# -- validation ------------------------------------------------------------


def _fmt_coords(coords) -> str:
    return "(" + ", ".join(format_rational(x) for x in coords) + ")"


@lru_cache(maxsize=None)
def validate_spec(spec: ShearletGroupSpec) -> ValidationReport:
    """Check every structural invariant; failures are reported, not raised."""
    checks = []
    d = spec.d
    shape_ok = (
        d >= 2
        and len(spec.basis) == d - 1
        and len(spec.lambdas) == d - 1
        and all(isinstance(x, RationalMatrix) and x.rows == d and x.cols == d for x in spec.basis)
    )
    checks.append(
        ValidationCheck(
            "shape",
            shape_ok,
            "" if shape_ok else f"need d-1={d - 1} basis matrices of size {d}x{d} and exponents",
        )
    )
    if not shape_ok:
        return ValidationReport(tuple(checks))

    # canonical basis: strictly upper triangular, first row of X_i is e_i^T
    canonical_ok = True
    detail = ""
    for idx, x in enumerate(spec.basis):
        i = idx + 2
        if any(x[a, b] != 0 for a in range(d) for b in range(d) if b <= a):
            canonical_ok, detail = False, f"X_{i} is not strictly upper triangular"
            break
        first_row_ok = all(x[0, j] == (1 if j == i - 1 else 0) for j in range(1, d))
        if not first_row_ok:
            canonical_ok, detail = False, f"X_{i}^T e_1 != e_{i} (first row {x.row(0)})"
            break
    checks.append(ValidationCheck("canonical_basis", canonical_ok, detail))
    if not canonical_ok:
        return ValidationReport(tuple(checks))

    # products stay in the span and commute; filtration s_k s_l <= s_{k+l-1}
    closure_ok, commute_ok, filtration_ok = True, True, True
    closure_detail = commute_detail = filtration_detail = ""
    for i in range(d - 1):
        for j in range(d - 1):
            prod = mat_mul(spec.basis[i], spec.basis[j])
            coords = span_coordinates(spec, prod)
            if coords is None:
                closure_ok = False
                closure_detail = f"X_{i + 2} X_{j + 2} is outside the shearing span"
                break
            if commute_ok and prod != mat_mul(spec.basis[j], spec.basis[i]):
                commute_ok = False
                commute_detail = f"X_{i + 2} X_{j + 2} != X_{j + 2} X_{i + 2}"
            # coords index m corresponds to X_{m+2}; need zero below i+j+3-1
            for m, c in enumerate(coords):
                if c != 0 and (m + 2) < (i + 2) + (j + 2) - 1:
                    filtration_ok = False
                    filtration_detail = (
                        f"X_{i + 2} X_{j + 2} has component {_fmt_coords(coords)}"
                        f" below filtration level {(i + 2) + (j + 2) - 1}"
                    )
        if not closure_ok:
            break
    checks.append(ValidationCheck("span_closure", closure_ok, closure_detail))
    checks.append(ValidationCheck("commutativity", closure_ok and commute_ok, commute_detail))
    checks.append(
        ValidationCheck("filtration", closure_ok and filtration_ok, filtration_detail)
    )
    if not closure_ok:
        return ValidationReport(tuple(checks))

    # scaling compatibility: [Y, X_i] stays in the span
    y = spec.scaling_generator()
    compat_ok, compat_detail = True, ""
    for idx, x in enumerate(spec.basis):
        bracket = mat_mul(y, x) - mat_mul(x, y)
        if span_coordinates(spec, bracket) is None:
            compat_ok = False
            compat_detail = f"[Y, X_{idx + 2}] is outside the shearing span"
            break
    checks.append(ValidationCheck("scaling_compatibility", compat_ok, compat_detail))
    return ValidationReport(tuple(checks))


def _ensure_valid(spec: ShearletGroupSpec) -> None:
    report = validate_spec(spec)
    if not report.all_passed:
        first = report.failures()[0]
        raise InvalidSpecError(f"invalid group spec: {first.name}: {first.detail}")


# -- group arithmetic in coordinates ---------------------------------------


def _is_zero_vector(t: Sequence) -> bool:
    return all(x == 0 for x in t)


def _ct_transpose_apply(spec: ShearletGroupSpec, u: Sequence, v: Sequence, float_mode: bool):
    """C(u)^T v, exact or in floats."""
    cb = c_basis(spec)
    n = spec.d - 1
    if float_mode:
        cu = [[0.0] * n for _ in range(n)]
        for coeff, block in zip(u, cb):
            if coeff:
                fe = block.entries
                for a in range(n):
                    for b in range(n):
                        x = fe[a * n + b]
                        if x:
                            cu[a][b] += float(coeff) * float(x)
        return tuple(sum(cu[a][b] * float(v[a]) for a in range(n)) for b in range(n))
    cu = c_matrix(spec, u)
    return tuple(
        sum((cu[a, b] * v[a] for a in range(n)), Fraction(0)) for b in range(n)
    )


def _zt_factors(spec: ShearletGroupSpec, r: float) -> list:
    """Diagonal of Z_r = diag(e^{-r (lambda_i - 1)})."""
    return [math.exp(-r * (float(lam) - 1.0)) for lam in spec.lambdas]


def group_mul_coords(
    spec: ShearletGroupSpec,
    a: GroupElementCoords,
    b: GroupElementCoords,
    float_mode: bool = False,
) -> GroupElementCoords:
    """Product coordinates; exact for pure-shear products, floats otherwise.

    The product of sign_a h(r_a, t_a) and sign_b h(r_b, t_b) is
    sign_a sign_b h(r_a + r_b, t_b + u + C(u)^T t_b) with u = Z_{r_b} t_a.
    Exact mode raises ExactnessError whenever u would need e^r.
    """
    _ensure_valid(spec)
    sign = a.sign * b.sign
    if float_mode:
        ra, rb = float(a.r), float(b.r)
        ta = [float(x) for x in a.t]
        tb = [float(x) for x in b.t]
        u = [z * x for z, x in zip(_zt_factors(spec, rb), ta)] if rb != 0.0 else ta
        corr = _ct_transpose_apply(spec, u, tb, True)
        t = tuple(x + y + z for x, y, z in zip(tb, u, corr))
        return GroupElementCoords(sign, ra + rb, t)
    ra, rb = parse_rational(a.r), parse_rational(b.r)
    ta = tuple(parse_rational(x) for x in a.t)
    tb = tuple(parse_rational(x) for x in b.t)
    if rb == 0 or _is_zero_vector(ta) or all(lam == 1 for lam in spec.lambdas):
        u = ta
    else:
        raise ExactnessError(
            "product requires evaluating e^r; use float_mode for mixed products"
        )
    corr = _ct_transpose_apply(spec, u, tb, False)
    t = tuple(x + y + z for x, y, z in zip(tb, u, corr))
    return GroupElementCoords(sign, ra + rb, t)


def _shear_inverse_coords(spec: ShearletGroupSpec, v: Sequence, float_mode: bool):
    """Coordinates b with M(v) M(b) = I, via the nilpotent fixed point b = -v - C(b)^T v."""
    n = spec.d - 1
    if not float_mode:
        sh = shear_from_t(spec, v)
        inv = mat_inverse(sh.matrix)
        return tuple(inv[0, j] for j in range(1, spec.d))
    b = tuple(-float(x) for x in v)
    vf = tuple(float(x) for x in v)
    for _ in range(n):
        corr = _ct_transpose_apply(spec, b, vf, True)
        b = tuple(-x - y for x, y in zip(vf, corr))
    return b


def group_inverse_coords(
    spec: ShearletGroupSpec, g: GroupElementCoords, float_mode: bool = False
) -> GroupElementCoords:
    """Coordinates of the group inverse; exact for pure shears."""
    _ensure_valid(spec)
    if float_mode:
        r = float(g.r)
        t = [float(x) for x in g.t]
        if r != 0.0:
            zt = [math.exp(r * (float(lam) - 1.0)) for lam in spec.lambdas]
            t = [z * x for z, x in zip(zt, t)]
        return GroupElementCoords(g.sign, -r, _shear_inverse_coords(spec, t, True))
    r = parse_rational(g.r)
    t = tuple(parse_rational(x) for x in g.t)
    if r != 0 and not _is_zero_vector(t) and any(lam != 1 for lam in spec.lambdas):
        raise ExactnessError("inverse requires evaluating e^r; use float_mode")
    return GroupElementCoords(g.sign, -r, _shear_inverse_coords(spec, t, False))


def conjugate_shear_by_scaling(spec: ShearletGroupSpec, r, t: Sequence) -> tuple:
    """Z_r t with Z_r = diag(e^{-r(lambda_i - 1)}); exact (unchanged) when r = 0."""
    _ensure_valid(spec)
    if r == 0:
        return tuple(t)
    rf = float(r)
    return tuple(z * float(x) for z, x in zip(_zt_factors(spec, rf), t))


# -- orbit chart ------------------------------------------------------------


def orbit_map(spec: ShearletGroupSpec, h: GroupElementCoords) -> tuple:
    """Frequency-side chart (sign e^r, e^{lambda_2 r} t_2, ..., e^{lambda_d r} t_d).

    The sign flips the first coordinate only, so the chart is a bijection
    onto the orbit R^* x R^{d-1} and inverts cleanly.
    """
    _ensure_valid(spec)
    r = float(h.r)
    first = h.sign * math.exp(r)
    rest = tuple(math.exp(float(lam) * r) * float(x) for lam, x in zip(spec.lambdas, h.t))
    return (first,) + rest


def orbit_map_inverse(spec: ShearletGroupSpec, xi: Sequence) -> GroupElementCoords:
    """Invert the frequency chart; OrbitError when the first coordinate vanishes."""
    _ensure_valid(spec)
    xi = [float(x) for x in xi]
    if len(xi) != spec.d:
        raise OrbitError(f"expected a point in R^{spec.d}")
    if xi[0] == 0.0 or not math.isfinite(xi[0]):
        raise OrbitError("point is outside the dual orbit (first coordinate is 0)")
    sign = 1 if xi[0] > 0 else -1
    a = abs(xi[0])
    r = math.log(a)
    t = tuple(x * a ** (-float(lam)) for lam, x in zip(spec.lambdas, xi[1:]))
    return GroupElementCoords(sign, r, t)
