"""Floating-point coarse-geometry oracle for compatibility cross-checks.

The algebraic deciders say yes/no exactly; this module probes the same
question geometrically: a compatible dilation acts as a quasi-isometry
for the word metric of the group, an incompatible one shows distortion
that keeps growing with the observation scale.  Everything here is a
finite-scale, seeded, float-mode heuristic - conclusions are qualitative
(bounded versus growing), never exact constants.

Word distances are upper-bound estimates: BFS over a finite symmetric
net of a coordinate box W, with greedy separation thinning so the
explored centers form a well-spread family.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .exact_linalg import RationalMatrix, mat_inverse
from .shearlet_core import (
    GroupElementCoords,
    OrbitError,
    ShearletGroupSpec,
    _ensure_valid,
    c_basis,
    orbit_map,
    orbit_map_inverse,
)

__all__ = [
    "INFINITE",
    "OracleConfig",
    "CoveringSample",
    "ScaleStats",
    "DistortionReport",
    "word_ball",
    "word_distance_estimate",
    "phi_A",
    "distortion_scan",
    "weak_equivalence_count",
    "self_intersection_graph",
]

INFINITE = math.inf


@dataclass(frozen=True)
class OracleConfig:
    """Sampling parameters; every report is reproducible from these fields.

    step is the coordinate half-width of the unit neighborhood W,
    radius the word-ball depth, net_resolution the number of grid points
    per axis in the W-net.  growth_threshold is the calibrated relative
    increase of the distortion ratio between consecutive scales that
    trips the growth flag.  scales overrides the default ladder
    (radius/2, 3*radius/4, radius).
    """

    step: float = 0.25
    radius: int = 12
    samples: int = 400
    seed: int = 42
    net_resolution: int = 3
    growth_threshold: float = 0.35
    scales: Optional[tuple] = None
    max_centers: int = 200_000

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.radius < 1:
            raise ValueError("radius must be >= 1")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.net_resolution < 2:
            raise ValueError("net_resolution must be >= 2")
        if self.scales is not None:
            object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))

    def scale_ladder(self) -> tuple:
        if self.scales:
            return tuple(sorted(set(self.scales)))
        r = self.radius
        return tuple(sorted({max(1, math.ceil(r / 2)), max(1, math.ceil(3 * r / 4)), r}))


@dataclass(frozen=True)
class CoveringSample:
    """Finite word-ball sample: center coordinates with BFS depth.

    centers holds ((r, t_2..t_d), depth) pairs, all in the identity
    component (sign +1).  intersection_graph, when populated, is the
    self-intersection adjacency of the induced covering.
    """

    centers: tuple
    base_box: float
    intersection_graph: Optional[tuple] = None


@dataclass(frozen=True)
class ScaleStats:
    R: int
    max_ratio: float
    L: float
    C: float
    n_infinite: int = 0


@dataclass(frozen=True)
class DistortionReport:
    per_scale: tuple
    monotone_growth_flag: bool
    config: OracleConfig


# -- float group arithmetic on bare coordinate tuples -----------------------


@lru_cache(maxsize=None)
def _float_structure(spec: ShearletGroupSpec):
    """(lambdas as floats, C-basis blocks as float rows or None if all zero)."""
    lams = tuple(float(x) for x in spec.lambdas)
    n = spec.d - 1
    blocks = []
    nonzero = False
    for b in c_basis(spec):
        rows = [[float(b[i, j]) for j in range(n)] for i in range(n)]
        blocks.append(rows)
        nonzero = nonzero or any(x != 0.0 for row in rows for x in row)
    return lams, (tuple(tuple(tuple(r) for r in b) for b in blocks) if nonzero else None)


def _mul(spec_data, a, b):
    """Product of coordinate tuples (r, t...): a * b in the identity component."""
    lams, cblocks = spec_data
    ra, rb = a[0], b[0]
    n = len(lams)
    if rb != 0.0:
        u = tuple(math.exp(-rb * (lams[j] - 1.0)) * a[1 + j] for j in range(n))
    else:
        u = a[1:]
    tb = b[1:]
    if cblocks is None:
        return (ra + rb,) + tuple(tb[j] + u[j] for j in range(n))
    out = []
    for j in range(n):
        # corr_j = sum_k u_k * (C(e_k)^T t_b)_j
        corr = 0.0
        for k in range(n):
            uk = u[k]
            if uk:
                block = cblocks[k]
                s = 0.0
                for i in range(n):
                    if block[i][j]:
                        s += block[i][j] * tb[i]
                corr += uk * s
        out.append(tb[j] + u[j] + corr)
    return (ra + rb,) + tuple(out)


def _inv(spec_data, a):
    """Inverse of a coordinate tuple in the identity component."""
    lams, cblocks = spec_data
    r = a[0]
    n = len(lams)
    if r != 0.0:
        v = tuple(math.exp(r * (lams[j] - 1.0)) * a[1 + j] for j in range(n))
    else:
        v = a[1:]
    b = tuple(-x for x in v)
    if cblocks is not None:
        for _ in range(n):
            nb = []
            for j in range(n):
                corr = 0.0
                for k in range(n):
                    bk = b[k]
                    if bk:
                        col = cblocks[k]
                        s = 0.0
                        for i in range(n):
                            if col[i][j]:
                                s += col[i][j] * v[i]
                        corr += bk * s
                nb.append(-v[j] - corr)
            b = tuple(nb)
    return (-r,) + b


# -- the W-net and the thinned BFS ball --------------------------------------


@lru_cache(maxsize=None)
def _generator_net(spec: ShearletGroupSpec, step: float, net_resolution: int) -> tuple:
    """Symmetric finite net of the coordinate box of half-width step.

    Grid points of the box plus their group inverses, deduplicated;
    the identity is excluded.
    """
    spec_data = _float_structure(spec)
    axes = spec.d
    if net_resolution == 1:
        grid = [0.0]
    else:
        grid = [-step + 2.0 * step * k / (net_resolution - 1) for k in range(net_resolution)]
    points = [()]
    for _ in range(axes):
        points = [p + (g,) for p in points for g in grid]
    net = {}
    for p in points:
        if all(abs(x) < 1e-15 for x in p):
            continue
        for q in (p, _inv(spec_data, p)):
            key = tuple(round(x, 12) for x in q)
            net.setdefault(key, q)
    return tuple(net[k] for k in sorted(net))


def _cell(coords, h: float) -> tuple:
    return tuple(int(math.floor(x / h + 0.5)) for x in coords)


def _neighbor_cells(cell):
    # 3^dim cube around the cell
    cells = [()]
    for c in cell:
        cells = [p + (c + dc,) for p in cells for dc in (-1, 0, 1)]
    return cells


class _BallIndex:
    """Spatial hash of ball centers for nearest-center depth lookups."""

    def __init__(self, centers, step: float):
        self.step = step
        self.h = step / 2.0
        self.table = {}
        for coords, depth in centers:
            key = _cell(coords, self.h)
            prev = self.table.get(key)
            if prev is None or depth < prev[1]:
                self.table[key] = (coords, depth)

    def _scan(self, coords, tol: float, reach: int):
        best = None
        base = _cell(coords, self.h)
        offsets = range(-reach, reach + 1)
        dims = len(base)
        cells = [()]
        for axis in range(dims):
            cells = [p + (base[axis] + dc,) for p in cells for dc in offsets]
        for key in cells:
            hit = self.table.get(key)
            if hit is None:
                continue
            c, depth = hit
            if max(abs(a - b) for a, b in zip(coords, c)) <= tol:
                if best is None or depth < best:
                    best = depth
        return best

    def depth_estimate(self, coords):
        """Upper-bound word distance from the identity, or INFINITE."""
        if max(abs(x) for x in coords) <= 1e-9:
            return 0
        best = self._scan(coords, self.h, 1)
        if best is not None:
            return max(best, 1)
        best = self._scan(coords, self.step, 2)
        if best is not None:
            return max(best + 1, 1)
        return INFINITE

    def _scan_refined(self, coords, tol: float, reach: int, extra: float):
        best = None
        base = _cell(coords, self.h)
        offsets = range(-reach, reach + 1)
        dims = len(base)
        cells = [()]
        for axis in range(dims):
            cells = [p + (base[axis] + dc,) for p in cells for dc in offsets]
        for key in cells:
            hit = self.table.get(key)
            if hit is None:
                continue
            c, depth = hit
            dist = max(abs(a - b) for a, b in zip(coords, c))
            if dist <= tol:
                value = depth + extra + dist / self.step
                if best is None or value < best:
                    best = value
        return best

    def refined_estimate(self, coords):
        """Like depth_estimate but with a sub-step residual correction.

        The fractional term dist/step bounds the extra steps needed from
        the snapped center, giving the distortion scan sensitivity below
        the net granularity.
        """
        if max(abs(x) for x in coords) <= 1e-9:
            return 0.0
        best = self._scan_refined(coords, self.h, 1, 0.0)
        if best is not None:
            return max(best, 0.25)
        best = self._scan_refined(coords, self.step, 2, 1.0)
        if best is not None:
            return max(best, 0.25)
        return INFINITE


@lru_cache(maxsize=None)
def word_ball(spec: ShearletGroupSpec, config: OracleConfig) -> CoveringSample:
    """BFS word ball from the identity over the W-net, with separation thinning.

    A newly reached point is discarded when an accepted center lies
    within half a step (max-norm on coordinates); every kept center is
    recorded with its BFS depth.  All centers stay in the identity
    component.
    """
    _ensure_valid(spec)
    spec_data = _float_structure(spec)
    gens = _generator_net(spec, config.step, config.net_resolution)
    h = config.step / 2.0
    identity = tuple(0.0 for _ in range(spec.d))
    accepted = {_cell(identity, h): (identity, 0)}
    order = [(identity, 0)]
    queue = deque([identity])
    depth_of = {identity: 0}
    while queue:
        node = queue.popleft()
        depth = depth_of[node]
        if depth >= config.radius or len(order) >= config.max_centers:
            continue
        for g in gens:
            child = _mul(spec_data, node, g)
            key = _cell(child, h)
            if key in accepted:
                continue
            crowded = False
            for nk in _neighbor_cells(key):
                hit = accepted.get(nk)
                if hit is not None and max(
                    abs(a - b) for a, b in zip(child, hit[0])
                ) < h:
                    crowded = True
                    break
            if crowded:
                continue
            accepted[key] = (child, depth + 1)
            order.append((child, depth + 1))
            depth_of[child] = depth + 1
            queue.append(child)
            if len(order) >= config.max_centers:
                break
    return CoveringSample(centers=tuple(order), base_box=config.step)


@lru_cache(maxsize=None)
def _ball_index(spec: ShearletGroupSpec, config: OracleConfig) -> _BallIndex:
    return _BallIndex(word_ball(spec, config).centers, config.step)


def _in_symmetrized_box(spec_data, coords, step: float) -> bool:
    if max(abs(x) for x in coords) <= step * (1.0 + 1e-9):
        return True
    inv = _inv(spec_data, coords)
    return max(abs(x) for x in inv) <= step * (1.0 + 1e-9)


def word_distance_estimate(
    spec: ShearletGroupSpec,
    config: OracleConfig,
    g1: GroupElementCoords,
    g2: GroupElementCoords,
):
    """Upper-bound estimate of the word distance between two group elements.

    INFINITE when the signs differ (distinct connected components) or no
    path back to the identity is found within radius*4 net steps.  The
    search runs a thinned BFS from g1^{-1} g2 toward the identity.
    """
    _ensure_valid(spec)
    if g1.sign != g2.sign:
        return INFINITE
    spec_data = _float_structure(spec)
    a = (float(g1.r),) + tuple(float(x) for x in g1.t)
    b = (float(g2.r),) + tuple(float(x) for x in g2.t)
    target = _mul(spec_data, _inv(spec_data, a), b)
    if max(abs(x) for x in target) <= 1e-9:
        return 0
    gens = _generator_net(spec, config.step, config.net_resolution)
    h = config.step / 2.0
    cap = config.radius * 4
    node_cap = config.max_centers
    seen = {_cell(target, h): (target, 0)}
    queue = deque([(target, 0)])
    while queue:
        node, steps = queue.popleft()
        if _in_symmetrized_box(spec_data, node, config.step):
            return steps + 1
        if steps >= cap or len(seen) >= node_cap:
            continue
        for g in gens:
            child = _mul(spec_data, node, g)
            if max(abs(x) for x in child) <= 1e-9:
                return steps + 1
            key = _cell(child, h)
            if key in seen:
                continue
            crowded = False
            for nk in _neighbor_cells(key):
                hit = seen.get(nk)
                if hit is not None and max(
                    abs(a_ - b_) for a_, b_ in zip(child, hit[0])
                ) < h:
                    crowded = True
                    break
            if crowded:
                continue
            seen[key] = (child, steps + 1)
            queue.append((child, steps + 1))
    return INFINITE


# -- the induced dilation map -------------------------------------------------


def _inverse_transpose_rows(a) -> list:
    if not isinstance(a, RationalMatrix):
        a = RationalMatrix.from_rows([[Fraction(float(x)) for x in row] for row in a])
    return mat_inverse(a).transpose().to_float_rows()


def _apply_rows(rows, xi):
    return tuple(sum(r[j] * xi[j] for j in range(len(xi))) for r in rows)


def phi_A(spec: ShearletGroupSpec, a, h: GroupElementCoords) -> GroupElementCoords:
    """Pull the frequency action of A back to group coordinates.

    phi_A(h) = chart^{-1}(A^{-T} chart(h)); raises OrbitError when the
    image leaves the dual orbit (the matrix does not preserve it).
    """
    rows = _inverse_transpose_rows(a)
    xi = orbit_map(spec, h)
    eta = _apply_rows(rows, xi)
    if abs(eta[0]) < 1e-300:
        raise OrbitError("dilated point left the dual orbit")
    return orbit_map_inverse(spec, eta)


def _phi_coords(spec, rows, coords):
    """phi_A on a bare (r, t...) tuple in the identity component."""
    g = GroupElementCoords(1, coords[0], coords[1:])
    xi = orbit_map(spec, g)
    eta = _apply_rows(rows, xi)
    if abs(eta[0]) < 1e-300:
        raise OrbitError("dilated point left the dual orbit")
    img = orbit_map_inverse(spec, eta)
    return img.sign, (img.r,) + tuple(img.t)


# -- distortion scan -----------------------------------------------------------


def _affine_fit(xs, ys):
    """Least-squares fit y ~ L x + C."""
    n = len(xs)
    if n == 0:
        return 0.0, 0.0
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        return 0.0, my
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, my - slope * mx


def distortion_scan(spec: ShearletGroupSpec, config: OracleConfig, a) -> DistortionReport:
    """Empirical quasi-isometry distortion of phi_A across a ladder of scales.

    At each scale R, seeded pairs (g1, g2 = g1 * w) with short to medium
    connecting words w are drawn from the word ball of radius R; the pair
    distance and the distance of the images are estimated against the
    precomputed ball, with INFINITE capped at 4R.  The growth flag trips
    when the maximal two-sided ratio increases by more than
    growth_threshold (relative) between consecutive scales.
    """
    _ensure_valid(spec)
    if isinstance(a, RationalMatrix):
        if a.rows != spec.d or a.cols != spec.d:
            raise OrbitError(f"matrix must be {spec.d}x{spec.d}")
    rows = _inverse_transpose_rows(a)
    spec_data = _float_structure(spec)
    ball = word_ball(spec, config)
    index = _ball_index(spec, config)
    gens = _generator_net(spec, config.step, config.net_resolution)
    n_gens = len(gens)
    n_axes = spec.d - 1
    stats = []
    for scale in config.scale_ladder():
        lo, hi = max(1, scale // 2), max(1, scale - 3)
        candidates = [c for c, depth in ball.centers if lo <= depth <= hi]
        if not candidates:
            candidates = [c for c, depth in ball.centers if depth <= hi]
        if not candidates:
            candidates = [c for c, _ in ball.centers]
        # distortion of the dilation map concentrates at the scaling extremes,
        # so half the probes sit on the largest-|r| decile of the shell
        by_r = sorted(candidates, key=lambda c: -abs(c[0]))
        extreme = by_r[: max(1, len(by_r) // 10)]
        cap = 4.0 * scale
        ratios = []
        xs, ys = [], []
        n_inf = 0
        for i in range(config.samples):
            rng = random.Random((config.seed, scale, i))
            pool = extreme if rng.random() < 0.5 else candidates
            g1 = pool[rng.randrange(len(pool))]
            if rng.random() < 0.7:
                # pure shear probe along one coordinate axis
                axis = rng.randrange(n_axes)
                sign = 1.0 if rng.random() < 0.5 else -1.0
                k = rng.randint(2, 4)
                shear = [0.0] * n_axes
                shear[axis] = sign * config.step
                word = (tuple([0.0] + shear),) * k
            else:
                k = rng.randint(2, 6)
                word = tuple(gens[rng.randrange(n_gens)] for _ in range(k))
            x_src = word[0]
            g2 = _mul(spec_data, g1, word[0])
            for w in word[1:]:
                x_src = _mul(spec_data, x_src, w)
                g2 = _mul(spec_data, g2, w)
            d_src = index.refined_estimate(x_src)
            if d_src == INFINITE or d_src < 0.5:
                continue
            s1, img1 = _phi_coords(spec, rows, g1)
            s2, img2 = _phi_coords(spec, rows, g2)
            if s1 != s2:
                d_img = INFINITE
            else:
                x_img = _mul(spec_data, _inv(spec_data, img1), img2)
                d_img = index.refined_estimate(x_img)
            if d_img == INFINITE:
                n_inf += 1
                ratios.append(cap / d_src)
                continue
            d_img_eff = max(d_img, 0.25)
            ratios.append(max(d_img_eff / d_src, d_src / d_img_eff))
            xs.append(float(d_src))
            ys.append(float(d_img))
        max_ratio = max(ratios) if ratios else 0.0
        slope, intercept = _affine_fit(xs, ys)
        stats.append(ScaleStats(R=scale, max_ratio=max_ratio, L=slope, C=intercept, n_infinite=n_inf))
    flag = False
    for prev, cur in zip(stats, stats[1:]):
        if prev.max_ratio > 0 and (cur.max_ratio / prev.max_ratio - 1.0) > config.growth_threshold:
            flag = True
            break
    return DistortionReport(per_scale=tuple(stats), monotone_growth_flag=flag, config=config)


# -- covering intersection counts ----------------------------------------------


def _chart_coords(spec: ShearletGroupSpec, xi) -> tuple:
    """(sign, r, t...) chart coordinates of an orbit point."""
    g = orbit_map_inverse(spec, xi)
    return (float(g.sign), float(g.r)) + tuple(float(x) for x in g.t)


def _cloud_points(spec, spec_data, config, center):
    """Chart coordinates of the image of the base box under one center."""
    if config.net_resolution == 1:
        grid = [0.0]
    else:
        grid = [
            -config.step + 2.0 * config.step * k / (config.net_resolution - 1)
            for k in range(config.net_resolution)
        ]
    offsets = [()]
    for _ in range(spec.d):
        offsets = [p + (g,) for p in offsets for g in grid]
    points = []
    for off in offsets:
        pt = _mul(spec_data, center, off)
        points.append((1.0,) + pt)
    return points


def self_intersection_graph(spec: ShearletGroupSpec, config: OracleConfig) -> CoveringSample:
    """Word ball sample with the self-intersection adjacency populated.

    Two covering sets intersect when any of their cloud points fall
    within step/4 of each other in chart coordinates; every center is
    adjacent to itself and the graph is symmetric by construction.
    """
    ball = word_ball(spec, config)
    spec_data = _float_structure(spec)
    clouds = [
        _cloud_points(spec, spec_data, config, c) for c, _ in ball.centers
    ]
    adjacency = _intersections(clouds, clouds, config.step / 4.0)
    graph = []
    for i in range(len(clouds)):
        neighbors = set(adjacency.get(i, ()))
        neighbors.add(i)
        graph.append(tuple(sorted(neighbors)))
    return replace(ball, intersection_graph=tuple(graph))


def _intersections(q_clouds, p_clouds, tol: float) -> dict:
    """adjacency[i] = set of j with some Q_i point within tol of some P_j point."""
    table: dict = {}
    for j, cloud in enumerate(p_clouds):
        for pt in cloud:
            table.setdefault(_cell(pt, tol), set()).add(j)
    adjacency: dict = {}
    # sign is part of the coordinates, so points on different sheets never match
    cells_cache: dict = {}
    for i, cloud in enumerate(q_clouds):
        hits = adjacency.setdefault(i, set())
        for pt in cloud:
            base = _cell(pt, tol)
            neighbors = cells_cache.get(base)
            if neighbors is None:
                neighbors = _neighbor_cells(base)
                if len(cells_cache) < 200_000:
                    cells_cache[base] = neighbors
            for nk in neighbors:
                found = table.get(nk)
                if found:
                    hits |= found
    return adjacency


def weak_equivalence_count(spec: ShearletGroupSpec, config: OracleConfig, a) -> tuple:
    """Max intersection counts (N_QP, N_PQ) between the induced covering and its image.

    The covering sets are point clouds from the word-ball centers; the
    image covering applies A^{-T} to every cloud point.  Bounded counts
    across growing radii indicate weak equivalence of the coverings,
    growing counts indicate its failure.
    """
    _ensure_valid(spec)
    rows = _inverse_transpose_rows(a)
    ball = word_ball(spec, config)
    spec_data = _float_structure(spec)
    q_clouds = []
    p_clouds = []
    for center, _ in ball.centers:
        cloud = _cloud_points(spec, spec_data, config, center)
        q_chart = []
        p_chart = []
        for pt in cloud:
            # pt carries (sign, r, t...); rebuild the orbit point, dilate, re-chart
            g = GroupElementCoords(1, pt[1], pt[2:])
            xi = orbit_map(spec, g)
            q_chart.append(_chart_coords(spec, xi))
            eta = _apply_rows(rows, xi)
            if abs(eta[0]) < 1e-300:
                raise OrbitError("dilated covering left the dual orbit")
            p_chart.append(_chart_coords(spec, eta))
        q_clouds.append(q_chart)
        p_clouds.append(p_chart)
    tol = config.step / 4.0
    qp = _intersections(q_clouds, p_clouds, tol)
    pq = _intersections(p_clouds, q_clouds, tol)
    n_qp = max((len(v) for v in qp.values()), default=0)
    n_pq = max((len(v) for v in pq.values()), default=0)
    return n_qp, n_pq
