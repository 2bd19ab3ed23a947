"""Implicit domain description: weight functions, polygons, grids, cell classification.

Domains are built from a convex-or-simple outer boundary (circle, rectangle,
polygon) minus circular holes.  Weight functions are expression trees over
affine half-plane factors and circle factors, combined by products, squares
and the R-function union ``w_a + w_b + sqrt(w_a^2 + w_b^2)``; they evaluate
value, gradient and Hessian exactly by recursive differentiation.

Cell classification uses exact geometric predicates (circle sign tests,
segment/box clipping) with a tolerance band of ``1e-12 * h``; weight-function
sampling is only used as a cross-check in the tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

Array = npt.NDArray[np.float64]

EXTERIOR, BOUNDARY, INTERIOR = 0, 1, 2


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Uniform square-cell grid; cell (ix, iy) spans origin + [ix, ix+1] * h."""

    origin: tuple[float, float]
    cell_size: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.cell_size <= 0 or self.nx < 1 or self.ny < 1:
            raise ValueError("grid must have positive cell size and extents")

    @classmethod
    def cover(cls, bbox, h: float, degree: int) -> "GridSpec":
        """Grid covering ``bbox`` plus a margin of degree+1 cells per side.

        The origin snaps to integer multiples of h so that grid lines hit
        x = 0 and any domain edge located at a multiple of h.
        """
        (xmin, ymin), (xmax, ymax) = bbox
        m = degree + 1
        x0 = (np.floor(xmin / h + 1e-12) - m) * h
        y0 = (np.floor(ymin / h + 1e-12) - m) * h
        nx = int(np.ceil((xmax + m * h - x0) / h - 1e-12))
        ny = int(np.ceil((ymax + m * h - y0) / h - 1e-12))
        return cls((x0, y0), h, nx, ny)

    def cell_lo(self, ix, iy):
        return (self.origin[0] + ix * self.cell_size,
                self.origin[1] + iy * self.cell_size)


# ---------------------------------------------------------------------------
# weight functions
# ---------------------------------------------------------------------------

class WeightDerivs(NamedTuple):
    w: Array
    wx: Array
    wy: Array
    wxx: Array
    wxy: Array
    wyy: Array


class Weight:
    """Base class; subclasses implement eval(x, y, order)."""

    def eval(self, x, y, order: int = 2) -> WeightDerivs:
        raise NotImplementedError

    def __call__(self, x, y):
        return self.eval(x, y, order=0).w


def _zeros_like(x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ConstantWeight(Weight):
    value: float = 1.0

    def eval(self, x, y, order=2):
        x = np.asarray(x, dtype=float)
        z = np.zeros_like(x)
        return WeightDerivs(np.full_like(x, self.value), z, z, z, z, z)


@dataclass(frozen=True)
class AffineWeight(Weight):
    """a + b x + c y (half-plane edge weight)."""

    a: float
    b: float
    c: float

    def eval(self, x, y, order=2):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        w = self.a + self.b * x + self.c * y
        z = np.zeros_like(w)
        return WeightDerivs(w, np.full_like(w, self.b), np.full_like(w, self.c),
                            z, z, z)


@dataclass(frozen=True)
class CircleWeight(Weight):
    """(x-cx)^2 + (y-cy)^2 - r^2, or its negative when positive_inside."""

    cx: float
    cy: float
    r: float
    positive_inside: bool = False

    def eval(self, x, y, order=2):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        s = -1.0 if self.positive_inside else 1.0
        dx = x - self.cx
        dy = y - self.cy
        w = s * (dx * dx + dy * dy - self.r**2)
        two = np.full_like(w, 2.0 * s)
        return WeightDerivs(w, 2.0 * s * dx, 2.0 * s * dy,
                            two, np.zeros_like(w), two)


def _product_pair(a: WeightDerivs, b: WeightDerivs) -> WeightDerivs:
    return WeightDerivs(
        a.w * b.w,
        a.wx * b.w + a.w * b.wx,
        a.wy * b.w + a.w * b.wy,
        a.wxx * b.w + 2.0 * a.wx * b.wx + a.w * b.wxx,
        a.wxy * b.w + a.wx * b.wy + a.wy * b.wx + a.w * b.wxy,
        a.wyy * b.w + 2.0 * a.wy * b.wy + a.w * b.wyy,
    )


@dataclass(frozen=True)
class ProductWeight(Weight):
    factors: tuple[Weight, ...]

    def eval(self, x, y, order=2):
        acc = self.factors[0].eval(x, y, order)
        for f in self.factors[1:]:
            acc = _product_pair(acc, f.eval(x, y, order))
        return acc


@dataclass(frozen=True)
class SquareWeight(Weight):
    base: Weight

    def eval(self, x, y, order=2):
        u = self.base.eval(x, y, order)
        return WeightDerivs(
            u.w * u.w,
            2.0 * u.w * u.wx,
            2.0 * u.w * u.wy,
            2.0 * (u.wx * u.wx + u.w * u.wxx),
            2.0 * (u.wx * u.wy + u.w * u.wxy),
            2.0 * (u.wy * u.wy + u.w * u.wyy),
        )


@dataclass(frozen=True)
class RUnionWeight(Weight):
    """R-function disjunction w_a + w_b + sqrt(w_a^2 + w_b^2)."""

    first: Weight
    second: Weight

    def eval(self, x, y, order=2):
        a = self.first.eval(x, y, order)
        b = self.second.eval(x, y, order)
        s2 = a.w * a.w + b.w * b.w
        s = np.sqrt(s2)
        if order == 0:
            z = np.zeros_like(s)
            return WeightDerivs(a.w + b.w + s, z, z, z, z, z)
        if np.any(s == 0.0):
            raise ValueError("R-function derivative singular at corner")
        gx = a.w * a.wx + b.w * b.wx   # = s * s_x
        gy = a.w * a.wy + b.w * b.wy
        sx = gx / s
        sy = gy / s
        gxx = a.wx**2 + a.w * a.wxx + b.wx**2 + b.w * b.wxx
        gxy = a.wx * a.wy + a.w * a.wxy + b.wx * b.wy + b.w * b.wxy
        gyy = a.wy**2 + a.w * a.wyy + b.wy**2 + b.w * b.wyy
        sxx = (gxx - sx * sx) / s
        sxy = (gxy - sx * sy) / s
        syy = (gyy - sy * sy) / s
        return WeightDerivs(a.w + b.w + s, a.wx + b.wx + sx, a.wy + b.wy + sy,
                            a.wxx + b.wxx + sxx, a.wxy + b.wxy + sxy,
                            a.wyy + b.wyy + syy)


def weight_eval(w: Weight, x, y, order: int = 2) -> WeightDerivs:
    """Value/gradient/Hessian of a weight expression tree."""
    return w.eval(x, y, order)


# ---------------------------------------------------------------------------
# polygons and edge frames
# ---------------------------------------------------------------------------

@dataclass
class SimplePolygon:
    """Simple polygon with counterclockwise vertices; edge e_i joins v_i, v_{i+1}."""

    vertices: Array

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("polygon needs at least 3 (x, y) vertices")
        d = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        if np.any(d < 1e-14 * max(1.0, np.abs(v).max())):
            raise ValueError("degenerate (repeated) polygon vertex")
        if self._signed_area(v) <= 0:
            raise ValueError("polygon must be counterclockwise")
        if self._self_intersects(v):
            raise ValueError("polygon must be simple (no self-intersection)")
        self.vertices = v

    @staticmethod
    def _signed_area(v: Array) -> float:
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @staticmethod
    def _self_intersects(v: Array) -> bool:
        n = v.shape[0]
        for i in range(n):
            a0, a1 = v[i], v[(i + 1) % n]
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                b0, b1 = v[j], v[(j + 1) % n]
                if _segments_cross(a0, a1, b0, b1):
                    return True
        return False

    @property
    def n_edges(self) -> int:
        return self.vertices.shape[0]

    def edge(self, i: int):
        v = self.vertices
        return v[i % self.n_edges], v[(i + 1) % self.n_edges]

    def edge_lengths(self) -> Array:
        v = self.vertices
        return np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)

    def tangents(self) -> Array:
        v = self.vertices
        d = np.roll(v, -1, axis=0) - v
        return d / np.linalg.norm(d, axis=1)[:, None]

    def normals(self) -> Array:
        t = self.tangents()
        return np.stack([t[:, 1], -t[:, 0]], axis=1)

    def reflex_vertices(self) -> list[int]:
        """Vertices where the interior angle exceeds pi (CCW ordering)."""
        v = self.vertices
        n = self.n_edges
        out = []
        for i in range(n):
            a = v[i] - v[i - 1]
            b = v[(i + 1) % n] - v[i]
            if a[0] * b[1] - a[1] * b[0] < 0:
                out.append(i)
        return out

    def contains(self, x, y, tol: float = 0.0):
        """+1 strictly inside, 0 on the boundary (within tol), -1 outside."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        v = self.vertices
        n = self.n_edges
        inside = np.zeros(x.shape, dtype=bool)
        on_edge = np.zeros(x.shape, dtype=bool)
        for i in range(n):
            x0, y0 = v[i]
            x1, y1 = v[(i + 1) % n]
            cond = (y0 > y) != (y1 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            inside ^= cond & (x < np.where(cond, xi, np.inf))
            on_edge |= _point_segment_dist2(x, y, v[i], v[(i + 1) % n]) <= tol * tol
        out = np.where(on_edge, 0, np.where(inside, 1, -1))
        return out


def _segments_cross(a0, a1, b0, b1) -> bool:
    """Proper or touching intersection of two closed segments."""
    d1 = np.cross(a1 - a0, b0 - a0)
    d2 = np.cross(a1 - a0, b1 - a0)
    d3 = np.cross(b1 - b0, a0 - b0)
    d4 = np.cross(b1 - b0, a1 - b0)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


def _point_segment_dist2(x, y, p0, p1):
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    L2 = dx * dx + dy * dy
    t = ((x - p0[0]) * dx + (y - p0[1]) * dy) / L2
    t = np.clip(t, 0.0, 1.0)
    ex = x - (p0[0] + t * dx)
    ey = y - (p0[1] + t * dy)
    return ex * ex + ey * ey


@dataclass
class EdgeFrame:
    """Local frame of a polygon edge plus extension margins for the lift boxes."""

    index: int
    v0: Array
    v1: Array
    tangent: Array
    normal: Array
    length: float
    ds: float              # extension margin along the edge
    box_halfwidth: float   # D_i, transverse halfwidth of the support box

    def local_coords(self, x, y):
        """(alpha, beta): tangential/normal offsets from v0; beta < 0 inside."""
        dx = np.asarray(x, dtype=float) - self.v0[0]
        dy = np.asarray(y, dtype=float) - self.v0[1]
        alpha = self.tangent[0] * dx + self.tangent[1] * dy
        beta = self.normal[0] * dx + self.normal[1] * dy
        return alpha, beta

    def point(self, alpha, beta=0.0):
        alpha = np.asarray(alpha, dtype=float)
        return (self.v0[0] + self.tangent[0] * alpha + self.normal[0] * beta,
                self.v0[1] + self.tangent[1] * alpha + self.normal[1] * beta)

    def box_corners(self) -> Array:
        a = (-self.ds, self.length + self.ds)
        b = (-self.box_halfwidth, self.box_halfwidth)
        pts = [self.point(a[0], b[0]), self.point(a[1], b[0]),
               self.point(a[1], b[1]), self.point(a[0], b[1])]
        return np.array(pts)


def edge_local_coords(frame: EdgeFrame, x, y):
    return frame.local_coords(x, y)


def _box_valid(poly: SimplePolygon, i: int, ds: float, D: float) -> bool:
    """Support quadrilateral may touch only the two neighbouring edges."""
    n = poly.n_edges
    t = poly.tangents()[i]
    nrm = poly.normals()[i]
    v0, v1 = poly.edge(i)
    corners = np.array([
        v0 + t * (-ds) + nrm * (-D), v1 + t * ds + nrm * (-D),
        v1 + t * ds + nrm * D, v0 + t * (-ds) + nrm * D,
    ])
    allowed = {(i - 1) % n, i, (i + 1) % n}
    for j in range(n):
        if j in allowed:
            continue
        b0, b1 = poly.edge(j)
        if _segment_convex_quad_overlap(b0, b1, corners):
            return False
    return True


def _segment_convex_quad_overlap(p0, p1, quad: Array) -> bool:
    for k in range(4):
        if _segments_cross(p0, p1, quad[k], quad[(k + 1) % 4]):
            return True
    # fully inside: test one endpoint against the quad half-planes
    def inside(pt):
        for k in range(4):
            e = quad[(k + 1) % 4] - quad[k]
            if np.cross(e, pt - quad[k]) < 0:
                return False
        return True
    return inside(p0) or inside(p1)


def _extended_edge_valid(poly: SimplePolygon, i: int, ds: float) -> bool:
    n = poly.n_edges
    t = poly.tangents()[i]
    v0, v1 = poly.edge(i)
    e0, e1 = v0 - t * ds, v1 + t * ds
    for j in range(n):
        if j in ((i - 1) % n, i, (i + 1) % n):
            continue
        b0, b1 = poly.edge(j)
        if _segments_cross(e0, e1, b0, b1):
            return False
    return True


def edge_frames(poly: SimplePolygon) -> list[EdgeFrame]:
    """Frames with default margins: ds_i = 0.25 min of the three local edge
    lengths (halved until the extended edge stays clear of far edges) and D_i
    the largest box halfwidth accepted by bisection."""
    n = poly.n_edges
    L = poly.edge_lengths()
    t = poly.tangents()
    nrm = poly.normals()
    frames = []
    diam = float(np.ptp(poly.vertices, axis=0).max()) * 2.0
    for i in range(n):
        ds = 0.25 * min(L[(i - 1) % n], L[i], L[(i + 1) % n])
        for _ in range(40):
            if _extended_edge_valid(poly, i, ds):
                break
            ds *= 0.5
        else:
            raise ValueError(f"cannot extend edge {i} of polygon")
        lo, hi = 0.0, diam
        if _box_valid(poly, i, ds, hi):
            D = hi
        else:
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _box_valid(poly, i, ds, mid):
                    lo = mid
                else:
                    hi = mid
            D = lo
        if D <= 0:
            raise ValueError(f"no admissible box halfwidth for edge {i}")
        v0, v1 = poly.edge(i)
        frames.append(EdgeFrame(i, v0.copy(), v1.copy(), t[i].copy(),
                                nrm[i].copy(), float(L[i]), float(ds), float(D)))
    return frames


def edge_weight(poly: SimplePolygon, i: int) -> AffineWeight:
    """w_i = -beta_i: zero on the line through edge i, positive on its inner side."""
    nrm = poly.normals()[i]
    v0, _ = poly.edge(i)
    return AffineWeight(float(nrm @ v0), float(-nrm[0]), float(-nrm[1]))


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float


@dataclass
class DomainSpec:
    """Outer boundary (circle or simple polygon) minus circular holes."""

    outer: Circle | SimplePolygon
    holes: tuple[Circle, ...] = ()
    outer_bc: str = "clamped"          # 'clamped' | 'simply_supported'
    hole_bc: tuple[str, ...] = ()      # per hole; 'free' for every benchmark

    def __post_init__(self):
        if not self.hole_bc:
            self.hole_bc = tuple("free" for _ in self.holes)
        if len(self.hole_bc) != len(self.holes):
            raise ValueError("one bc tag per hole required")

    @classmethod
    def rectangle(cls, a: float, b: float, phi: float = 0.0, holes=(),
                  outer_bc: str = "simply_supported", hole_bc=()) -> "DomainSpec":
        """Rectangle [-a/2, a/2] x [-b/2, b/2] rotated by phi (radians)."""
        c, s = np.cos(phi), np.sin(phi)
        R = np.array([[c, -s], [s, c]])
        corners = np.array([[-a / 2, -b / 2], [a / 2, -b / 2],
                            [a / 2, b / 2], [-a / 2, b / 2]]) @ R.T
        return cls(SimplePolygon(corners), tuple(holes), outer_bc, tuple(hole_bc))

    def bbox(self):
        if isinstance(self.outer, Circle):
            (cx, cy), r = self.outer.center, self.outer.radius
            return (cx - r, cy - r), (cx + r, cy + r)
        v = self.outer.vertices
        return (v[:, 0].min(), v[:, 1].min()), (v[:, 0].max(), v[:, 1].max())

    def inside(self, x, y, tol: float = 0.0):
        """True where (x, y) lies in the closed domain (within tol of it)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if isinstance(self.outer, Circle):
            (cx, cy), r = self.outer.center, self.outer.radius
            ok = (x - cx) ** 2 + (y - cy) ** 2 <= (r + tol) ** 2
        else:
            ok = self.outer.contains(x, y, tol=tol) >= 0
        for hole in self.holes:
            (cx, cy), r = hole.center, hole.radius
            ok &= (x - cx) ** 2 + (y - cy) ** 2 >= (r - tol) ** 2
        return ok

    def area(self) -> float:
        if isinstance(self.outer, Circle):
            a = np.pi * self.outer.radius**2
        else:
            a = SimplePolygon._signed_area(self.outer.vertices)
        return float(a - sum(np.pi * h.radius**2 for h in self.holes))

    def plate_weight(self) -> Weight:
        """Weight imposing the plate's essential boundary conditions.

        Free boundaries (all holes in the benchmarks) contribute no factor;
        simply supported parts a simple zero; clamped parts a squared zero.
        """
        w = self._outer_zero_set()
        if self.outer_bc == "clamped":
            w = SquareWeight(w)
        elif self.outer_bc != "simply_supported":
            raise ValueError(f"unsupported outer bc {self.outer_bc!r}")
        for hole, bc in zip(self.holes, self.hole_bc):
            if bc == "free":
                continue
            f = CircleWeight(hole.center[0], hole.center[1], hole.radius)
            if bc == "clamped":
                f = SquareWeight(f)
            w = ProductWeight((w, f))
        return w

    def airy_weight(self) -> Weight:
        """Weight for the stress-function solves: double zero on every boundary."""
        factors = [self._outer_zero_set()]
        factors += [CircleWeight(h.center[0], h.center[1], h.radius)
                    for h in self.holes]
        prod = factors[0] if len(factors) == 1 else ProductWeight(tuple(factors))
        return SquareWeight(prod)

    def _outer_zero_set(self) -> Weight:
        """Unsquared weight vanishing exactly on the outer boundary."""
        if isinstance(self.outer, Circle):
            return CircleWeight(self.outer.center[0], self.outer.center[1],
                                self.outer.radius)
        poly = self.outer
        reflex = poly.reflex_vertices()
        n = poly.n_edges
        used = set()
        factors: list[Weight] = []
        for v in reflex:
            i_prev, i_next = (v - 1) % n, v
            if i_prev in used or i_next in used:
                raise NotImplementedError("adjacent reflex vertices not supported")
            factors.append(RUnionWeight(edge_weight(poly, i_prev),
                                        edge_weight(poly, i_next)))
            used.update((i_prev, i_next))
        factors += [edge_weight(poly, i) for i in range(n) if i not in used]
        return factors[0] if len(factors) == 1 else ProductWeight(tuple(factors))


def annulus(a: float, b: float) -> DomainSpec:
    """Annulus a < r < b, clamped outer circle, free inner hole."""
    return DomainSpec(Circle((0.0, 0.0), b), (Circle((0.0, 0.0), a),),
                      outer_bc="clamped")


# ---------------------------------------------------------------------------
# cell classification
# ---------------------------------------------------------------------------

def _segment_open_rect_crossings(p0, p1, grid: GridSpec, tol: float):
    """Mark all cells whose open interior is penetrated by segment p0-p1."""
    h = grid.cell_size
    ox, oy = grid.origin
    nx, ny = grid.nx, grid.ny
    mark = np.zeros((nx, ny), dtype=bool)
    # Liang-Barsky against each candidate cell in the segment's band
    x0 = min(p0[0], p1[0]) - tol
    x1 = max(p0[0], p1[0]) + tol
    y0 = min(p0[1], p1[1]) - tol
    y1 = max(p0[1], p1[1]) + tol
    i0 = max(int(np.floor((x0 - ox) / h)), 0)
    i1 = min(int(np.floor((x1 - ox) / h)), nx - 1)
    j0 = max(int(np.floor((y0 - oy) / h)), 0)
    j1 = min(int(np.floor((y1 - oy) / h)), ny - 1)
    if i1 < i0 or j1 < j0:
        return mark
    ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1),
                         indexing="ij")
    lox = ox + ii * h + tol
    hix = ox + (ii + 1) * h - tol
    loy = oy + jj * h + tol
    hiy = oy + (jj + 1) * h - tol
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    t0 = np.zeros(ii.shape)
    t1 = np.ones(ii.shape)
    ok = np.ones(ii.shape, dtype=bool)
    for pcoef, q_lo, q_hi in ((dx, lox - p0[0], hix - p0[0]),
                              (dy, loy - p0[1], hiy - p0[1])):
        if abs(pcoef) < 1e-300:
            ok &= (q_lo <= 0) & (q_hi >= 0)
        else:
            ta = q_lo / pcoef
            tb = q_hi / pcoef
            tmin = np.minimum(ta, tb)
            tmax = np.maximum(ta, tb)
            t0 = np.maximum(t0, tmin)
            t1 = np.minimum(t1, tmax)
    ok &= t1 > t0
    mark[i0:i1 + 1, j0:j1 + 1] = ok
    return mark


def classify_cells(grid: GridSpec, domain: DomainSpec) -> npt.NDArray[np.int8]:
    """Per-cell tags: 0 exterior, 1 boundary (cut), 2 interior.

    Interior means the closed cell lies in the closed domain; exterior means
    the open cell does not meet the domain; boundary otherwise (within the
    1e-12 h tolerance band).
    """
    h = grid.cell_size
    tol = 1e-12 * h
    nx, ny = grid.nx, grid.ny
    ox, oy = grid.origin
    cx = ox + np.arange(nx + 1) * h
    cy = oy + np.arange(ny + 1) * h
    CX, CY = np.meshgrid(cx, cy, indexing="ij")

    if isinstance(domain.outer, Circle):
        (ccx, ccy), r = domain.outer.center, domain.outer.radius
        d2 = (CX - ccx) ** 2 + (CY - ccy) ** 2
        corner_in = d2 <= (r + tol) ** 2
        all_in = (corner_in[:-1, :-1] & corner_in[1:, :-1]
                  & corner_in[:-1, 1:] & corner_in[1:, 1:])
        dmin = _rect_point_dist(grid, ccx, ccy)
        any_part = dmin <= r - tol
        inside_outer = all_in
        outside_outer = ~any_part
    else:
        sgn = domain.outer.contains(CX.ravel(), CY.ravel(), tol=tol)
        sgn = sgn.reshape(CX.shape)
        corner_in = sgn >= 0
        corner_strict_in = sgn > 0
        all_in = (corner_in[:-1, :-1] & corner_in[1:, :-1]
                  & corner_in[:-1, 1:] & corner_in[1:, 1:])
        any_strict_in = (corner_strict_in[:-1, :-1] | corner_strict_in[1:, :-1]
                         | corner_strict_in[:-1, 1:] | corner_strict_in[1:, 1:])
        cut = np.zeros((nx, ny), dtype=bool)
        poly = domain.outer
        for i in range(poly.n_edges):
            p0, p1 = poly.edge(i)
            cut |= _segment_open_rect_crossings(p0, p1, grid, tol)
        mx = ox + (np.arange(nx) + 0.5) * h
        my = oy + (np.arange(ny) + 0.5) * h
        MX, MY = np.meshgrid(mx, my, indexing="ij")
        center_out = (poly.contains(MX.ravel(), MY.ravel(), tol=tol)
                      .reshape(nx, ny) < 0)
        inside_outer = all_in & ~cut
        # a cell is exterior when no corner is strictly inside, no edge
        # penetrates its open interior and its centre lies outside; this keeps
        # cells whose face lies exactly on the boundary out of the cut set
        outside_outer = ~any_strict_in & ~cut & center_out & ~inside_outer

    cls = np.full((nx, ny), BOUNDARY, dtype=np.int8)
    cls[inside_outer] = INTERIOR
    cls[outside_outer] = EXTERIOR

    for hole in domain.holes:
        (hx, hy), r = hole.center, hole.radius
        dmin = _rect_point_dist(grid, hx, hy)
        dmax = _rect_point_maxdist(grid, hx, hy)
        swallowed = dmax <= r - tol          # cell entirely in the hole
        touched = (dmin < r + tol) & ~swallowed
        cls[swallowed] = EXTERIOR
        cls[touched & (cls == INTERIOR)] = BOUNDARY
        # fully-exterior cells stay exterior even if the hole touches them
    return cls


def _rect_point_dist(grid: GridSpec, px: float, py: float) -> Array:
    h = grid.cell_size
    ox, oy = grid.origin
    ix = np.arange(grid.nx)
    iy = np.arange(grid.ny)
    lox = ox + ix * h
    loy = oy + iy * h
    dx = np.maximum.reduce([lox - px, np.zeros_like(lox), px - (lox + h)])
    dy = np.maximum.reduce([loy - py, np.zeros_like(loy), py - (loy + h)])
    return np.hypot(dx[:, None], dy[None, :])


def _rect_point_maxdist(grid: GridSpec, px: float, py: float) -> Array:
    h = grid.cell_size
    ox, oy = grid.origin
    lox = ox + np.arange(grid.nx) * h
    loy = oy + np.arange(grid.ny) * h
    dx = np.maximum(np.abs(lox - px), np.abs(lox + h - px))
    dy = np.maximum(np.abs(loy - py), np.abs(loy + h - py))
    return np.hypot(dx[:, None], dy[None, :])
