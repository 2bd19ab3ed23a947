"""Integration rules: tensor Gauss cells, quadtree cut cells, split segments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .geometry import (BOUNDARY, EXTERIOR, INTERIOR, Circle, DomainSpec,
                       GridSpec, SimplePolygon)

Array = npt.NDArray[np.float64]


@dataclass
class QuadratureRule:
    """Planar nodes and positive weights."""

    points: Array   # (n, 2)
    weights: Array  # (n,)

    def integrate(self, f) -> float:
        return float(self.weights @ f(self.points[:, 0], self.points[:, 1]))


@dataclass
class SegmentRule:
    """1D rule along a curve: nodes, weights (arclength) and unit tangents."""

    points: Array    # (n, 2)
    weights: Array   # (n,)
    tangents: Array  # (n, 2)

    @property
    def length(self) -> float:
        return float(self.weights.sum())


def gauss_rule_1d(order: int):
    return np.polynomial.legendre.leggauss(order)


def _tensor_rule(lo, hi, order: int):
    gx, gw = gauss_rule_1d(order)
    x = 0.5 * (lo[0] + hi[0]) + 0.5 * (hi[0] - lo[0]) * gx
    y = 0.5 * (lo[1] + hi[1]) + 0.5 * (hi[1] - lo[1]) * gx
    wx = 0.5 * (hi[0] - lo[0]) * gw
    wy = 0.5 * (hi[1] - lo[1]) * gw
    X, Y = np.meshgrid(x, y, indexing="ij")
    W = np.outer(wx, wy)
    return np.column_stack([X.ravel(), Y.ravel()]), W.ravel()


def interior_cell_rule(cell_lo, cell_size: float, order: int) -> QuadratureRule:
    """Tensor Gauss-Legendre rule with ``order`` points per axis on one cell."""
    hi = (cell_lo[0] + cell_size, cell_lo[1] + cell_size)
    pts, wts = _tensor_rule(cell_lo, hi, order)
    return QuadratureRule(pts, wts)


def _rect_inside(domain: DomainSpec, lo, hi, tol: float) -> bool:
    corners_x = np.array([lo[0], hi[0], hi[0], lo[0]])
    corners_y = np.array([lo[1], lo[1], hi[1], hi[1]])
    if isinstance(domain.outer, Circle):
        (cx, cy), r = domain.outer.center, domain.outer.radius
        if np.any((corners_x - cx) ** 2 + (corners_y - cy) ** 2 > (r + tol) ** 2):
            return False
    else:
        if np.any(domain.outer.contains(corners_x, corners_y, tol=tol) < 0):
            return False
        for i in range(domain.outer.n_edges):
            p0, p1 = domain.outer.edge(i)
            if _segment_penetrates_rect(p0, p1, lo, hi, tol):
                return False
    for hole in domain.holes:
        if _rect_circle_dist(lo, hi, hole.center) < hole.radius - tol:
            return False
    return True


def _rect_outside(domain: DomainSpec, lo, hi, tol: float) -> bool:
    corners_x = np.array([lo[0], hi[0], hi[0], lo[0]])
    corners_y = np.array([lo[1], lo[1], hi[1], hi[1]])
    if isinstance(domain.outer, Circle):
        (cx, cy), r = domain.outer.center, domain.outer.radius
        if _rect_circle_dist(lo, hi, (cx, cy)) >= r - tol:
            return True
    else:
        inside_any = np.any(domain.outer.contains(corners_x, corners_y,
                                                  tol=tol) > 0)
        cut = any(_segment_penetrates_rect(*domain.outer.edge(i), lo, hi, tol)
                  for i in range(domain.outer.n_edges))
        cx = 0.5 * (lo[0] + hi[0])
        cy = 0.5 * (lo[1] + hi[1])
        center_out = domain.outer.contains(cx, cy, tol=tol)[0] < 0
        if not inside_any and not cut and center_out:
            return True
    for hole in domain.holes:
        if _rect_circle_maxdist(lo, hi, hole.center) <= hole.radius - tol:
            return True
    return False


def _segment_penetrates_rect(p0, p1, lo, hi, tol: float) -> bool:
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    t0, t1 = 0.0, 1.0
    for pcoef, qlo, qhi in ((dx, lo[0] + tol - p0[0], hi[0] - tol - p0[0]),
                            (dy, lo[1] + tol - p0[1], hi[1] - tol - p0[1])):
        if abs(pcoef) < 1e-300:
            if qlo > 0 or qhi < 0:
                return False
        else:
            ta, tb = qlo / pcoef, qhi / pcoef
            t0 = max(t0, min(ta, tb))
            t1 = min(t1, max(ta, tb))
    return t1 > t0


def _rect_circle_dist(lo, hi, center) -> float:
    dx = max(lo[0] - center[0], 0.0, center[0] - hi[0])
    dy = max(lo[1] - center[1], 0.0, center[1] - hi[1])
    return float(np.hypot(dx, dy))


def _rect_circle_maxdist(lo, hi, center) -> float:
    dx = max(abs(lo[0] - center[0]), abs(hi[0] - center[0]))
    dy = max(abs(lo[1] - center[1]), abs(hi[1] - center[1]))
    return float(np.hypot(dx, dy))


def _boxes_inside(domain: DomainSpec, lo: Array, size: float, tol: float):
    """Vectorized: box entirely inside the closed domain."""
    n = lo.shape[0]
    cx4 = lo[:, 0, None] + np.array([0.0, size, size, 0.0])[None, :]
    cy4 = lo[:, 1, None] + np.array([0.0, 0.0, size, size])[None, :]
    if isinstance(domain.outer, Circle):
        (ocx, ocy), r = domain.outer.center, domain.outer.radius
        d2 = (cx4 - ocx) ** 2 + (cy4 - ocy) ** 2
        ok = (d2 <= (r + tol) ** 2).all(axis=1)
    else:
        sgn = domain.outer.contains(cx4.ravel(), cy4.ravel(), tol=tol)
        ok = (sgn.reshape(n, 4) >= 0).all(axis=1)
        cut = np.zeros(n, dtype=bool)
        for i in range(domain.outer.n_edges):
            p0, p1 = domain.outer.edge(i)
            cut |= _segments_penetrate_boxes(p0, p1, lo, size, tol)
        ok &= ~cut
    for hole in domain.holes:
        ok &= _box_circle_dist(lo, size, hole.center) >= hole.radius - tol
    return ok


def _boxes_outside(domain: DomainSpec, lo: Array, size: float, tol: float):
    """Vectorized: open box disjoint from the domain."""
    n = lo.shape[0]
    if isinstance(domain.outer, Circle):
        (ocx, ocy), r = domain.outer.center, domain.outer.radius
        out = _box_circle_dist(lo, size, (ocx, ocy)) >= r - tol
    else:
        cx4 = lo[:, 0, None] + np.array([0.0, size, size, 0.0])[None, :]
        cy4 = lo[:, 1, None] + np.array([0.0, 0.0, size, size])[None, :]
        sgn = domain.outer.contains(cx4.ravel(), cy4.ravel(), tol=tol)
        none_strict = (sgn.reshape(n, 4) <= 0).all(axis=1)
        cut = np.zeros(n, dtype=bool)
        for i in range(domain.outer.n_edges):
            p0, p1 = domain.outer.edge(i)
            cut |= _segments_penetrate_boxes(p0, p1, lo, size, tol)
        ctr = domain.outer.contains(lo[:, 0] + 0.5 * size,
                                    lo[:, 1] + 0.5 * size, tol=tol) < 0
        out = none_strict & ~cut & ctr
    for hole in domain.holes:
        out |= _box_circle_maxdist(lo, size, hole.center) <= hole.radius - tol
    return out


def _box_circle_dist(lo: Array, size: float, center) -> Array:
    dx = np.maximum.reduce([lo[:, 0] - center[0], np.zeros(lo.shape[0]),
                            center[0] - (lo[:, 0] + size)])
    dy = np.maximum.reduce([lo[:, 1] - center[1], np.zeros(lo.shape[0]),
                            center[1] - (lo[:, 1] + size)])
    return np.hypot(dx, dy)


def _box_circle_maxdist(lo: Array, size: float, center) -> Array:
    dx = np.maximum(np.abs(lo[:, 0] - center[0]), np.abs(lo[:, 0] + size - center[0]))
    dy = np.maximum(np.abs(lo[:, 1] - center[1]), np.abs(lo[:, 1] + size - center[1]))
    return np.hypot(dx, dy)


def _segments_penetrate_boxes(p0, p1, lo: Array, size: float, tol: float):
    """Vectorized Liang-Barsky: does segment p0-p1 enter each open box."""
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    n = lo.shape[0]
    t0 = np.zeros(n)
    t1 = np.ones(n)
    ok = np.ones(n, dtype=bool)
    for pcoef, qlo, qhi in ((dx, lo[:, 0] + tol - p0[0], lo[:, 0] + size - tol - p0[0]),
                            (dy, lo[:, 1] + tol - p0[1], lo[:, 1] + size - tol - p0[1])):
        if abs(pcoef) < 1e-300:
            ok &= (qlo <= 0) & (qhi >= 0)
        else:
            ta = qlo / pcoef
            tb = qhi / pcoef
            t0 = np.maximum(t0, np.minimum(ta, tb))
            t1 = np.minimum(t1, np.maximum(ta, tb))
    return ok & (t1 > t0)


def _emit_tensor_rules(lo: Array, size: float, order: int):
    """Tensor Gauss rules on a batch of square boxes of equal size."""
    gx, gw = gauss_rule_1d(order)
    off = 0.5 * size * (gx + 1.0)
    OX, OY = np.meshgrid(off, off, indexing="ij")
    lw = np.outer(0.5 * size * gw, 0.5 * size * gw).ravel()
    px = (lo[:, 0, None] + OX.ravel()[None, :]).ravel()
    py = (lo[:, 1, None] + OY.ravel()[None, :]).ravel()
    wts = np.tile(lw, lo.shape[0])
    return np.column_stack([px, py]), wts


def _cut_quadrature(boxes_lo: Array, size: float, domain: DomainSpec,
                    order: int, max_depth: int, root_size: float):
    """Quadtree rules for a batch of cut boxes, processed level by level."""
    tol = 1e-12 * root_size
    pts_list = []
    wts_list = []
    lo = boxes_lo
    cur = size
    for depth in range(max_depth + 1):
        if lo.shape[0] == 0:
            break
        outside = _boxes_outside(domain, lo, cur, tol)
        lo = lo[~outside]
        if lo.shape[0] == 0:
            break
        inside = _boxes_inside(domain, lo, cur, tol)
        if np.any(inside):
            p, w = _emit_tensor_rules(lo[inside], cur, order)
            pts_list.append(p)
            wts_list.append(w)
        lo = lo[~inside]
        if lo.shape[0] == 0:
            break
        if depth == max_depth:
            p, w = _emit_tensor_rules(lo, cur, order)
            keep = domain.inside(p[:, 0], p[:, 1], tol=0.0)
            if np.any(keep):
                pts_list.append(p[keep])
                wts_list.append(w[keep])
            lo = lo[:0]
            break
        half = 0.5 * cur
        shifts = np.array([[0.0, 0.0], [half, 0.0], [0.0, half], [half, half]])
        lo = (lo[:, None, :] + shifts[None, :, :]).reshape(-1, 2)
        cur = half
    if not pts_list:
        return np.zeros((0, 2)), np.zeros(0)
    return np.vstack(pts_list), np.concatenate(wts_list)


def cut_cell_rule(cell_lo, cell_size: float, domain: DomainSpec, order: int,
                  max_depth: int = 6) -> QuadratureRule:
    """Quadtree rule on a boundary cell.

    Subcells entirely inside the domain receive the tensor Gauss rule;
    subcells still cut at max depth receive the rule with nodes outside the
    domain dropped (weights of surviving nodes untouched).
    """
    lo = np.asarray([cell_lo], dtype=float)
    pts, wts = _cut_quadrature(lo, cell_size, domain, order, max_depth,
                               cell_size)
    return QuadratureRule(pts, wts)


@dataclass
class DomainQuadrature:
    """Composite rule over all interior and boundary cells of a grid."""

    points: Array
    weights: Array
    order: int
    max_depth: int

    @classmethod
    def build(cls, grid: GridSpec, domain: DomainSpec,
              cells: npt.NDArray[np.int8], order: int,
              max_depth: int = 6) -> "DomainQuadrature":
        h = grid.cell_size
        gx, gw = gauss_rule_1d(order)
        loc = 0.5 * h * (gx + 1.0)
        LX, LY = np.meshgrid(loc, loc, indexing="ij")
        lw = np.outer(0.5 * h * gw, 0.5 * h * gw).ravel()
        ix, iy = np.nonzero(cells == INTERIOR)
        base_x = grid.origin[0] + ix * h
        base_y = grid.origin[1] + iy * h
        pts_int = np.column_stack([
            (base_x[:, None] + LX.ravel()[None, :]).ravel(),
            (base_y[:, None] + LY.ravel()[None, :]).ravel(),
        ])
        wts_int = np.tile(lw, ix.shape[0])
        pts = [pts_int]
        wts = [wts_int]
        bx, by = np.nonzero(cells == BOUNDARY)
        if bx.size:
            lo = np.column_stack([grid.origin[0] + bx * h,
                                  grid.origin[1] + by * h])
            p, w = _cut_quadrature(lo, h, domain, order, max_depth, h)
            if p.shape[0]:
                pts.append(p)
                wts.append(w)
        return cls(np.vstack(pts), np.concatenate(wts), order, max_depth)

    @property
    def area(self) -> float:
        return float(self.weights.sum())


def _grid_crossing_params(p0, p1, grid: GridSpec):
    """Parameters t in (0,1) where segment p0-p1 crosses a grid line."""
    h = grid.cell_size
    ts = []
    for axis, o in ((0, grid.origin[0]), (1, grid.origin[1])):
        d = p1[axis] - p0[axis]
        if abs(d) < 1e-300:
            continue
        k0 = int(np.ceil((min(p0[axis], p1[axis]) - o) / h - 1e-12))
        k1 = int(np.floor((max(p0[axis], p1[axis]) - o) / h + 1e-12))
        for k in range(k0, k1 + 1):
            t = (o + k * h - p0[axis]) / d
            if 1e-12 < t < 1.0 - 1e-12:
                ts.append(t)
    return sorted(set(ts))


def segment_rule(p0, p1, grid: GridSpec, order: int) -> SegmentRule:
    """Gauss rule on a straight segment, split at every grid-line crossing.

    Splitting keeps the integrands piecewise smooth: basis functions are only
    C^{p-1} across grid lines.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    L = float(np.linalg.norm(p1 - p0))
    if L <= 0:
        raise ValueError("zero-length segment")
    tangent = (p1 - p0) / L
    breaks = [0.0] + _grid_crossing_params(p0, p1, grid) + [1.0]
    gx, gw = gauss_rule_1d(order)
    pts = []
    wts = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a < 1e-14:
            continue
        t = 0.5 * (a + b) + 0.5 * (b - a) * gx
        pts.append(p0[None, :] + t[:, None] * (p1 - p0)[None, :])
        wts.append(0.5 * (b - a) * L * gw)
    points = np.vstack(pts)
    weights = np.concatenate(wts)
    tangents = np.broadcast_to(tangent, points.shape).copy()
    return SegmentRule(points, weights, tangents)


def circle_rule(center, radius: float, grid: GridSpec, order: int) -> SegmentRule:
    """Gauss rule along a full circle, split at grid-line crossings."""
    cx, cy = center
    angles = set()
    h = grid.cell_size
    for o, c0, is_x in ((grid.origin[0], cx, True), (grid.origin[1], cy, False)):
        k0 = int(np.ceil((c0 - radius - o) / h - 1e-12))
        k1 = int(np.floor((c0 + radius - o) / h + 1e-12))
        for k in range(k0, k1 + 1):
            val = (o + k * h - c0) / radius
            if abs(val) > 1.0:
                continue
            a = np.arccos(np.clip(val, -1, 1))
            if is_x:
                angles.update(((a) % (2 * np.pi), (-a) % (2 * np.pi)))
            else:
                angles.update(((np.pi / 2 - a) % (2 * np.pi),
                               (np.pi / 2 + a) % (2 * np.pi)))
    brk = sorted(angles)
    if not brk:
        brk = [0.0]
    brk = brk + [brk[0] + 2 * np.pi]
    gx, gw = gauss_rule_1d(order)
    pts, wts, tans = [], [], []
    for a, b in zip(brk[:-1], brk[1:]):
        if b - a < 1e-13:
            continue
        phi = 0.5 * (a + b) + 0.5 * (b - a) * gx
        pts.append(np.column_stack([cx + radius * np.cos(phi),
                                    cy + radius * np.sin(phi)]))
        wts.append(0.5 * (b - a) * radius * gw)
        tans.append(np.column_stack([-np.sin(phi), np.cos(phi)]))
    return SegmentRule(np.vstack(pts), np.concatenate(wts), np.vstack(tans))
