"""Weighted extended B-spline basis: index classification, extension, evaluation.

A basis function of degree p is indexed by the lower-left cell of its support
(p+1 cells per axis).  Indices whose support contains an interior cell are
inner; indices whose support meets the domain but contains no interior cell
are outer and are absorbed into nearby inner functions:

    B_i = w / w(x_i) * [ b_i + sum_{j in J(i)} e_ij b_j ]

with e_ij the tensor-product Lagrange extrapolation weights of the closest
all-inner (p+1) x (p+1) index array assigned to the outer index j.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from .geometry import (BOUNDARY, INTERIOR, DomainSpec, GridSpec, Weight,
                       ConstantWeight)
from .splines import SplineSpec, active_basis

Array = npt.NDArray[np.float64]


@dataclass
class IndexClassification:
    """Inner/outer index sets over the index window [-p .. n-1] per axis."""

    degree: int
    inner: npt.NDArray[np.int64]        # (n_inner, 2), lexicographic order
    outer: npt.NDArray[np.int64]        # (n_outer, 2)
    inner_mask: npt.NDArray[np.bool_]   # over the padded index window
    offset: tuple[int, int]             # index -> window position shift

    def inner_row(self, kx: int, ky: int) -> int:
        pos = self._lookup[kx + self.offset[0], ky + self.offset[1]]
        return int(pos)

    def __post_init__(self):
        look = np.full(self.inner_mask.shape, -1, dtype=np.int64)
        look[self.inner[:, 0] + self.offset[0],
             self.inner[:, 1] + self.offset[1]] = np.arange(self.inner.shape[0])
        self._lookup = look

    @property
    def n_inner(self) -> int:
        return self.inner.shape[0]


def classify_indices(grid: GridSpec, degree: int,
                     cells: npt.NDArray[np.int8]) -> IndexClassification:
    """Split spline indices into inner and outer sets.

    Inner: support contains at least one interior cell.  Outer: support
    contains no interior cell but meets the domain (a boundary cell).
    """
    p = degree
    from numpy.lib.stride_tricks import sliding_window_view

    padded = np.zeros((grid.nx + 2 * p, grid.ny + 2 * p), dtype=np.int8)
    padded[p:p + grid.nx, p:p + grid.ny] = cells
    win = sliding_window_view(padded, (p + 1, p + 1))
    has_interior = (win == INTERIOR).any(axis=(2, 3))
    has_domain = (win >= BOUNDARY).any(axis=(2, 3))
    # window position (a, b) corresponds to index (a - p, b - p)
    inner_mask = has_interior
    outer_mask = has_domain & ~has_interior
    ii = np.argwhere(inner_mask)
    jj = np.argwhere(outer_mask)
    if ii.shape[0] == 0:
        raise ValueError("domain under-resolved: no interior cells")
    inner = ii - p
    outer = jj - p
    order = np.lexsort((inner[:, 1], inner[:, 0]))
    inner = inner[order]
    return IndexClassification(p, inner.astype(np.int64), outer.astype(np.int64),
                               inner_mask, (p, p))


@dataclass
class ExtensionRecord:
    outer_index: tuple[int, int]
    base: tuple[int, int]       # lower-left inner index of the assigned array
    wx: Array                   # Lagrange weights along x, length p+1
    wy: Array


@dataclass
class ExtensionTable:
    records: list[ExtensionRecord]
    degree: int

    def by_inner(self) -> dict[tuple[int, int], list[tuple[tuple[int, int], float]]]:
        """J(i) view: outer indices adjacent to each inner index with e_ij."""
        out: dict[tuple[int, int], list[tuple[tuple[int, int], float]]] = {}
        p = self.degree
        for rec in self.records:
            for a in range(p + 1):
                for b in range(p + 1):
                    e = rec.wx[a] * rec.wy[b]
                    if e == 0.0:
                        continue
                    i = (rec.base[0] + a, rec.base[1] + b)
                    out.setdefault(i, []).append((rec.outer_index, e))
        return out


def _lagrange_weights(p: int, offset: int) -> Array:
    """Values at node ``offset`` of the Lagrange basis on nodes 0..p."""
    w = np.ones(p + 1)
    for m in range(p + 1):
        for mm in range(p + 1):
            if mm != m:
                w[m] *= (offset - mm) / (m - mm)
    return w


def build_extension(classification: IndexClassification,
                    degree: int) -> ExtensionTable:
    """Assign each outer index the closest all-inner array and its weights.

    Ties in the index distance are broken toward the domain interior: among
    minimal-distance arrays the one whose centre is closest to the nearest
    inner index wins, then the lexicographically smallest base.
    """
    p = degree
    mask = classification.inner_mask
    offx, offy = classification.offset
    from numpy.lib.stride_tricks import sliding_window_view

    if mask.shape[0] < p + 1 or mask.shape[1] < p + 1:
        raise ValueError("extension failed: inner index array not found (refine grid)")
    allinner = sliding_window_view(mask, (p + 1, p + 1)).all(axis=(2, 3))
    inner = classification.inner
    records = []
    cap = 2 * (p + 1)
    for jx, jy in classification.outer:
        # nearest inner index (Chebyshev metric, lexicographic ties)
        cheb = np.maximum(np.abs(inner[:, 0] - jx), np.abs(inner[:, 1] - jy))
        nstar = inner[int(np.argmin(cheb))]
        best = None
        for lx in range(jx - p - cap, jx + cap + 1):
            ax = lx + offx
            if ax < 0 or ax >= allinner.shape[0]:
                continue
            dx = max(0, lx - jx, jx - (lx + p))
            if dx > cap:
                continue
            for ly in range(jy - p - cap, jy + cap + 1):
                ay = ly + offy
                if ay < 0 or ay >= allinner.shape[1]:
                    continue
                if not allinner[ax, ay]:
                    continue
                dy = max(0, ly - jy, jy - (ly + p))
                if dy > cap:
                    continue
                center_dist = (abs(lx + p / 2 - nstar[0])
                               + abs(ly + p / 2 - nstar[1]))
                key = (dx + dy, center_dist, lx, ly)
                if best is None or key < best[0]:
                    best = (key, (lx, ly))
        if best is None:
            raise ValueError(
                "extension failed: inner index array not found (refine grid)")
        lx, ly = best[1]
        records.append(ExtensionRecord((int(jx), int(jy)), (lx, ly),
                                       _lagrange_weights(p, jx - lx),
                                       _lagrange_weights(p, jy - ly)))
    return ExtensionTable(records, p)


@dataclass
class WebBasis:
    """Immutable weighted extended B-spline basis over an embedded grid."""

    grid: GridSpec
    degree: int
    weight: Weight
    classification: IndexClassification
    extension: ExtensionTable
    normalizers: Array                  # w(x_i) per inner row
    domain: DomainSpec | None = None

    def __post_init__(self):
        self._ext_matrix = self._build_ext_matrix()

    @property
    def n(self) -> int:
        return self.classification.n_inner

    # -- plain-spline column bookkeeping ------------------------------------
    # columns cover indices kx in [-p, nx-1], ky in [-p, ny-1]
    @property
    def _ncol_x(self) -> int:
        return self.grid.nx + self.degree

    @property
    def _ncol_y(self) -> int:
        return self.grid.ny + self.degree

    def _col(self, kx, ky):
        return (kx + self.degree) * self._ncol_y + (ky + self.degree)

    def _build_ext_matrix(self) -> sp.csr_matrix:
        """Sparse map (plain columns) -> (inner rows): identity on inner
        splines plus Lagrange extension weights on outer splines."""
        p = self.degree
        cls = self.classification
        rows = []
        cols = []
        vals = []
        inner = cls.inner
        rows.append(np.arange(inner.shape[0]))
        cols.append(self._col(inner[:, 0], inner[:, 1]))
        vals.append(np.ones(inner.shape[0]))
        for rec in self.extension.records:
            c = self._col(rec.outer_index[0], rec.outer_index[1])
            e = np.outer(rec.wx, rec.wy)
            for a in range(p + 1):
                for b in range(p + 1):
                    r = cls.inner_row(rec.base[0] + a, rec.base[1] + b)
                    if r < 0:
                        raise AssertionError("extension array not inner")
                    rows.append(np.array([r]))
                    cols.append(np.array([c]))
                    vals.append(np.array([e[a, b]]))
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        m = sp.coo_matrix((vals, (cols, rows)),
                          shape=(self._ncol_x * self._ncol_y, self.n))
        return m.tocsr()

    # -- evaluation ----------------------------------------------------------

    def _plain_fields(self, pts: Array, derivs) -> dict[tuple[int, int], sp.csr_matrix]:
        """Sparse point-by-column matrices of plain tensor splines."""
        p = self.degree
        spec_x = SplineSpec(p, self.grid.cell_size, self.grid.origin[0])
        spec_y = SplineSpec(p, self.grid.cell_size, self.grid.origin[1])
        max_d = max(max(d) for d in derivs)
        lx, vx = active_basis(spec_x, pts[:, 0], max_d)
        ly, vy = active_basis(spec_y, pts[:, 1], max_d)
        npts = pts.shape[0]
        kx = lx[:, None] + np.arange(p + 1)[None, :]
        ky = ly[:, None] + np.arange(p + 1)[None, :]
        okx = (kx >= -p) & (kx <= self.grid.nx - 1)
        oky = (ky >= -p) & (ky <= self.grid.ny - 1)
        kxc = np.clip(kx, -p, self.grid.nx - 1)
        kyc = np.clip(ky, -p, self.grid.ny - 1)
        cols = (self._col(kxc[:, :, None], kyc[:, None, :])
                .reshape(npts, -1))
        ok = (okx[:, :, None] & oky[:, None, :]).reshape(npts, -1)
        rows = np.repeat(np.arange(npts), (p + 1) ** 2).reshape(npts, -1)
        out = {}
        for dx, dy in derivs:
            data = (vx[dx][:, :, None] * vy[dy][:, None, :]).reshape(npts, -1)
            data = np.where(ok, data, 0.0)
            mat = sp.csr_matrix((data.ravel(), (rows.ravel(), cols.ravel())),
                                shape=(npts, self._ncol_x * self._ncol_y))
            out[(dx, dy)] = mat
        return out

    def fields(self, pts: Array, up_to: int = 2) -> dict[tuple[int, int], sp.csr_matrix]:
        """CSR matrices F[(dx, dy)] of shape (n_points, n_inner) whose entries
        are the (dx, dy) derivatives of every basis function at every point."""
        if up_to == 0:
            derivs = [(0, 0)]
        elif up_to == 1:
            derivs = [(0, 0), (1, 0), (0, 1)]
        else:
            derivs = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        plain = self._plain_fields(pts, derivs)
        S = {d: plain[d] @ self._ext_matrix for d in plain}
        w = self.weight.eval(pts[:, 0], pts[:, 1], order=up_to)

        def scale(mat, vec):
            return mat.multiply(vec[:, None]).tocsr()

        out = {}
        out[(0, 0)] = scale(S[(0, 0)], w.w)
        if up_to >= 1:
            out[(1, 0)] = scale(S[(0, 0)], w.wx) + scale(S[(1, 0)], w.w)
            out[(0, 1)] = scale(S[(0, 0)], w.wy) + scale(S[(0, 1)], w.w)
        if up_to >= 2:
            out[(2, 0)] = (scale(S[(0, 0)], w.wxx) + 2 * scale(S[(1, 0)], w.wx)
                           + scale(S[(2, 0)], w.w))
            out[(0, 2)] = (scale(S[(0, 0)], w.wyy) + 2 * scale(S[(0, 1)], w.wy)
                           + scale(S[(0, 2)], w.w))
            out[(1, 1)] = (scale(S[(0, 0)], w.wxy) + scale(S[(1, 0)], w.wy)
                           + scale(S[(0, 1)], w.wx) + scale(S[(1, 1)], w.w))
        dinv = sp.diags(1.0 / self.normalizers)
        return {d: (m @ dinv).tocsr() for d, m in out.items()}

    def evaluate(self, coeffs: Array, pts: Array, dx: int = 0, dy: int = 0) -> Array:
        """Field value of ``sum_i coeffs_i B_i`` at scattered points."""
        up = max(dx + dy, 0)
        f = self.fields(np.asarray(pts, dtype=float), up_to=min(up, 2) if up else 0)
        return np.asarray(f[(dx, dy)] @ coeffs).ravel()


def web_eval(basis: WebBasis, row: int, x, y, dx: int = 0, dy: int = 0):
    """Single-function evaluation (dx + dy <= 2)."""
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    pts = np.column_stack([x_arr, y_arr])
    f = basis.fields(pts, up_to=2)[(dx, dy)]
    out = np.asarray(f[:, row].todense()).ravel()
    return out if np.ndim(x) else float(out[0])


def build_web_basis(grid: GridSpec, degree: int, weight: Weight | None,
                    cells: npt.NDArray[np.int8],
                    domain: DomainSpec | None = None) -> WebBasis:
    """Classify indices, build the extension and the normalisation constants."""
    if weight is None:
        weight = ConstantWeight(1.0)
    cls = classify_indices(grid, degree, cells)
    ext = build_extension(cls, degree)
    h = grid.cell_size
    p = degree
    cx = grid.origin[0] + (cls.inner[:, 0] + (p + 1) / 2) * h
    cy = grid.origin[1] + (cls.inner[:, 1] + (p + 1) / 2) * h
    if domain is not None:
        ok = domain.inside(cx, cy)
        if not np.all(ok):
            ix, iy = np.nonzero(cells == INTERIOR)
            ctr = np.column_stack([grid.origin[0] + (ix + 0.5) * h,
                                   grid.origin[1] + (iy + 0.5) * h])
            from scipy.spatial import cKDTree

            tree = cKDTree(ctr)
            bad = np.nonzero(~ok)[0]
            _, nearest = tree.query(np.column_stack([cx[bad], cy[bad]]))
            cx[bad] = ctr[nearest, 0]
            cy[bad] = ctr[nearest, 1]
    norm = weight.eval(cx, cy, order=0).w
    if np.any(norm <= 0):
        bad = np.nonzero(norm <= 0)[0]
        ix, iy = np.nonzero(cells == INTERIOR)
        ctr = np.column_stack([grid.origin[0] + (ix + 0.5) * h,
                               grid.origin[1] + (iy + 0.5) * h])
        from scipy.spatial import cKDTree

        tree = cKDTree(ctr)
        _, nearest = tree.query(np.column_stack([cx[bad], cy[bad]]))
        norm[bad] = weight.eval(ctr[nearest, 0], ctr[nearest, 1], order=0).w
    return WebBasis(grid, degree, weight, cls, ext, norm, domain)
