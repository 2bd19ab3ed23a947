"""Uniform-knot B-splines: 1D evaluation, tensor products, constrained interpolation.

All bases live on an infinite uniform knot grid ``knot_j = origin + j * spacing``.
The basis function ``b_k`` of degree ``p`` is supported on ``[knot_k, knot_{k+p+1}]``
(p+1 knot intervals); indexing is by the leftmost knot of the support.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

Array = npt.NDArray[np.float64]


@dataclass(frozen=True)
class SplineSpec:
    """Degree, knot step and origin of a uniform B-spline family."""

    degree: int
    spacing: float
    origin: float = 0.0

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    def knot(self, j: int | Array) -> float | Array:
        return self.origin + np.asarray(j, dtype=float) * self.spacing


def active_basis(spec: SplineSpec, x, max_deriv: int = 0):
    """Values and derivatives of all basis functions that are nonzero at ``x``.

    Returns ``(left, vals)`` where ``left[n]`` is the index of the leftmost
    active basis function at ``x[n]`` (the active ones are ``left .. left+p``)
    and ``vals[q, n, m]`` is the q-th derivative of ``b_{left+m}`` at ``x[n]``.

    Uses the Cox-de Boor triangle specialised to uniform knots; derivatives of
    order q are signed binomial combinations of degree p-q values.
    """
    p = spec.degree
    if max_deriv > p:
        raise ValueError("derivative order exceeds degree")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = (x - spec.origin) / spec.spacing
    cell = np.floor(t).astype(np.int64)
    u = t - cell
    n = x.shape[0]

    # triangle of all-degree values; lower[q] holds the q+1 active values of degree q
    lower = [np.ones((n, 1))]
    for q in range(1, p + 1):
        prev = lower[-1]
        cur = np.zeros((n, q + 1))
        # b over active positions m = 0..q:
        # N^q_m = ((u + q - m) * N^{q-1}_{m-1} + (m + 1 - u) * N^{q-1}_m) / q
        for m in range(q + 1):
            acc = np.zeros(n)
            if m - 1 >= 0:
                acc += (u + q - m) * prev[:, m - 1]
            if m <= q - 1:
                acc += (m + 1 - u) * prev[:, m]
            cur[:, m] = acc / q
        lower.append(cur)

    vals = np.zeros((max_deriv + 1, n, p + 1))
    vals[0] = lower[p]
    # d^r b_k^p = spacing^-r * sum_j (-1)^j C(r, j) b_{k+j}^{p-r}
    for r in range(1, max_deriv + 1):
        base = lower[p - r]  # active positions for degree p-r start at cell-(p-r)
        coef = np.array([(-1) ** j * _binom(r, j) for j in range(r + 1)])
        out = np.zeros((n, p + 1))
        # active index k = cell - p + m; in degree p-r the value of b_{k+j}
        # sits at position (k + j) - (cell - (p - r)) = m + j - r
        for m in range(p + 1):
            for j in range(r + 1):
                mm = m + j - r
                if 0 <= mm <= p - r:
                    out[:, m] += coef[j] * base[:, mm]
        vals[r] = out / spec.spacing**r
    return cell - p, vals


def _binom(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)


def bspline_eval(spec: SplineSpec, index: int, x, deriv_order: int = 0):
    """q-th derivative of the degree-p basis function ``b_index`` at ``x``.

    Exactly zero outside ``[knot_index, knot_{index+p+1}]``.
    """
    if deriv_order > spec.degree:
        raise ValueError("derivative order exceeds degree")
    if deriv_order < 0:
        raise ValueError("derivative order must be >= 0")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    left, vals = active_basis(spec, x_arr, deriv_order)
    pos = index - left
    ok = (pos >= 0) & (pos <= spec.degree)
    out = np.zeros_like(x_arr)
    idx = np.nonzero(ok)[0]
    out[idx] = vals[deriv_order, idx, pos[idx]]
    return out if np.ndim(x) else float(out[0])


def tensor_bspline_eval(spec: SplineSpec, kx: int, ky: int, x, y,
                        dx: int = 0, dy: int = 0):
    """Mixed derivative of the tensor-product basis ``b_kx(x) b_ky(y)``."""
    return bspline_eval(spec, kx, x, dx) * bspline_eval(spec, ky, y, dy)


@dataclass
class Spline1D:
    """Linear combination of uniform B-splines ``sum_k c_k b_{first+k}``."""

    spec: SplineSpec
    coefficients: Array
    first_index: int = 0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)

    def __call__(self, s, deriv: int = 0):
        p = self.spec.degree
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        left, vals = active_basis(self.spec, s_arr, deriv)
        out = np.zeros_like(s_arr)
        nc = self.coefficients.shape[0]
        for m in range(p + 1):
            ci = left + m - self.first_index
            ok = (ci >= 0) & (ci < nc)
            out[ok] += self.coefficients[ci[ok]] * vals[deriv, ok, m]
        return out if np.ndim(s) else float(out[0])


def spline_interpolate(knot_spacing: float, n_intervals: int, values,
                       start_derivs, end_derivs, base_degree: int) -> Spline1D:
    """Constrained interpolation by a degree ``p+1`` spline on uniform knots.

    Knots are ``xi_k = k * knot_spacing`` for ``k = -(p+1) .. N+(p+1)`` with
    ``N = n_intervals``; the spline interpolates ``values`` at ``xi_0 .. xi_N``,
    matches the given derivatives of orders ``1..p/2`` at ``xi_0`` and ``xi_N``
    and vanishes identically outside ``[xi_{-(p+1)}, xi_{N+(p+1)}]``.

    ``base_degree`` is the (even) degree p of the surrounding discretisation;
    the interpolant has degree p+1 and coefficients for ``k = -(p+1) .. N-1``.
    """
    p = base_degree
    if p % 2 != 0:
        raise ValueError("base degree must be even for constrained interpolation")
    N = n_intervals
    values = np.asarray(values, dtype=float)
    start_derivs = np.asarray(start_derivs, dtype=float)
    end_derivs = np.asarray(end_derivs, dtype=float)
    if values.shape[0] != N + 1:
        raise ValueError("need N+1 values at xi_0..xi_N")
    if start_derivs.shape[0] != p // 2 or end_derivs.shape[0] != p // 2:
        raise ValueError("need p/2 end derivatives at each end")

    P = p + 1
    spec = SplineSpec(P, knot_spacing, origin=0.0)
    ncoef = N + p + 1  # k = -(p+1) .. N-1
    first = -(p + 1)

    rows = []
    rhs = []
    sites = [(k * knot_spacing, 0) for k in range(N + 1)]
    rhs.extend(values.tolist())
    for q in range(1, p // 2 + 1):
        sites.append((0.0, q))
        rhs.append(start_derivs[q - 1])
        sites.append((N * knot_spacing, q))
        rhs.append(end_derivs[q - 1])
    xs = np.array([s for s, _ in sites])
    qs = np.array([q for _, q in sites])
    left, vals = active_basis(spec, xs, p // 2)
    A = np.zeros((len(sites), ncoef))
    for r in range(len(sites)):
        for m in range(P + 1):
            ci = left[r] + m - first
            if 0 <= ci < ncoef:
                A[r, ci] = vals[qs[r], r, m]
    try:
        coefs = np.linalg.solve(A, np.asarray(rhs))
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate knot layout") from exc
    return Spline1D(spec, coefs, first_index=first)
