"""Galerkin assembly of stiffness, geometric stiffness and load for plates.

Quadratic forms follow the energy of the system: bending of the plate
(flexural rigidity D, Poisson ratio nu) plus stiffener lines (EI along the
line), in-plane stress work with the signed stress field sigma, and the
stiffener shortening work.  Under compression both the plate stress work and
the stiffener shortening work destabilise, so the buckling problem is solved
as A w = lambda (-B) w for the smallest positive lambda.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from .linalg import Factorization, SparseSym, factorize, gen_eig_symmetric
from .quadrature import DomainQuadrature, SegmentRule, segment_rule
from .webbasis import WebBasis

Array = npt.NDArray[np.float64]

CHUNK = 50_000


@dataclass(frozen=True)
class PlateMaterial:
    """Kirchhoff plate constants."""

    D: float
    nu: float
    E: float = 1.0
    thickness: float = 1.0

    def __post_init__(self):
        if self.D <= 0 or not (0.0 <= self.nu < 0.5) or self.E <= 0 \
                or self.thickness <= 0:
            raise ValueError("invalid plate material constants")


@dataclass(frozen=True)
class Stiffener:
    """Straight stiffener attached along the segment p0 -> p1.

    ``EI`` is the bending stiffness about the plate plane, ``r0`` the radius
    of gyration, ``zeta0`` the in-plane centroid offset of the cross section,
    and ``Ts`` the axial force magnitude (positive = compression, scaled by
    the buckling load factor).
    """

    p0: tuple[float, float]
    p1: tuple[float, float]
    EI: float = 0.0
    r0: float = 0.0
    zeta0: float = 0.0
    Ts: float = 0.0

    def __post_init__(self):
        if np.allclose(self.p0, self.p1):
            raise ValueError("stiffener endpoints must be distinct")
        if self.EI < 0 or self.r0 < 0:
            raise ValueError("EI and r0 must be nonnegative")

    @property
    def tangent(self) -> Array:
        d = np.asarray(self.p1, dtype=float) - np.asarray(self.p0, dtype=float)
        return d / np.linalg.norm(d)

    @property
    def zeta_dir(self) -> Array:
        t = self.tangent
        return np.array([-t[1], t[0]])


@dataclass
class DiscreteSystem:
    """Assembled matrices for one plate problem; rows follow basis.inner order."""

    basis: WebBasis
    A: SparseSym
    B: SparseSym | None = None
    b: Array | None = None


def _sym(mat: sp.spmatrix) -> sp.csr_matrix:
    m = (mat + mat.T) * 0.5
    return m.tocsr()


def _wdot(left: sp.csr_matrix, w: Array, right: sp.csr_matrix) -> sp.csr_matrix:
    return (left.T @ right.multiply(w[:, None])).tocsr()


def assemble_bending(basis: WebBasis, material: PlateMaterial,
                     stiffeners=(), quad: DomainQuadrature | None = None,
                     segment_order: int | None = None) -> SparseSym:
    """Stiffness matrix of plate bending plus stiffener bending lines."""
    n = basis.n
    A = sp.csr_matrix((n, n))
    pts, wts = quad.points, quad.weights
    nu = material.nu
    for s in range(0, pts.shape[0], CHUNK):
        P = pts[s:s + CHUNK]
        w = wts[s:s + CHUNK] * material.D
        F = basis.fields(P, up_to=2)
        Bxx, Byy, Bxy = F[(2, 0)], F[(0, 2)], F[(1, 1)]
        A = A + _wdot(Bxx, w, Bxx) + _wdot(Byy, w, Byy) \
            + nu * (_wdot(Bxx, w, Byy) + _wdot(Byy, w, Bxx)) \
            + 2.0 * (1.0 - nu) * _wdot(Bxy, w, Bxy)
    order = segment_order if segment_order is not None else basis.degree + 1
    for st in stiffeners:
        if st.EI == 0.0:
            continue
        rule = segment_rule(st.p0, st.p1, basis.grid, order)
        t = st.tangent
        F = basis.fields(rule.points, up_to=2)
        Btt = (t[0] * t[0]) * F[(2, 0)] + (2 * t[0] * t[1]) * F[(1, 1)] \
            + (t[1] * t[1]) * F[(0, 2)]
        A = A + st.EI * _wdot(Btt.tocsr(), rule.weights, Btt.tocsr())
    A = _sym(A)
    return SparseSym(A)


def assemble_load(basis: WebBasis, p, quad: DomainQuadrature) -> Array:
    """Load vector b_k = integral of B_k * p over the domain."""
    out = np.zeros(basis.n)
    pts, wts = quad.points, quad.weights
    for s in range(0, pts.shape[0], CHUNK):
        P = pts[s:s + CHUNK]
        if callable(p):
            pv = np.asarray(p(P[:, 0], P[:, 1]), dtype=float)
            pv = np.broadcast_to(pv, (P.shape[0],))
        else:
            pv = np.full(P.shape[0], float(p))
        F = basis.fields(P, up_to=0)
        out += np.asarray(F[(0, 0)].T @ (wts[s:s + CHUNK] * pv)).ravel()
    return out


def assemble_geometric(basis: WebBasis, stress, stiffeners=(),
                       quad: DomainQuadrature | None = None,
                       segment_order: int | None = None) -> SparseSym:
    """Geometric (stress) matrix of the buckling work.

    The plate block uses the signed stress field; the stiffener shortening
    block enters with the sign that makes axial compression (Ts > 0)
    destabilising, matching the plate convention where compressive stress
    makes w^T B w negative.
    """
    n = basis.n
    B = sp.csr_matrix((n, n))
    pts, wts = quad.points, quad.weights
    for s in range(0, pts.shape[0], CHUNK):
        P = pts[s:s + CHUNK]
        w = wts[s:s + CHUNK]
        sxx, syy, sxy = stress.eval(P[:, 0], P[:, 1])
        F = basis.fields(P, up_to=1)
        Bx, By = F[(1, 0)], F[(0, 1)]
        B = B + _wdot(Bx, w * sxx, Bx) + _wdot(By, w * syy, By) \
            + _wdot(Bx, w * sxy, By) + _wdot(By, w * sxy, Bx)
    order = segment_order if segment_order is not None else basis.degree + 1
    for st in stiffeners:
        if st.Ts == 0.0:
            continue
        rule = segment_rule(st.p0, st.p1, basis.grid, order)
        t = st.tangent
        z = st.zeta_dir
        F = basis.fields(rule.points, up_to=2)
        Bt = t[0] * F[(1, 0)] + t[1] * F[(0, 1)]
        Btz = (t[0] * z[0]) * F[(2, 0)] \
            + (t[0] * z[1] + t[1] * z[0]) * F[(1, 1)] \
            + (t[1] * z[1]) * F[(0, 2)]
        Bt = Bt.tocsr()
        Btz = Btz.tocsr()
        w = rule.weights
        block = _wdot(Bt, w, Bt) + st.r0**2 * _wdot(Btz, w, Btz) \
            - st.zeta0 * (_wdot(Bt, w, Btz) + _wdot(Btz, w, Bt))
        B = B - st.Ts * block
    B = _sym(B)
    return SparseSym(B)


def solve_bending(system: DiscreteSystem) -> Array:
    """Solve A w = b by sparse LU; relative residual below 1e-10."""
    b = system.b
    if b is None:
        raise ValueError("system has no load vector")
    if not np.any(b):
        return np.zeros_like(b)
    try:
        fac = factorize(system.A)
    except ValueError as exc:
        raise ValueError(
            "stiffness matrix singular (check boundary conditions)") from exc
    w = fac.solve(b)
    res = np.linalg.norm(system.A.mat @ w - b) / np.linalg.norm(b)
    if res > 1e-10:
        raise RuntimeError(f"bending solve residual {res:.2e} exceeds 1e-10")
    return w


def solve_buckling(system: DiscreteSystem) -> tuple[float, Array]:
    """Smallest positive load factor of A w = lambda (-B) w and its mode.

    Under compression w^T B w < 0, so -B provides a stabilising pairing and
    the critical factor is positive; tension-dominated loadings that admit no
    positive eigenvalue raise an error.
    """
    if system.B is None:
        raise ValueError("system has no geometric matrix")
    negB = SparseSym((-system.B.mat).tocsr())
    lams, W = gen_eig_symmetric(system.A, negB)
    pos = np.nonzero(lams > 0)[0]
    if pos.size == 0:
        raise ValueError("loading produces no buckling (tension-dominated)")
    k = pos[0]
    lam = float(lams[k])
    mode = W[:, k]
    Aw = system.A.mat @ mode
    res = np.linalg.norm(Aw - lam * (negB.mat @ mode)) / np.linalg.norm(Aw)
    if res > 1e-8:
        raise RuntimeError(f"eigenpair residual {res:.2e} exceeds 1e-8")
    return lam, mode / np.abs(mode).max()
