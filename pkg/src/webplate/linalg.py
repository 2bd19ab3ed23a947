"""Linear-algebra contracts: symmetric sparse storage, LU reuse, dense eigensolve."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

Array = npt.NDArray[np.float64]

MAX_DENSE_EIG = 6000


@dataclass
class SparseSym:
    """Symmetric sparse matrix; stored in CSR with exact structural symmetry."""

    mat: sp.csr_matrix

    def __post_init__(self):
        d = self.mat - self.mat.T
        if d.nnz and np.abs(d.data).max() != 0.0:
            raise ValueError("matrix is not symmetric")

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def dense(self) -> Array:
        return self.mat.toarray()


@dataclass
class Factorization:
    """Reusable LU handle; one refinement step keeps residuals < 1e-10."""

    _lu: spla.SuperLU
    _mat: sp.csr_matrix

    def solve(self, b: Array) -> Array:
        x = self._lu.solve(b)
        x = x + self._lu.solve(b - self._mat @ x)
        return x


def factorize(A: SparseSym | sp.spmatrix) -> Factorization:
    mat = A.mat if isinstance(A, SparseSym) else A.tocsr()
    try:
        lu = spla.splu(mat.tocsc())
    except RuntimeError as exc:
        raise ValueError(f"matrix numerically singular: {exc}") from exc
    if not np.all(np.isfinite(lu.U.diagonal())) or \
            np.abs(lu.U.diagonal()).min() == 0.0:
        rank_def = int(np.sum(np.abs(lu.U.diagonal()) == 0.0))
        raise ValueError(f"matrix numerically singular "
                         f"(estimated rank deficiency {rank_def})")
    return Factorization(lu, mat)


def gen_eig_symmetric(A, M) -> tuple[Array, Array]:
    """All finite eigenpairs of A w = lambda M w with A SPD, M symmetric.

    Solved as M w = mu A w with scipy's symmetric-definite driver (A provides
    the definite factor); lambda = 1/mu for mu != 0, sorted ascending.
    Returns (lams, W) with eigenvectors in the columns of W.
    """
    Ad = A.dense() if isinstance(A, SparseSym) else (
        A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float))
    Md = M.dense() if isinstance(M, SparseSym) else (
        M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float))
    n = Ad.shape[0]
    if n > MAX_DENSE_EIG:
        raise ValueError(
            f"system size {n} exceeds dense eigensolver cap {MAX_DENSE_EIG}: "
            "use finer-grained tooling or coarser grid")
    mus, W = sla.eigh(Md, Ad)
    scale = np.abs(mus).max() if n else 1.0
    finite = np.abs(mus) > 1e-14 * max(scale, 1.0)
    lams = 1.0 / mus[finite]
    W = W[:, finite]
    order = np.argsort(lams)
    return lams[order], W[:, order]
