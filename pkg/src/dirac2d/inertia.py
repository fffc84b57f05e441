"""Eigenvalue counting by Sylvester inertia of ``M - shift*I``.

The matrix is reordered by breadth-first level sets, which makes it block
tridiagonal.  A block LDL^T sweep then needs only dense Bunch-Kaufman
factorizations of the (small) diagonal pivot blocks:

    D_0 = A_00,   D_{k+1} = A_{k+1,k+1} - A_{k+1,k} D_k^{-1} A_{k,k+1}

and ``inertia(A) = sum_k inertia(D_k)`` (Haynsworth).  When the matrix
declares an independent index set whose shifted diagonal is safely nonzero,
that set is eliminated first in one step.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import ShiftCollisionError
from .lattice import SymmetricSparseMatrix

PIVOT_TOL = 1e-11


def _bk_factor(block: np.ndarray):
    if np.iscomplexobj(block):
        ldu, ipiv, info = lapack.zhetrf(block, lower=1)
    else:
        ldu, ipiv, info = lapack.dsytrf(block, lower=1)
    return ldu, ipiv, info


def _bk_solve(ldu, ipiv, rhs):
    solve = lapack.zhetrs if np.iscomplexobj(ldu) else lapack.dsytrs
    x, info = solve(ldu, ipiv, rhs, lower=1)
    return x


def _pivot_inertia(ldu: np.ndarray, ipiv: np.ndarray) -> tuple[int, int, float]:
    """(negatives, positives, smallest pivot magnitude) of the block-diagonal factor."""
    n = ldu.shape[0]
    neg = pos = 0
    smallest = np.inf
    diag = ldu.diagonal().real
    i = 0
    # vectorized path for the common all-1x1 case
    if (ipiv > 0).all():
        neg = int((diag < 0).sum())
        pos = int((diag > 0).sum())
        return neg, pos, float(np.abs(diag).min()) if n else np.inf
    while i < n:
        if ipiv[i] > 0:
            d = diag[i]
            neg += d < 0
            pos += d > 0
            smallest = min(smallest, abs(d))
            i += 1
        else:
            a, c = diag[i], diag[i + 1]
            b = ldu[i + 1, i]
            ev = np.linalg.eigvalsh(np.array([[a, np.conj(b)], [b, c]]))
            neg += int((ev < 0).sum())
            pos += int((ev > 0).sum())
            smallest = min(smallest, float(np.abs(ev).min()))
            i += 2
    return int(neg), int(pos), float(smallest)


def level_sets(graph: sp.csr_matrix) -> list[np.ndarray]:
    """Breadth-first level sets from a pseudo-peripheral node, per connected component."""
    n = graph.shape[0]
    ncomp, labels = connected_components(graph, directed=False)
    levels: list[np.ndarray] = []
    for c in range(ncomp):
        members = np.flatnonzero(labels == c)
        start = int(members[0])
        for _ in range(2):
            order, pred = breadth_first_order(graph, start, directed=False, return_predecessors=True)
            depth = np.zeros(n, dtype=np.int64)
            for node in order[1:]:
                depth[node] = depth[pred[node]] + 1
            far = order[np.argmax(depth[order])]
            if far == start:
                break
            start = int(far)
        # order is BFS order from the final start; depth is consistent with it
        d = depth[order]
        cuts = np.flatnonzero(np.diff(d)) + 1
        levels.extend(np.split(order, cuts))
    return levels


def block_inertia(A: sp.csr_matrix, tol: float,
                  levels: list[np.ndarray] | None = None) -> tuple[int, int]:
    """(negatives, positives) of a symmetric sparse matrix via level-set block LDL^T."""
    A = sp.csr_matrix(A)
    if A.shape[0] == 0:
        return 0, 0
    if levels is None:
        levels = level_sets(A)
    neg = pos = 0
    X = None
    prev = None
    for k, lev in enumerate(levels):
        rows = A[lev]
        block = rows[:, lev].toarray()
        if X is not None:
            coupling = rows[:, prev].toarray()
            block -= coupling @ X
        ldu, ipiv, info = _bk_factor(np.asfortranarray(block))
        kn, kp, smallest = _pivot_inertia(ldu, ipiv)
        if info > 0 or smallest <= tol:
            raise ShiftCollisionError(f"near-singular pivot block (|pivot| = {smallest:.3e})", 0.0)
        neg += kn
        pos += kp
        if k + 1 < len(levels):
            rhs = rows[:, levels[k + 1]].toarray()
            X = _bk_solve(ldu, ipiv, np.asfortranarray(rhs))
        prev = lev
    return neg, pos


def _cached_levels(M: SymmetricSparseMatrix, key: str, A: sp.csr_matrix) -> list[np.ndarray]:
    cache = M.__dict__.setdefault("_level_cache", {})
    if key not in cache:
        cache[key] = level_sets(A)
    return cache[key]


def inertia(M: SymmetricSparseMatrix, shift: float, tol: float = PIVOT_TOL) -> tuple[int, int]:
    """(negatives, positives) of ``M - shift*I``; raises ShiftCollisionError if near-singular."""
    A = M.matrix
    n = A.shape[0]
    scale = max(1.0, float(abs(A).max()) if A.nnz else 1.0)
    atol = tol * scale
    shifted = (A - shift * sp.identity(n, format="csr", dtype=A.dtype)).tocsr()
    try:
        if M.independent is not None and len(M.independent):
            ind = np.asarray(M.independent)
            diag = shifted.diagonal()[ind]
            if np.abs(diag).min() > atol:
                keep = np.setdiff1d(np.arange(n), ind)
                A_kk = shifted[keep][:, keep]
                A_ki = shifted[keep][:, ind]
                off = shifted[ind][:, ind] - sp.diags(diag)
                if off.count_nonzero() == 0:
                    schur = (A_kk - A_ki @ sp.diags(1.0 / diag) @ A_ki.T).tocsr()
                    neg, pos = block_inertia(schur, atol, _cached_levels(M, "schur", schur))
                    return neg + int((diag < 0).sum()), pos + int((diag > 0).sum())
        return block_inertia(shifted, atol, _cached_levels(M, "full", shifted))
    except ShiftCollisionError as exc:
        raise ShiftCollisionError(f"shift {shift!r} collides with the spectrum: {exc}", shift) from None


def inertia_count(M: SymmetricSparseMatrix, lam: float, tol: float = PIVOT_TOL) -> int:
    """Number of eigenvalues of ``M`` strictly below ``lam``."""
    return inertia(M, lam, tol)[0]


def dense_count(M: SymmetricSparseMatrix | np.ndarray, lam: float) -> int:
    """Oracle: eigenvalues below ``lam`` from a dense symmetric eigensolve."""
    arr = M.toarray() if hasattr(M, "toarray") else np.asarray(M)
    return int((np.linalg.eigvalsh(arr) < lam).sum())
