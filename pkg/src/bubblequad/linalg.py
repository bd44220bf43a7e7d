"""Dense kernels: pivoted QR, numerical rank, triangular solves and NNLS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateCycle, SingularTriangular

EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class PivotedQR:
    """``A[:, perm] ~= Q @ R`` truncated to the numerical rank.

    ``rdiag`` keeps the full diagonal of the untruncated R so the rank can be
    re-evaluated with another tolerance.
    """

    Q: np.ndarray
    R: np.ndarray
    perm: np.ndarray
    rank: int
    rdiag: np.ndarray


def default_rank_tol(shape) -> float:
    return max(shape) * EPS


def _rank_from_diag(rdiag: np.ndarray, rank_tol: float) -> int:
    d = np.abs(rdiag)
    if d.size == 0 or d[0] == 0.0:
        return 0
    # |R_ii| is non-increasing, so the count of entries above the cutoff is the rank.
    return int(np.count_nonzero(d > rank_tol * d[0]))


def qr_colpivot(A, rank_tol: float | None = None) -> PivotedQR:
    """Householder QR with greedy column pivoting (LAPACK ``geqp3``).

    At each step the remaining column of largest 2-norm is moved forward, so
    ``|R_11| >= |R_22| >= ...``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if rank_tol is None:
        rank_tol = default_rank_tol(A.shape)
    Q, R, perm = scipy.linalg.qr(A, mode="economic", pivoting=True, check_finite=False)
    rdiag = np.diag(R).copy()
    r = _rank_from_diag(rdiag, rank_tol)
    return PivotedQR(Q=Q[:, :r], R=R[:r, :], perm=perm, rank=r, rdiag=rdiag)


def numerical_rank(qr: PivotedQR, rank_tol: float | None = None) -> int:
    """Largest r with ``|R_rr| > rank_tol * |R_11|``."""
    if rank_tol is None:
        rank_tol = default_rank_tol((qr.Q.shape[0], qr.R.shape[1]))
    return _rank_from_diag(qr.rdiag, rank_tol)


def tri_solve_transposed(R, p) -> np.ndarray:
    """Solve ``R.T @ y = p`` for upper-triangular ``R`` by forward substitution."""
    R = np.asarray(R, dtype=float)
    p = np.asarray(p, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] != p.shape[0]:
        raise ValueError(f"shape mismatch: R {R.shape}, p {p.shape}")
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0.0 or np.any(d < 1e-14 * d[0]):
        raise SingularTriangular("triangular factor is numerically singular")
    return scipy.linalg.solve_triangular(R, p, trans="T", lower=False, check_finite=False)


@dataclass(frozen=True, eq=False)
class NnlsResult:
    u: np.ndarray
    residual_norm: float
    active_set: np.ndarray
    iterations: int
    converged: bool = True
    kkt_tol: float = 0.0


_POS_THRESHOLD = 1e-14


def _passive_solve(A, b, passive):
    z = np.zeros(A.shape[1])
    cols = np.flatnonzero(passive)
    if cols.size:
        sol = scipy.linalg.lstsq(A[:, cols], b, lapack_driver="gelsy", check_finite=False)[0]
        z[cols] = sol
    return z


def nnls(A, b, kkt_tol: float | None = None, max_iter: int | None = None) -> NnlsResult:
    """Lawson-Hanson active-set solution of ``min ||A u - b||_2`` s.t. ``u >= 0``.

    Parameters
    ----------
    A : array_like, shape (m, k)
    b : array_like, shape (m,)
    kkt_tol : float, optional
        Stop once every zero-set gradient component ``(A^T (b - A u))_i`` is at
        most this value. Defaults to ``1e-12 * ||A^T b||_inf``.
    max_iter : int, optional
        Cap on outer iterations (default ``10 * k``). When hit, the current
        iterate is returned with ``converged=False``.

    Returns
    -------
    NnlsResult
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, k = A.shape
    if m < 1 or k < 1 or b.shape != (m,):
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
    Atb = A.T @ b
    if kkt_tol is None:
        kkt_tol = 1e-12 * float(np.max(np.abs(Atb)))
    if max_iter is None:
        max_iter = 10 * k

    x = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    blocked = np.zeros(k, dtype=bool)
    w = Atb.copy()
    bnorm = float(np.linalg.norm(b))
    prev_res = bnorm
    iterations = 0
    converged = True

    while True:
        cand = ~passive & ~blocked & (w > kkt_tol)
        if not cand.any():
            break
        if iterations >= max_iter:
            converged = False
            break
        # argmax returns the first maximum: smallest index wins ties.
        t = int(np.argmax(np.where(cand, w, -np.inf)))
        iterations += 1
        passive[t] = True
        z = _passive_solve(A, b, passive)
        if z[t] <= 0.0:
            # Gradient and LS solution disagree in sign: numerically dependent column.
            passive[t] = False
            blocked[t] = True
            continue

        inner = 0
        while True:
            thr = _POS_THRESHOLD * max(1.0, float(np.max(np.abs(z))))
            bad = passive & (z <= thr)
            if not bad.any():
                break
            inner += 1
            if inner > k:
                raise DegenerateCycle("NNLS inner loop failed to restore feasibility")
            idx = np.flatnonzero(bad)
            denom = x[idx] - z[idx]
            ratios = np.where(denom > 0, x[idx] / np.where(denom > 0, denom, 1.0), 0.0)
            j = int(np.argmin(ratios))
            alpha = min(max(float(ratios[j]), 0.0), 1.0)
            x = x + alpha * (z - x)
            drop = passive & (x <= thr)
            # The blocking index leaves even if round-off kept it slightly positive.
            drop[idx[j]] = True
            passive &= ~drop
            x[~passive] = 0.0
            z = _passive_solve(A, b, passive)
        x = z
        blocked[:] = False
        r = b - A @ x
        w = A.T @ r
        res = float(np.linalg.norm(r))
        assert res <= prev_res * (1.0 + 1e-10) + 1e-14 * bnorm, "NNLS residual increased"
        prev_res = res

    r = b - A @ x
    return NnlsResult(
        u=x,
        residual_norm=float(np.linalg.norm(r)),
        active_set=np.flatnonzero(x > 0),
        iterations=iterations,
        converged=converged,
        kkt_tol=float(kkt_tol),
    )
