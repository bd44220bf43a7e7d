"""Bottom-up Tchakaloff compression of weighted QMC point sets.

The QMC moments of a polynomial basis are matched by a sparse nonnegative
re-weighting of a prefix of the point sequence. Prefixes grow geometrically
until the NNLS residual drops below tolerance; each prefix is first
orthogonalized by pivoted QR so the NNLS matrix stays well conditioned.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import RankZero, ResidualNotMet, SingularTriangular
from .geometry import Box3
from .linalg import nnls, qr_colpivot, tri_solve_transposed
from .lowdisc import WeightedPointSet
from .polybasis import ChebBasis, cheb_vandermonde, dim_poly

DEFAULT_EPS = 1e-10
DEFAULT_GROWTH = 2.0

_BLOCK_ENTRIES = 1 << 22


@dataclass(frozen=True, eq=False)
class CompressedRule:
    """Positive-weight rule extracted from a QMC point set.

    ``indices`` are the positions of the nodes within the originating
    point sequence.
    """

    nodes: np.ndarray
    weights: np.ndarray
    degree: int
    residual: float
    basis_rank: int
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("x,y,z,weight\n")
            for (x, y, z), w in zip(self.nodes, self.weights):
                fh.write(f"{x:.17g},{y:.17g},{z:.17g},{w:.17g}\n")

    def to_dict(self) -> dict:
        return {
            "degree": int(self.degree),
            "cardinality": int(len(self)),
            "residual": float(self.residual),
            "basis_rank": int(self.basis_rank),
            "indices": [int(i) for i in self.indices],
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
        }


@dataclass
class IterationRecord:
    m: int
    residual: float
    nnls_iterations: int
    elapsed: float
    nnls_converged: bool = True


@dataclass
class CompressionReport:
    M: int
    degree: int
    moments_preserved: int
    iterations: list[IterationRecord] = field(default_factory=list)
    final_m: int = 0
    compression_ratio: float = float("nan")
    select_seconds: float = 0.0
    moment_seconds: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        # JSON has no inf: singular prefixes are reported as null residuals.
        for rec in d["iterations"]:
            if not math.isfinite(rec["residual"]):
                rec["residual"] = None
        return d


def _row_block(ncols: int) -> int:
    return max(1, _BLOCK_ENTRIES // max(ncols, 1))


def _basis_box(pts: WeightedPointSet) -> Box3:
    if pts.box is not None:
        return pts.box
    lo, hi = pts.points.min(axis=0), pts.points.max(axis=0)
    pad = np.where(hi > lo, 0.0, 1.0)
    return Box3(tuple(lo - pad), tuple(hi + pad))


def qmc_moments(pts: WeightedPointSet, basis: ChebBasis) -> np.ndarray:
    """Weighted moments ``p_j = sum_i w_i p_j(P_i)`` over the whole point set."""
    p = np.zeros(basis.ncols)
    step = _row_block(basis.ncols)
    for s in range(0, len(pts), step):
        V = cheb_vandermonde(basis, pts.points[s : s + step])
        p += pts.weights[s : s + step] @ V
    return p


def select_surface_basis(pts: WeightedPointSet, n: int, rank_tol: float | None = None,
                         box: Box3 | None = None) -> ChebBasis:
    """Restrict the degree-``n`` Chebyshev basis to a numerically independent subset.

    Uses pivoted QR of the full Vandermonde matrix on the first
    ``min(2 * dim_poly(n), M)`` points; the leading pivot columns up to the
    numerical rank are kept, sorted ascending. On volume samples this keeps
    every column.
    """
    full = ChebBasis.full(box or _basis_box(pts), n)
    m1 = min(2 * dim_poly(n), len(pts))
    V = cheb_vandermonde(full, pts.points[:m1])
    qr = qr_colpivot(V, rank_tol)
    if qr.rank == 0:
        raise RankZero(f"Vandermonde matrix of degree {n} vanishes on the first {m1} points")
    return full.with_mask(np.sort(qr.perm[: qr.rank]))


def compress(pts: WeightedPointSet, n: int, eps: float = DEFAULT_EPS, m1: int | None = None,
             growth: float = DEFAULT_GROWTH, rank_tol: float | None = None,
             nnls_opts: dict | None = None, basis: ChebBasis | None = None):
    """Extract a compressed rule matching all degree-``n`` QMC moments.

    Parameters
    ----------
    pts : WeightedPointSet
        Ordered QMC sample; prefixes of it are tried as candidate node sets.
    n : int
        Polynomial degree.
    eps : float
        Acceptance threshold on the moment residual in the orthogonalized basis.
    m1 : int, optional
        First prefix size, default ``2 * N`` with ``N`` the basis size.
    growth : float
        Factor between successive prefix sizes.
    rank_tol : float, optional
        Relative tolerance for the rank-revealing basis selection.
    nnls_opts : dict, optional
        Extra keyword arguments for :func:`bubblequad.linalg.nnls`.
    basis : ChebBasis, optional
        Skip basis selection and use this basis.

    Returns
    -------
    (CompressedRule, CompressionReport)

    Raises
    ------
    ResidualNotMet
        If the residual is still ``>= eps`` with the whole point set.
    """
    if growth <= 1.0:
        raise ValueError("growth must be > 1")
    nnls_opts = dict(nnls_opts or {})
    M = len(pts)

    t0 = time.perf_counter()
    if basis is None:
        basis = select_surface_basis(pts, n, rank_tol)
    N = basis.ncols
    if M < N:
        raise ValueError(f"need at least {N} points, got {M}")
    t1 = time.perf_counter()
    p = qmc_moments(pts, basis)
    t2 = time.perf_counter()

    report = CompressionReport(M=M, degree=n, moments_preserved=N,
                               select_seconds=t1 - t0, moment_seconds=t2 - t1)
    m = min(m1 if m1 is not None else 2 * N, M)
    if m < 1:
        raise ValueError("m1 must be >= 1")
    while True:
        start = time.perf_counter()
        V = cheb_vandermonde(basis, pts.points[:m])
        qr = qr_colpivot(V)
        u = None
        residual, nnls_it, converged = math.inf, 0, False
        if qr.rank == N:
            try:
                ptil = tri_solve_transposed(qr.R, p[qr.perm])
            except SingularTriangular:
                ptil = None
            if ptil is not None:
                res = nnls(qr.Q.T, ptil, **nnls_opts)
                u, residual = res.u, res.residual_norm
                nnls_it, converged = res.iterations, res.converged
        report.iterations.append(
            IterationRecord(m, residual, nnls_it, time.perf_counter() - start, converged)
        )
        report.final_m = m
        if residual < eps:
            idx = np.flatnonzero(u > 0)
            rule = CompressedRule(
                nodes=pts.points[idx].copy(),
                weights=u[idx].copy(),
                degree=n,
                residual=residual,
                basis_rank=N,
                indices=idx,
            )
            report.compression_ratio = M / len(idx)
            return rule, report
        if m == M:
            raise ResidualNotMet(
                f"degree {n}: residual {residual:.3e} >= {eps:.1e} on all {M} points", report
            )
        m = min(math.ceil(growth * m), M)


def validate_rule(rule, pts: WeightedPointSet, basis: ChebBasis) -> float:
    """Relative moment mismatch ``||V(nodes)^T w - p|| / ||p||`` in the raw basis."""
    p = qmc_moments(pts, basis)
    q = np.zeros_like(p)
    nodes, weights = nodes_and_weights(rule)
    step = _row_block(basis.ncols)
    for s in range(0, len(weights), step):
        q += weights[s : s + step] @ cheb_vandermonde(basis, nodes[s : s + step])
    return float(np.linalg.norm(q - p) / np.linalg.norm(p))


def nodes_and_weights(obj):
    nodes = getattr(obj, "nodes", None)
    if nodes is None:
        nodes = obj.points
    return np.asarray(nodes, dtype=float), np.asarray(obj.weights, dtype=float)


def write_rule_json(path: str | Path, rule: CompressedRule, report: CompressionReport | None = None,
                    extra: dict | None = None) -> None:
    doc = rule.to_dict()
    if report is not None:
        doc["report"] = report.to_dict()
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
