"""Applying rules to integrands, exactness trials and error-vs-degree studies."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .compress import DEFAULT_EPS, compress, nodes_and_weights
from .errors import NonFiniteValue
from .geometry import MultiBubble
from .lowdisc import sample_surface, sample_volume

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-17


@dataclass(frozen=True)
class Integrand:
    """Vectorized scalar function on R^3: maps an (n, 3) array to (n,)."""

    label: str
    func: Callable[[np.ndarray], np.ndarray]

    def __call__(self, points) -> np.ndarray:
        P = np.atleast_2d(np.asarray(points, dtype=float))
        return np.broadcast_to(np.asarray(self.func(P), dtype=float), (len(P),))


def apply(rule, f) -> float:
    """``sum_k w_k f(T_k)`` with compensated summation.

    ``rule`` is anything with ``nodes`` (or ``points``) and ``weights``:
    a :class:`CompressedRule` or a :class:`WeightedPointSet`.
    """
    nodes, weights = nodes_and_weights(rule)
    vals = np.asarray(f(nodes), dtype=float)
    vals = np.broadcast_to(vals, weights.shape)
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise NonFiniteValue(f"integrand is not finite at node {bad}: {nodes[bad].tolist()}")
    return math.fsum((weights * vals).tolist())


def test_functions(P0=(0.0, 0.0, 0.0)) -> list[Integrand]:
    """The three benchmark integrands: a C^4 radial power, a cosine, a Gaussian."""
    P0 = np.asarray(P0, dtype=float)

    def f1(P):
        return np.linalg.norm(P - P0, axis=1) ** 5

    def f2(P):
        return np.cos(P[:, 0] + P[:, 1] + P[:, 2])

    def f3(P):
        d = P - P0
        return np.exp(-np.einsum("ij,ij->i", d, d))

    return [Integrand("f1", f1), Integrand("f2", f2), Integrand("f3", f3)]


# pytest would otherwise collect the factory above as a test.
test_functions.__test__ = False


def random_linear_power(a, b, c, d, n: int) -> Integrand:
    def g(P):
        return (a * P[:, 0] + b * P[:, 1] + c * P[:, 2] + d) ** n

    return Integrand(f"({a:.3f}x+{b:.3f}y+{c:.3f}z+{d:.3f})^{n}", g)


def log_average(errors) -> float:
    e = np.maximum(np.asarray(errors, dtype=float), LOG_FLOOR)
    return float(np.exp(np.mean(np.log(e))))


@dataclass
class ExactnessTrials:
    degree: int
    seed: int
    coefficients: np.ndarray
    errors: np.ndarray
    log_average: float


def exactness_trials(rule, pts, n: int, trials: int = 100, seed: int = 0) -> ExactnessTrials:
    """Relative errors of ``rule`` against ``pts`` on random ``(ax+by+cz+d)^n``.

    Coefficients are drawn from ``numpy.random.default_rng(seed)``, uniform
    on ``[0, 1)``, four per trial.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    coeffs = rng.random((trials, 4))
    errors = np.empty(trials)
    for k, (a, b, c, d) in enumerate(coeffs):
        g = random_linear_power(a, b, c, d, n)
        ref = apply(pts, g)
        errors[k] = abs(apply(rule, g) - ref) / abs(ref)
    return ExactnessTrials(n, seed, coeffs, errors, log_average(errors))


def default_P0(bubble: MultiBubble, mode: str) -> np.ndarray:
    """Origin for volumes; north pole of the first ball for surfaces."""
    if mode == "volume":
        return np.zeros(3)
    ball = bubble.balls[0]
    return np.asarray(ball.center) + np.array([0.0, 0.0, ball.radius])


def sample(bubble: MultiBubble, mode: str, M0: int):
    if mode == "volume":
        return sample_volume(bubble, M0)
    if mode == "surface":
        return sample_surface(bubble, M0)
    raise ValueError(f"mode must be 'volume' or 'surface', got {mode!r}")


@dataclass
class ErrorStudy:
    mode: str
    degrees: list[int]
    labels: list[str]
    M0: int
    M: int
    reference_M0: int
    reference_values: list[float]
    qmc_values: list[float]
    qmc_errors: list[float]
    compressed_values: list[list[float]] = field(default_factory=list)
    compressed_errors: list[list[float]] = field(default_factory=list)
    cardinalities: list[int] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    P0: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def write_csv(self, path: str | Path) -> None:
        """Columns: degree, card, then E_qmc/E_bu per integrand label."""
        header = ["degree", "card"]
        for lab in self.labels:
            header += [f"E_qmc_{lab}", f"E_bu_{lab}"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i, deg in enumerate(self.degrees):
                row = [str(deg), str(self.cardinalities[i])]
                for j in range(len(self.labels)):
                    row += [f"{self.qmc_errors[j]:.17g}", f"{self.compressed_errors[i][j]:.17g}"]
                w.writerow(row)


def _rel(x: float, ref: float) -> float:
    return abs(x - ref) / abs(ref)


def error_study(bubble: MultiBubble, mode: str, degrees: Sequence[int], M0: int,
                reference_M0: int | None = None, P0=None, integrands=None,
                eps: float = DEFAULT_EPS, pts=None, rules=None, **compress_opts) -> ErrorStudy:
    """Relative errors of raw QMC and compressed rules against a denser QMC reference.

    ``M0`` and ``reference_M0`` count box points for volumes and points per
    sphere for surfaces. ``reference_M0`` defaults to ``100 * M0``. ``pts``
    and ``rules`` (a degree -> rule mapping) may be passed to reuse work.
    """
    if reference_M0 is None:
        reference_M0 = 100 * M0
    if reference_M0 <= M0:
        raise ValueError("reference_M0 must exceed M0")
    P0 = default_P0(bubble, mode) if P0 is None else np.asarray(P0, dtype=float)
    funcs = list(integrands) if integrands is not None else test_functions(P0)

    ref_pts = sample(bubble, mode, reference_M0)
    refs = [apply(ref_pts, f) for f in funcs]
    del ref_pts

    if pts is None:
        pts = sample(bubble, mode, M0)
    qmc_vals = [apply(pts, f) for f in funcs]
    qmc_errs = [_rel(v, r) for v, r in zip(qmc_vals, refs)]

    study = ErrorStudy(mode=mode, degrees=list(degrees), labels=[f.label for f in funcs],
                       M0=M0, M=len(pts), reference_M0=reference_M0,
                       reference_values=refs, qmc_values=qmc_vals, qmc_errors=qmc_errs,
                       P0=P0.tolist())
    for n in degrees:
        if rules is not None and n in rules:
            rule = rules[n]
        else:
            rule, _ = compress(pts, n, eps=eps, **compress_opts)
        vals = [apply(rule, f) for f in funcs]
        errs = [_rel(v, r) for v, r in zip(vals, refs)]
        study.compressed_values.append(vals)
        study.compressed_errors.append(errs)
        study.cardinalities.append(len(rule))
        study.residuals.append(rule.residual)
        for lab, e_bu, e_qmc in zip(study.labels, errs, qmc_errs):
            if e_bu > 10.0 * e_qmc:
                logger.info("degree %d, %s: compressed error %.2e exceeds 10x QMC error %.2e",
                            n, lab, e_bu, e_qmc)
    return study
