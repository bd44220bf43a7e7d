"""Halton sequences and the weighted QMC point sets built from them.

Volume sets come from the Halton sequence of the bounding box filtered by
ball membership. Surface sets come from 2-D Halton points mapped onto every
sphere, filtered by visibility on the union surface and interleaved
round-robin across spheres so that every prefix is spread over the whole
surface.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ZeroRetained
from .geometry import Box3, MultiBubble, bounding_box, contains, on_union_surface, sphere_map

BASES_3D = (2, 3, 5)
BASES_2D = (2, 3)
VOLUME_OWNER = -1

_CHUNK = 1 << 20


def radical_inverse(base: int, index: int) -> float:
    """Van der Corput radical inverse of ``index`` in ``base``."""
    if base < 2:
        raise ValueError("base must be >= 2")
    if index < 1:
        raise ValueError("index must be >= 1")
    inv = 1.0 / base
    f = inv
    r = 0.0
    i = int(index)
    while i > 0:
        i, d = divmod(i, base)
        r += d * f
        f *= inv
    return r


def _radical_inverse_array(base: int, indices: np.ndarray) -> np.ndarray:
    # Same operation order as radical_inverse, so results are bit-identical.
    i = np.array(indices, dtype=np.int64)
    r = np.zeros(i.shape)
    inv = 1.0 / base
    f = inv
    while np.any(i > 0):
        r += (i % base) * f
        i //= base
        f *= inv
    return r


def halton_point(index: int, bases=BASES_3D) -> np.ndarray:
    return np.array([radical_inverse(b, index) for b in bases])


def halton(start: int, count: int, bases=BASES_3D) -> np.ndarray:
    """Halton points with indices ``start, ..., start + count - 1`` as (count, d)."""
    if start < 1:
        raise ValueError("Halton indices start at 1")
    idx = np.arange(start, start + count, dtype=np.int64)
    return np.stack([_radical_inverse_array(b, idx) for b in bases], axis=1)


@dataclass(frozen=True, eq=False)
class WeightedPointSet:
    """Ordered QMC sample with per-point weights.

    ``owner`` holds the sphere index of surface points and ``VOLUME_OWNER``
    for volume samples. ``source_index`` is the 1-based Halton index that
    produced each point (per sphere for surfaces).
    """

    points: np.ndarray
    weights: np.ndarray
    owner: np.ndarray
    total_generated: int
    measure_estimate: float
    source_index: np.ndarray = field(default=None)
    kind: str = "volume"
    box: Box3 | None = None

    def __post_init__(self):
        n = len(self.points)
        if not (len(self.weights) == len(self.owner) == n):
            raise ValueError("points, weights and owner must have equal length")
        if n and not np.all(self.weights > 0):
            raise ValueError("weights must be positive")
        for name in ("points", "weights", "owner", "source_index"):
            arr = getattr(self, name)
            if isinstance(arr, np.ndarray):
                arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.points)

    @property
    def nodes(self) -> np.ndarray:
        return self.points

    @property
    def M(self) -> int:
        return len(self.points)

    def header(self) -> dict:
        return {
            "kind": self.kind,
            "M0": int(self.total_generated),
            "M": int(self.M),
            "measure_estimate": float(self.measure_estimate),
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("x,y,z,weight,owner\n")
            for (x, y, z), w, o in zip(self.points, self.weights, self.owner):
                fh.write(f"{x:.17g},{y:.17g},{z:.17g},{w:.17g},{int(o)}\n")

    def write_header_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.header(), indent=2) + "\n")


def sample_volume(bubble: MultiBubble, M0: int) -> WeightedPointSet:
    """Filter the first ``M0`` bounding-box Halton points by ball membership."""
    if M0 < 1:
        raise ValueError("M0 must be >= 1")
    box = bounding_box(bubble)
    lo, width = np.asarray(box.lo), box.widths
    kept, kept_idx = [], []
    for start in range(1, M0 + 1, _CHUNK):
        count = min(_CHUNK, M0 + 1 - start)
        pts = lo + width * halton(start, count, BASES_3D)
        mask = contains(bubble, pts)
        kept.append(pts[mask])
        kept_idx.append(np.flatnonzero(mask) + start)
    points = np.concatenate(kept)
    M = len(points)
    if M == 0:
        raise ZeroRetained(f"none of the {M0} box points fell inside the union")
    vol = box.volume
    return WeightedPointSet(
        points=points,
        weights=np.full(M, vol / M0),
        owner=np.full(M, VOLUME_OWNER, dtype=np.int64),
        total_generated=M0,
        measure_estimate=vol * M / M0,
        source_index=np.concatenate(kept_idx),
        kind="volume",
        box=box,
    )


def sphere_parameters(M0: int) -> tuple[np.ndarray, np.ndarray]:
    """First ``M0`` Halton points scaled to ``[-1, 1] x [0, 2*pi]``."""
    h = halton(1, M0, BASES_2D)
    return 2.0 * h[:, 0] - 1.0, 2.0 * math.pi * h[:, 1]


def round_robin_order(counts) -> tuple[np.ndarray, np.ndarray]:
    """Interleaving schedule for lists of the given lengths.

    Returns ``(owner, rank)`` arrays: the k-th entry of the interleaved
    sequence is element ``rank[k]`` of list ``owner[k]``. Exhausted lists are
    skipped.
    """
    counts = np.asarray(counts, dtype=np.int64)
    owner = np.repeat(np.arange(len(counts)), counts)
    rank = np.concatenate([np.arange(c) for c in counts]) if len(counts) else np.zeros(0, np.int64)
    order = np.lexsort((owner, rank))
    return owner[order], rank[order]


def sample_surface(bubble: MultiBubble, M0_per_sphere: int) -> WeightedPointSet:
    """Mapped Halton points on the visible part of every sphere, interleaved."""
    if M0_per_sphere < 1:
        raise ValueError("M0_per_sphere must be >= 1")
    t, phi = sphere_parameters(M0_per_sphere)
    per_sphere, per_index = [], []
    for j, ball in enumerate(bubble.balls):
        pts = sphere_map(ball, t, phi)
        keep = on_union_surface(bubble, j, pts)
        per_sphere.append(pts[keep])
        per_index.append(np.flatnonzero(keep) + 1)
    counts = [len(p) for p in per_sphere]
    if sum(counts) == 0:
        raise ZeroRetained("no sphere contributes a visible surface point")
    owner, rank = round_robin_order(counts)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    flat = offsets[owner] + rank
    points = np.concatenate(per_sphere)[flat]
    source_index = np.concatenate(per_index)[flat]
    sphere_w = np.array([b.area / M0_per_sphere for b in bubble.balls])
    measure = float(sum(b.area * c / M0_per_sphere for b, c in zip(bubble.balls, counts)))
    return WeightedPointSet(
        points=points,
        weights=sphere_w[owner],
        owner=owner,
        total_generated=M0_per_sphere * len(bubble),
        measure_estimate=measure,
        source_index=source_index,
        kind="surface",
        box=bounding_box(bubble),
    )
