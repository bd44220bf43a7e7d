"""Unions of closed balls (multibubbles): membership, surfaces, sphere maps."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BubbleParseError


@dataclass(frozen=True)
class Ball:
    """Closed ball with a center in R^3 and a positive radius."""

    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        center = tuple(float(c) for c in self.center)
        if len(center) != 3:
            raise ValueError(f"center must have 3 coordinates, got {len(center)}")
        radius = float(self.radius)
        if not all(math.isfinite(c) for c in center) or not math.isfinite(radius):
            raise ValueError("ball data must be finite")
        if radius <= 0:
            raise ValueError(f"radius must be positive, got {radius}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)

    @property
    def area(self) -> float:
        return 4.0 * math.pi * self.radius**2


@dataclass(frozen=True)
class Box3:
    """Axis-aligned box ``[lo_1, hi_1] x [lo_2, hi_2] x [lo_3, hi_3]``."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("box corners must have 3 coordinates")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"degenerate box: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def volume(self) -> float:
        w = self.widths
        return float(w[0] * w[1] * w[2])


@dataclass(frozen=True)
class MultiBubble:
    """Ordered union of balls; ball indices tag surface points downstream."""

    balls: tuple[Ball, ...]

    def __post_init__(self):
        balls = tuple(self.balls)
        if not balls:
            raise ValueError("a multibubble needs at least one ball")
        if not all(isinstance(b, Ball) for b in balls):
            raise TypeError("balls must be Ball instances")
        object.__setattr__(self, "balls", balls)

    @classmethod
    def from_arrays(cls, centers, radii) -> "MultiBubble":
        centers = np.asarray(centers, dtype=float).reshape(-1, 3)
        radii = np.asarray(radii, dtype=float).reshape(-1)
        if len(centers) != len(radii):
            raise ValueError("centers and radii differ in length")
        return cls(tuple(Ball(tuple(c), r) for c, r in zip(centers, radii)))

    def __len__(self) -> int:
        return len(self.balls)

    @cached_property
    def centers(self) -> np.ndarray:
        c = np.array([b.center for b in self.balls], dtype=float)
        c.flags.writeable = False
        return c

    @cached_property
    def radii(self) -> np.ndarray:
        r = np.array([b.radius for b in self.balls], dtype=float)
        r.flags.writeable = False
        return r

    def to_dict(self) -> dict:
        return {"balls": [{"center": list(b.center), "radius": b.radius} for b in self.balls]}


def bounding_box(bubble: MultiBubble) -> Box3:
    """Tightest axis-aligned box containing every ball of ``bubble``."""
    c, r = bubble.centers, bubble.radii[:, None]
    return Box3(tuple((c - r).min(axis=0)), tuple((c + r).max(axis=0)))


def contains(bubble: MultiBubble, P) -> bool | np.ndarray:
    """Closed-ball membership test.

    ``P`` may be a single point of shape (3,) or an array of shape (n, 3); the
    result is a bool or a boolean array accordingly.
    """
    P = np.asarray(P, dtype=float)
    pts = np.atleast_2d(P)
    inside = np.zeros(len(pts), dtype=bool)
    # Per-ball loop keeps memory at O(n) for large point batches.
    for center, radius in zip(bubble.centers, bubble.radii):
        d = pts - center
        inside |= np.einsum("ij,ij->i", d, d) <= radius * radius
    return bool(inside[0]) if P.ndim == 1 else inside


def default_surface_tol(bubble: MultiBubble) -> float:
    return 1e-12 * float(bubble.radii.max())


def on_union_surface(bubble: MultiBubble, owner: int, P, tol: float | None = None):
    """True where a point of sphere ``owner`` is not strictly inside another ball.

    The point is assumed to lie on sphere ``owner``; that is not re-checked.
    Vectorized over an (n, 3) array of points sharing the same owner.
    """
    if tol is None:
        tol = default_surface_tol(bubble)
    P = np.asarray(P, dtype=float)
    pts = np.atleast_2d(P)
    keep = np.ones(len(pts), dtype=bool)
    for k, (center, radius) in enumerate(zip(bubble.centers, bubble.radii)):
        if k == owner:
            continue
        dist = np.linalg.norm(pts - center, axis=1)
        keep &= dist >= radius - tol
    return bool(keep[0]) if P.ndim == 1 else keep


def sphere_map(ball: Ball, t, phi) -> np.ndarray:
    """Area-preserving map from ``[-1, 1] x [0, 2*pi]`` onto the ball's sphere.

    ``(t, phi) -> C + r * (sqrt(1 - t^2) cos(phi), sqrt(1 - t^2) sin(phi), t)``.
    The surface Jacobian of the map is the constant ``r**2``.
    Accepts scalars (returns shape (3,)) or equal-length arrays (returns (n, 3)).
    """
    t = np.asarray(t, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    unit = np.stack([s * np.cos(phi), s * np.sin(phi), t], axis=-1)
    return np.asarray(ball.center) + ball.radius * unit


_BUBBLE_KEYS = {"balls"}
_BALL_KEYS = {"center", "radius"}


def _parse_ball(i: int, entry) -> Ball:
    where = f"balls[{i}]"
    if not isinstance(entry, dict):
        raise BubbleParseError(f"{where}: expected an object, got {type(entry).__name__}")
    unknown = set(entry) - _BALL_KEYS
    if unknown:
        raise BubbleParseError(f"{where}: unknown key {sorted(unknown)[0]!r}")
    missing = _BALL_KEYS - set(entry)
    if missing:
        raise BubbleParseError(f"{where}: missing key {sorted(missing)[0]!r}")
    center, radius = entry["center"], entry["radius"]
    if (
        not isinstance(center, list)
        or len(center) != 3
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in center)
    ):
        raise BubbleParseError(f"{where}: key 'center' must be a list of 3 numbers")
    if not isinstance(radius, (int, float)) or isinstance(radius, bool):
        raise BubbleParseError(f"{where}: key 'radius' must be a number")
    if not radius > 0:
        raise BubbleParseError(f"{where}: key 'radius' must be > 0, got {radius}")
    try:
        return Ball(tuple(center), radius)
    except ValueError as exc:
        raise BubbleParseError(f"{where}: {exc}") from None


def bubble_from_dict(doc) -> MultiBubble:
    """Strictly validate a decoded ``{"balls": [...]}`` document."""
    if not isinstance(doc, dict):
        raise BubbleParseError("top level must be an object with key 'balls'")
    unknown = set(doc) - _BUBBLE_KEYS
    if unknown:
        raise BubbleParseError(f"unknown key {sorted(unknown)[0]!r}")
    if "balls" not in doc:
        raise BubbleParseError("missing key 'balls'")
    balls = doc["balls"]
    if not isinstance(balls, list) or not balls:
        raise BubbleParseError("key 'balls' must be a non-empty list")
    return MultiBubble(tuple(_parse_ball(i, b) for i, b in enumerate(balls)))


def loads_bubble(text: str) -> MultiBubble:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BubbleParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return bubble_from_dict(doc)


def load_bubble(path: str | Path) -> MultiBubble:
    return loads_bubble(Path(path).read_text())


def dumps_bubble(bubble: MultiBubble) -> str:
    return json.dumps(bubble.to_dict(), indent=2)


# Example domains used throughout the tests and the CLI demos.
THREE_BALLS = MultiBubble(
    (
        Ball((0.0, 0.0, 0.0), 1.4),
        Ball((0.0, 1.3, -0.2), 0.9),
        Ball((2.5, 0.0, 1.0), 1.0),
    )
)


def random_bubble(s: int, seed: int = 0, box: Sequence[float] = (0.0, 2.0),
                  radii: Sequence[float] = (0.2, 0.6)) -> MultiBubble:
    """Random union of ``s`` balls, centers uniform in ``box**3``."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(box[0], box[1], size=(s, 3))
    r = rng.uniform(radii[0], radii[1], size=s)
    return MultiBubble.from_arrays(centers, r)
