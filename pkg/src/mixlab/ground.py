"""Euclidean ground space: points and closed test sets with exact boundary geometry.

Points are plain 1-D float64 arrays.  Test sets are restricted to three
closed families (axis-aligned boxes, balls, half-spaces) for which the
distance from a point to the topological boundary has a closed form, so
boundary masses of discrete measures are exact rather than estimated.
"""

from __future__ import annotations

import numpy as np

from .errors import InvariantError, SchemaError

__all__ = [
    "as_point",
    "distance",
    "TestSet",
    "Box",
    "Ball",
    "HalfSpace",
    "testset_from_dict",
]


def as_point(coords) -> np.ndarray:
    """Validate and normalize a point: finite float64 vector, -0.0 -> 0.0."""
    p = np.asarray(coords, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise InvariantError(f"a point must be a nonempty 1-D vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvariantError(f"point has non-finite coordinates: {p.tolist()}")
    p = p + 0.0  # collapse -0.0 so byte-level comparisons are stable
    p.setflags(write=False)
    return p


def distance(p, q) -> float:
    """Euclidean distance between two points of equal dimension."""
    p = as_point(p)
    q = as_point(q)
    if p.size != q.size:
        raise InvariantError(f"dimension mismatch: {p.size} vs {q.size}")
    return float(np.sqrt(np.sum((p - q) ** 2)))


def _ro(a) -> np.ndarray:
    out = np.asarray(a, dtype=np.float64) + 0.0
    out.setflags(write=False)
    return out


class TestSet:
    """A closed Borel test set with membership and exact boundary distance."""

    kind: str = ""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorized membership for an (k, d) array of points."""
        raise NotImplementedError

    def boundary_distances(self, points: np.ndarray) -> np.ndarray:
        """Vectorized Euclidean distance to the topological boundary."""
        raise NotImplementedError

    def contains(self, p) -> bool:
        p = as_point(p)
        self._check_dim(p.size)
        return bool(self.contains_many(p[None, :])[0])

    def boundary_distance(self, p) -> float:
        p = as_point(p)
        self._check_dim(p.size)
        return float(self.boundary_distances(p[None, :])[0])

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _check_dim(self, d: int) -> None:
        if d != self.dim:
            raise InvariantError(f"dimension mismatch: {self.kind} set has dim {self.dim}, point has dim {d}")


class Box(TestSet):
    """Closed axis-aligned box, the product of intervals [lo_i, hi_i]."""

    kind = "box"

    def __init__(self, lo, hi):
        self.lo = _ro(lo)
        self.hi = _ro(hi)
        if self.lo.ndim != 1 or self.lo.shape != self.hi.shape or self.lo.size == 0:
            raise InvariantError("box bounds must be 1-D vectors of equal length")
        if not (np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi))):
            raise InvariantError("box bounds must be finite")
        if np.any(self.lo > self.hi):
            raise InvariantError("box requires lo <= hi on every axis")

    @property
    def dim(self) -> int:
        return self.lo.size

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        return np.all((points >= self.lo) & (points <= self.hi), axis=1)

    def boundary_distances(self, points: np.ndarray) -> np.ndarray:
        # Outside: distance to the box equals distance to its boundary.
        # Inside: smallest margin to any face.
        gap = np.maximum(np.maximum(self.lo - points, points - self.hi), 0.0)
        outside = np.sqrt(np.sum(gap**2, axis=1))
        margin = np.min(np.minimum(points - self.lo, self.hi - points), axis=1)
        return np.where(outside > 0.0, outside, np.maximum(margin, 0.0))

    def to_dict(self) -> dict:
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}

    def __repr__(self):
        return f"Box(lo={self.lo.tolist()}, hi={self.hi.tolist()})"

    def __eq__(self, other):
        return (
            isinstance(other, Box)
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
        )


class Ball(TestSet):
    """Closed Euclidean ball {x : ||x - center|| <= r}."""

    kind = "ball"

    def __init__(self, center, r):
        self.center = as_point(center)
        self.r = float(r)
        if not np.isfinite(self.r) or self.r < 0.0:
            raise InvariantError(f"ball radius must be finite and >= 0, got {r}")

    @property
    def dim(self) -> int:
        return self.center.size

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        return np.sqrt(np.sum((points - self.center) ** 2, axis=1)) <= self.r

    def boundary_distances(self, points: np.ndarray) -> np.ndarray:
        return np.abs(np.sqrt(np.sum((points - self.center) ** 2, axis=1)) - self.r)

    def to_dict(self) -> dict:
        return {"kind": "ball", "center": self.center.tolist(), "r": self.r}

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, r={self.r})"

    def __eq__(self, other):
        return (
            isinstance(other, Ball)
            and self.r == other.r
            and np.array_equal(self.center, other.center)
        )


class HalfSpace(TestSet):
    """Closed half-space {x : n . x <= c} for a nonzero normal n."""

    kind = "halfspace"

    def __init__(self, normal, offset):
        self.normal = as_point(normal)
        self.offset = float(offset)
        if not np.isfinite(self.offset):
            raise InvariantError("half-space offset must be finite")
        self._norm = float(np.sqrt(np.sum(self.normal**2)))
        if self._norm == 0.0:
            raise InvariantError("half-space normal must be nonzero")

    @property
    def dim(self) -> int:
        return self.normal.size

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        return points @ self.normal <= self.offset

    def boundary_distances(self, points: np.ndarray) -> np.ndarray:
        return np.abs(points @ self.normal - self.offset) / self._norm

    def to_dict(self) -> dict:
        return {"kind": "halfspace", "n": self.normal.tolist(), "c": self.offset}

    def __repr__(self):
        return f"HalfSpace(n={self.normal.tolist()}, c={self.offset})"

    def __eq__(self, other):
        return (
            isinstance(other, HalfSpace)
            and self.offset == other.offset
            and np.array_equal(self.normal, other.normal)
        )


def testset_from_dict(d: dict) -> TestSet:
    """Build a test set from its JSON encoding; raises SchemaError on bad input."""
    if not isinstance(d, dict) or "kind" not in d:
        raise SchemaError("test set must be an object with a 'kind' field")
    kind = d["kind"]
    try:
        if kind == "box":
            return Box(d["lo"], d["hi"])
        if kind == "ball":
            return Ball(d["center"], d["r"])
        if kind == "halfspace":
            return HalfSpace(d["n"], d["c"])
    except KeyError as e:
        raise SchemaError(f"test set of kind '{kind}' is missing field {e}") from None
    raise SchemaError(f"unknown test set kind '{kind}' (expected box, ball, or halfspace)")
