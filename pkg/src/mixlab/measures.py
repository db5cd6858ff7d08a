"""Finitely supported non-negative measures on R^d.

A measure is a weighted finite point set, canonicalized at construction:
zero-weight atoms dropped, atoms sorted lexicographically by coordinates,
and atoms closer than MERGE_TOL merged by summing weights.  Canonical form
makes equality, serialization, and the exact algebraic identities of the
mixing operator well defined.  Instances are immutable.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import InvariantError, SchemaError
from .ground import TestSet

__all__ = [
    "MERGE_TOL",
    "BOUNDARY_TOL",
    "DiscreteMeasure",
    "dirac",
    "linear_combination",
]

# Atoms within this Euclidean distance are one support point.  Tests place
# atoms analytically; deliberate perturbations stay >= 1e-6, so a 1e-12
# merge radius absorbs construction roundoff without eating real atoms.
MERGE_TOL = 1e-12

# An atom belongs to the boundary of a test set when its exact boundary
# distance is at most this.
BOUNDARY_TOL = 1e-12


def _merge_groups(points: np.ndarray, tol: float) -> list[list[int]]:
    """Single-linkage groups of near-duplicate rows of a lexsorted array.

    Points are already sorted by leading coordinate, so only a sliding
    window on that coordinate needs pairwise checks.
    """
    n = points.shape[0]
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tol2 = tol * tol
    for i in range(n):
        j = i + 1
        while j < n and points[j, 0] - points[i, 0] <= tol:
            if np.sum((points[i] - points[j]) ** 2) <= tol2:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
            j += 1
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [groups[k] for k in sorted(groups)]


class DiscreteMeasure:
    """Non-negative measure with finite support, in canonical form."""

    __slots__ = ("points", "weights", "_mass")

    def __init__(self, points, weights, dim: int | None = None):
        pts = np.asarray(points, dtype=np.float64)
        w = np.asarray(weights, dtype=np.float64)
        if pts.size == 0:
            if dim is None:
                if pts.ndim == 2 and pts.shape[1] > 0:
                    dim = pts.shape[1]
                else:
                    raise InvariantError("empty measure needs an explicit dim")
            pts = pts.reshape(0, dim)
        if pts.ndim != 2 or pts.shape[1] == 0:
            raise InvariantError(f"points must form an (n, d) array with d >= 1, got shape {pts.shape}")
        if dim is not None and pts.shape[1] != dim:
            raise InvariantError(f"points have dim {pts.shape[1]}, expected {dim}")
        if w.shape != (pts.shape[0],):
            raise InvariantError(f"{pts.shape[0]} atoms but {w.size} weights")
        if not np.all(np.isfinite(pts)):
            raise InvariantError("atom coordinates must be finite")
        if not np.all(np.isfinite(w)):
            raise InvariantError("weights must be finite")
        if np.any(w < 0.0):
            bad = int(np.argmin(w))
            raise InvariantError(f"negative weight {w[bad]} at atom {bad} (positive cone only)")

        pts = pts + 0.0  # normalize -0.0
        keep = w > 0.0
        pts, w = pts[keep], w[keep]

        if pts.shape[0] > 1:
            order = np.lexsort(pts.T[::-1])
            pts, w = pts[order], w[order]
            groups = _merge_groups(pts, MERGE_TOL)
            if len(groups) < pts.shape[0]:
                pts = np.stack([pts[g[0]] for g in groups])
                w = np.array([w[g[0]] if len(g) == 1 else math.fsum(w[g]) for g in groups])
                zero = w > 0.0  # merged weights stay > 0, but keep the guard cheap
                pts, w = pts[zero], w[zero]

        self.points = pts
        self.weights = w
        self.points.setflags(write=False)
        self.weights.setflags(write=False)
        self._mass = math.fsum(w)

    # -- basic queries ------------------------------------------------

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def num_atoms(self) -> int:
        return self.points.shape[0]

    @property
    def mass(self) -> float:
        """Total mass, the sum of all atom weights."""
        return self._mass

    @property
    def is_empty(self) -> bool:
        return self.points.shape[0] == 0

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DiscreteMeasure)
            and self.dim == other.dim
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def __repr__(self) -> str:
        return f"DiscreteMeasure({self.num_atoms} atoms in R^{self.dim}, mass={self.mass!r})"

    # -- evaluation maps ----------------------------------------------

    def integrate(self, f: Callable[[np.ndarray], float]) -> float:
        """Sum of weight_i * f(atom_i) in canonical index order.

        Raises if f returns a non-finite value, naming the offending atom.
        """
        terms = []
        for i in range(self.num_atoms):
            v = float(f(self.points[i]))
            if not math.isfinite(v):
                raise InvariantError(
                    f"integrand returned {v} at atom {i} = {self.points[i].tolist()}"
                )
            terms.append(self.weights[i] * v)
        return math.fsum(terms)

    def measure_of_set(self, a: TestSet) -> float:
        """mu(A): total weight of atoms inside the closed set A.  Exact."""
        self._check_set_dim(a)
        if self.is_empty:
            return 0.0
        inside = a.contains_many(self.points)
        return math.fsum(self.weights[inside])

    def boundary_mass(self, a: TestSet) -> float:
        """mu(boundary of A): total weight of atoms with zero boundary distance."""
        self._check_set_dim(a)
        if self.is_empty:
            return 0.0
        on_boundary = a.boundary_distances(self.points) <= BOUNDARY_TOL
        return math.fsum(self.weights[on_boundary])

    # -- geometry helpers ----------------------------------------------

    def translate(self, v) -> "DiscreteMeasure":
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.dim,):
            raise InvariantError(f"translation vector must have dim {self.dim}")
        return DiscreteMeasure(self.points + v, self.weights, dim=self.dim)

    def scaled(self, c: float) -> "DiscreteMeasure":
        if c < 0.0:
            raise InvariantError(f"negative coefficient {c} (positive cone only)")
        return DiscreteMeasure(self.points, self.weights * c, dim=self.dim)

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "points": [row.tolist() for row in self.points],
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteMeasure":
        if not isinstance(d, dict):
            raise SchemaError("measure must be a JSON object")
        for field in ("dim", "points", "weights"):
            if field not in d:
                raise SchemaError(f"measure is missing field '{field}'")
        if not isinstance(d["dim"], int) or d["dim"] < 1:
            raise SchemaError(f"measure field 'dim' must be a positive integer, got {d['dim']!r}")
        return cls(d["points"], d["weights"], dim=d["dim"])

    def _check_set_dim(self, a: TestSet) -> None:
        if a.dim != self.dim:
            raise InvariantError(f"dimension mismatch: measure dim {self.dim}, set dim {a.dim}")


def dirac(point, weight: float = 1.0) -> DiscreteMeasure:
    """Point mass of the given weight."""
    p = np.asarray(point, dtype=np.float64).reshape(1, -1)
    return DiscreteMeasure(p, [weight])


def linear_combination(
    coeffs: Sequence[float], measures: Sequence[DiscreteMeasure]
) -> DiscreteMeasure:
    """Canonicalized sum of coeff_i * measure_i over the positive cone."""
    if len(coeffs) != len(measures):
        raise InvariantError(f"{len(coeffs)} coefficients but {len(measures)} measures")
    if not measures:
        raise InvariantError("linear_combination needs at least one measure")
    dims = {m.dim for m in measures}
    if len(dims) != 1:
        raise InvariantError(f"measures have mixed dimensions {sorted(dims)}")
    dim = dims.pop()
    for c in coeffs:
        if not math.isfinite(c) or c < 0.0:
            raise InvariantError(f"coefficient {c} is not a finite nonnegative real (positive cone only)")
    pts = np.concatenate([m.points for m in measures], axis=0)
    w = np.concatenate([c * m.weights for c, m in zip(coeffs, measures)])
    return DiscreteMeasure(pts, w, dim=dim)
