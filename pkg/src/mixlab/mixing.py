"""Second-level measures and the mixing operator.

A MetaMeasure is a finitely supported non-negative measure whose atoms are
themselves discrete measures.  Mixing flattens it eagerly: mix(nu) is the
canonicalized weighted sum of the atoms, so evaluating the mixture on a
test set agrees with integrating the set-evaluation map against nu, term
by term and exactly.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import InvariantError, SchemaError
from .measures import DiscreteMeasure, linear_combination

__all__ = ["MetaMeasure", "meta_dirac", "mix", "mix_mass", "meta_linear_combination"]


class MetaMeasure:
    """Weighted finite collection of DiscreteMeasure atoms.

    Canonical form drops zero weights and merges atoms that are equal as
    canonical measures (weights summed, first occurrence kept).  The norm
    bound of the underlying measure class is recorded, not enforced: it is
    the largest atom mass, the finite witness of working inside a
    mass-bounded family.
    """

    __slots__ = ("atoms", "weights", "_mass")

    def __init__(self, atoms: Sequence[DiscreteMeasure], weights):
        atoms = list(atoms)
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (len(atoms),):
            raise InvariantError(f"{len(atoms)} atoms but {w.size} weights")
        if not np.all(np.isfinite(w)):
            raise InvariantError("meta weights must be finite")
        if np.any(w < 0.0):
            raise InvariantError("negative meta weight (positive cone only)")
        for a in atoms:
            if not isinstance(a, DiscreteMeasure):
                raise InvariantError(f"meta atoms must be DiscreteMeasure, got {type(a).__name__}")
        dims = {a.dim for a in atoms}
        if len(dims) > 1:
            raise InvariantError(f"meta atoms have mixed ground dimensions {sorted(dims)}")

        kept_atoms: list[DiscreteMeasure] = []
        kept_weights: list[list[float]] = []
        for a, wi in zip(atoms, w):
            if wi == 0.0:
                continue
            for k, b in enumerate(kept_atoms):
                if a == b:
                    kept_weights[k].append(float(wi))
                    break
            else:
                kept_atoms.append(a)
                kept_weights.append([float(wi)])

        self.atoms = tuple(kept_atoms)
        self.weights = np.array([ws[0] if len(ws) == 1 else math.fsum(ws) for ws in kept_weights])
        self.weights.setflags(write=False)
        self._mass = math.fsum(self.weights)

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def mass(self) -> float:
        """Total meta mass (nu of the whole first-level space)."""
        return self._mass

    @property
    def ground_dim(self) -> int | None:
        return self.atoms[0].dim if self.atoms else None

    @property
    def norm_bound(self) -> float:
        """sup of atom masses: the recorded norm bound of the atom family."""
        return max((a.mass for a in self.atoms), default=0.0)

    def __len__(self) -> int:
        return len(self.atoms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MetaMeasure)
            and np.array_equal(self.weights, other.weights)
            and self.atoms == other.atoms
        )

    def __repr__(self) -> str:
        return f"MetaMeasure({self.num_atoms} atoms, mass={self.mass!r}, norm_bound={self.norm_bound!r})"

    def translate_atoms(self, v) -> "MetaMeasure":
        """Translate every ground atom of every first-level measure by v."""
        return MetaMeasure([a.translate(v) for a in self.atoms], self.weights)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "atoms": [a.to_dict() for a in self.atoms],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetaMeasure":
        if not isinstance(d, dict):
            raise SchemaError("meta-measure must be a JSON object")
        for field in ("weights", "atoms"):
            if field not in d:
                raise SchemaError(f"meta-measure is missing field '{field}'")
        if not isinstance(d["atoms"], list):
            raise SchemaError("meta-measure field 'atoms' must be a list of measures")
        atoms = [DiscreteMeasure.from_dict(a) for a in d["atoms"]]
        return cls(atoms, d["weights"])


def meta_dirac(mu: DiscreteMeasure, weight: float = 1.0) -> MetaMeasure:
    """Meta point mass sitting on a single first-level measure."""
    return MetaMeasure([mu], [weight])


def mix(nu: MetaMeasure) -> DiscreteMeasure:
    """Flatten nu into the mixture measure sum_j w_j * atom_j.

    For every test set A the result satisfies
    mix(nu)(A) = sum_j w_j * atom_j(A), the finite form of evaluating the
    mixing integral on indicators; with discrete inputs the identity is a
    finite sum and holds exactly up to float rounding of the products.
    """
    if nu.num_atoms == 0:
        raise InvariantError("cannot mix a meta-measure with empty support into an unknown dimension")
    return linear_combination(nu.weights.tolist(), list(nu.atoms))


def mix_mass(nu: MetaMeasure) -> float:
    """Total mass of the mixture: sum_j w_j * mass(atom_j)."""
    return math.fsum(w * a.mass for w, a in zip(nu.weights, nu.atoms))


def meta_linear_combination(
    coeffs: Sequence[float], metas: Sequence[MetaMeasure]
) -> MetaMeasure:
    """Canonicalized sum of coeff_i * meta_i over the positive cone."""
    if len(coeffs) != len(metas):
        raise InvariantError(f"{len(coeffs)} coefficients but {len(metas)} meta-measures")
    if not metas:
        raise InvariantError("meta_linear_combination needs at least one meta-measure")
    dims = {m.ground_dim for m in metas if m.ground_dim is not None}
    if len(dims) > 1:
        raise InvariantError(f"meta-measures have mixed ground dimensions {sorted(dims)}")
    for c in coeffs:
        if not math.isfinite(c) or c < 0.0:
            raise InvariantError(f"coefficient {c} is not a finite nonnegative real (positive cone only)")
    atoms: list[DiscreteMeasure] = []
    weights: list[float] = []
    for c, m in zip(coeffs, metas):
        atoms.extend(m.atoms)
        weights.extend((c * m.weights).tolist())
    return MetaMeasure(atoms, weights)
