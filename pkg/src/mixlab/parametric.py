"""Parametric families: the quantized normal location-scale family.

A parameter is a (mean, sd) pair on the real half-plane.  The family map
sends it to the n-point quantile quantization of N(mean, sd^2): equally
weighted atoms at the (i - 0.5)/n quantiles.  Midpoint quantization keeps
the construction deterministic and makes translation identities of the
Wasserstein distance exact, which the convergence probes rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import InvariantError, MixlabError, SchemaError
from .measures import DiscreteMeasure
from .mixing import MetaMeasure, mix

__all__ = [
    "ThetaPoint",
    "ThetaMeasure",
    "std_normal_quantiles",
    "mean_abs_quantile",
    "psi_normal",
    "pushforward",
    "mix_theta",
]

DEFAULT_QUANTILES = 64


@dataclass(frozen=True)
class ThetaPoint:
    """Location-scale parameter (mean, sd) with sd > 0."""

    mean: float
    sd: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.sd)):
            raise InvariantError(f"theta must be finite, got ({self.mean}, {self.sd})")
        if not self.sd > 0.0:
            raise InvariantError(f"sd must be positive, got {self.sd}")

    def to_dict(self) -> dict:
        return {"mean": self.mean, "sd": self.sd}

    @classmethod
    def from_dict(cls, d: dict) -> "ThetaPoint":
        if not isinstance(d, dict) or "mean" not in d or "sd" not in d:
            raise SchemaError("theta point must be an object with 'mean' and 'sd'")
        return cls(float(d["mean"]), float(d["sd"]))


class ThetaMeasure:
    """Finitely supported non-negative measure on the parameter half-plane."""

    __slots__ = ("thetas", "weights", "_mass")

    def __init__(self, thetas, weights):
        thetas = tuple(thetas)
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (len(thetas),):
            raise InvariantError(f"{len(thetas)} parameters but {w.size} weights")
        if not np.all(np.isfinite(w)):
            raise InvariantError("weights must be finite")
        if np.any(w < 0.0):
            raise InvariantError("negative weight (positive cone only)")
        for t in thetas:
            if not isinstance(t, ThetaPoint):
                raise InvariantError(f"expected ThetaPoint, got {type(t).__name__}")
        keep = w > 0.0
        self.thetas = tuple(t for t, k in zip(thetas, keep) if k)
        self.weights = w[keep]
        self.weights.setflags(write=False)
        self._mass = math.fsum(self.weights)

    @property
    def mass(self) -> float:
        return self._mass

    @property
    def num_atoms(self) -> int:
        return len(self.thetas)

    def __len__(self) -> int:
        return len(self.thetas)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ThetaMeasure)
            and self.thetas == other.thetas
            and np.array_equal(self.weights, other.weights)
        )

    def __repr__(self) -> str:
        return f"ThetaMeasure({self.num_atoms} parameters, mass={self.mass!r})"

    def shifted(self, d_mean: float, d_sd: float) -> "ThetaMeasure":
        """Translate every parameter by (d_mean, d_sd); sd must stay positive."""
        return ThetaMeasure(
            [ThetaPoint(t.mean + d_mean, t.sd + d_sd) for t in self.thetas], self.weights
        )

    def to_dict(self) -> dict:
        return {
            "thetas": [t.to_dict() for t in self.thetas],
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThetaMeasure":
        if not isinstance(d, dict):
            raise SchemaError("theta-measure must be a JSON object")
        for field in ("thetas", "weights"):
            if field not in d:
                raise SchemaError(f"theta-measure is missing field '{field}'")
        if not isinstance(d["thetas"], list):
            raise SchemaError("theta-measure field 'thetas' must be a list")
        return cls([ThetaPoint.from_dict(t) for t in d["thetas"]], d["weights"])


def std_normal_quantiles(n: int) -> np.ndarray:
    """Standard normal quantiles at midpoint levels (i - 0.5)/n, i = 1..n."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvariantError(f"n_quantiles must be a positive integer, got {n!r}")
    p = (np.arange(n, dtype=np.float64) + 0.5) / n
    return ndtri(p)


def mean_abs_quantile(n: int) -> float:
    """Average absolute midpoint quantile; the sd-sensitivity of the family."""
    z = std_normal_quantiles(n)
    return math.fsum(np.abs(z).tolist()) / n


def psi_normal(theta: ThetaPoint, n_quantiles: int = DEFAULT_QUANTILES) -> DiscreteMeasure:
    """Quantile quantization of N(mean, sd^2): n atoms of weight 1/n each."""
    z = std_normal_quantiles(n_quantiles)
    atoms = (theta.mean + theta.sd * z).reshape(-1, 1)
    weights = np.full(n_quantiles, 1.0 / n_quantiles)
    return DiscreteMeasure(atoms, weights, dim=1)


def pushforward(lam: ThetaMeasure, n_quantiles: int = DEFAULT_QUANTILES) -> MetaMeasure:
    """Image of lam under the family map: atoms become quantized normals.

    For a finitely supported lam this is the pushforward measure itself,
    exactly: each parameter atom maps to its quantized normal with the
    same weight, so total meta mass equals the mass of lam.
    """
    atoms = []
    for idx, theta in enumerate(lam.thetas):
        try:
            atoms.append(psi_normal(theta, n_quantiles))
        except MixlabError as e:
            raise type(e)(f"family map failed at parameter atom {idx}: {e}") from e
    return MetaMeasure(atoms, lam.weights)


def mix_theta(lam: ThetaMeasure, n_quantiles: int = DEFAULT_QUANTILES) -> DiscreteMeasure:
    """Mixture of the parametric family: mix composed with the pushforward."""
    if lam.num_atoms == 0:
        raise InvariantError("mix_theta requires a theta-measure with nonempty support")
    return mix(pushforward(lam, n_quantiles))
