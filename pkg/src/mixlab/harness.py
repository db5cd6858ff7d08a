"""Convergence laboratory.

Generates sequences of meta-measures converging to a limit, measures the
distance at both levels (between mixing measures and between their
mixtures), tracks set-evaluation gaps on a battery of test sets, and
issues verdicts: a set with zero boundary mass under the limiting mixture
must see its gaps die out, a set with positive boundary mass is flagged as
violating the boundary condition and its gaps are left alone, and noisy
runs that neither settle nor decrease come back inconclusive rather than
pretending either way.

Randomness is derived per step from (seed, k), so serial and parallel
evaluation produce bitwise-identical reports.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvariantError, NonexpansiveViolationError
from .ground import TestSet
from .measures import DiscreteMeasure
from .mixing import MetaMeasure, mix
from .parametric import ThetaMeasure, pushforward
from .transport import MASS_RTOL, bl_distance, nested_w1, w1_exact

__all__ = [
    "SEQUENCE_KINDS",
    "VERDICTS",
    "harmonic_schedule",
    "geometric_schedule",
    "SequenceSpec",
    "StepRecord",
    "ConvergenceReport",
    "Certificate",
    "generate_sequence",
    "portmanteau_check",
    "continuity_certificate",
    "run_convergence",
]

SEQUENCE_KINDS = ("atom_shift", "weight_drift", "empirical_sample", "theta_path")
VERDICTS = ("converges", "violates_bcond", "inconclusive")

DEFAULT_GAP_TOL = 1e-6
DEFAULT_CERT_TOL = 1e-6
NONEXPANSIVE_SLACK = 1e-9


def harmonic_schedule(steps: int) -> np.ndarray:
    """Magnitudes 1/k for k = 1..steps."""
    return 1.0 / np.arange(1, steps + 1, dtype=np.float64)


def geometric_schedule(steps: int, ratio: float = 0.5) -> np.ndarray:
    """Magnitudes ratio^k for k = 1..steps (halving by default)."""
    if not 0.0 < ratio < 1.0:
        raise InvariantError(f"geometric ratio must lie in (0, 1), got {ratio}")
    return ratio ** np.arange(1, steps + 1, dtype=np.float64)


@dataclass
class SequenceSpec:
    """Recipe for a deterministic sequence of meta-measures.

    kind selects the generator; base is the limit (a MetaMeasure, or a
    ThetaMeasure for theta_path); schedule is the strictly decreasing
    array of step magnitudes (harmonic by default); seed fixes every
    random choice.  direction (atom_shift / theta_path) and start_weights
    (weight_drift) override the seeded random draw when given.
    """

    kind: str
    base: object
    steps: int
    schedule: np.ndarray | None = None
    seed: int = 0
    direction: np.ndarray | None = None
    start_weights: np.ndarray | None = None
    n_quantiles: int = 64

    def __post_init__(self):
        if self.kind not in SEQUENCE_KINDS:
            raise InvariantError(f"unknown sequence kind {self.kind!r}; expected one of {SEQUENCE_KINDS}")
        if not isinstance(self.steps, (int, np.integer)) or self.steps < 2:
            raise InvariantError(f"steps must be an integer >= 2, got {self.steps!r}")
        if self.kind == "theta_path":
            if not isinstance(self.base, ThetaMeasure):
                raise InvariantError("theta_path needs a ThetaMeasure base")
            if self.base.num_atoms == 0:
                raise InvariantError("theta_path base must have nonempty support")
        else:
            if not isinstance(self.base, MetaMeasure):
                raise InvariantError(f"{self.kind} needs a MetaMeasure base")
            if self.base.num_atoms == 0:
                raise InvariantError("sequence base must have nonempty support")
        if self.schedule is None:
            self.schedule = harmonic_schedule(self.steps)
        self.schedule = np.asarray(self.schedule, dtype=np.float64)
        if self.schedule.shape != (self.steps,):
            raise InvariantError(f"schedule must have length steps={self.steps}, got {self.schedule.size}")
        if not np.all(np.isfinite(self.schedule)) or np.any(self.schedule <= 0.0):
            raise InvariantError("schedule entries must be finite and positive")
        if np.any(np.diff(self.schedule) >= 0.0):
            raise InvariantError("schedule must be strictly decreasing")
        if self.kind == "weight_drift" and self.schedule[0] > 1.0:
            raise InvariantError("weight_drift schedule must start at <= 1 (convex interpolation)")


def _unit_vector(v: np.ndarray, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.sqrt(np.sum(v * v)))
    if not np.isfinite(norm) or norm == 0.0:
        raise InvariantError(f"{what} must be a nonzero finite vector")
    return v / norm


def generate_sequence(spec: SequenceSpec) -> tuple[MetaMeasure, list[MetaMeasure]]:
    """Materialize (nu_0, [nu_1 .. nu_K]) for the given spec."""
    schedule = spec.schedule
    if spec.kind == "atom_shift":
        base: MetaMeasure = spec.base
        if spec.direction is not None:
            direction = _unit_vector(spec.direction, "direction")
            if direction.size != base.ground_dim:
                raise InvariantError(
                    f"direction has dim {direction.size}, ground dim is {base.ground_dim}"
                )
        else:
            rng = np.random.default_rng((spec.seed, 0))
            direction = _unit_vector(rng.standard_normal(base.ground_dim), "direction")
        seq = [base.translate_atoms(s * direction) for s in schedule]
        return base, seq

    if spec.kind == "weight_drift":
        base = spec.base
        w0 = base.weights
        if spec.start_weights is not None:
            ws = np.asarray(spec.start_weights, dtype=np.float64)
            if ws.shape != w0.shape:
                raise InvariantError(
                    f"start_weights must have length {w0.size} (one per meta atom), got {ws.size}"
                )
            if np.any(ws < 0.0) or not np.all(np.isfinite(ws)):
                raise InvariantError("start_weights must be finite and nonnegative")
            total = math.fsum(ws)
            if abs(total - base.mass) > MASS_RTOL * max(total, base.mass):
                raise InvariantError(
                    f"start_weights total {total!r} must match the base meta mass {base.mass!r}"
                )
        else:
            rng = np.random.default_rng((spec.seed, 0))
            raw = rng.random(w0.size) + 1e-3
            ws = raw * (base.mass / math.fsum(raw))
        seq = [MetaMeasure(base.atoms, w0 + s * (ws - w0)) for s in schedule]
        return base, seq

    if spec.kind == "empirical_sample":
        base = spec.base
        p = base.weights / base.weights.sum()
        seq = []
        for k in range(1, spec.steps + 1):
            rng = np.random.default_rng((spec.seed, k))
            idx = rng.choice(base.num_atoms, size=k, replace=True, p=p)
            atoms = [base.atoms[i] for i in idx]
            seq.append(MetaMeasure(atoms, np.full(k, base.mass / k)))
        return base, seq

    # theta_path
    base = spec.base
    if spec.direction is not None:
        direction = _unit_vector(spec.direction, "direction")
        if direction.size != 2:
            raise InvariantError("theta_path direction must be a (d_mean, d_sd) pair")
    else:
        rng = np.random.default_rng((spec.seed, 0))
        direction = _unit_vector(rng.standard_normal(2), "direction")
    min_sd = min(t.sd for t in base.thetas)
    worst = min_sd + float(schedule.max()) * direction[1]
    if worst <= 0.0:
        raise InvariantError(
            f"theta_path would push sd to {worst} <= 0; shrink the schedule or change direction"
        )
    nu0 = pushforward(base, spec.n_quantiles)
    seq = [
        pushforward(base.shifted(s * direction[0], s * direction[1]), spec.n_quantiles)
        for s in schedule
    ]
    return nu0, seq


# ---------------------------------------------------------------------------
# Reports.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    k: int
    d_meta: float
    d_mixed: float
    gaps: tuple[float, ...]


@dataclass
class ConvergenceReport:
    """Per-step distances and set gaps, with verdicts per test set."""

    steps: list[StepRecord]
    set_ids: tuple[str, ...]
    boundary_masses: tuple[float, ...]
    verdicts: tuple[str, ...]
    metric: str
    gap_tol: float
    meta_mass: float
    norm_bound: float
    probability_ensemble: bool
    schedule: np.ndarray | None = None
    sets: tuple[TestSet, ...] = field(default=())

    @property
    def d_meta_series(self) -> np.ndarray:
        return np.array([s.d_meta for s in self.steps])

    @property
    def d_mixed_series(self) -> np.ndarray:
        return np.array([s.d_mixed for s in self.steps])

    def gap_series(self, i: int) -> np.ndarray:
        return np.array([s.gaps[i] for s in self.steps])

    @property
    def schedule_bound_constant(self) -> float | None:
        """Reported C with d_meta_k <= C * schedule_k (None without a schedule)."""
        if self.schedule is None or len(self.steps) == 0:
            return None
        return float(np.max(self.d_meta_series / self.schedule))

    def to_csv_text(self) -> str:
        header = ["k", "d_meta", "d_mixed"] + [f"gap_{sid}" for sid in self.set_ids]
        lines = [",".join(header)]
        for s in self.steps:
            row = [str(s.k), repr(s.d_meta), repr(s.d_mixed)] + [repr(g) for g in s.gaps]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv_text())

    def to_summary(self, certificate: "Certificate | None" = None) -> dict:
        out = {
            "metric": self.metric,
            "gap_tol": self.gap_tol,
            "steps": len(self.steps),
            "meta_mass": self.meta_mass,
            "norm_bound": self.norm_bound,
            "probability_ensemble": self.probability_ensemble,
            "set_ids": list(self.set_ids),
            "boundary_masses": {sid: bm for sid, bm in zip(self.set_ids, self.boundary_masses)},
            "verdicts": {sid: v for sid, v in zip(self.set_ids, self.verdicts)},
            "final_d_meta": self.steps[-1].d_meta if self.steps else None,
            "final_d_mixed": self.steps[-1].d_mixed if self.steps else None,
        }
        if self.schedule is not None:
            out["schedule_bound_constant"] = self.schedule_bound_constant
        if certificate is not None:
            out["certificate"] = certificate.to_dict()
        return out


def portmanteau_check(
    sequence: Sequence[MetaMeasure],
    nu0: MetaMeasure,
    sets: Sequence[TestSet],
    set_ids: Sequence[str] | None = None,
    metric: str = "w1",
    gap_tol: float = DEFAULT_GAP_TOL,
    workers: int = 1,
    schedule: np.ndarray | None = None,
) -> ConvergenceReport:
    """Evaluate distances and set gaps along a sequence and issue verdicts.

    For a set whose boundary carries no mass under the limiting mixture,
    gaps must be nonincreasing (within gap_tol) with final gap below
    gap_tol to earn 'converges'; otherwise the verdict is 'inconclusive'.
    A set with positive boundary mass gets 'violates_bcond' and its gaps
    are reported without judgment.
    """
    if metric not in ("w1", "bl"):
        raise InvariantError(f"metric must be 'w1' or 'bl', got {metric!r}")
    sequence = list(sequence)
    if not sequence:
        raise InvariantError("empty sequence")
    sets = list(sets)
    if set_ids is None:
        set_ids = tuple(f"set{i}" for i in range(len(sets)))
    else:
        set_ids = tuple(set_ids)
        if len(set_ids) != len(sets):
            raise InvariantError(f"{len(sets)} sets but {len(set_ids)} ids")

    mixed0 = mix(nu0)
    base_values = [mixed0.measure_of_set(a) for a in sets]
    boundary_masses = tuple(mixed0.boundary_mass(a) for a in sets)

    def eval_step(item: tuple[int, MetaMeasure]) -> StepRecord:
        k, nu_k = item
        mixed_k = mix(nu_k)
        d_meta = nested_w1(nu_k, nu0, ground=metric)[0]
        if metric == "w1":
            d_mixed = w1_exact(mixed_k, mixed0)[0]
        else:
            d_mixed = bl_distance(mixed_k, mixed0)
        gaps = tuple(
            abs(mixed_k.measure_of_set(a) - base_values[i]) for i, a in enumerate(sets)
        )
        return StepRecord(k=k, d_meta=d_meta, d_mixed=d_mixed, gaps=gaps)

    items = list(enumerate(sequence, start=1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            steps = list(pool.map(eval_step, items))
    else:
        steps = [eval_step(it) for it in items]

    verdicts = []
    for i in range(len(sets)):
        if boundary_masses[i] > 0.0:
            verdicts.append("violates_bcond")
            continue
        gaps = [s.gaps[i] for s in steps]
        nonincreasing = all(g2 <= g1 + gap_tol for g1, g2 in zip(gaps, gaps[1:]))
        if nonincreasing and gaps[-1] < gap_tol:
            verdicts.append("converges")
        else:
            verdicts.append("inconclusive")

    masses = [nu0.mass] + [nu.mass for nu in sequence]
    atom_masses = [a.mass for nu in [nu0, *sequence] for a in nu.atoms]
    probability = all(abs(m - 1.0) <= MASS_RTOL for m in masses) and all(
        abs(m - 1.0) <= MASS_RTOL for m in atom_masses
    )

    return ConvergenceReport(
        steps=steps,
        set_ids=set_ids,
        boundary_masses=boundary_masses,
        verdicts=tuple(verdicts),
        metric=metric,
        gap_tol=gap_tol,
        meta_mass=nu0.mass,
        norm_bound=max(nu.norm_bound for nu in [nu0, *sequence]),
        probability_ensemble=probability,
        schedule=None if schedule is None else np.asarray(schedule, dtype=np.float64),
        sets=tuple(sets),
    )


@dataclass(frozen=True)
class Certificate:
    """Outcome of the continuity check on a convergence report.

    certified: the final mixed-level distance fell below cert_tol while
    the meta-level distance decayed.  slope/intercept are a least-squares
    fit of d_mixed against d_meta; they describe the observed response and
    carry no claim beyond this run.
    """

    certified: bool
    final_d_meta: float
    final_d_mixed: float
    cert_tol: float
    bound_checked: bool
    bound_slack: float
    pairs: tuple[tuple[float, float], ...]
    fit_slope: float
    fit_intercept: float

    def to_dict(self) -> dict:
        return {
            "certified": self.certified,
            "final_d_meta": self.final_d_meta,
            "final_d_mixed": self.final_d_mixed,
            "cert_tol": self.cert_tol,
            "nonexpansive_bound_checked": self.bound_checked,
            "nonexpansive_slack": self.bound_slack,
            "fit_slope": self.fit_slope,
            "fit_intercept": self.fit_intercept,
            "pairs": [list(p) for p in self.pairs],
        }


def continuity_certificate(
    report: ConvergenceReport,
    cert_tol: float = DEFAULT_CERT_TOL,
    slack: float = NONEXPANSIVE_SLACK,
) -> Certificate:
    """Check the two continuity facts a finite run can witness.

    (a) the mixed-level distance tracked the meta-level distance down:
    certified iff the final d_mixed is below cert_tol; (b) on probability
    ensembles measured in Wasserstein-1, d_mixed_k <= d_meta_k + slack at
    every step.  A violation of (b) raises, naming the step: it would mean
    the solver found a cheaper meta coupling than any mixture coupling,
    which is impossible, so it is treated as a bug rather than data.
    """
    if len(report.steps) < 5:
        raise InvariantError(f"certificate needs at least 5 steps, got {len(report.steps)}")
    bound_checked = report.metric == "w1" and report.probability_ensemble
    if bound_checked:
        for s in report.steps:
            if s.d_mixed > s.d_meta + slack:
                raise NonexpansiveViolationError(
                    f"nonexpansive bound violated at step k={s.k}: "
                    f"d_mixed={s.d_mixed!r} > d_meta={s.d_meta!r} + {slack}",
                    step=s.k,
                )
    x = report.d_meta_series
    y = report.d_mixed_series
    var = float(np.var(x))
    if var == 0.0:
        slope, intercept = 0.0, float(np.mean(y))
    else:
        slope = float(np.cov(x, y, bias=True)[0, 1] / var)
        intercept = float(np.mean(y) - slope * np.mean(x))
    final = report.steps[-1]
    return Certificate(
        certified=bool(final.d_mixed < cert_tol),
        final_d_meta=final.d_meta,
        final_d_mixed=final.d_mixed,
        cert_tol=cert_tol,
        bound_checked=bound_checked,
        bound_slack=slack,
        pairs=tuple((s.d_meta, s.d_mixed) for s in report.steps),
        fit_slope=slope,
        fit_intercept=intercept,
    )


def run_convergence(
    spec: SequenceSpec,
    sets: Sequence[TestSet],
    set_ids: Sequence[str] | None = None,
    metric: str = "w1",
    gap_tol: float = DEFAULT_GAP_TOL,
    workers: int = 1,
) -> ConvergenceReport:
    """Generate the sequence for spec and run the portmanteau check on it."""
    nu0, sequence = generate_sequence(spec)
    return portmanteau_check(
        sequence,
        nu0,
        sets,
        set_ids=set_ids,
        metric=metric,
        gap_tol=gap_tol,
        workers=workers,
        schedule=spec.schedule,
    )
