"""Transport metrics that metrize narrow convergence on discrete measures.

Three routes are provided:

* ``w1_exact`` — exact Wasserstein-1 by successive shortest augmenting
  paths with node potentials on the bipartite support graph.  The returned
  potentials are a dual certificate: feasibility and complementary
  slackness hold to 1e-9, and the dual objective matches the primal cost.
* ``w1_sinkhorn`` — entropically regularized approximation in the log
  domain with epsilon scaling, for large sweeps.
* ``bl_distance`` — the bounded-Lipschitz (Dudley) distance.  The defining
  linear program (maximize sum f_i (p_i - q_i) subject to |f_i| <= 1 and
  |f_i - f_j| <= d_ij) is solved exactly through its flow dual: an
  unbalanced transport problem with a unit-cost slack node.  Unequal and
  zero masses are fine here.

``nested_w1`` lifts either ground metric to measures over measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConvergenceError, InvariantError, MassMismatchError, MixlabError
from .measures import MERGE_TOL, DiscreteMeasure, _merge_groups
from .mixing import MetaMeasure

__all__ = [
    "MASS_RTOL",
    "TransportPlan",
    "pairwise_distances",
    "w1_exact",
    "w1_sinkhorn",
    "bl_distance",
    "nested_w1",
]

# Relative tolerance for the equal-mass precondition of Wasserstein-1.
MASS_RTOL = 1e-9

# The solver stops once the undelivered supply is below this fraction of
# the total; the resulting marginal defect is far inside the 1e-9 plan
# feasibility contract.
_TERMINATION_RTOL = 1e-12


def pairwise_distances(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Dense Euclidean cost matrix between the rows of x and y."""
    diff = x[:, None, :] - y[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Coupling matrix with its cost and the dual certificate."""

    flow: np.ndarray  # (rows, cols), nonnegative
    costs: np.ndarray  # (rows, cols) ground costs
    cost: float  # sum(flow * costs)
    u: np.ndarray  # source potentials
    v: np.ndarray  # target potentials
    source_weights: np.ndarray
    target_weights: np.ndarray

    @property
    def rows(self) -> int:
        return self.flow.shape[0]

    @property
    def cols(self) -> int:
        return self.flow.shape[1]

    @property
    def row_sums(self) -> np.ndarray:
        return self.flow.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.flow.sum(axis=0)

    @property
    def dual_value(self) -> float:
        """Dual objective sum_i a_i u_i + sum_j b_j v_j."""
        return math.fsum((self.source_weights * self.u).tolist()) + math.fsum(
            (self.target_weights * self.v).tolist()
        )

    @property
    def max_dual_violation(self) -> float:
        """max over (i, j) of u_i + v_j - c_ij; feasibility means <= ~1e-9."""
        return float(np.max(self.u[:, None] + self.v[None, :] - self.costs))

    @property
    def max_slackness_violation(self) -> float:
        """max |u_i + v_j - c_ij| over the support of the flow."""
        mask = self.flow > 0.0
        if not np.any(mask):
            return 0.0
        gap = self.u[:, None] + self.v[None, :] - self.costs
        return float(np.max(np.abs(gap[mask])))

    def to_csv(self, path) -> None:
        """Write the support of the plan as rows (i, j, flow, cost_ij)."""
        lines = ["i,j,flow,cost_ij"]
        for i in range(self.rows):
            for j in range(self.cols):
                f = self.flow[i, j]
                if f > 0.0:
                    lines.append(f"{i},{j},{f!r},{self.costs[i, j]!r}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Exact solver: successive shortest augmenting paths with node potentials.
# ---------------------------------------------------------------------------


def _solve_transport(a: np.ndarray, b: np.ndarray, cost: np.ndarray):
    """Min-cost transportation between supplies a and demands b.

    Node layout: sources 0..n-1, sinks n..n+m-1, then the super source S
    and super sink T.  Reduced costs stay nonnegative (Johnson potentials
    updated by clamped Dijkstra distances), which keeps every Dijkstra run
    valid and yields the dual certificate u = -pot[sources],
    v = pot[sinks] on termination.

    Returns (flow, u, v).
    """
    n, m = cost.shape
    S, T = n + m, n + m + 1
    pot = np.zeros(n + m + 2)
    dist = np.empty(n + m + 2)
    parent = np.empty(n + m + 2, dtype=np.int64)
    done = np.empty(n + m + 2, dtype=bool)
    flow = np.zeros((n, m))
    rem_a = a.astype(np.float64).copy()
    rem_b = b.astype(np.float64).copy()
    total = min(math.fsum(a), math.fsum(b))
    if total <= 0.0:
        raise InvariantError("transport requires positive total mass on both sides")
    eps_term = _TERMINATION_RTOL * total
    eps_active = 1e-15 * max(total, 1.0)
    max_aug = 20 * (n + m) + 200

    for _ in range(max_aug):
        if min(math.fsum(rem_a), math.fsum(rem_b)) <= eps_term:
            break

        dist.fill(np.inf)
        parent.fill(-1)
        done.fill(False)
        dist[S] = 0.0
        pot_src = pot[:n]
        pot_snk = pot[n : n + m]

        while True:
            masked = np.where(done, np.inf, dist)
            node = int(np.argmin(masked))
            d_node = masked[node]
            if not np.isfinite(d_node):
                raise MixlabError("transport solver: no augmenting path (internal error)")
            if node == T:
                done[T] = True
                break
            done[node] = True

            if node == S:
                active = (rem_a > eps_active) & ~done[:n]
                if np.any(active):
                    nd = d_node + np.maximum(pot[S] - pot_src, 0.0)
                    upd = active & (nd < dist[:n])
                    dist[:n][upd] = nd[upd]
                    parent[:n][upd] = S
            elif node < n:
                nd = d_node + np.maximum(cost[node] + pot[node] - pot_snk, 0.0)
                sl = dist[n : n + m]
                upd = ~done[n : n + m] & (nd < sl)
                sl[upd] = nd[upd]
                parent[n : n + m][upd] = node
            else:
                j = node - n
                back = (flow[:, j] > 0.0) & ~done[:n]
                if np.any(back):
                    nd = d_node + np.maximum(pot[node] - pot_src - cost[:, j], 0.0)
                    upd = back & (nd < dist[:n])
                    dist[:n][upd] = nd[upd]
                    parent[:n][upd] = node
                if rem_b[j] > eps_active and not done[T]:
                    nd = d_node + max(pot[node] - pot[T], 0.0)
                    if nd < dist[T]:
                        dist[T] = nd
                        parent[T] = node

        pot += np.minimum(dist, dist[T])

        # Reconstruct the augmenting path and its bottleneck.
        chain = []
        node = T
        while node != S:
            p = int(parent[node])
            chain.append((p, node))
            node = p
        chain.reverse()

        delta = np.inf
        for x, y in chain:
            if x == S:
                delta = min(delta, rem_a[y])
            elif y == T:
                delta = min(delta, rem_b[x - n])
            elif x >= n:  # backward arc sink x -> source y
                delta = min(delta, flow[y, x - n])
        for x, y in chain:
            if x == S:
                rem_a[y] -= delta
            elif y == T:
                rem_b[x - n] -= delta
            elif x < n:
                flow[x, y - n] += delta
            else:
                flow[y, x - n] -= delta
    else:
        raise MixlabError("transport solver exceeded its augmentation budget (internal error)")

    return flow, -pot[:n].copy(), pot[n : n + m].copy()


def _transport_plan(wa, wb, cost) -> tuple[float, TransportPlan]:
    """Solve on mass-normalized weights, rescale flow and cost back."""
    ma = math.fsum(wa)
    mb = math.fsum(wb)
    scale = 0.5 * (ma + mb)
    flow, u, v = _solve_transport(np.asarray(wa) / ma, np.asarray(wb) / mb, cost)
    flow = flow * scale
    total_cost = float(np.sum(flow * cost))
    plan = TransportPlan(
        flow=flow,
        costs=cost,
        cost=total_cost,
        u=u,
        v=v,
        source_weights=np.asarray(wa, dtype=np.float64).copy(),
        target_weights=np.asarray(wb, dtype=np.float64).copy(),
    )
    return total_cost, plan


def _require_equal_mass(ma: float, mb: float, what: str) -> None:
    if abs(ma - mb) > MASS_RTOL * max(ma, mb):
        raise MassMismatchError(
            f"{what} requires equal total mass, got {ma!r} vs {mb!r}; "
            "normalize the inputs to a common mass or use bl_distance"
        )


def w1_exact(mu: DiscreteMeasure, nu: DiscreteMeasure) -> tuple[float, TransportPlan]:
    """Exact Wasserstein-1 distance and an optimal, dual-certified plan."""
    if mu.dim != nu.dim:
        raise InvariantError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if mu.is_empty or nu.is_empty:
        raise InvariantError("w1_exact requires nonempty measures (bl_distance accepts zero mass)")
    _require_equal_mass(mu.mass, nu.mass, "w1_exact")
    cost = pairwise_distances(mu.points, nu.points)
    return _transport_plan(mu.weights, nu.weights, cost)


# ---------------------------------------------------------------------------
# Entropic approximation.
# ---------------------------------------------------------------------------


def w1_sinkhorn(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    epsilon: float,
    max_iter: int = 10000,
    tol: float = 1e-6,
    debias: bool = False,
) -> float:
    """Entropically regularized transport cost <P, C> at regularization epsilon.

    Runs log-domain Sinkhorn with epsilon scaling (warm-started halvings
    from the cost diameter down to epsilon).  Converged means the L1
    marginal violation of the implied plan is at most ``tol``; otherwise a
    ConvergenceError carrying the residual is raised.  With ``debias`` the
    two self-costs are subtracted (Sinkhorn divergence, clamped at 0).
    """
    if mu.dim != nu.dim:
        raise InvariantError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if mu.is_empty or nu.is_empty:
        raise InvariantError("w1_sinkhorn requires nonempty measures")
    if not (epsilon > 0.0):
        raise InvariantError(f"epsilon must be positive, got {epsilon}")
    if max_iter < 1:
        raise InvariantError("max_iter must be >= 1")
    _require_equal_mass(mu.mass, nu.mass, "w1_sinkhorn")

    scale = 0.5 * (mu.mass + nu.mass)
    a = mu.weights / mu.mass
    b = nu.weights / nu.mass
    cost = pairwise_distances(mu.points, nu.points)
    la = np.log(a)
    lb = np.log(b)
    f = np.zeros(mu.num_atoms)
    g = np.zeros(nu.num_atoms)

    levels = []
    e = float(max(cost.max(), epsilon))
    while e > 1.5 * epsilon:
        levels.append(e)
        e *= 0.5
    levels.append(float(epsilon))

    used = 0
    residual = np.inf
    plan = None
    for li, eps in enumerate(levels):
        final = li == len(levels) - 1
        level_tol = tol if final else max(tol, 1e-3)
        while used < max_iter:
            f = -eps * logsumexp((g[None, :] - cost) / eps + lb[None, :], axis=1)
            g = -eps * logsumexp((f[:, None] - cost) / eps + la[:, None], axis=0)
            used += 1
            plan = np.exp((f[:, None] + g[None, :] - cost) / eps + la[:, None] + lb[None, :])
            residual = float(
                np.abs(plan.sum(axis=1) - a).sum() + np.abs(plan.sum(axis=0) - b).sum()
            )
            if residual <= level_tol:
                break
        if residual > level_tol:
            raise ConvergenceError(
                f"sinkhorn did not reach marginal tolerance {tol} within {max_iter} "
                f"iterations (residual {residual:.3e} at level epsilon={eps})",
                residual=residual,
            )

    value = float(np.sum(plan * cost)) * scale
    if debias:
        self_a = w1_sinkhorn(mu, mu, epsilon, max_iter=max_iter, tol=tol)
        self_b = w1_sinkhorn(nu, nu, epsilon, max_iter=max_iter, tol=tol)
        value = max(value - 0.5 * (self_a + self_b), 0.0)
    return value


# ---------------------------------------------------------------------------
# Bounded-Lipschitz distance.
# ---------------------------------------------------------------------------


def _union_support(mu: DiscreteMeasure, nu: DiscreteMeasure):
    """Merged support of both measures with per-measure weight vectors."""
    pts = np.concatenate([mu.points, nu.points], axis=0)
    wa = np.concatenate([mu.weights, np.zeros(nu.num_atoms)])
    wb = np.concatenate([np.zeros(mu.num_atoms), nu.weights])
    if pts.shape[0] == 0:
        return pts, wa, wb
    order = np.lexsort(pts.T[::-1])
    pts, wa, wb = pts[order], wa[order], wb[order]
    groups = _merge_groups(pts, MERGE_TOL)
    z = np.stack([pts[g[0]] for g in groups])
    pa = np.array([math.fsum(wa[g]) for g in groups])
    pb = np.array([math.fsum(wb[g]) for g in groups])
    return z, pa, pb


def bl_distance(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Bounded-Lipschitz distance, the exact optimum of the dual LP.

    The LP maximizes sum f_i (p_i - q_i) over the union support subject to
    |f_i| <= 1 and the pairwise Lipschitz constraints.  Its value equals a
    min-cost transport where surplus mass may also be created or destroyed
    at unit cost through a slack node, which is what is solved here; the
    triangle inequality of the Euclidean ground cost makes restricting to
    direct arcs lossless.
    """
    if mu.dim != nu.dim:
        raise InvariantError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    z, pa, pb = _union_support(mu, nu)
    c = pa - pb
    pos = c > 0.0
    neg = c < 0.0
    sup_pts, sup_w = z[pos], c[pos]
    dem_pts, dem_w = z[neg], -c[neg]
    p_tot = math.fsum(sup_w)
    n_tot = math.fsum(dem_w)
    if p_tot == 0.0 and n_tot == 0.0:
        return 0.0

    n_real_src = sup_pts.shape[0]
    n_real_snk = dem_pts.shape[0]
    n_src = n_real_src + (1 if n_tot > 0.0 else 0)
    n_snk = n_real_snk + (1 if p_tot > 0.0 else 0)
    cost = np.ones((n_src, n_snk))
    if n_real_src and n_real_snk:
        cost[:n_real_src, :n_real_snk] = pairwise_distances(sup_pts, dem_pts)
    if n_src > n_real_src and n_snk > n_real_snk:
        cost[n_real_src, n_real_snk] = 0.0

    supplies = np.concatenate([sup_w, [n_tot]] if n_tot > 0.0 else [sup_w])
    demands = np.concatenate([dem_w, [p_tot]] if p_tot > 0.0 else [dem_w])
    total = p_tot + n_tot
    flow, _, _ = _solve_transport(supplies / total, demands / total, cost)
    return float(np.sum(flow * cost)) * total


# ---------------------------------------------------------------------------
# Nested (second-level) distance.
# ---------------------------------------------------------------------------


def nested_w1(
    nu1: MetaMeasure, nu2: MetaMeasure, ground: str = "w1"
) -> tuple[float, TransportPlan]:
    """Optimal transport between meta-measures with a transport ground cost.

    ``ground="w1"`` uses exact Wasserstein-1 between first-level atoms and
    requires all atom masses to agree pairwise (within 1e-9 relative);
    ``ground="bl"`` uses the bounded-Lipschitz distance and lifts that
    restriction.
    """
    if ground not in ("w1", "bl"):
        raise InvariantError(f"ground must be 'w1' or 'bl', got {ground!r}")
    if nu1.num_atoms == 0 or nu2.num_atoms == 0:
        raise InvariantError("nested_w1 requires meta-measures with nonempty support")
    if nu1.ground_dim != nu2.ground_dim:
        raise InvariantError(f"ground dimension mismatch: {nu1.ground_dim} vs {nu2.ground_dim}")
    _require_equal_mass(nu1.mass, nu2.mass, "nested_w1")

    if ground == "w1":
        masses = [a.mass for a in nu1.atoms] + [a.mass for a in nu2.atoms]
        m_hi, m_lo = max(masses), min(masses)
        if m_hi == 0.0:
            raise InvariantError("all first-level atoms are empty; use ground='bl'")
        if m_hi - m_lo > MASS_RTOL * m_hi:
            raise MassMismatchError(
                f"w1 ground cost needs pairwise equal atom masses (range {m_lo!r}..{m_hi!r}); "
                "use ground='bl'"
            )

    cost = np.empty((nu1.num_atoms, nu2.num_atoms))
    for i, ai in enumerate(nu1.atoms):
        for j, bj in enumerate(nu2.atoms):
            try:
                if ground == "w1":
                    cost[i, j] = w1_exact(ai, bj)[0]
                else:
                    cost[i, j] = bl_distance(ai, bj)
            except MixlabError as e:
                raise type(e)(f"ground metric failed at atom pair ({i}, {j}): {e}") from e
    return _transport_plan(nu1.weights, nu2.weights, cost)
