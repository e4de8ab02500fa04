"""Communication-topology reconfiguration after a sensor deterioration event.

Given an information snapshot of the team right after a deterioration event,
pick a new connected topology within an edge-modification budget and a new
doubly stochastic weight matrix on it.  Two optimization strategies are
provided plus a greedy baseline:

* agent-centric ("accg"): maximize the one-round information trace received
  by the deteriorated robot, sum_j A_dj Tr(Omega_j).  Linear in the edge
  weights, solved as an LP; the spectral-connectivity constraint is enforced
  lazily with eigenvector cutting planes.
* team-centric ("tccg"): minimize the team-average one-round posterior trace
  (1/n) sum_i Tr(Delta_i^-1) with Delta_i = sum_j A_ij Omega_j, a smooth
  convex function of the edge weights, solved by away-step Frank-Wolfe with
  exact line search and a lazified LP oracle.
* greedy: wire the deteriorated robot to the non-neighbor with the smallest
  posterior trace and fall back to Metropolis weights.

The outer problem (which edges to toggle) is solved exactly by enumerating
every connected topology within the budget and running the inner solver on
each; ties resolve to the lexicographically smallest modification.

Edge weights live in the polytope  { w : w_e >= EDGE_FLOOR,
sum_{e at i} w_e <= 1 - eps_diag }  so every kept edge carries strictly
positive weight and every diagonal entry stays at least eps_diag.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from .linalg import min_eigval, pd_inverse, sym
from .network import (MU_DEFAULT, Configuration, Topology, enumerate_topologies,
                      is_connected_bfs, is_connected_spectral, metropolis_matrix,
                      metropolis_weights, spectral_margin)

EPS_DIAG_DEFAULT = 1e-3
EDGE_FLOOR = 1e-6
CUT_LIMIT = 80
FW_GAP_TOL = 1e-6
FW_MAX_ITERS = 500
SPECTRAL_TOL = -1e-9
# relative tolerance under which two topologies' objectives count as tied
TIE_REL_TOL = 1e-9

ACCG = "accg"
TCCG = "tccg"
STRATEGIES = (ACCG, TCCG)


@dataclass
class InfoSnapshot:
    """Team information state captured right after a deterioration event.

    info_matrices holds each robot's post-innovation information matrix
    (computed with the already-deteriorated noise covariance), stacked
    (n, s, s).  prev_config is the configuration in force before the event.
    """

    info_matrices: np.ndarray
    deteriorated_id: int
    prev_config: Configuration
    n_e: int
    mu: float = MU_DEFAULT
    eps_diag: float = EPS_DIAG_DEFAULT

    def __post_init__(self) -> None:
        mats = np.asarray(self.info_matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValueError(f"info_matrices must be (n, s, s), got {mats.shape}")
        n = mats.shape[0]
        if n != self.prev_config.n:
            raise ValueError("info_matrices count does not match prev_config")
        for i in range(n):
            if min_eigval(mats[i]) <= 0 or np.max(np.abs(mats[i] - mats[i].T)) > 1e-9:
                raise ValueError(f"info matrix {i} must be symmetric positive definite")
        if not 0 <= self.deteriorated_id < n:
            raise ValueError("deteriorated_id out of range")
        if self.n_e < 0:
            raise ValueError("n_e must be >= 0")
        if not 0 < self.mu < 1:
            raise ValueError("mu must lie in (0, 1)")
        if not 0 < self.eps_diag < 1:
            raise ValueError("eps_diag must lie in (0, 1)")
        self.info_matrices = mats

    @property
    def n(self) -> int:
        return self.info_matrices.shape[0]

    @property
    def traces(self) -> np.ndarray:
        return np.einsum("ijj->i", self.info_matrices)


class InnerResult(NamedTuple):
    weights: np.ndarray
    objective: float
    iterations: int


@dataclass
class SolverReport:
    """Outcome of one reconfiguration solve."""

    chosen: Configuration
    objective_value: float
    topologies_evaluated: int
    inner_iterations: int
    wall_time: float


@lru_cache(maxsize=512)
def _incidence(topology: Topology) -> np.ndarray:
    """Node-edge incidence (n, m): 1 when the edge touches the node.

    Cached per topology; callers treat the result as read-only.
    """
    m = len(topology.edges)
    inc = np.zeros((topology.n, m))
    for k, (i, j) in enumerate(topology.edges):
        inc[i, k] = inc[j, k] = 1.0
    return inc


@lru_cache(maxsize=512)
def _edge_index_arrays(topology: Topology) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint index vectors (i_k), (j_k) of the topology's edge list."""
    if not topology.edges:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    arr = np.asarray(topology.edges, dtype=int)
    return arr[:, 0], arr[:, 1]


def _weights_from_edges(topology: Topology, w: np.ndarray) -> np.ndarray:
    a = np.zeros((topology.n, topology.n))
    ii, jj = _edge_index_arrays(topology)
    a[ii, jj] = w
    a[jj, ii] = w
    np.fill_diagonal(a, 1.0 - a.sum(axis=1))
    return a


def _metropolis_edge_values(topology: Topology) -> np.ndarray:
    a = metropolis_matrix(topology)
    return np.array([a[i, j] for i, j in topology.edges])


def _in_polytope(topology: Topology, w: np.ndarray, eps_diag: float,
                 tol: float = 1e-9) -> bool:
    if np.min(w) < EDGE_FLOOR - tol:
        return False
    inc = _incidence(topology)
    return bool(np.max(inc @ w) <= 1.0 - eps_diag + tol)


def _violated_vectors(n: int, weights: np.ndarray, mu: float) -> list[np.ndarray]:
    """Eigenvectors of the connectivity certificate with negative eigenvalue.

    Always returns at least the most-violated one so a cut loop can make
    progress even at the tolerance boundary.
    """
    cert = np.full((n, n), 1.0 / n) + (1.0 - mu) * np.eye(n) - weights
    vals, vecs = np.linalg.eigh(sym(cert))
    out = [vecs[:, k] for k in range(n) if vals[k] < SPECTRAL_TOL]
    if not out:
        out.append(vecs[:, 0])
    return out


def _cut_from_vector(topology: Topology, v: np.ndarray, mu: float
                     ) -> tuple[np.ndarray, float]:
    """Hyperplane valid for every spectrally feasible point, from one vector.

    Feasible edge values satisfy
    -sum_e w_e (v_i - v_j)^2 <= <v,1>^2/n - mu ||v||^2.
    """
    ii, jj = _edge_index_arrays(topology)
    coef = -((v[ii] - v[jj]) ** 2)
    rhs = float(v.sum() ** 2 / topology.n - mu * np.dot(v, v))
    return coef, rhs


def _solve_edge_lp(c_min: np.ndarray, topology: Topology, eps_diag: float,
                   cuts: list[tuple[np.ndarray, float]]) -> np.ndarray | None:
    """Minimize c_min . w over the edge polytope plus the given cuts.

    Dense cut stacks can stall the dual simplex with a status-unknown
    failure, so that case retries on the interior-point variant before
    reporting no solution.
    """
    m = len(topology.edges)
    a_rows = [_incidence(topology)]
    b_rows = [np.full(topology.n, 1.0 - eps_diag)]
    for coef, rhs in cuts:
        a_rows.append(coef.reshape(1, -1))
        b_rows.append(np.array([rhs]))
    a_ub = np.vstack(a_rows)
    b_ub = np.concatenate(b_rows)
    bounds = [(EDGE_FLOOR, None)] * m
    # the default primal tolerance (~1e-7) lets solutions sit on the wrong
    # side of fresh cuts, which stalls the cutting-plane loop
    opts = {"primal_feasibility_tolerance": 1e-10}
    res = linprog(c=c_min, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs",
                  options=opts)
    if not res.success and res.status == 4:
        res = linprog(c=c_min, A_ub=a_ub, b_ub=b_ub, bounds=bounds,
                      method="highs-ipm")
    if not res.success:
        return None
    return np.asarray(res.x)


def _bisect_to_anchor(topology: Topology, w: np.ndarray, anchor: np.ndarray,
                      mu: float) -> np.ndarray:
    """Pull edge values toward a spectrally feasible anchor until feasible."""
    def feasible(alpha: float) -> bool:
        cand = (1.0 - alpha) * w + alpha * anchor
        return spectral_margin(_weights_from_edges(topology, cand), mu) >= SPECTRAL_TOL

    lo, hi = 0.0, 1.0
    # 1e-6 on the mixing parameter is far below anything the objective can
    # resolve; tighter bisection just burns eigendecompositions
    for _ in range(40):
        if hi - lo <= 1e-6:
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return (1.0 - hi) * w + hi * anchor


def _bisect_to_metropolis(topology: Topology, w: np.ndarray, mu: float) -> np.ndarray:
    """Pull edge values toward the Metropolis point until spectrally feasible."""
    w_m = _metropolis_edge_values(topology)
    if spectral_margin(_weights_from_edges(topology, w_m), mu) < SPECTRAL_TOL:
        raise RuntimeError("Metropolis point itself violates the spectral certificate")
    return _bisect_to_anchor(topology, w, w_m, mu)


def _require_solvable(topology: Topology, snap: InfoSnapshot) -> None:
    if not is_connected_bfs(topology):
        raise ValueError("topology must be connected")
    if topology.n != snap.n:
        raise ValueError("topology size does not match snapshot")
    caps_ok = np.all(topology.degrees() * EDGE_FLOOR <= 1.0 - snap.eps_diag)
    if not caps_ok:
        raise ValueError("edge polytope is empty for this topology")


def _agent_objective_coef(topology: Topology, snap: InfoSnapshot) -> np.ndarray:
    """Per-edge gain of the deteriorated robot's fused information trace."""
    t = snap.traces
    d = snap.deteriorated_id
    coef = np.zeros(len(topology.edges))
    for k, (i, j) in enumerate(topology.edges):
        if i == d:
            coef[k] = t[j] - t[d]
        elif j == d:
            coef[k] = t[i] - t[d]
    return coef


def accg_inner(topology: Topology, snap: InfoSnapshot,
               extra_candidates: list[np.ndarray] | None = None) -> InnerResult:
    """Agent-centric inner solve on a fixed topology.

    Maximizes sum_j A_dj Tr(Omega_j) over the edge polytope subject to the
    spectral-connectivity certificate.  The LP relaxation is tightened with
    eigenvector cuts while a feasible anchor, maintained by bisecting each
    LP point toward the best known feasible one, tracks a lower bound; the
    loop stops once the two bounds meet.  Among optimal points a second LP
    prefers the one with the largest total edge weight (best mixing) at
    negligible objective cost.
    """
    _require_solvable(topology, snap)
    t = snap.traces
    d = snap.deteriorated_id
    m = len(topology.edges)
    if m == 0:
        return InnerResult(np.eye(1), float(t[d]), 0)

    coef = _agent_objective_coef(topology, snap)

    w_metro = _metropolis_edge_values(topology)
    if spectral_margin(_weights_from_edges(topology, w_metro), snap.mu) < SPECTRAL_TOL:
        raise RuntimeError("Metropolis point itself violates the spectral certificate")
    w_anchor = w_metro
    lower = float(coef @ w_anchor)
    cuts: list[tuple[np.ndarray, float]] = []
    lp_calls = 0
    prev_gap = np.inf
    stalled = 0
    for _ in range(CUT_LIMIT):
        cand = _solve_edge_lp(-coef, topology, snap.eps_diag, cuts)
        lp_calls += 1
        if cand is None:
            raise RuntimeError("agent-centric LP infeasible")
        upper = float(coef @ cand)
        a = _weights_from_edges(topology, cand)
        if spectral_margin(a, snap.mu) >= SPECTRAL_TOL:
            w_anchor = cand
            break
        for v in _violated_vectors(topology.n, a, snap.mu):
            cuts.append(_cut_from_vector(topology, v, snap.mu))
        # pull the vertex back to feasibility along two directions: the best
        # known point (exploits) and the deep interior point (escapes the
        # tangential zigzag that stalls the anchor segment near the optimum)
        boundary = _bisect_to_anchor(topology, cand, w_anchor, snap.mu)
        via_metro = _bisect_to_anchor(topology, cand, w_metro, snap.mu)
        if float(coef @ via_metro) > float(coef @ boundary):
            boundary = via_metro
        if float(coef @ boundary) > lower:
            w_anchor = boundary
            lower = float(coef @ boundary)
        # tangent at the boundary point cuts much deeper than at the LP vertex
        a_b = _weights_from_edges(topology, boundary)
        for v in _violated_vectors(topology.n, a_b, snap.mu):
            cuts.append(_cut_from_vector(topology, v, snap.mu))
        gap = upper - lower
        # the cutting-plane tail converges slowly; 1e-7 relative is orders of
        # magnitude below the 1e-3 tolerance anything downstream checks
        if gap <= 1e-7 * max(1.0, abs(upper)):
            break
        # plateau guard: once the certified gap is below 1e-4 relative, three
        # consecutive sub-0.1% improvements are not worth more LP rounds
        small = gap <= 1e-4 * max(1.0, abs(upper))
        stalled = stalled + 1 if small and gap >= prev_gap * (1.0 - 1e-3) else 0
        if stalled >= 3:
            break
        prev_gap = gap
    w = w_anchor

    # Secondary objective: among (near-)optimal points, maximize total edge
    # weight to keep the network well mixed.  Fall back silently if the
    # spectral cuts make this refinement infeasible.
    v_star = float(coef @ w)
    guard = [(coef * -1.0, -(v_star - 1e-9))]
    cand = _solve_edge_lp(np.full(m, -1.0), topology, snap.eps_diag, cuts + guard)
    lp_calls += 1
    if cand is not None:
        if spectral_margin(_weights_from_edges(topology, cand), snap.mu) < SPECTRAL_TOL:
            cand = _bisect_to_anchor(topology, cand, w, snap.mu)
        if float(coef @ cand) >= v_star - 1e-9 * max(1.0, abs(v_star)):
            w = cand

    best_w, best_obj = w, float(t[d] + coef @ w)
    for cand in extra_candidates or []:
        if cand.shape != (m,) or not _in_polytope(topology, cand, snap.eps_diag):
            continue
        if spectral_margin(_weights_from_edges(topology, cand), snap.mu) < SPECTRAL_TOL:
            continue
        obj = float(t[d] + coef @ cand)
        if obj > best_obj:
            best_w, best_obj = cand, obj
    return InnerResult(_weights_from_edges(topology, best_w), best_obj, lp_calls)


def _team_cost(topology: Topology, omegas: np.ndarray, w: np.ndarray) -> float:
    a = _weights_from_edges(topology, w)
    delta = np.einsum("ij,jab->iab", a, omegas)
    inv = np.linalg.inv(0.5 * (delta + np.transpose(delta, (0, 2, 1))))
    return float(np.einsum("ijj->", inv)) / topology.n


def _team_cost_grad(topology: Topology, omegas: np.ndarray, w: np.ndarray) -> np.ndarray:
    n = topology.n
    a = _weights_from_edges(topology, w)
    delta = np.einsum("ij,jab->iab", a, omegas)
    inv = np.linalg.inv(0.5 * (delta + np.transpose(delta, (0, 2, 1))))
    sq = inv @ inv
    # pair[i, j] = Tr(inv_i^2 Omega_j); d Tr(Delta_i^-1)/d w_e picks up
    # (Omega_j - Omega_i) for each edge e = (i, j).
    pair = np.einsum("iab,jab->ij", sq, omegas)
    grad = np.empty(len(topology.edges))
    for k, (i, j) in enumerate(topology.edges):
        grad[k] = -(pair[i, j] - pair[i, i] + pair[j, i] - pair[j, j]) / n
    return grad


def _segment_derivs(delta: np.ndarray, e_dir: np.ndarray, alpha: float,
                    n: int) -> tuple[float, float, float]:
    """Value and first two derivatives of the team cost along delta + alpha*e_dir."""
    m = np.linalg.inv(delta + alpha * e_dir)
    m = 0.5 * (m + np.transpose(m, (0, 2, 1)))
    me = m @ e_dir
    phi = float(np.einsum("iaa->", m)) / n
    dphi = -float(np.einsum("iab,iba->", me, m)) / n
    d2phi = 2.0 * float(np.einsum("iab,ibc,ica->", me, me, m)) / n
    return phi, dphi, d2phi


def _exact_line_search(delta: np.ndarray, e_dir: np.ndarray, n: int,
                       slope0: float, alpha_max: float) -> tuple[float, float]:
    """Minimize the team cost along alpha in [0, alpha_max] by safeguarded Newton.

    The restriction is smooth and convex, so the derivative is increasing;
    Newton steps that leave the current bracket fall back to bisection.
    Returns (alpha, cost at alpha).
    """
    phi_end, dphi_end, _ = _segment_derivs(delta, e_dir, alpha_max, n)
    if dphi_end <= 0.0:
        return alpha_max, phi_end
    lo, hi = 0.0, alpha_max
    alpha = alpha_max * slope0 / (slope0 - dphi_end)  # secant through bracket ends
    phi = phi_end
    for _ in range(60):
        alpha = min(max(alpha, lo + 1e-16 * alpha_max), hi - 1e-16 * alpha_max)
        phi, dphi, d2phi = _segment_derivs(delta, e_dir, alpha, n)
        if dphi > 0.0:
            hi = alpha
        else:
            lo = alpha
        if hi - lo < 1e-13 * max(1.0, alpha_max) or abs(dphi) < 1e-14:
            break
        if d2phi > 0.0:
            step = alpha - dphi / d2phi
        else:
            step = 0.5 * (lo + hi)
        alpha = step if lo < step < hi else 0.5 * (lo + hi)
    return alpha, phi


def tccg_inner(topology: Topology, snap: InfoSnapshot,
               extra_candidates: list[np.ndarray] | None = None,
               gap_tol: float = FW_GAP_TOL, max_iters: int = FW_MAX_ITERS) -> InnerResult:
    """Team-centric inner solve on a fixed topology.

    Minimizes (1/n) sum_i Tr(Delta_i^-1) by away-step Frank-Wolfe from the
    Metropolis warm start (kept as the initial atom of the running convex
    combination): linearize, compare the forward vertex against the worst
    active atom, and move by an exact line search until the duality gap
    drops below gap_tol or the iteration cap is hit.  Away steps keep the
    convergence linear when the optimum sits on a face of the polytope, and
    the LP oracle is lazified: a pool of previously seen vertices answers
    most linearized queries, with the true LP consulted only when the pool
    cannot certify enough descent.
    """
    _require_solvable(topology, snap)
    omegas = snap.info_matrices
    n = topology.n
    m = len(topology.edges)
    if m == 0:
        return InnerResult(np.eye(1), float(np.trace(pd_inverse(omegas[0]))), 0)

    w = _metropolis_edge_values(topology)
    atoms = [w.copy()]
    lams = [1.0]
    pool: list[np.ndarray] = []
    threshold = np.inf
    f_cur = _team_cost(topology, omegas, w)
    iters = 0
    for _ in range(max_iters):
        grad = _team_cost_grad(topology, omegas, w)
        iters += 1
        vertex = None
        gap = -np.inf
        if pool:
            scores = np.asarray(pool) @ grad
            k_best = int(np.argmin(scores))
            gap_cached = float(grad @ w - scores[k_best])
            if gap_cached >= threshold:
                vertex = pool[k_best]
                gap = gap_cached
        if vertex is None:
            fresh = _solve_edge_lp(grad, topology, snap.eps_diag, cuts=[])
            if fresh is None:
                raise RuntimeError("team-centric LP oracle infeasible")
            gap_fresh = float(grad @ (w - fresh))
            if not any(np.array_equal(fresh, p) for p in pool):
                pool.append(fresh)
            if gap_fresh <= gap_tol:
                break
            if not np.isfinite(threshold):
                threshold = gap_fresh / 2.0
            if gap_fresh < threshold:
                # nothing reaches the current target; aim lower and retry
                threshold = max(gap_fresh / 2.0, gap_tol / 2.0)
                continue
            vertex = fresh
            gap = gap_fresh
        away_idx = max(range(len(atoms)), key=lambda k: float(grad @ atoms[k]))
        away_gap = float(grad @ (atoms[away_idx] - w))
        if gap >= away_gap:
            direction = vertex - w
            alpha_max = 1.0
            use_away = False
        else:
            direction = w - atoms[away_idx]
            lam_u = lams[away_idx]
            alpha_max = lam_u / (1.0 - lam_u) if lam_u < 1.0 - 1e-12 else 1e6
            use_away = True
        slope = float(grad @ direction)
        if slope >= 0.0 or alpha_max <= 0.0:
            break
        a_cur = _weights_from_edges(topology, w)
        a_new = _weights_from_edges(topology, w + direction)
        delta = np.einsum("ij,jab->iab", a_cur, omegas)
        delta = 0.5 * (delta + np.transpose(delta, (0, 2, 1)))
        e_dir = np.einsum("ij,jab->iab", a_new - a_cur, omegas)
        e_dir = 0.5 * (e_dir + np.transpose(e_dir, (0, 2, 1)))
        step, f_new = _exact_line_search(delta, e_dir, n, slope, alpha_max)
        if step <= 1e-15 or f_new >= f_cur:
            break
        w = w + step * direction
        f_cur = f_new
        if use_away:
            scale = 1.0 + step
            lams = [lam * scale for lam in lams]
            lams[away_idx] -= step
            if lams[away_idx] <= 1e-12:
                del lams[away_idx]
                del atoms[away_idx]
        else:
            lams = [lam * (1.0 - step) for lam in lams]
            for k, atom in enumerate(atoms):
                if np.array_equal(atom, vertex):
                    lams[k] += step
                    break
            else:
                atoms.append(vertex)
                lams.append(step)
        total = sum(lams)
        if abs(total - 1.0) > 1e-9:
            lams = [lam / total for lam in lams]

    if spectral_margin(_weights_from_edges(topology, w), snap.mu) < SPECTRAL_TOL:
        w = _bisect_to_metropolis(topology, w, snap.mu)
        f_cur = _team_cost(topology, omegas, w)

    best_w, best_obj = w, f_cur
    for cand in extra_candidates or []:
        if cand.shape != (m,) or not _in_polytope(topology, cand, snap.eps_diag):
            continue
        if spectral_margin(_weights_from_edges(topology, cand), snap.mu) < SPECTRAL_TOL:
            continue
        obj = _team_cost(topology, omegas, cand)
        if obj < best_obj:
            best_w, best_obj = cand, obj
    return InnerResult(_weights_from_edges(topology, best_w), float(best_obj), iters)


def _finalize(topology: Topology, weights: np.ndarray) -> Configuration:
    a = sym(np.asarray(weights, dtype=float))
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    off[off < 0.0] = 0.0
    np.fill_diagonal(off, 1.0 - off.sum(axis=1))
    return Configuration(topology=topology, weights=off)


def _prev_edge_values(prev: Configuration, topology: Topology) -> list[np.ndarray] | None:
    if prev.topology != topology:
        return None
    vals = np.array([prev.weights[i, j] for i, j in topology.edges])
    return [vals]


def solve(strategy: str, snap: InfoSnapshot, mode: str = "add_only") -> SolverReport:
    """Exact outer solve: enumerate budget-feasible connected topologies,
    run the strategy's inner solver on each, keep the best objective.

    Ties within 1e-9 relative resolve to the earlier topology in enumeration
    order, i.e. the lexicographically smallest modification set.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    start = time.perf_counter()
    topologies = enumerate_topologies(snap.prev_config.topology, snap.n_e, mode)
    if not topologies:
        raise RuntimeError("no connected topology within the modification budget")
    inner = accg_inner if strategy == ACCG else tccg_inner
    maximize = strategy == ACCG

    best_topo = None
    best_res = None
    total_iters = 0
    for topo in topologies:
        extra = _prev_edge_values(snap.prev_config, topo)
        res = inner(topo, snap, extra_candidates=extra)
        total_iters += res.iterations
        if best_res is None:
            best_topo, best_res = topo, res
            continue
        margin = TIE_REL_TOL * max(1.0, abs(best_res.objective))
        if maximize:
            better = res.objective > best_res.objective + margin
        else:
            better = res.objective < best_res.objective - margin
        if better:
            best_topo, best_res = topo, res

    config = _finalize(best_topo, best_res.weights)
    if not is_connected_spectral(config, snap.mu):
        raise RuntimeError("chosen configuration fails the spectral certificate")
    return SolverReport(
        chosen=config,
        objective_value=best_res.objective,
        topologies_evaluated=len(topologies),
        inner_iterations=total_iters,
        wall_time=time.perf_counter() - start,
    )


def greedy(snap: InfoSnapshot, posterior_traces: np.ndarray) -> Configuration:
    """Baseline: add one edge from the deteriorated robot to the non-neighbor
    with the smallest posterior covariance trace, then reweight with
    Metropolis.  With no non-neighbors the topology is kept as is.
    """
    traces = np.asarray(posterior_traces, dtype=float).reshape(-1)
    if traces.shape[0] != snap.n:
        raise ValueError("posterior_traces length must equal team size")
    d = snap.deteriorated_id
    topo = snap.prev_config.topology
    candidates = [j for j in range(snap.n) if j != d and not topo.has_edge(d, j)]
    if not candidates:
        return metropolis_weights(topo)
    j_best = min(candidates, key=lambda j: (traces[j], j))
    return metropolis_weights(topo.modified([(d, j_best)]))
