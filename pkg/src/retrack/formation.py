"""Coverage-maximizing formation synthesis under spacing and range constraints.

The team's joint sensing coverage is scored with a pairwise overlap
approximation: each robot contributes the area of its sensing disc minus a
quadratic penalty for every other robot closer than twice its sensing
radius.  Placements must keep connected robots within communication range,
all pairs at a minimum separation, everyone inside the workspace box, and
designated trackers within sensing range of the target.  Synthesis runs
simulated annealing on a penalized objective with restarts until a feasible
placement is found.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .network import Topology

FEASIBILITY_TOL = 1e-6


@dataclass(frozen=True)
class FormationParams:
    """Geometry of the placement problem.

    sensing_radii has one entry per robot and fixes the team size.
    trackers_in_range lists the robots that must stay within their sensing
    radius of target_pos.
    """

    min_separation: float
    comm_range: float
    sensing_radii: np.ndarray
    box_min: np.ndarray
    box_max: np.ndarray
    trackers_in_range: frozenset[int]
    target_pos: np.ndarray

    def __post_init__(self) -> None:
        radii = np.asarray(self.sensing_radii, dtype=float).reshape(-1)
        bmin = np.asarray(self.box_min, dtype=float).reshape(-1)
        bmax = np.asarray(self.box_max, dtype=float).reshape(-1)
        target = np.asarray(self.target_pos, dtype=float).reshape(-1)
        if self.min_separation < 0:
            raise ValueError("min_separation must be non-negative")
        if self.comm_range < self.min_separation:
            raise ValueError("comm_range must be at least min_separation")
        if radii.size < 1 or np.any(radii <= 0):
            raise ValueError("sensing_radii must be positive")
        if bmin.shape != bmax.shape or bmin.shape != target.shape:
            raise ValueError("box_min, box_max and target_pos must share a shape")
        if np.any(bmin >= bmax):
            raise ValueError("box_min must be strictly below box_max per axis")
        bad = [i for i in self.trackers_in_range if not 0 <= i < radii.size]
        if bad:
            raise ValueError(f"trackers_in_range ids out of range: {bad}")
        object.__setattr__(self, "sensing_radii", radii)
        object.__setattr__(self, "box_min", bmin)
        object.__setattr__(self, "box_max", bmax)
        object.__setattr__(self, "target_pos", target)
        object.__setattr__(self, "trackers_in_range", frozenset(int(i) for i in self.trackers_in_range))

    @property
    def n(self) -> int:
        return self.sensing_radii.shape[0]


@dataclass(frozen=True)
class Placement:
    """Robot positions, one row per robot."""

    positions: np.ndarray

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2:
            raise ValueError("positions must be a 2-D array")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return self.positions.shape[0]


class Violation(NamedTuple):
    kind: str       # "separation" | "comm_range" | "box" | "target_range"
    i: int
    j: int          # second robot for pair constraints, -1 otherwise
    amount: float


@dataclass(frozen=True)
class AnnealingSchedule:
    """Simulated-annealing knobs.

    proposals Gaussian single-robot moves are attempted per restart; the
    temperature starts at t0_factor * |coverage(seed)| and is multiplied by
    cooling every cool_every proposals.  The base step is step_factor times
    the box diagonal; each proposal picks the base step scaled by 1, 1/8 or
    1/64 so both coarse assembly moves and fine constraint-polishing moves
    occur.  The constraint penalty weight is penalty_factor * pi * max
    sensing radius squared.
    """

    proposals: int = 10_000
    cool_every: int = 100
    cooling: float = 0.97
    t0_factor: float = 0.1
    step_factor: float = 0.05
    step_scales: tuple[float, ...] = (1.0, 0.125, 0.015625)
    penalty_factor: float = 1e3
    max_restarts: int = 20

    def __post_init__(self) -> None:
        if self.proposals < 1 or self.cool_every < 1 or self.max_restarts < 0:
            raise ValueError("proposals, cool_every must be >= 1 and max_restarts >= 0")
        if not 0 < self.cooling <= 1:
            raise ValueError("cooling must lie in (0, 1]")
        if self.t0_factor <= 0 or self.step_factor <= 0 or self.penalty_factor <= 0:
            raise ValueError("t0_factor, step_factor, penalty_factor must be positive")


class FormationError(RuntimeError):
    """Raised when no feasible placement is found; carries the best attempt."""

    def __init__(self, message: str, best_attempt: Placement, violations: list[Violation]):
        super().__init__(message)
        self.best_attempt = best_attempt
        self.violations = violations


def coverage(placement: Placement, params: FormationParams) -> float:
    """Pairwise-overlap approximation of the covered area.

    pi * sum_i [ r_i^2 - sum_{j != i} max(0, 2 r_i - dist_ij)^2 / 2 ],
    exact (sum of disc areas) when all pairs are at least 2 r apart.
    """
    pos = placement.positions
    if pos.shape[0] != params.n:
        raise ValueError("placement size does not match params")
    r = params.sensing_radii
    if pos.shape[0] == 1:
        return float(np.pi * r[0] ** 2)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    overlap = np.maximum(0.0, 2.0 * r[:, None] - dist)
    np.fill_diagonal(overlap, 0.0)
    return float(np.pi * (np.sum(r ** 2) - 0.5 * np.sum(overlap ** 2)))


def _pair_distances(pos: np.ndarray) -> np.ndarray:
    diff = pos[:, None, :] - pos[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def constraint_violations(placement: Placement, topology: Topology,
                          params: FormationParams) -> list[Violation]:
    """Every constraint violated by any positive amount, largest first."""
    pos = placement.positions
    n = params.n
    if pos.shape[0] != n or topology.n != n:
        raise ValueError("placement, topology and params sizes must agree")
    out: list[Violation] = []
    dist = _pair_distances(pos)
    edges = set(topology.edges)
    for i in range(n):
        for j in range(i + 1, n):
            gap = params.min_separation - dist[i, j]
            if gap > 0:
                out.append(Violation("separation", i, j, float(gap)))
            if (i, j) in edges:
                over = dist[i, j] - params.comm_range
                if over > 0:
                    out.append(Violation("comm_range", i, j, float(over)))
    below = np.maximum(0.0, params.box_min[None, :] - pos)
    above = np.maximum(0.0, pos - params.box_max[None, :])
    box_amount = below.sum(axis=1) + above.sum(axis=1)
    for i in range(n):
        if box_amount[i] > 0:
            out.append(Violation("box", i, -1, float(box_amount[i])))
    for i in sorted(params.trackers_in_range):
        over = float(np.linalg.norm(pos[i] - params.target_pos) - params.sensing_radii[i])
        if over > 0:
            out.append(Violation("target_range", i, -1, over))
    out.sort(key=lambda v: -v.amount)
    return out


def constraints_ok(placement: Placement, topology: Topology, params: FormationParams,
                   tol: float = FEASIBILITY_TOL) -> tuple[bool, list[Violation]]:
    """Feasibility check: violations larger than tol fail the placement."""
    violations = [v for v in constraint_violations(placement, topology, params)
                  if v.amount > tol]
    return (len(violations) == 0, violations)


def _edge_mask(topology: Topology) -> np.ndarray:
    mask = np.zeros((topology.n, topology.n), dtype=bool)
    for i, j in topology.edges:
        mask[i, j] = mask[j, i] = True
    return mask


def _tracker_mask(params: FormationParams) -> np.ndarray:
    mask = np.zeros(params.n, dtype=bool)
    for i in params.trackers_in_range:
        mask[i] = True
    return mask


def _penalized_score(pos: np.ndarray, edge_mask: np.ndarray, tracker_mask: np.ndarray,
                     params: FormationParams, lam: float) -> tuple[float, float]:
    """(score, sum of squared violations) for the annealer."""
    r = params.sensing_radii
    n = pos.shape[0]
    dist = _pair_distances(pos)
    overlap = np.maximum(0.0, 2.0 * r[:, None] - dist)
    np.fill_diagonal(overlap, 0.0)
    cov = np.pi * (np.sum(r ** 2) - 0.5 * np.sum(overlap ** 2))

    iu = np.triu_indices(n, k=1)
    sep = np.maximum(0.0, params.min_separation - dist[iu])
    comm = np.maximum(0.0, (dist - params.comm_range)[iu] * edge_mask[iu])
    below = np.maximum(0.0, params.box_min[None, :] - pos)
    above = np.maximum(0.0, pos - params.box_max[None, :])
    target_gap = np.maximum(
        0.0, np.linalg.norm(pos - params.target_pos[None, :], axis=1) - r) * tracker_mask
    pen_sq = (float(np.sum(sep ** 2)) + float(np.sum(comm ** 2))
              + float(np.sum(below ** 2) + np.sum(above ** 2))
              + float(np.sum(target_gap ** 2)))
    return float(cov - lam * pen_sq), pen_sq


def _seed_near_target(params: FormationParams, rng: np.random.Generator) -> np.ndarray:
    radius = 0.8 * float(np.min(params.sensing_radii))
    raw = params.target_pos[None, :] + rng.uniform(-radius, radius, size=(params.n, params.target_pos.shape[0]))
    return np.clip(raw, params.box_min, params.box_max)


def _seed_in_box(params: FormationParams, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(params.box_min, params.box_max, size=(params.n, params.box_min.shape[0]))


def synthesize(topology: Topology, params: FormationParams,
               seed_placement: Placement | None = None,
               rng: np.random.Generator | None = None,
               schedule: AnnealingSchedule | None = None) -> Placement:
    """Anneal toward the feasible placement with the best coverage.

    Starts from seed_placement when given (otherwise a sample near the
    target), accepts worse moves with probability exp(delta / T), and keeps
    the best feasible placement seen.  Restarts from fresh samples until a
    feasible placement is found or max_restarts is exhausted, then raises
    FormationError carrying the best attempt.
    """
    if topology.n != params.n:
        raise ValueError("topology size does not match params")
    rng = rng if rng is not None else np.random.default_rng(0)
    schedule = schedule if schedule is not None else AnnealingSchedule()
    if seed_placement is not None and seed_placement.positions.shape != (params.n, params.box_min.shape[0]):
        raise ValueError("seed_placement has the wrong shape")

    edge_mask = _edge_mask(topology)
    tracker_mask = _tracker_mask(params)
    lam = schedule.penalty_factor * np.pi * float(np.max(params.sensing_radii)) ** 2
    sigma0 = schedule.step_factor * float(np.linalg.norm(params.box_max - params.box_min))
    dim = params.box_min.shape[0]

    best_feasible: np.ndarray | None = None
    best_feasible_cov = -np.inf
    best_overall: np.ndarray | None = None
    best_overall_score = -np.inf

    def consider(pos: np.ndarray, pen_sq: float, score: float) -> None:
        nonlocal best_feasible, best_feasible_cov, best_overall, best_overall_score
        if score > best_overall_score:
            best_overall, best_overall_score = pos.copy(), score
        if pen_sq <= 100.0 * FEASIBILITY_TOL ** 2:
            ok, _ = constraints_ok(Placement(pos), topology, params)
            if ok:
                cov = coverage(Placement(pos), params)
                if cov > best_feasible_cov:
                    best_feasible, best_feasible_cov = pos.copy(), cov

    for attempt in range(schedule.max_restarts + 1):
        if attempt == 0 and seed_placement is not None:
            pos = seed_placement.positions.copy()
        elif attempt % 2 == 0:
            pos = _seed_near_target(params, rng)
        else:
            pos = _seed_in_box(params, rng)
        score, pen_sq = _penalized_score(pos, edge_mask, tracker_mask, params, lam)
        consider(pos, pen_sq, score)
        temp = schedule.t0_factor * max(abs(coverage(Placement(pos), params)), 1.0)
        for k in range(schedule.proposals):
            robot = int(rng.integers(params.n))
            sigma = sigma0 * schedule.step_scales[int(rng.integers(len(schedule.step_scales)))]
            move = rng.normal(0.0, sigma, size=dim)
            cand = pos.copy()
            cand[robot] += move
            cand_score, cand_pen = _penalized_score(cand, edge_mask, tracker_mask, params, lam)
            delta = cand_score - score
            if delta >= 0 or rng.random() < np.exp(delta / max(temp, 1e-12)):
                pos, score, pen_sq = cand, cand_score, cand_pen
                consider(pos, pen_sq, score)
            if (k + 1) % schedule.cool_every == 0:
                temp *= schedule.cooling
        if best_feasible is not None:
            return Placement(best_feasible)

    assert best_overall is not None
    attempt_placement = Placement(best_overall)
    _, violations = constraints_ok(attempt_placement, topology, params)
    raise FormationError(
        f"no feasible placement within {schedule.max_restarts + 1} attempts "
        f"({len(violations)} residual violations)",
        attempt_placement, violations)
