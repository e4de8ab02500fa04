"""Communication topologies, doubly stochastic consensus weights, connectivity tests.

A topology is an undirected simple graph over robots 0..n-1.  A configuration
pairs a topology with a symmetric doubly stochastic weight matrix whose
off-diagonal support equals the edge set.  Connectivity can be certified
either combinatorially (BFS) or spectrally: the graph is connected exactly
when the second-largest eigenvalue of the weight matrix is at most 1 - mu,
i.e. (1/n) 11^T + (1 - mu) I - A is positive semidefinite.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

MU_DEFAULT = 1e-3

# Weight-matrix sanity tolerances: row/column sums within SUM_TOL of one,
# entries above -ENTRY_TOL.
SUM_TOL = 1e-9
ENTRY_TOL = 1e-12


def canonical_edges(n: int, edges) -> tuple[tuple[int, int], ...]:
    """Sorted, deduplicated tuple of (i, j) pairs with i < j, validated against n."""
    out = set()
    for e in edges:
        i, j = int(e[0]), int(e[1])
        if i == j:
            raise ValueError(f"self-loop ({i},{j}) not allowed")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i},{j}) out of range for n={n}")
        out.add((min(i, j), max(i, j)))
    return tuple(sorted(out))


@dataclass(frozen=True)
class Topology:
    """Undirected simple graph over n robots with a canonical edge tuple."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        object.__setattr__(self, "edges", canonical_edges(self.n, self.edges))

    @classmethod
    def from_edges(cls, n: int, edges) -> "Topology":
        return cls(n=n, edges=tuple(tuple(e) for e in edges))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            d[i] += 1
            d[j] += 1
        return d

    def neighbors(self, i: int) -> tuple[int, ...]:
        out = [j for a, j in self.edges if a == i] + [a for a, j in self.edges if j == i]
        return tuple(sorted(out))

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in set(self.edges)

    def non_edges(self) -> tuple[tuple[int, int], ...]:
        present = set(self.edges)
        return tuple((i, j) for i, j in itertools.combinations(range(self.n), 2)
                     if (i, j) not in present)

    def modified(self, toggles) -> "Topology":
        """Topology with membership of each listed pair flipped."""
        edges = set(self.edges)
        for e in canonical_edges(self.n, toggles):
            if e in edges:
                edges.remove(e)
            else:
                edges.add(e)
        return Topology(n=self.n, edges=tuple(sorted(edges)))


def line_graph(n: int) -> Topology:
    """Path topology 0-1-2-...-(n-1)."""
    return Topology(n=n, edges=tuple((i, i + 1) for i in range(n - 1)))


def validate_weights(topology: Topology, weights: np.ndarray) -> np.ndarray:
    """Check a finalized weight matrix against its topology.

    Requires: symmetric, doubly stochastic (sums within 1e-9), entries
    non-negative, strictly positive diagonal, and off-diagonal support exactly
    equal to the edge set.  Returns the validated float array.
    """
    w = np.asarray(weights, dtype=float)
    n = topology.n
    if w.shape != (n, n):
        raise ValueError(f"weights must be {(n, n)}, got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights has non-finite entries")
    if np.max(np.abs(w - w.T)) > SUM_TOL:
        raise ValueError("weights must be symmetric")
    if np.max(np.abs(w.sum(axis=1) - 1.0)) > SUM_TOL:
        raise ValueError("row sums must equal 1")
    if np.max(np.abs(w.sum(axis=0) - 1.0)) > SUM_TOL:
        raise ValueError("column sums must equal 1")
    if np.min(w) < -ENTRY_TOL:
        raise ValueError("weights must be non-negative")
    if np.min(np.diag(w)) <= 0:
        raise ValueError("diagonal must be strictly positive")
    adj = topology.adjacency() > 0
    off = w.copy()
    np.fill_diagonal(off, 0.0)
    support = off > 0
    if not np.array_equal(support, adj):
        raise ValueError("off-diagonal support must match the edge set exactly")
    return w


@dataclass(frozen=True)
class Configuration:
    """A topology together with a finalized doubly stochastic weight matrix."""

    topology: Topology
    weights: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", validate_weights(self.topology, self.weights))

    @property
    def n(self) -> int:
        return self.topology.n


def is_connected_bfs(topology: Topology) -> bool:
    """Breadth-first search connectivity from robot 0."""
    n = topology.n
    if n == 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in topology.edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        v = queue.popleft()
        for u in adj[v]:
            if not seen[u]:
                seen[u] = True
                count += 1
                queue.append(u)
    return count == n


def spectral_margin(weights: np.ndarray, mu: float = MU_DEFAULT) -> float:
    """Smallest eigenvalue of (1/n) 11^T + (1 - mu) I - A.

    Non-negative (up to roundoff) exactly when the weighted graph is
    connected with spectral gap at least mu.
    """
    a = np.asarray(weights, dtype=float)
    n = a.shape[0]
    cert = np.full((n, n), 1.0 / n) + (1.0 - mu) * np.eye(n) - a
    return float(np.linalg.eigvalsh(0.5 * (cert + cert.T))[0])


def is_connected_spectral(config: Configuration, mu: float = MU_DEFAULT) -> bool:
    """Spectral connectivity certificate on a configuration's weight matrix."""
    return spectral_margin(config.weights, mu) >= -1e-9


def contraction_rate(weights: np.ndarray) -> float:
    """Largest eigenvalue magnitude of A restricted to the disagreement space.

    For symmetric doubly stochastic A this is max |eig(A - (1/n) 11^T)| and
    governs the per-round decay of consensus disagreement.
    """
    a = np.asarray(weights, dtype=float)
    n = a.shape[0]
    if n == 1:
        return 0.0
    b = a - np.full((n, n), 1.0 / n)
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (b + b.T)))))


def frobenius_edge_distance(t1: Topology, t2: Topology) -> int:
    """Squared Frobenius distance between adjacency matrices: 2 x (edges toggled)."""
    if t1.n != t2.n:
        raise ValueError("topologies must have the same n")
    return 2 * len(set(t1.edges) ^ set(t2.edges))


def metropolis_matrix(topology: Topology) -> np.ndarray:
    """Metropolis weight matrix: A_ij = 1 / (1 + max(deg_i, deg_j)) on edges.

    Diagonal entries absorb the remainder so every row sums to one.  Works on
    disconnected topologies too (block structure per component).
    """
    n = topology.n
    deg = topology.degrees()
    a = np.zeros((n, n))
    for i, j in topology.edges:
        a[i, j] = a[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    np.fill_diagonal(a, 1.0 - a.sum(axis=1))
    return a


def metropolis_weights(topology: Topology) -> Configuration:
    """Metropolis configuration for a connected topology."""
    if not is_connected_bfs(topology):
        raise ValueError("topology must be connected")
    return Configuration(topology=topology, weights=metropolis_matrix(topology))


def enumerate_topologies(base: Topology, n_e: int, mode: str = "add_only") -> list[Topology]:
    """All connected topologies within the modification budget, in deterministic order.

    At most n_e pairs are toggled relative to the base (squared Frobenius
    adjacency distance at most 2 n_e).  mode = "add_only" restricts toggles to
    currently absent edges; "toggle" allows removals as well.  Results are
    ordered by the lexicographically sorted tuple of toggled pairs, so the
    unmodified base (when connected) comes first.
    """
    if n_e < 0:
        raise ValueError("n_e must be >= 0")
    if mode == "add_only":
        candidates = list(base.non_edges())
    elif mode == "toggle":
        candidates = sorted(set(base.non_edges()) | set(base.edges))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    mods = []
    for r in range(min(n_e, len(candidates)) + 1):
        mods.extend(itertools.combinations(candidates, r))
    mods.sort()
    out = []
    for mod in mods:
        t = base.modified(mod)
        if is_connected_bfs(t):
            out.append(t)
    return out
