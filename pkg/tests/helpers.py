"""Shared generators for the test suite."""
import numpy as np

from retrack.network import Configuration, Topology, is_connected_bfs, metropolis_matrix


def rand_pd(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    """Well-conditioned random symmetric positive definite matrix."""
    a = rng.normal(size=(dim, dim))
    return scale * (a @ a.T + 0.5 * np.eye(dim))


def random_connected_topology(rng: np.random.Generator, n: int, p: float = 0.5) -> Topology:
    """Rejection-sample an Erdos-Renyi graph until it is connected."""
    if n == 1:
        return Topology(n=1, edges=())
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    while True:
        edges = tuple(pair for pair in pairs if rng.random() < p)
        topo = Topology(n=n, edges=edges)
        if is_connected_bfs(topo):
            return topo


def random_topology(rng: np.random.Generator, n: int, p: float = 0.5) -> Topology:
    """Erdos-Renyi graph, connected or not."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return Topology(n=n, edges=tuple(pair for pair in pairs if rng.random() < p))


def metropolis_config(topo: Topology) -> Configuration:
    """Configuration with Metropolis weights; works on disconnected graphs too."""
    return Configuration(topology=topo, weights=metropolis_matrix(topo))
