"""Distributed Kalman filter with average-consensus information fusion.

Each robot keeps a Gaussian belief (x_hat, P).  One filter step is: predict
through the shared motion model, correct with the local measurement when one
is available, convert to information form (Omega = P^-1, q = Omega x_hat),
run a fixed number of consensus averaging rounds with doubly stochastic
weights, and convert back.  All inversions go through Cholesky factorization
with explicit symmetrization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import pd_cholesky, pd_inverse, pd_solve, sym
from .sensing import SensorModel
from .target_model import TargetModel

COND_LIMIT = 1e12


@dataclass
class Belief:
    """Gaussian belief over the target state held by one robot."""

    x_hat: np.ndarray
    P: np.ndarray
    robot_id: int = 0

    def __post_init__(self) -> None:
        self.x_hat = np.asarray(self.x_hat, dtype=float).reshape(-1)
        self.P = np.asarray(self.P, dtype=float)
        if self.P.shape != (self.x_hat.shape[0],) * 2:
            raise ValueError("P shape does not match x_hat")
        pd_cholesky(self.P)  # symmetric PD or raise


@dataclass
class InfoPair:
    """Information form of a belief: matrix = P^-1, vector = P^-1 x_hat."""

    info_vector: np.ndarray
    info_matrix: np.ndarray
    consensus_index: int = 0

    def __post_init__(self) -> None:
        self.info_vector = np.asarray(self.info_vector, dtype=float).reshape(-1)
        self.info_matrix = np.asarray(self.info_matrix, dtype=float)
        if self.info_matrix.shape != (self.info_vector.shape[0],) * 2:
            raise ValueError("info_matrix shape does not match info_vector")
        if not np.all(np.isfinite(self.info_vector)):
            raise ValueError("info_vector has non-finite entries")
        pd_cholesky(self.info_matrix)


def predict(model: TargetModel, belief: Belief, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Time update: x = F x_hat + G u, P = F P F^T + Q (symmetrized)."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != model.input_dim:
        raise ValueError("input dimension mismatch")
    if belief.x_hat.shape[0] != model.state_dim:
        raise ValueError("state dimension mismatch")
    x_pred = model.transition @ belief.x_hat + model.input_matrix @ u
    p_pred = sym(model.transition @ belief.P @ model.transition.T + model.process_noise_cov)
    return x_pred, p_pred


def innovate(x_pred: np.ndarray, p_pred: np.ndarray, sensor: SensorModel,
             z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Measurement update with gain K = P H^T (H P H^T + R)^-1.

    Returns the corrected pair (x0, P0).  Raises ValueError when the
    innovation covariance is numerically singular (condition number beyond
    1e12).
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    h = sensor.output_matrix
    if z.shape[0] != h.shape[0]:
        raise ValueError("measurement dimension mismatch")
    if h.shape[1] != x_pred.shape[0]:
        raise ValueError("state dimension mismatch")
    s = sym(h @ p_pred @ h.T + sensor.noise_cov)
    if np.linalg.cond(s) > COND_LIMIT:
        raise ValueError("innovation covariance is numerically singular")
    k = np.linalg.solve(s, h @ p_pred).T
    x0 = x_pred + k @ (z - h @ x_pred)
    p0 = sym(p_pred - k @ h @ p_pred)
    return x0, p0


def innovate_covariance(p_pred: np.ndarray, sensor: SensorModel) -> np.ndarray:
    """Covariance part of the measurement update (measurement-value free)."""
    h = sensor.output_matrix
    s = sym(h @ p_pred @ h.T + sensor.noise_cov)
    if np.linalg.cond(s) > COND_LIMIT:
        raise ValueError("innovation covariance is numerically singular")
    k = np.linalg.solve(s, h @ p_pred).T
    return sym(p_pred - k @ h @ p_pred)


def to_info(x: np.ndarray, p: np.ndarray) -> InfoPair:
    """Convert (x, P) to information form."""
    omega = pd_inverse(np.asarray(p, dtype=float))
    q = omega @ np.asarray(x, dtype=float).reshape(-1)
    return InfoPair(info_vector=q, info_matrix=omega, consensus_index=0)


def from_info(pair: InfoPair, robot_id: int = 0) -> Belief:
    """Convert information form back to a moment-form belief."""
    p = pd_inverse(pair.info_matrix)
    x = pd_solve(pair.info_matrix, pair.info_vector)
    return Belief(x_hat=x, P=p, robot_id=robot_id)


def _check_doubly_stochastic(weights: np.ndarray, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (n, n):
        raise ValueError(f"weights must be {(n, n)}, got {w.shape}")
    if np.max(np.abs(w.sum(axis=1) - 1.0)) > 1e-8 or np.max(np.abs(w.sum(axis=0) - 1.0)) > 1e-8:
        raise ValueError("weights must be doubly stochastic (sums within 1e-8 of 1)")
    return w


def _consensus_kernel(vectors: np.ndarray, matrices: np.ndarray,
                      weights: np.ndarray, rounds: int) -> tuple[np.ndarray, np.ndarray]:
    for _ in range(rounds):
        vectors = np.einsum("ij,ja->ia", weights, vectors)
        matrices = np.einsum("ij,jab->iab", weights, matrices)
    return vectors, matrices


def consensus_round(pairs: list[InfoPair], weights: np.ndarray) -> list[InfoPair]:
    """One averaging round: pair_i <- sum_j A_ij pair_j."""
    return run_consensus(pairs, weights, rounds=1)


def run_consensus(pairs: list[InfoPair], weights: np.ndarray, rounds: int) -> list[InfoPair]:
    """Run `rounds` consensus averaging rounds over the robots' info pairs."""
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    n = len(pairs)
    if n == 0:
        raise ValueError("pairs must be non-empty")
    w = _check_doubly_stochastic(weights, n)
    vecs = np.stack([p.info_vector for p in pairs])
    mats = np.stack([p.info_matrix for p in pairs])
    base_index = pairs[0].consensus_index
    vecs, mats = _consensus_kernel(vecs, mats, w, rounds)
    return [InfoPair(info_vector=vecs[i], info_matrix=sym(mats[i]),
                     consensus_index=base_index + rounds) for i in range(n)]


def dkf_step(beliefs: list[Belief], sensors: list[SensorModel],
             measurements: list[np.ndarray | None], weights: np.ndarray,
             model: TargetModel, u: np.ndarray, rounds: int) -> list[Belief]:
    """One full distributed filter epoch for the whole team.

    measurements[i] is the robot's measurement vector or None when it had no
    measurement this epoch (prediction-only robots enter consensus with their
    predicted information pair).
    """
    n = len(beliefs)
    if not (len(sensors) == len(measurements) == n):
        raise ValueError("beliefs, sensors and measurements must have equal length")
    pairs = []
    for belief, sensor, z in zip(beliefs, sensors, measurements):
        x_pred, p_pred = predict(model, belief, u)
        if z is None:
            pairs.append(to_info(x_pred, p_pred))
        else:
            x0, p0 = innovate(x_pred, p_pred, sensor, z)
            pairs.append(to_info(x0, p0))
    fused = run_consensus(pairs, weights, rounds)
    return [from_info(pair, robot_id=belief.robot_id)
            for pair, belief in zip(fused, beliefs)]
