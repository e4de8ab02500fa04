"""Range-limited linear sensors and sensor deterioration events."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import is_symmetric, min_eigval, sym


@dataclass(frozen=True)
class SensorModel:
    """Linear range-limited sensor: z = H x + v, v ~ N(0, R).

    A robot only obtains a measurement while the target lies within
    sensing_radius of the robot position (Euclidean distance).
    """

    robot_id: int
    output_matrix: np.ndarray
    noise_cov: np.ndarray
    sensing_radius: float

    def __post_init__(self) -> None:
        h = np.asarray(self.output_matrix, dtype=float)
        r = np.asarray(self.noise_cov, dtype=float)
        if h.ndim != 2:
            raise ValueError("output_matrix must be 2-D")
        m = h.shape[0]
        if r.shape != (m, m):
            raise ValueError(f"noise_cov must be {(m, m)}, got {r.shape}")
        if not is_symmetric(r):
            raise ValueError("noise_cov must be symmetric")
        if min_eigval(r) <= 0:
            raise ValueError("noise_cov must be positive definite")
        if not self.sensing_radius > 0:
            raise ValueError("sensing_radius must be positive")
        object.__setattr__(self, "output_matrix", h)
        object.__setattr__(self, "noise_cov", r)

    @property
    def output_dim(self) -> int:
        return self.output_matrix.shape[0]

    @property
    def quality(self) -> float:
        """Trace of the noise covariance; larger means a worse sensor."""
        return float(np.trace(self.noise_cov))


@dataclass(frozen=True)
class DeteriorationEvent:
    """Additive PSD bump to one robot's measurement noise at a given epoch.

    The perturbation must be symmetric PSD with strictly positive trace so
    that applying it strictly increases Tr(R).
    """

    epoch: int
    robot_id: int
    perturbation: np.ndarray

    def __post_init__(self) -> None:
        p = sym(np.asarray(self.perturbation, dtype=float))
        if self.epoch < 1:
            raise ValueError("epoch must be >= 1")
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("perturbation must be square")
        if min_eigval(p) < -1e-10:
            raise ValueError("perturbation must be positive semidefinite")
        if np.trace(p) <= 0:
            raise ValueError("perturbation must have strictly positive trace")
        object.__setattr__(self, "perturbation", p)


def measure(sensor: SensorModel, x_true: np.ndarray, robot_pos: np.ndarray,
            target_pos: np.ndarray, rng: np.random.Generator) -> np.ndarray | None:
    """Draw a measurement of the true state, or None when out of range.

    The range gate compares ||robot_pos - target_pos|| against the sensing
    radius; the measurement itself is H x_true + v with v ~ N(0, R).
    """
    x_true = np.asarray(x_true, dtype=float).reshape(-1)
    if x_true.shape[0] != sensor.output_matrix.shape[1]:
        raise ValueError("state dimension does not match output_matrix columns")
    robot_pos = np.asarray(robot_pos, dtype=float).reshape(-1)
    target_pos = np.asarray(target_pos, dtype=float).reshape(-1)
    if robot_pos.shape != target_pos.shape:
        raise ValueError("robot_pos and target_pos must have matching shape")
    if np.linalg.norm(robot_pos - target_pos) > sensor.sensing_radius:
        return None
    chol = np.linalg.cholesky(sym(sensor.noise_cov))
    v = chol @ rng.normal(size=sensor.output_dim)
    return sensor.output_matrix @ x_true + v


def apply_deterioration(sensor: SensorModel, event: DeteriorationEvent) -> SensorModel:
    """Return a new sensor with R increased by the event's perturbation."""
    if event.robot_id != sensor.robot_id:
        raise ValueError(
            f"event targets robot {event.robot_id}, sensor belongs to {sensor.robot_id}")
    if event.perturbation.shape != sensor.noise_cov.shape:
        raise ValueError("perturbation shape does not match noise_cov")
    return SensorModel(
        robot_id=sensor.robot_id,
        output_matrix=sensor.output_matrix,
        noise_cov=sym(sensor.noise_cov + event.perturbation),
        sensing_radius=sensor.sensing_radius,
    )


def random_psd(dim: int, scale: float, rng: np.random.Generator) -> np.ndarray:
    """Random PSD matrix B B^T with B entries i.i.d. N(0, scale^2).

    E[Tr(B B^T)] = dim^2 * scale^2.  scale = 0 gives the zero matrix.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if scale < 0:
        raise ValueError("scale must be non-negative")
    b = rng.normal(0.0, 1.0, size=(dim, dim)) * scale
    return b @ b.T
