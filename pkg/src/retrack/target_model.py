"""Linear(ized) discrete-time target motion models and ground-truth propagation.

The tracked target follows x_{k+1} = F x_k + G u_k + w_k with known input u_k
and zero-mean Gaussian process noise w_k ~ N(0, Q).  The stock model is a
unicycle-style turning target (state [x, y, heading, speed]) whose input
matrix is re-linearized at the current heading every step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import is_symmetric, min_eigval


@dataclass(frozen=True)
class TargetModel:
    """One-step linear motion model.

    Attributes
    ----------
    transition : (s, s) state transition matrix applied to the previous state.
    input_matrix : (s, u) matrix applied to the known input.
    process_noise_cov : (s, s) symmetric PSD covariance of the process noise.
    dt : time step in seconds, strictly positive.
    """

    transition: np.ndarray
    input_matrix: np.ndarray
    process_noise_cov: np.ndarray
    dt: float

    def __post_init__(self) -> None:
        f = np.asarray(self.transition, dtype=float)
        g = np.asarray(self.input_matrix, dtype=float)
        q = np.asarray(self.process_noise_cov, dtype=float)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise ValueError(f"transition must be square, got {f.shape}")
        s = f.shape[0]
        if g.ndim != 2 or g.shape[0] != s:
            raise ValueError(f"input_matrix must have {s} rows, got {g.shape}")
        if q.shape != (s, s):
            raise ValueError(f"process_noise_cov must be {(s, s)}, got {q.shape}")
        if not is_symmetric(q):
            raise ValueError("process_noise_cov must be symmetric")
        if min_eigval(q) < -1e-10:
            raise ValueError("process_noise_cov must be positive semidefinite")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "transition", f)
        object.__setattr__(self, "input_matrix", g)
        object.__setattr__(self, "process_noise_cov", q)

    @property
    def state_dim(self) -> int:
        return self.transition.shape[0]

    @property
    def input_dim(self) -> int:
        return self.input_matrix.shape[1]


@dataclass
class TargetState:
    """Ground-truth target state at a given epoch."""

    x: np.ndarray
    epoch: int = 0

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float).reshape(-1)


def dubins_model(dt: float, heading: float,
                 process_noise_cov: np.ndarray | None = None) -> TargetModel:
    """Turning-target model with state [x, y, heading, speed], input [speed, turn rate].

    Position advances along the current heading, the heading integrates the
    commanded turn rate, and the speed state is replaced by the commanded
    speed each step (the transition matrix zeroes the old speed).  The input
    matrix is linearized at the supplied heading.

    Parameters
    ----------
    dt : time step.
    heading : heading angle (radians) used as the linearization point.
    process_noise_cov : optional 4x4 noise covariance; zero when omitted.
    """
    f = np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ])
    g = np.array([
        [np.cos(heading) * dt, 0.0],
        [np.sin(heading) * dt, 0.0],
        [0.0, dt],
        [1.0, 0.0],
    ])
    q = np.zeros((4, 4)) if process_noise_cov is None else process_noise_cov
    return TargetModel(transition=f, input_matrix=g, process_noise_cov=q, dt=dt)


def _draw_process_noise(q: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if not np.any(q):
        return np.zeros(q.shape[0])
    diag = np.diag(np.diag(q))
    if np.array_equal(q, diag):
        return rng.normal(0.0, np.sqrt(np.diag(q)))
    return rng.multivariate_normal(np.zeros(q.shape[0]), q, method="svd")


def step_truth(model: TargetModel, state: TargetState, u: np.ndarray,
               rng: np.random.Generator) -> TargetState:
    """Advance the ground truth one step: x' = F x + G u + w, w ~ N(0, Q).

    Returns a new TargetState with the epoch incremented by one.
    """
    x = np.asarray(state.x, dtype=float)
    u = np.asarray(u, dtype=float).reshape(-1)
    if x.shape[0] != model.state_dim:
        raise ValueError(f"state dim {x.shape[0]} != model dim {model.state_dim}")
    if u.shape[0] != model.input_dim:
        raise ValueError(f"input dim {u.shape[0]} != model dim {model.input_dim}")
    w = _draw_process_noise(model.process_noise_cov, rng)
    x_next = model.transition @ x + model.input_matrix @ u + w
    return TargetState(x=x_next, epoch=state.epoch + 1)
