"""System/observation abstraction and the bearing-only single-integrator scenario.

A :class:`SystemModel` bundles the discrete dynamics ``x+ = f(x, u, p)``, the
observation map ``y = h(x, p)`` and the analytic Jacobian of ``h`` with respect
to the parameter.  All three callables are expected to broadcast over leading
state axes, so a window of L states can be evaluated in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import SingularObservation

# Observations closer than this to the singular point are rejected.
SINGULARITY_GUARD = 1e-9


@dataclass(frozen=True)
class SystemModel:
    """Dynamics/observation contract a scenario plugs into the generic loop.

    dynamics:  (x, u, p) -> next state, broadcasting over leading axes of x.
    observe:   (x, p) -> observation.
    jac_obs_p: (x, p) -> (..., n_y, n_p) Jacobian of observe w.r.t. p.
    input_set_radius: radius of the admissible Euclidean input ball U.
    param_box: optional (lo, hi) bounds describing a box P; None means R^n_p.
    """

    n_x: int
    n_u: int
    n_p: int
    n_y: int
    dynamics: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    observe: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jac_obs_p: Callable[[np.ndarray, np.ndarray], np.ndarray]
    input_set_radius: float = 2.0
    param_box: Optional[Tuple[np.ndarray, np.ndarray]] = None


@dataclass(frozen=True)
class NoiseSpec:
    """Bounded observation disturbances: every draw lies in the nu-ball."""

    nu: float
    seed: int

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("nu must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class BearingScenario:
    """Single landmark, single-integrator robot, unit-bearing observations."""

    p_true: np.ndarray
    delta: float
    x0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p_true", np.asarray(self.p_true, dtype=float))
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        if self.delta <= 0:
            raise ValueError("delta must be positive")


def draw_noise(spec: NoiseSpec, dim: int, index: int) -> np.ndarray:
    """Uniform draw from the closed nu-ball, pure in (seed, index)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if spec.nu == 0.0:
        return np.zeros(dim)
    rng = np.random.default_rng((spec.seed, index))
    direction = rng.standard_normal(dim)
    norm = np.linalg.norm(direction)
    if norm < 1e-300:  # essentially impossible; keep the draw well defined
        direction = np.zeros(dim)
        direction[0] = 1.0
        norm = 1.0
    radius = spec.nu * rng.random() ** (1.0 / dim)
    return (radius / norm) * direction


def bearing_dynamics(x: np.ndarray, u: np.ndarray, delta: float) -> np.ndarray:
    """Single integrator: x + delta * u."""
    return np.asarray(x, dtype=float) + delta * np.asarray(u, dtype=float)


def _separation(x: np.ndarray, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    d = np.asarray(p, dtype=float) - np.asarray(x, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    if np.any(r < SINGULARITY_GUARD):
        raise SingularObservation(
            f"state within {SINGULARITY_GUARD} of the landmark"
        )
    return d, r


def bearing_observe(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Unit vector pointing from the state towards the landmark."""
    d, r = _separation(x, p)
    return d / r[..., None]


def bearing_jac_p(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Analytic Jacobian of the unit bearing w.r.t. the landmark position.

    Equals (I - h h^T) / r, the tangential projector scaled by the inverse
    range; it annihilates radial perturbations of the landmark.
    """
    d, r = _separation(x, p)
    h = d / r[..., None]
    proj = np.eye(2) - h[..., :, None] * h[..., None, :]
    return proj / r[..., None, None]


def bearing_tangent(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Rank-one bearing sensitivity direction (x2-p2, -(x1-p1)) / r^2.

    The outer product of this vector with itself is the per-state contribution
    to the observability Grammian of the bearing scenario.
    """
    d, r = _separation(x, p)
    out = np.stack([-d[..., 1], d[..., 0]], axis=-1)
    return out / (r * r)[..., None]


def bearing_model(scenario: BearingScenario, input_set_radius: float = 2.0) -> SystemModel:
    """Assemble the SystemModel for a bearing scenario."""
    delta = scenario.delta

    def dynamics(x, u, p):  # parameter-free dynamics
        return bearing_dynamics(x, u, delta)

    return SystemModel(
        n_x=2,
        n_u=2,
        n_p=2,
        n_y=2,
        dynamics=dynamics,
        observe=bearing_observe,
        jac_obs_p=bearing_jac_p,
        input_set_radius=input_set_radius,
        param_box=None,
    )
