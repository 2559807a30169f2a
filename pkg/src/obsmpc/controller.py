"""Nominal stabilising feedback, the excitation budget that protects its
Lyapunov decrease, and the observability-seeking one-step MPC.

The MPC maximises the smallest eigenvalue of the predicted window Grammian
(minus an optional input cost) over corrective inputs inside the budget ball,
by sampling directions on the budget circle and refining the best candidate
with a shrinking pattern search in polar coordinates.  Feasibility means the
certified level reaches the configured threshold; otherwise the best-effort
input is still returned and flagged.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .estimator import MeasurementWindow
from .grammian import clamp_psd, min_eigenvalue, split
from .model import SystemModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NominalFeedback:
    """Smoothly saturated linear feedback u = -gain * x * s(||x||).

    Inside the saturation radius the feedback is exactly linear; beyond it the
    magnitude saturates smoothly towards u_max.  The associated comparison
    functions are V(x) = ||x||, alpha(r) = delta*gain*min(r, r_sat) and
    sigma(r) = delta*r (1-homogeneous), which make the excitation budget a
    closed-form radius.  Requires delta*gain < 1 and u_max > gain*r_sat.
    """

    gain: float = 1.0
    r_sat: float = 1.0
    u_max: float = 2.0
    delta: float = 0.1

    def __post_init__(self):
        if self.delta * self.gain >= 1.0:
            raise ValueError("delta * gain must be < 1")
        if self.u_max <= self.gain * self.r_sat:
            raise ValueError("u_max must exceed gain * r_sat")

    def magnitude(self, r: float) -> float:
        if r <= self.r_sat:
            return self.gain * r
        headroom = self.u_max - self.gain * self.r_sat
        return self.gain * self.r_sat + headroom * math.tanh(
            self.gain * (r - self.r_sat) / headroom
        )

    def kappa(self, x: np.ndarray, p_hat: Optional[np.ndarray] = None) -> np.ndarray:
        """Nominal control; the estimate argument is kept for generality but
        unused by this state-only feedback."""
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        if r == 0.0:
            return np.zeros_like(x)
        return -(self.magnitude(r) / r) * x

    def lyapunov(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(x))

    def alpha(self, r: float) -> float:
        return self.delta * self.gain * min(r, self.r_sat)

    def sigma(self, r: float) -> float:
        return self.delta * r

    def sigma_inv(self, s: float) -> float:
        return s / self.delta


@dataclass(frozen=True)
class MpcConfig:
    delta_prime: float = 1.0
    mu: float = 0.5
    control_cost: Optional[Callable[[np.ndarray], float]] = None
    ring_samples: int = 64
    refine_iters: int = 20

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ValueError("mu must be in (0, 1)")
        if self.delta_prime <= 0.0:
            raise ValueError("delta_prime must be positive")

    def cost(self, u: np.ndarray) -> float:
        return 0.0 if self.control_cost is None else float(self.control_cost(u))


@dataclass(frozen=True)
class MpcDecision:
    u_obs: np.ndarray
    u_total: np.ndarray
    delta: float
    feasible: bool
    budget: float


def nominal_control(x: np.ndarray, p_hat: np.ndarray, fb: NominalFeedback) -> np.ndarray:
    return fb.kappa(x, p_hat)


def obs_budget(x: np.ndarray, cfg: MpcConfig, fb: NominalFeedback) -> float:
    """Corrective-input radius sigma^{-1}((mu/2) * alpha(||x||/2)); for the
    concrete comparison functions this is (mu/2)*gain*min(||x||/2, r_sat)."""
    r = float(np.linalg.norm(np.asarray(x, dtype=float)))
    return fb.sigma_inv(0.5 * cfg.mu * fb.alpha(0.5 * r))


def _chord(kappa: np.ndarray, direction: np.ndarray, u_max: float) -> float:
    """Largest t >= 0 with ||kappa + t*direction|| <= u_max (unit direction)."""
    b = float(kappa @ direction)
    c = float(kappa @ kappa) - u_max * u_max
    disc = b * b - c
    if disc <= 0.0:
        return 0.0
    return max(-b + math.sqrt(disc), 0.0)


def solve_mpc(
    window: MeasurementWindow,
    p_hat: np.ndarray,
    x0_t: np.ndarray,
    cfg: MpcConfig,
    fb: NominalFeedback,
    model: SystemModel,
) -> MpcDecision:
    if not window.full:
        raise ValueError("window must be full")
    p_hat = np.asarray(p_hat, dtype=float)
    x0_t = np.asarray(x0_t, dtype=float)
    gs = split(p_hat, window, model)
    kappa = fb.kappa(x0_t, p_hat)
    budget = obs_budget(x0_t, cfg, fb)
    u_max = model.input_set_radius

    def evaluate(u_obs: np.ndarray):
        u_total = kappa + u_obs
        lam = clamp_psd(min_eigenvalue(gs.gamma + gs.predicted(p_hat, x0_t, u_total)))
        return lam - cfg.cost(u_total), lam

    def polar(rad: float, ang: float) -> np.ndarray:
        return np.array([rad * math.cos(ang), rad * math.sin(ang)])

    # Center candidate is always evaluated, so the decision never scores below
    # the pure nominal input.
    best_u = np.zeros(model.n_u)
    best_g, best_lam = evaluate(best_u)
    best_rad, best_ang = 0.0, 0.0

    if budget > 0.0:
        for i in range(cfg.ring_samples):
            ang = 2.0 * math.pi * i / cfg.ring_samples
            direction = np.array([math.cos(ang), math.sin(ang)])
            rad = min(budget, _chord(kappa, direction, u_max))
            if rad <= 0.0:
                continue
            u = rad * direction
            g, lam = evaluate(u)
            if g > best_g or (g == best_g and rad < best_rad):
                best_u, best_g, best_lam = u, g, lam
                best_rad, best_ang = rad, ang

        # Polar pattern search around the best ring/center candidate.
        dr = budget / 8.0
        da = 2.0 * math.pi / cfg.ring_samples
        rad, ang = best_rad, best_ang
        for _ in range(cfg.refine_iters):
            improved = False
            for nr, na in (
                (rad + dr, ang),
                (rad - dr, ang),
                (rad, ang + da),
                (rad, ang - da),
            ):
                direction = np.array([math.cos(na), math.sin(na)])
                nr = min(max(nr, 0.0), budget, _chord(kappa, direction, u_max))
                u = nr * direction
                g, lam = evaluate(u)
                if g > best_g or (g == best_g and nr < best_rad):
                    best_u, best_g, best_lam = u, g, lam
                    best_rad, best_ang = nr, na
                    rad, ang = nr, na
                    improved = True
            if not improved:
                dr *= 0.5
                da *= 0.5

    feasible = best_lam >= cfg.delta_prime - 1e-12
    if not feasible:
        logger.debug(
            "infeasible MPC step: best level %.3e < delta' %.3e", best_lam, cfg.delta_prime
        )
    return MpcDecision(
        u_obs=best_u,
        u_total=kappa + best_u,
        delta=best_lam,
        feasible=feasible,
        budget=budget,
    )
