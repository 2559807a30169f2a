"""Windowed parameter estimation: cost assembly, fast fixed-iteration update
and a full multistart solve used as the oracle for the window minimiser.

The cost over a rolling window of L measured states x0_k and observations y_k
is  sum_k ||y_k - h(x0_k, p)||^2 + theta(p).  Residuals are evaluated directly
at the measured states (online Graph-SLAM style); for models whose dynamics
depend on the parameter the trajectory would have to be re-propagated, which
the bearing scenario never needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import LinearSolveFailure, NonConvergence
from .model import SystemModel


class MeasurementWindow:
    """Rolling buffer of L measured states/observations and L-1 controls."""

    def __init__(self, length: int):
        if length < 1:
            raise ValueError("window length must be >= 1")
        self.length = length
        self._states: List[np.ndarray] = []
        self._observations: List[np.ndarray] = []
        self._controls: List[np.ndarray] = []
        self.t = -1

    @property
    def full(self) -> bool:
        return len(self._states) == self.length

    @property
    def states(self) -> np.ndarray:
        return np.array(self._states)

    @property
    def observations(self) -> np.ndarray:
        return np.array(self._observations)

    @property
    def controls(self) -> np.ndarray:
        return np.array(self._controls)

    def push(self, x0, y, control=None):
        """Append a measurement; control is the input applied since the
        previous pushed state (None only for the very first push)."""
        if self._states and control is None:
            raise ValueError("control required once the window is non-empty")
        if not self._states and control is not None:
            raise ValueError("no control may precede the first state")
        self._states.append(np.asarray(x0, dtype=float))
        self._observations.append(np.asarray(y, dtype=float))
        if control is not None:
            self._controls.append(np.asarray(control, dtype=float))
        if len(self._states) > self.length:
            self._states.pop(0)
            self._observations.pop(0)
            self._controls.pop(0)
        self.t += 1


@dataclass(frozen=True)
class PenaltyConfig:
    """Convex penalty keeping the estimate near P.  kind 'zero' is theta == 0;
    'box' is weight * squared Euclidean distance to [lo, hi]."""

    kind: str = "zero"
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "box"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.kind == "box":
            object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
            object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))

    def _excess(self, p: np.ndarray) -> np.ndarray:
        return np.maximum(self.lo - p, 0.0) - np.maximum(p - self.hi, 0.0)

    def value(self, p: np.ndarray) -> float:
        if self.kind == "zero":
            return 0.0
        return self.weight * float(np.sum(self._excess(p) ** 2))

    def gradient(self, p: np.ndarray) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros_like(np.asarray(p, dtype=float))
        return -2.0 * self.weight * self._excess(p)

    def hessian(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.kind == "zero":
            return np.zeros((p.size, p.size))
        outside = (p < self.lo) | (p > self.hi)
        return 2.0 * self.weight * np.diag(outside.astype(float))


ZERO_PENALTY = PenaltyConfig()


@dataclass(frozen=True)
class EstimatorConfig:
    """Iteration budgets and tolerances of the fast and full solvers.

    min_curvature gates the fast update: when the smallest eigenvalue of the
    Gauss-Newton curvature falls below it, the window is declared degenerate
    and LinearSolveFailure is raised so the caller keeps the current estimate.
    """

    iters_per_step: int = 10
    damping: float = 1e-8
    full_solve_tol: float = 1e-9
    full_solve_max_iters: int = 100
    multistart_count: int = 5
    jitter_radius: float = 0.5
    multistart_seed: int = 12345
    min_curvature: float = 0.0

    def __post_init__(self):
        if self.iters_per_step < 1:
            raise ValueError("iters_per_step must be >= 1")
        if self.damping <= 0:
            raise ValueError("damping must be positive")


@dataclass(frozen=True)
class EstimateState:
    """Current parameter estimate; e is the error w.r.t. ground truth and is
    only filled in by diagnostics that know the true parameter."""

    p_hat: np.ndarray
    e: Optional[np.ndarray] = None


@dataclass(frozen=True)
class CostReport:
    """Window cost with its gradient and Gauss-Newton curvature.

    gauss_newton_hessian is sum_k J_k^T J_k + 0.5 * hess(theta): the curvature
    of the half-squared-error cost, which coincides with the observability
    Grammian of the window (plus the penalty term) and drops the second-order
    residual remainder.
    """

    value: float
    gradient: np.ndarray
    gauss_newton_hessian: np.ndarray


def eval_cost(
    window: MeasurementWindow,
    p: np.ndarray,
    penalty: PenaltyConfig = ZERO_PENALTY,
    model: SystemModel = None,
) -> CostReport:
    if not window.full:
        raise ValueError("window must be full")
    p = np.asarray(p, dtype=float)
    X = window.states
    Y = window.observations
    resid = Y - model.observe(X, p)  # (L, n_y)
    J = model.jac_obs_p(X, p)  # (L, n_y, n_p)
    value = float(np.sum(resid**2)) + penalty.value(p)
    gradient = -2.0 * np.einsum("kij,ki->j", J, resid) + penalty.gradient(p)
    gnh = np.einsum("kij,kil->jl", J, J) + 0.5 * penalty.hessian(p)
    gnh = 0.5 * (gnh + gnh.T)
    return CostReport(value=value, gradient=gradient, gauss_newton_hessian=gnh)


def _project(p: np.ndarray, model: SystemModel) -> np.ndarray:
    if model.param_box is None:
        return p
    lo, hi = model.param_box
    return np.clip(p, lo, hi)


def _lm_step(rep: CostReport, lam: float) -> np.ndarray:
    n = rep.gauss_newton_hessian.shape[0]
    A = rep.gauss_newton_hessian + lam * np.eye(n)
    try:
        step = np.linalg.solve(A, -0.5 * rep.gradient)
    except np.linalg.LinAlgError as exc:
        raise LinearSolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(step)):
        raise LinearSolveFailure("non-finite Newton step")
    return step


def fast_update(
    state: EstimateState,
    window: MeasurementWindow,
    cfg: EstimatorConfig,
    penalty: PenaltyConfig = ZERO_PENALTY,
    model: SystemModel = None,
) -> EstimateState:
    """One time-step of the fast routine: iters_per_step damped Gauss-Newton
    iterations warm-started at the current estimate."""
    if not window.full:
        raise ValueError("window must be full")
    p = np.asarray(state.p_hat, dtype=float).copy()
    rep = eval_cost(window, p, penalty, model)
    if cfg.min_curvature > 0.0:
        curv = float(np.linalg.eigvalsh(rep.gauss_newton_hessian)[0])
        if curv < cfg.min_curvature:
            raise LinearSolveFailure(
                f"degenerate window: curvature {curv:.3e} < {cfg.min_curvature:.3e}"
            )
    lam = cfg.damping
    for _ in range(cfg.iters_per_step):
        step = _lm_step(rep, lam)
        cand = _project(p + step, model)
        cand_rep = eval_cost(window, cand, penalty, model)
        if cand_rep.value <= rep.value:
            p, rep = cand, cand_rep
            lam = max(cfg.damping, lam / 3.0)
        else:
            lam *= 10.0
    return EstimateState(p_hat=p)


def _lm_to_convergence(window, p0, cfg, penalty, model):
    p = np.asarray(p0, dtype=float).copy()
    rep = eval_cost(window, p, penalty, model)
    lam = cfg.damping
    for _ in range(cfg.full_solve_max_iters):
        if np.linalg.norm(rep.gradient) <= cfg.full_solve_tol:
            return p, rep.value, True
        try:
            step = _lm_step(rep, lam)
        except LinearSolveFailure:
            return p, rep.value, False
        cand = _project(p + step, model)
        cand_rep = eval_cost(window, cand, penalty, model)
        if cand_rep.value <= rep.value:
            p, rep = cand, cand_rep
            lam = max(cfg.damping, lam / 3.0)
        else:
            lam *= 10.0
    converged = np.linalg.norm(rep.gradient) <= cfg.full_solve_tol
    return p, rep.value, converged


def full_solve(
    window: MeasurementWindow,
    init: np.ndarray,
    cfg: EstimatorConfig,
    penalty: PenaltyConfig = ZERO_PENALTY,
    model: SystemModel = None,
) -> np.ndarray:
    """Solve the window problem to the gradient tolerance with multistarts
    jittered around init; the oracle for the window minimiser p*."""
    if not window.full:
        raise ValueError("window must be full")
    init = np.asarray(init, dtype=float)
    rng = np.random.default_rng(cfg.multistart_seed)
    starts = [init]
    for _ in range(cfg.multistart_count - 1):
        d = rng.standard_normal(init.size)
        d /= max(np.linalg.norm(d), 1e-300)
        starts.append(init + cfg.jitter_radius * rng.random() * d)
    best = None
    for p0 in starts:
        p, value, converged = _lm_to_convergence(window, p0, cfg, penalty, model)
        if converged and (best is None or value < best[1]):
            best = (p, value)
    if best is None:
        raise NonConvergence("no multistart reached the gradient tolerance")
    return best[0]
