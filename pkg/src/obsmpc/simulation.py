"""Closed-loop simulation of the coupled estimator/controller and the
stability diagnostics computed along the recorded trace."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .controller import MpcConfig, MpcDecision, NominalFeedback, obs_budget, solve_mpc
from .errors import (
    LinearSolveFailure,
    MissingOracle,
    NonConvergence,
    SchemaError,
    SingularObservation,
)
from .estimator import (
    EstimateState,
    EstimatorConfig,
    MeasurementWindow,
    PenaltyConfig,
    ZERO_PENALTY,
    fast_update,
    full_solve,
)
from .grammian import clamp_psd, grammian_full, min_eigenvalue, split
from .model import BearingScenario, NoiseSpec, SystemModel, bearing_model, draw_noise

MODE_ACTIVE = "observability-seeking"
MODE_NOMINAL = "nominal-only"

TRACE_COLUMNS = [
    "t", "x1", "x2", "x01", "x02", "y1", "y2", "u1", "u2",
    "uobs1", "uobs2", "phat1", "phat2", "err", "lammin", "delta",
    "feasible", "V", "W", "budget", "pstar1", "pstar2",
]


@dataclass(frozen=True)
class LyapunovConfig:
    """Weight of the error term in the composite function W = V + lam*sigma(||e||)."""

    lam: float = 1.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")


@dataclass(frozen=True)
class SimulationSetup:
    """Everything the closed loop needs besides the horizon and the mode."""

    scenario: BearingScenario
    model: SystemModel
    window_length: int
    noise: NoiseSpec
    estimator: EstimatorConfig
    mpc: MpcConfig
    feedback: NominalFeedback
    p_hat_init: np.ndarray
    penalty: PenaltyConfig = ZERO_PENALTY
    lyapunov: LyapunovConfig = LyapunovConfig()
    burn_in: Optional[int] = None  # defaults to 3 * window_length

    def __post_init__(self):
        object.__setattr__(self, "p_hat_init", np.asarray(self.p_hat_init, dtype=float))
        if self.window_length < 2:
            raise ValueError("window_length must be >= 2")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", 3 * self.window_length)


@dataclass
class SimTrace:
    """Per-step record of the run plus metadata not derivable from the rows."""

    data: Dict[str, np.ndarray]
    meta: Dict[str, object] = field(default_factory=dict)

    def __len__(self):
        return len(self.data["t"])

    def column(self, name: str) -> np.ndarray:
        if name not in self.data:
            raise SchemaError(f"missing column {name!r}")
        return self.data[name]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for i in range(len(self)):
                writer.writerow(
                    [f"{float(self.data[c][i]):.17g}" for c in TRACE_COLUMNS]
                )

    @classmethod
    def from_csv(cls, path, meta: Optional[dict] = None) -> "SimTrace":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != TRACE_COLUMNS:
                raise SchemaError(f"unexpected trace header in {path}")
            rows = [[float(v) for v in row] for row in reader]
        arr = np.array(rows) if rows else np.zeros((0, len(TRACE_COLUMNS)))
        data = {c: arr[:, i] for i, c in enumerate(TRACE_COLUMNS)}
        return cls(data=data, meta=dict(meta or {}))


def run(
    setup: SimulationSetup,
    steps: int,
    mode: str = MODE_ACTIVE,
    oracle: bool = False,
    config_hash: str = "",
) -> SimTrace:
    """Run the closed loop and record one trace row per step.

    While the window fills, only the nominal feedback is applied.  Once full,
    the controller picks the total input (MPC in observability-seeking mode),
    the true state advances under it, and the fast estimator update runs on
    the window; a degenerate window keeps the previous estimate.
    """
    if mode not in (MODE_ACTIVE, MODE_NOMINAL):
        raise ValueError(f"unknown mode {mode!r}")
    L = setup.window_length
    if steps <= L:
        raise ValueError("steps must exceed the window length")
    scenario, model, fb = setup.scenario, setup.model, setup.feedback
    p_true = scenario.p_true
    x = scenario.x0.copy()
    p_hat = setup.p_hat_init.copy()
    window = MeasurementWindow(L)
    u_prev: Optional[np.ndarray] = None
    rows: List[List[float]] = []
    frozen_steps = 0

    def finalize() -> SimTrace:
        arr = np.array(rows) if rows else np.zeros((0, len(TRACE_COLUMNS)))
        data = {c: arr[:, i] for i, c in enumerate(TRACE_COLUMNS)}
        return SimTrace(
            data=data,
            meta={
                "seed": setup.noise.seed,
                "mode": mode,
                "config_hash": config_hash,
                "p_true": p_true.tolist(),
                "nu": setup.noise.nu,
                "window_length": L,
                "burn_in": setup.burn_in,
                "delta_prime": setup.mpc.delta_prime,
                "frozen_steps": frozen_steps,
                "oracle": oracle,
            },
        )

    try:
        for t in range(steps):
            v0 = draw_noise(setup.noise, model.n_x, 2 * t)
            v = draw_noise(setup.noise, model.n_y, 2 * t + 1)
            x0_t = x + v0
            y_t = model.observe(x, p_true) + v
            window.push(x0_t, y_t, control=u_prev)

            budget = obs_budget(x0_t, setup.mpc, fb)
            lam_min = math.nan
            delta_val = math.nan
            feasible_val = math.nan
            u_obs = np.zeros(model.n_u)
            pstar = np.full(model.n_p, math.nan)

            if window.full:
                lam_min = clamp_psd(
                    min_eigenvalue(grammian_full(p_hat, window.states, model))
                )
                if mode == MODE_ACTIVE:
                    dec = solve_mpc(window, p_hat, x0_t, setup.mpc, fb, model)
                    u_total, u_obs = dec.u_total, dec.u_obs
                    delta_val, feasible_val = dec.delta, float(dec.feasible)
                else:
                    u_total = fb.kappa(x0_t, p_hat)
                    gs = split(p_hat, window, model)
                    delta_val = clamp_psd(
                        min_eigenvalue(gs.gamma + gs.predicted(p_hat, x0_t, u_total))
                    )
                    feasible_val = float(delta_val >= setup.mpc.delta_prime)
                if oracle:
                    try:
                        pstar = full_solve(
                            window, p_hat, setup.estimator, setup.penalty, model
                        )
                    except NonConvergence:
                        pass
            else:
                u_total = fb.kappa(x0_t, p_hat)

            e = p_hat - p_true
            err = float(np.linalg.norm(e))
            V = fb.lyapunov(x)
            W = V + setup.lyapunov.lam * fb.sigma(err)
            rows.append([
                float(t), x[0], x[1], x0_t[0], x0_t[1], y_t[0], y_t[1],
                u_total[0], u_total[1], u_obs[0], u_obs[1], p_hat[0], p_hat[1],
                err, lam_min, delta_val, feasible_val, V, W, budget,
                pstar[0], pstar[1],
            ])

            x = model.dynamics(x, u_total, p_true)
            if window.full:
                try:
                    p_hat = fast_update(
                        EstimateState(p_hat), window, setup.estimator,
                        setup.penalty, model,
                    ).p_hat
                except LinearSolveFailure:
                    frozen_steps += 1
            u_prev = u_total
    except SingularObservation as exc:
        exc.partial_trace = finalize()
        raise

    return finalize()


@dataclass(frozen=True)
class RecursionReport:
    fraction: float
    gamma_min: Optional[float]
    gamma_min_95: Optional[float]
    n_steps: int


def _recursion_pairs(trace: SimTrace):
    p_true = np.asarray(trace.meta["p_true"], dtype=float)
    err = trace.column("err")
    ps = np.stack([trace.column("pstar1"), trace.column("pstar2")], axis=1)
    if np.all(~np.isfinite(ps[:, 0])):
        raise MissingOracle("trace was logged without the p* oracle")
    pe = np.linalg.norm(ps - p_true, axis=1)
    valid = np.isfinite(err[:-1]) & np.isfinite(err[1:]) & np.isfinite(pe[1:])
    return err[:-1][valid], err[1:][valid], pe[1:][valid]


def check_error_recursion(trace: SimTrace, gamma_hat: float) -> RecursionReport:
    """Fraction of steps satisfying ||e+|| <= g*||e|| + (1+g)*||p*-p_true||,
    plus the smallest such g found by bisection (all steps and the 95% level)."""
    e0, e1, pe = _recursion_pairs(trace)
    n = len(e0)
    if n == 0:
        return RecursionReport(0.0, None, None, 0)

    def frac(g):
        return float(np.mean(e1 <= g * e0 + (1.0 + g) * pe + 1e-12))

    def smallest(target):
        if frac(1.0 - 1e-9) < target:
            return None
        lo, hi = 0.0, 1.0 - 1e-9
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if frac(mid) >= target:
                hi = mid
            else:
                lo = mid
        return hi

    return RecursionReport(
        fraction=frac(gamma_hat),
        gamma_min=smallest(1.0),
        gamma_min_95=smallest(0.95),
        n_steps=n,
    )


@dataclass(frozen=True)
class UltimateBoundReport:
    max_error: float
    bound: float
    ok: bool


def check_ultimate_bound(
    trace: SimTrace, gamma_hat: float, nu: float, burn_in: int
) -> UltimateBoundReport:
    """Post-burn-in maximum estimation error against (1+g)/(1-g)*nu."""
    t = trace.column("t")
    err = trace.column("err")
    tail = err[t > burn_in]
    max_error = float(np.max(tail)) if tail.size else 0.0
    bound = (1.0 + gamma_hat) / (1.0 - gamma_hat) * nu
    return UltimateBoundReport(max_error=max_error, bound=bound, ok=max_error <= bound)


@dataclass(frozen=True)
class LyapunovReport:
    margins: np.ndarray
    flagged_steps: np.ndarray
    sandwich_ok: bool


def check_lyapunov(
    trace: SimTrace, fb: NominalFeedback, lyconf: LyapunovConfig
) -> LyapunovReport:
    """Per-step decrease margin of W along the trace; steps where W increases
    while the disturbance proxy is small relative to the augmented state are
    flagged.  Also verifies the comparison-function sandwich at every row."""
    W = trace.column("W")
    err = trace.column("err")
    x = np.stack([trace.column("x1"), trace.column("x2")], axis=1)
    x0 = np.stack([trace.column("x01"), trace.column("x02")], axis=1)
    margins = W[1:] - W[:-1]

    nu = float(trace.meta.get("nu", 0.0))
    ps = np.stack([trace.column("pstar1"), trace.column("pstar2")], axis=1)
    if np.any(np.isfinite(ps[:, 0])):
        p_true = np.asarray(trace.meta["p_true"], dtype=float)
        pe = np.linalg.norm(ps - p_true, axis=1)
        pe = np.where(np.isfinite(pe), pe, nu)
        v0 = np.linalg.norm(x0 - x, axis=1)
        w_proxy = np.hypot(pe[1:], v0[:-1])
    else:
        w_proxy = np.full(len(W) - 1, nu)

    chi = np.hypot(np.linalg.norm(x, axis=1), err)
    flagged = np.where((margins > 1e-12) & (w_proxy < 0.1 * chi[:-1]))[0]

    lam = lyconf.lam
    lower = np.minimum(0.5 * chi, lam * fb.sigma(0.5 * chi))
    # each W term is bounded by its comparison function at ||chi||, so the sum
    # (not the max) of the two is the valid upper envelope
    upper = chi + lam * fb.sigma(chi)
    sandwich_ok = bool(np.all((lower <= W + 1e-12) & (W <= upper + 1e-12)))
    return LyapunovReport(margins=margins, flagged_steps=flagged, sandwich_ok=sandwich_ok)


def summarize(trace: SimTrace, setup: SimulationSetup) -> dict:
    """Run summary consumed by the CLI, the comparison command and the tests."""
    t = trace.column("t")
    err = trace.column("err")
    lam = trace.column("lammin")
    feas = trace.column("feasible")
    full = np.isfinite(lam)
    post_warmup = full  # window full <=> past warmup
    burn_in = int(trace.meta.get("burn_in", 3 * int(trace.meta["window_length"])))
    tail = err[t > burn_in]
    nu = float(trace.meta.get("nu", 0.0))

    gamma_hat = None
    gamma_hat_95 = None
    bound = None
    bound_ok = None
    try:
        rec = check_error_recursion(trace, gamma_hat=0.99)
        gamma_hat = rec.gamma_min
        gamma_hat_95 = rec.gamma_min_95
        fitted = gamma_hat if gamma_hat is not None else gamma_hat_95
        if fitted is not None:
            ub = check_ultimate_bound(trace, fitted, nu, burn_in)
            bound, bound_ok = ub.bound, ub.ok
    except MissingOracle:
        pass

    def rate(mask):
        sel = mask[post_warmup]
        return float(np.mean(sel)) if sel.size else 0.0

    return {
        "seed": int(trace.meta["seed"]),
        "mode": trace.meta["mode"],
        "config_hash": trace.meta.get("config_hash", ""),
        "steps": int(len(trace)),
        "burn_in": burn_in,
        "nu": nu,
        "final_error": float(err[-1]) if len(trace) else math.nan,
        "max_error_post_burn_in": float(np.max(tail)) if tail.size else math.nan,
        "feasibility_rate": rate(feas == 1.0),
        "lammin_rate_at_level": rate(lam >= setup.mpc.delta_prime),
        "lammin_below_1e3_rate": rate(lam < 1e-3),
        "frozen_steps": int(trace.meta.get("frozen_steps", 0)),
        "gamma_hat": gamma_hat,
        "gamma_hat_95": gamma_hat_95,
        "ultimate_bound": bound,
        "ultimate_bound_ok": bound_ok,
    }


def recompute_predicted_levels(trace: SimTrace, model: SystemModel, L: int) -> np.ndarray:
    """Re-assemble the controller's predicted Grammian level at each step from
    the trace columns alone; used to cross-check the logged delta column."""
    x0 = np.stack([trace.column("x01"), trace.column("x02")], axis=1)
    y = np.stack([trace.column("y1"), trace.column("y2")], axis=1)
    u = np.stack([trace.column("u1"), trace.column("u2")], axis=1)
    phat = np.stack([trace.column("phat1"), trace.column("phat2")], axis=1)
    out = np.full(len(trace), math.nan)
    window = MeasurementWindow(L)
    for t in range(len(trace)):
        window.push(x0[t], y[t], control=u[t - 1] if t > 0 else None)
        if not window.full:
            continue
        gs = split(phat[t], window, model)
        out[t] = clamp_psd(
            min_eigenvalue(gs.gamma + gs.predicted(phat[t], x0[t], u[t]))
        )
    return out
