"""Observability Grammian of a measurement window and its realized/predicted
split used by the one-step-ahead controller."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NotSymmetric
from .estimator import MeasurementWindow
from .model import SystemModel

# Eigenvalues in [-PSD_CLAMP, 0] are treated as exact zeros.
PSD_CLAMP = 1e-10

SYMMETRY_TOL = 1e-9


def grammian_full(p: np.ndarray, states: np.ndarray, model: SystemModel) -> np.ndarray:
    """Sum over the window of N_k N_k^T with N_k the observation-parameter
    sensitivity at state k (J_k^T stacked): sum_k J_k^T J_k."""
    J = model.jac_obs_p(np.asarray(states, dtype=float), np.asarray(p, dtype=float))
    O = np.einsum("kij,kil->jl", J, J)
    return 0.5 * (O + O.T)


@dataclass(frozen=True)
class GrammianSplit:
    """Realized part over the last L-1 window states plus a map giving the
    predicted one-step contribution under a candidate input."""

    gamma: np.ndarray
    predicted: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def split(p: np.ndarray, window: MeasurementWindow, model: SystemModel) -> GrammianSplit:
    """Decompose the shifted-horizon Grammian: gamma covers the window states
    with the oldest dropped; predicted(p, x0, u) is the contribution of the
    state one step ahead of x0 under input u."""
    if not window.full:
        raise ValueError("window must be full")
    gamma = grammian_full(p, window.states[1:], model)

    def predicted(p2: np.ndarray, x0: np.ndarray, u: np.ndarray) -> np.ndarray:
        x_next = model.dynamics(np.asarray(x0, dtype=float), np.asarray(u, dtype=float), p2)
        J = model.jac_obs_p(x_next, np.asarray(p2, dtype=float))
        return J.T @ J

    return GrammianSplit(gamma=gamma, predicted=predicted)


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix; closed form for 2x2."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if np.max(np.abs(m - m.T)) > SYMMETRY_TOL:
        raise NotSymmetric("asymmetry exceeds tolerance")
    if m.shape[0] == 2:
        half_tr = 0.5 * (m[0, 0] + m[1, 1])
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        disc = max(half_tr * half_tr - det, 0.0)
        return float(half_tr - np.sqrt(disc))
    return float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])


def clamp_psd(value: float) -> float:
    """Zero out tiny negative eigenvalues produced by floating point."""
    if -PSD_CLAMP <= value < 0.0:
        return 0.0
    return value


@dataclass(frozen=True)
class ObservabilityReport:
    """Smallest eigenvalue of an assembled Grammian against a required level."""

    lambda_min: float
    matrix: np.ndarray
    level_ok: bool


def observability_report(matrix: np.ndarray, level: float) -> ObservabilityReport:
    lam = clamp_psd(min_eigenvalue(matrix))
    return ObservabilityReport(lambda_min=lam, matrix=matrix, level_ok=lam >= level)
