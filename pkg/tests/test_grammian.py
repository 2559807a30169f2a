import numpy as np
import pytest

from conftest import arc_states, window_from_states
from obsmpc.errors import NotSymmetric
from obsmpc.grammian import (
    PSD_CLAMP,
    clamp_psd,
    grammian_full,
    min_eigenvalue,
    observability_report,
    split,
)
from obsmpc.model import BearingScenario, bearing_model

MODEL = bearing_model(BearingScenario(p_true=[0.0, 0.0], delta=0.1, x0=[1.0, 0.0]))
ORIGIN = np.zeros(2)


def oracle_grammian(p, states):
    """Independent accumulation through the closed-form tangent projector."""
    total = np.zeros((2, 2))
    for x in np.asarray(states, dtype=float):
        d = np.asarray(p, dtype=float) - x
        r2 = float(d @ d)
        h = d / np.sqrt(r2)
        total += (np.eye(2) - np.outer(h, h)) / r2
    return total


class TestGrammianFull:
    def test_two_orthogonal_unit_states_give_identity(self):
        states = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert np.allclose(grammian_full(ORIGIN, states, MODEL), np.eye(2), atol=1e-14)

    def test_collinear_states_rank_one(self):
        states = np.array([[1.0, 0.0], [2.0, 0.0]])
        O = grammian_full(ORIGIN, states, MODEL)
        assert np.allclose(O, [[0.0, 0.0], [0.0, 1.25]], atol=1e-14)
        assert min_eigenvalue(O) == pytest.approx(0.0, abs=1e-14)

    def test_matches_closed_form_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            p = rng.uniform(-5, 5, 2)
            states = p + rng.uniform(-4, 4, (8, 2))
            if np.min(np.linalg.norm(states - p, axis=1)) < 0.2:
                continue
            assert np.allclose(
                grammian_full(p, states, MODEL), oracle_grammian(p, states), atol=1e-12
            )

    def test_permutation_invariant(self):
        states = arc_states(ORIGIN, 1.3, 0.2, 2.0, 6)
        O1 = grammian_full(ORIGIN, states, MODEL)
        O2 = grammian_full(ORIGIN, states[::-1], MODEL)
        assert np.allclose(O1, O2, atol=1e-14)

    def test_monotone_under_additional_states(self):
        states = arc_states(ORIGIN, 1.0, 0.0, 1.0, 5)
        small = grammian_full(ORIGIN, states[:3], MODEL)
        big = grammian_full(ORIGIN, states, MODEL)
        diff = big - small
        assert min_eigenvalue(diff) >= -1e-12

    def test_rotation_equivariant_eigenvalues(self):
        theta = 0.7
        R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        states = arc_states(ORIGIN, 1.4, 0.3, 2.2, 6)
        O1 = grammian_full(ORIGIN, states, MODEL)
        O2 = grammian_full(ORIGIN, states @ R.T, MODEL)
        assert np.allclose(
            np.linalg.eigvalsh(O1), np.linalg.eigvalsh(O2), atol=1e-12
        )


class TestSplit:
    def test_gamma_plus_predicted_reconstructs_shifted_grammian(self):
        p = np.array([0.0, 0.0])
        states = arc_states(p, 1.5, 0.1, 2.0, 6)
        w = window_from_states(states, p)
        gs = split(p, w, MODEL)
        assert np.allclose(gs.gamma, grammian_full(p, states[1:], MODEL), atol=1e-14)
        u = np.array([1.0, -0.5])
        x_next = states[-1] + 0.1 * u
        expected = grammian_full(p, np.vstack([states[1:], x_next]), MODEL)
        total = gs.gamma + gs.predicted(p, states[-1], u)
        assert np.allclose(total, expected, atol=1e-13)

    def test_predicted_hand_value(self):
        # zero input from x0=(-1,-1): next state stays at distance sqrt(2)
        # along the diagonal, so the contribution is (1/4)[[1,-1],[-1,1]]
        p = np.array([0.0, 0.0])
        states = arc_states(p, 1.5, 0.1, 2.0, 3)
        w = window_from_states(states, p)
        gs = split(p, w, MODEL)
        got = gs.predicted(p, np.array([-1.0, -1.0]), np.zeros(2))
        assert np.allclose(got, 0.25 * np.array([[1.0, -1.0], [-1.0, 1.0]]), atol=1e-14)

    def test_partial_window_rejected(self):
        from obsmpc.estimator import MeasurementWindow

        w = MeasurementWindow(4)
        w.push([1.0, 0.0], [1.0, 0.0])
        with pytest.raises(ValueError):
            split(ORIGIN, w, MODEL)


class TestMinEigenvalue:
    def test_diagonal(self):
        assert min_eigenvalue(np.diag([2.0, 3.0])) == pytest.approx(2.0)

    def test_off_diagonal(self):
        assert min_eigenvalue(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(1.0)

    def test_matches_eigvalsh_randomly(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            A = rng.standard_normal((2, 2))
            S = A @ A.T
            assert min_eigenvalue(S) == pytest.approx(
                np.linalg.eigvalsh(S)[0], rel=1e-10, abs=1e-10
            )

    def test_larger_matrices_supported(self):
        S = np.diag([3.0, 1.0, 2.0])
        assert min_eigenvalue(S) == pytest.approx(1.0)

    def test_asymmetric_rejected(self):
        with pytest.raises(NotSymmetric):
            min_eigenvalue(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            min_eigenvalue(np.zeros((2, 3)))


class TestClampAndReport:
    def test_clamp_behaviour(self):
        assert clamp_psd(-0.5 * PSD_CLAMP) == 0.0
        assert clamp_psd(-10 * PSD_CLAMP) == -10 * PSD_CLAMP
        assert clamp_psd(0.3) == 0.3

    def test_observability_report(self):
        rep = observability_report(np.eye(2), level=0.5)
        assert rep.lambda_min == pytest.approx(1.0)
        assert rep.level_ok
        rep = observability_report(np.diag([0.1, 2.0]), level=0.5)
        assert not rep.level_ok
