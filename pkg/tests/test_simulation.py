import math

import numpy as np
import pytest

from obsmpc.errors import MissingOracle, SchemaError, SingularObservation
from obsmpc.model import BearingScenario, bearing_model, bearing_observe
from obsmpc.simulation import (
    MODE_ACTIVE,
    MODE_NOMINAL,
    TRACE_COLUMNS,
    LyapunovConfig,
    SimTrace,
    check_error_recursion,
    check_lyapunov,
    check_ultimate_bound,
    recompute_predicted_levels,
    run,
    summarize,
)


@pytest.fixture(scope="module")
def short_active(reference_cfg):
    setup = reference_cfg.to_setup()
    return setup, run(setup, steps=60, mode=MODE_ACTIVE, config_hash=reference_cfg.hash())


class TestRun:
    def test_trace_shape_and_time_axis(self, short_active):
        _, tr = short_active
        assert len(tr) == 60
        assert set(tr.data) == set(TRACE_COLUMNS)
        assert np.array_equal(tr.column("t"), np.arange(60.0))

    def test_bit_identical_reruns(self, short_active):
        setup, tr = short_active
        tr2 = run(setup, steps=60, mode=MODE_ACTIVE)
        for col in TRACE_COLUMNS:
            assert np.array_equal(tr.column(col), tr2.column(col), equal_nan=True), col

    def test_noise_respects_bounds(self, short_active):
        setup, tr = short_active
        nu = setup.noise.nu
        x = np.stack([tr.column("x1"), tr.column("x2")], axis=1)
        x0 = np.stack([tr.column("x01"), tr.column("x02")], axis=1)
        assert np.all(np.linalg.norm(x0 - x, axis=1) <= nu + 1e-15)
        y = np.stack([tr.column("y1"), tr.column("y2")], axis=1)
        clean = np.stack(
            [bearing_observe(xi, setup.scenario.p_true) for xi in x]
        )
        assert np.all(np.linalg.norm(y - clean, axis=1) <= nu + 1e-15)

    def test_warmup_uses_pure_nominal(self, short_active):
        setup, tr = short_active
        L = setup.window_length
        assert np.all(np.isnan(tr.column("lammin")[: L - 1]))
        assert np.all(tr.column("uobs1")[: L - 1] == 0.0)
        assert np.all(np.isfinite(tr.column("lammin")[L - 1 :]))

    def test_logged_levels_recomputable_from_trace(self, short_active):
        setup, tr = short_active
        redo = recompute_predicted_levels(tr, setup.model, setup.window_length)
        logged = tr.column("delta")
        mask = np.isfinite(logged)
        assert np.array_equal(np.isfinite(redo), mask)
        assert np.max(np.abs(redo[mask] - logged[mask])) == 0.0

    def test_nominal_mode_never_excites(self, reference_setup):
        tr = run(reference_setup, steps=40, mode=MODE_NOMINAL)
        assert np.all(tr.column("uobs1") == 0.0)
        assert np.all(tr.column("uobs2") == 0.0)
        assert tr.meta["mode"] == MODE_NOMINAL

    def test_control_bounded(self, short_active):
        setup, tr = short_active
        u = np.stack([tr.column("u1"), tr.column("u2")], axis=1)
        assert np.all(np.linalg.norm(u, axis=1) <= setup.feedback.u_max + 1e-9)
        uo = np.stack([tr.column("uobs1"), tr.column("uobs2")], axis=1)
        assert np.all(np.linalg.norm(uo, axis=1) <= tr.column("budget") + 1e-9)

    def test_meta_fields(self, short_active, reference_cfg):
        _, tr = short_active
        assert tr.meta["seed"] == 0
        assert tr.meta["config_hash"] == reference_cfg.hash()
        assert tr.meta["window_length"] == 10
        assert tr.meta["frozen_steps"] >= 0
        assert tr.meta["oracle"] is False

    def test_invalid_arguments(self, reference_setup):
        with pytest.raises(ValueError):
            run(reference_setup, steps=40, mode="sideways")
        with pytest.raises(ValueError):
            run(reference_setup, steps=5)

    def test_singular_start_attaches_partial_trace(self, reference_cfg):
        setup = reference_cfg.with_updates(
            scenario={"x0": [5.0, 8.0]}, noise={"nu": 0.0}
        ).to_setup()
        with pytest.raises(SingularObservation) as info:
            run(setup, steps=40)
        assert len(info.value.partial_trace) == 0

    def test_oracle_column_logged_on_full_windows(self, reference_cfg):
        setup = reference_cfg.to_setup()
        tr = run(setup, steps=25, mode=MODE_ACTIVE, oracle=True)
        ps1 = tr.column("pstar1")
        L = setup.window_length
        assert np.all(np.isnan(ps1[: L - 1]))
        assert np.any(np.isfinite(ps1[L - 1 :]))


class TestCsvRoundTrip:
    def test_exact_round_trip(self, short_active, tmp_path):
        _, tr = short_active
        path = tmp_path / "trace.csv"
        tr.to_csv(path)
        back = SimTrace.from_csv(path, meta=tr.meta)
        for col in TRACE_COLUMNS:
            a, b = tr.column(col), back.column(col)
            both_nan = np.isnan(a) & np.isnan(b)
            assert np.all(both_nan | (a == b)), col

    def test_header_is_validated(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(SchemaError):
            SimTrace.from_csv(bad)


def synthetic_trace(err, pstar_err, p_true=(0.0, 0.0)):
    n = len(err)
    data = {c: np.zeros(n) for c in TRACE_COLUMNS}
    data["t"] = np.arange(float(n))
    data["err"] = np.asarray(err, dtype=float)
    data["pstar1"] = np.asarray(p_true[0]) + np.asarray(pstar_err, dtype=float)
    data["pstar2"] = np.full(n, p_true[1], dtype=float)
    return SimTrace(data=data, meta={"p_true": list(p_true), "nu": 0.0})


class TestDiagnostics:
    def test_recursion_exact_geometric_decay(self):
        tr = synthetic_trace([1.0, 0.5, 0.25, 0.125], [0.0] * 4)
        rep = check_error_recursion(tr, gamma_hat=0.6)
        assert rep.fraction == 1.0
        assert rep.gamma_min == pytest.approx(0.5, abs=1e-9)
        assert rep.n_steps == 3

    def test_recursion_oracle_slack(self):
        # error held constant but p* sits 0.5 away: satisfied for any
        # g with (1+g)*0.5 >= (1-g)*1.0, i.e. g >= 1/3
        tr = synthetic_trace([1.0, 1.0, 1.0], [0.5] * 3)
        rep = check_error_recursion(tr, gamma_hat=0.99)
        assert rep.gamma_min == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_recursion_requires_oracle(self):
        tr = synthetic_trace([1.0, 0.5], [0.0, 0.0])
        tr.data["pstar1"] = np.full(2, math.nan)
        with pytest.raises(MissingOracle):
            check_error_recursion(tr, gamma_hat=0.5)

    def test_ultimate_bound(self):
        tr = synthetic_trace([1.0, 0.2, 0.05, 0.04], [0.0] * 4)
        rep = check_ultimate_bound(tr, gamma_hat=0.5, nu=0.015, burn_in=1)
        assert rep.bound == pytest.approx(0.045)
        assert rep.max_error == pytest.approx(0.05)
        assert not rep.ok
        assert check_ultimate_bound(tr, 0.5, 0.015, burn_in=2).ok

    def test_lyapunov_noise_free_run_clean(self, reference_cfg):
        cfg = reference_cfg.with_updates(noise={"nu": 0.0})
        setup = cfg.to_setup()
        tr = run(setup, steps=80, mode=MODE_ACTIVE)
        rep = check_lyapunov(tr, setup.feedback, setup.lyapunov)
        assert rep.sandwich_ok
        assert rep.flagged_steps.size == 0
        assert np.all(rep.margins <= 1e-12)

    def test_noise_free_estimate_and_state_converge(self, reference_cfg):
        cfg = reference_cfg.with_updates(noise={"nu": 0.0})
        setup = cfg.to_setup()
        tr = run(setup, steps=150, mode=MODE_ACTIVE)
        post = tr.column("err")[tr.column("t") > setup.burn_in]
        assert np.max(post) <= 1e-9
        V = tr.column("V")
        unsat = V < setup.feedback.r_sat
        assert np.all(np.diff(V)[(V[:-1] > 1e-9)] < 0.0) or np.all(
            np.diff(V)[unsat[:-1] & (V[:-1] > 1e-9)] < 0.0
        )


class TestSummarize:
    def test_schema_and_values(self, short_active, reference_setup):
        _, tr = short_active
        s = summarize(tr, reference_setup)
        for key in [
            "seed", "mode", "config_hash", "steps", "burn_in", "nu",
            "final_error", "max_error_post_burn_in", "feasibility_rate",
            "lammin_rate_at_level", "lammin_below_1e3_rate", "frozen_steps",
            "gamma_hat", "gamma_hat_95", "ultimate_bound", "ultimate_bound_ok",
        ]:
            assert key in s
        assert s["steps"] == 60
        assert 0.0 <= s["feasibility_rate"] <= 1.0
        assert s["final_error"] == pytest.approx(tr.column("err")[-1])
        # no oracle column -> recursion-based fields stay empty
        assert s["gamma_hat"] is None and s["ultimate_bound"] is None

    @pytest.mark.xfail(
        reason="with a 9.4-unit initial landmark distance the window Grammian "
        "trace is capped near L/r^2 << 1, so the certified level cannot reach "
        "1.0 for 95% of a 300-step run; the comparison experiment instead "
        "certifies relative improvement over the nominal mode",
        strict=True,
    )
    def test_level_holds_on_most_steps(self, reference_cfg):
        setup = reference_cfg.to_setup()
        tr = run(setup, steps=300, mode=MODE_ACTIVE, config_hash=reference_cfg.hash())
        s = summarize(tr, setup)
        assert s["lammin_rate_at_level"] >= 0.95
