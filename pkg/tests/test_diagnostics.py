import numpy as np
import pytest

from nasolve import (
    ConvergenceReport,
    IterationRecord,
    MissingGroundTruth,
    OrderUndefined,
    SolverConfig,
    decompose_errors,
    estimate_order,
    gain_history,
    make_chandrasekhar,
    make_singular_quadratic,
    null_space_gamma,
    quasi_restart_count,
    solve,
)


class TestEstimateOrder:
    def test_exact_quadratic_sequence(self):
        qs, q_term = estimate_order([2.0**-1, 2.0**-2, 2.0**-4, 2.0**-8])
        np.testing.assert_allclose(qs, [2.0, 2.0, 2.0], atol=1e-13)
        assert q_term == pytest.approx(2.0, abs=1e-13)

    def test_geometric_ratio_half(self):
        norms = [2.0**-k for k in range(1, 7)]
        qs, q_term = estimate_order(norms)
        np.testing.assert_allclose(qs, [(k + 1) / k for k in range(1, 6)], atol=1e-13)
        assert q_term == pytest.approx(1.25, abs=1e-13)
        assert q_term < 1.3

    def test_constant_norms(self):
        qs, q_term = estimate_order([0.5, 0.5, 0.5])
        np.testing.assert_array_equal(qs, [1.0, 1.0])
        assert q_term == 1.0

    def test_too_few_eligible_raises(self):
        with pytest.raises(OrderUndefined):
            estimate_order([0.5, 0.25])
        with pytest.raises(OrderUndefined):
            estimate_order([3.0, 2.0, 0.5, 0.25])

    def test_pairs_straddling_one_are_skipped(self):
        qs, _ = estimate_order([2.0, 0.5, 0.25, 0.125])
        assert len(qs) == 2  # (2.0, 0.5) is ineligible

    def test_positive_norms_required(self):
        with pytest.raises(ValueError):
            estimate_order([0.5, 0.0, 0.1])

    def test_doubly_exponential_property(self):
        for a in (0.5, 0.3, 0.9):
            norms = [a ** (2**k) for k in range(6)]
            qs, q_term = estimate_order(norms)
            np.testing.assert_allclose(qs, 2.0, atol=1e-12)
            assert q_term == pytest.approx(2.0, abs=1e-12)


def synthetic_report(xs=None, ws=None, r_used=None):
    xs = [] if xs is None else xs
    records = []
    n = max(len(xs), len(ws) if ws is not None else 0, len(r_used or []))
    for k in range(n):
        x = np.asarray(xs[k], dtype=float) if k < len(xs) else np.zeros(2)
        w = np.asarray(ws[k], dtype=float) if ws is not None else np.zeros(2)
        records.append(
            IterationRecord(
                k=k,
                x=x,
                w=w,
                residual_norm=1.0,
                step_norm=max(float(np.linalg.norm(w)), 1e-3),
                r_used=None if r_used is None else r_used[k],
            )
        )
    return ConvergenceReport(records=tuple(records), status="converged",
                             iterations=len(records))


class TestDecomposeErrors:
    truth = make_singular_quadratic().metadata

    def test_pure_null_error(self):
        report = synthetic_report(xs=[self.truth.root + self.truth.null_vector])
        out = decompose_errors(report, self.truth)
        np.testing.assert_allclose(out[0], [1.0, 0.0, 0.0], atol=1e-15)

    def test_pure_range_error(self):
        e = np.array([0.0, 1.0])
        report = synthetic_report(xs=[self.truth.root + e])
        out = decompose_errors(report, self.truth)
        assert out[0][0] == 0.0
        assert out[0][1] == pytest.approx(1.0, abs=1e-15)
        assert np.isinf(out[0][2])

    def test_orthogonal_decomposition_property(self):
        rng = np.random.default_rng(21)
        xs = [self.truth.root + rng.standard_normal(2) for _ in range(50)]
        out = decompose_errors(synthetic_report(xs=xs), self.truth)
        for x, (pn, pr, _) in zip(xs, out):
            e2 = float(np.linalg.norm(x - self.truth.root)) ** 2
            assert pn**2 + pr**2 == pytest.approx(e2, abs=1e-12)

    def test_newton_null_component_halves(self):
        p = make_singular_quadratic()
        report = solve(p, [1.0, 1.0], SolverConfig(method="newton", tol=1e-10))
        out = decompose_errors(report, p.metadata)
        pn = out[:, 0]
        ratios = pn[1:] / pn[:-1]
        np.testing.assert_allclose(ratios, 0.5, atol=0.02)

    def test_missing_ground_truth(self):
        p = make_chandrasekhar(1.0, 10)
        report = synthetic_report(xs=[np.zeros(10)])
        with pytest.raises(MissingGroundTruth):
            decompose_errors(report, p.metadata)


class TestGainHistory:
    def test_newton_only_run_rejected(self):
        p = make_singular_quadratic()
        report = solve(p, [1.0, 1.0], SolverConfig(method="newton"))
        with pytest.raises(ValueError):
            gain_history(report)

    def test_na_gains_bounded_and_dominated(self):
        p = make_chandrasekhar(1.0, 50)
        for cfg in (SolverConfig(method="na", m=1),
                    SolverConfig(method="agna", r_hat=0.5)):
            theta, theta_lam = gain_history(solve(p, np.ones(50), cfg))
            assert len(theta) >= 1
            assert np.all(theta <= 1.0 + 1e-12)
            assert np.all(theta <= theta_lam + 1e-12)

    def test_unscaled_step_has_unit_scaled_gain(self):
        # a gamma_zero_or_ge_one decision means lambda*gamma = 0: theta_lambda = 1
        p = make_chandrasekhar(1.0, 50)
        report = solve(p, np.ones(50), SolverConfig(method="agna", r_hat=0.5))
        zeroed = [rec for rec in report.records
                  if rec.decision is not None
                  and rec.decision.case == "gamma_zero_or_ge_one"]
        for rec in zeroed:
            assert rec.theta_lambda == pytest.approx(1.0, abs=1e-15)


class TestQuasiRestartCount:
    def test_capped_then_decaying_counts_zero(self):
        report = synthetic_report(r_used=[0.9, 0.9, 0.9, 0.5, 0.1])
        assert quasi_restart_count(report, 0.9) == 0

    def test_transient_dips_before_terminal_decay(self):
        # maximal strictly-decreasing suffix is (0.9, 0.2, 0.05, 0.01);
        # the lone earlier dip below r_hat is 0.3
        report = synthetic_report(r_used=[0.9, 0.3, 0.9, 0.2, 0.05, 0.01])
        assert quasi_restart_count(report, 0.9) == 1

    def test_newton_run_counts_zero(self):
        p = make_singular_quadratic()
        report = solve(p, [1.0, 1.0], SolverConfig(method="newton"))
        assert quasi_restart_count(report, 0.9) == 0


class TestNullSpaceGamma:
    def test_steps_aligned_with_null_vector(self):
        truth = make_singular_quadratic().metadata
        phi = truth.null_vector
        report = synthetic_report(
            xs=[np.zeros(2)] * 3, ws=[2.0 * phi, 1.0 * phi, 0.5 * phi]
        )
        out = null_space_gamma(report, truth)
        # a/(a-b) for consecutive projections (1,2) and (0.5,1)
        np.testing.assert_allclose(out, [1.0 / (1.0 - 2.0), 0.5 / (0.5 - 1.0)])

    def test_missing_truth(self):
        with pytest.raises(MissingGroundTruth):
            null_space_gamma(synthetic_report(xs=[np.zeros(2)]),
                             make_chandrasekhar(0.5, 2).metadata)


class TestReportProperties:
    def test_r_history_and_q_term(self):
        p = make_chandrasekhar(0.5, 100)
        report = solve(p, np.zeros(100), SolverConfig(method="agna", r_hat=0.1,
                                                      tol=1e-12))
        assert report.status == "converged"
        r_hist = report.r_history
        assert len(r_hist) == report.iterations - 1
        assert r_hist[-1] <= 1e-2 * 0.1
        assert all(b < a for a, b in zip(r_hist, r_hist[1:]))
        assert report.q_term is not None and report.q_term >= 1.7

    def test_q_term_none_on_short_run(self):
        p = make_chandrasekhar(0.5, 100)
        report = solve(p, np.ones(100), SolverConfig(method="newton"))
        assert report.q_term is None
