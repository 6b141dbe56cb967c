import math

import numpy as np
import pytest

from nasolve import (
    NonlinearProblem,
    SolverConfig,
    check_jacobian,
    make_bratu_1d,
    make_chandrasekhar,
    make_singular_quadratic,
    problem_from_id,
    solve,
)


def terminal_pairwise_order(report):
    """log|w_last| / log|w_prev| over the last pair of sub-unit step norms."""
    norms = [sn for sn in report.step_norms if 0.0 < sn < 1.0]
    assert len(norms) >= 2
    return math.log(norms[-1]) / math.log(norms[-2])


class TestSingularQuadratic:
    def test_residual_and_jacobian_values(self):
        p = make_singular_quadratic()
        np.testing.assert_array_equal(p.residual(np.array([1.0, 1.0])), [1.0, 1.0])
        np.testing.assert_array_equal(
            p.jacobian(np.array([1.0, 1.0])), [[2.0, 0.0], [0.0, 1.0]]
        )

    def test_ground_truth(self):
        p = make_singular_quadratic()
        truth = p.metadata
        assert truth.is_singular
        np.testing.assert_array_equal(truth.root, [0.0, 0.0])
        np.testing.assert_array_equal(truth.null_vector, [1.0, 0.0])

    def test_jacobian_at_root_rank_one(self):
        p = make_singular_quadratic()
        J = p.jacobian(p.metadata.root)
        assert np.linalg.matrix_rank(J) == 1
        np.testing.assert_array_equal(J @ p.metadata.null_vector, [0.0, 0.0])

    def test_newton_halves_null_component_exactly(self):
        # x <- x - f'(x)^-1 f(x) halves the first component at every step
        p = make_singular_quadratic()
        report = solve(p, [1.0, 1.0], SolverConfig(method="newton", tol=1e-10))
        assert report.status == "converged"
        for rec in report.records:
            assert rec.x[0] == 2.0 ** (-rec.k)


class TestChandrasekhar:
    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            make_chandrasekhar(0.0, 10)
        with pytest.raises(ValueError):
            make_chandrasekhar(1.2, 10)
        with pytest.raises(ValueError):
            make_chandrasekhar(-0.5, 10)
        with pytest.raises(ValueError):
            make_chandrasekhar(0.5, 1)

    def test_small_c_limit_root_near_ones(self):
        # at c -> 0 the equation decouples and H = 1 solves it
        c = 1e-8
        p = make_chandrasekhar(c, 50)
        rnorm = np.linalg.norm(p.residual(np.ones(50)))
        assert rnorm <= np.sqrt(50) * c * 1.001

    def test_metadata(self):
        assert make_chandrasekhar(1.0, 10).metadata.is_singular
        p = make_chandrasekhar(0.5, 10)
        assert not p.metadata.is_singular
        assert p.metadata.parameter == ("c", 0.5)

    def test_nonsingular_newton_terminal_order(self):
        # c = 0.5 is nonsingular: terminal convergence is quadratic-or-better
        p = make_chandrasekhar(0.5, 100)
        report = solve(p, np.ones(100), SolverConfig(method="newton", tol=1e-10))
        assert report.status == "converged"
        assert terminal_pairwise_order(report) >= 1.8

    def test_singular_newton_linear_rate_half(self):
        # c = 1: Jacobian singular at the solution, step ratio tends to 1/2
        p = make_chandrasekhar(1.0, 100)
        report = solve(p, np.ones(100), SolverConfig(method="newton", tol=1e-10))
        assert report.status == "converged"
        sn = report.step_norms
        ratios = sn[1:] / sn[:-1]
        np.testing.assert_allclose(ratios[-5:], 0.5, atol=0.02)


class TestBratu1d:
    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            make_bratu_1d(-0.1, 10)
        with pytest.raises(ValueError):
            make_bratu_1d(1.0, 2)

    def test_lambda_zero_root_is_zero(self):
        p = make_bratu_1d(0.0, 20)
        np.testing.assert_array_equal(p.residual(np.zeros(20)), np.zeros(20))
        np.testing.assert_array_equal(p.metadata.root, np.zeros(20))

    def test_far_from_fold_newton_terminal_order(self):
        p = make_bratu_1d(1.0, 100)
        report = solve(p, np.zeros(100), SolverConfig(method="newton", tol=1e-10))
        assert report.status == "converged"
        assert terminal_pairwise_order(report) >= 1.8


class TestCheckJacobian:
    def test_singular_quadratic_central_difference(self):
        p = make_singular_quadratic()
        assert check_jacobian(p, np.array([1.0, 1.0]), 1e-5) <= 1e-6

    def test_exact_for_quadratic_at_root(self):
        # central differences are exact for quadratics up to rounding
        p = make_singular_quadratic()
        assert check_jacobian(p, p.metadata.root, 1e-5) <= 1e-12

    def test_chandrasekhar(self):
        p = make_chandrasekhar(0.5, 10)
        assert check_jacobian(p, np.ones(10), 1e-6) <= 1e-5

    def test_rejects_nonpositive_step(self):
        p = make_singular_quadratic()
        with pytest.raises(ValueError):
            check_jacobian(p, np.ones(2), 0.0)

    def test_all_builtins_at_random_points(self):
        rng = np.random.default_rng(7)
        problems = [
            (make_singular_quadratic(), lambda: rng.uniform(-2, 2, 2)),
            (make_chandrasekhar(0.5, 20), lambda: 1.0 + 0.3 * rng.standard_normal(20)),
            (make_bratu_1d(1.0, 20), lambda: 0.2 * rng.standard_normal(20)),
        ]
        for p, draw in problems:
            for _ in range(10):
                assert check_jacobian(p, draw(), 1e-5) <= 1e-4


def test_declared_roots_have_tiny_residual():
    for p in (make_singular_quadratic(), make_bratu_1d(0.0, 10)):
        root = p.metadata.root
        rnorm = np.linalg.norm(p.residual(root))
        assert rnorm <= 1e-10 * (1.0 + np.linalg.norm(root))


def test_finite_difference_fallback():
    analytic = make_singular_quadratic()
    p = NonlinearProblem(
        name="fd",
        dimension=2,
        residual=analytic.residual,
        jacobian=None,
        default_start=np.array([1.0, 1.0]),
    )
    x = np.array([0.7, -0.3])
    assert np.max(np.abs(p.jacobian(x) - analytic.jacobian(x))) <= 1e-6


def test_bad_ground_truth_rejected():
    with pytest.raises(ValueError):
        NonlinearProblem(
            name="bad",
            dimension=2,
            residual=lambda x: np.array([x[0] ** 2, x[1]]),
            jacobian=None,
            default_start=np.zeros(2),
            metadata=make_singular_quadratic().metadata.__class__(
                root=np.array([1.0, 1.0])
            ),
        )


class TestRegistry:
    def test_ids(self):
        assert problem_from_id("singular_quadratic").dimension == 2
        assert problem_from_id("chandrasekhar", {"c": "1.0", "n": "30"}).dimension == 30
        assert problem_from_id("bratu1d", {"lambda": "2.0", "n": "15"}).dimension == 15

    def test_defaults(self):
        assert problem_from_id("chandrasekhar").metadata.parameter == ("c", 0.5)
        assert problem_from_id("bratu1d").metadata.parameter == ("lambda", 1.0)

    def test_unknown_id_and_params(self):
        with pytest.raises(ValueError):
            problem_from_id("poisson")
        with pytest.raises(ValueError):
            problem_from_id("bratu1d", {"mu": 1.0})

    def test_default_starts(self):
        np.testing.assert_array_equal(
            problem_from_id("singular_quadratic").default_start, [1.0, 1.0]
        )
        np.testing.assert_array_equal(
            problem_from_id("chandrasekhar", {"n": 5}).default_start, np.ones(5)
        )
        np.testing.assert_array_equal(
            problem_from_id("bratu1d", {"n": 5}).default_start, np.zeros(5)
        )
