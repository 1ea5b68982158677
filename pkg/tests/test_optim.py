"""Optimizer updates, gradient-free estimation, and the factory registry."""

import numpy as np
import pytest

from hypercausal import (
    AdamLike,
    FiniteDifference,
    ScalarTrustRegion,
    SGD,
    SPSA,
    builtin_optimizers,
    finite_difference_gradient,
)
from hypercausal.errors import (
    DimensionMismatch,
    DuplicateName,
    InvalidConfig,
    MissingHyperparam,
    NonFiniteObjective,
    UnknownName,
)

BUILTIN_NAMES = ["sgd", "adam_like", "finite_diff", "spsa", "trust_region_scalar"]


class TestRegistry:
    def test_create_sgd(self):
        opt, state = builtin_optimizers().create("sgd", {"lr": 0.1})
        assert isinstance(opt, SGD)
        assert state.step == 0

    def test_unknown_method(self):
        with pytest.raises(UnknownName):
            builtin_optimizers().create("unknown_method", {})

    def test_missing_lr(self):
        for name in ("sgd", "adam_like", "finite_diff"):
            with pytest.raises(MissingHyperparam):
                builtin_optimizers().create(name, {})

    def test_unknown_hyperparam_rejected(self):
        with pytest.raises(InvalidConfig):
            builtin_optimizers().create("sgd", {"lr": 0.1, "momentum": 0.9})

    def test_user_registration_listed_after_builtins(self):
        registry = builtin_optimizers()

        class MyOpt:
            def __init__(self):
                pass

            def init_state(self):
                from hypercausal import OptState

                return OptState()

        registry.register("my_opt", lambda hp: MyOpt())
        assert registry.names() == BUILTIN_NAMES + ["my_opt"]
        opt, state = registry.create("my_opt", {})
        assert isinstance(opt, MyOpt)

    def test_duplicate_registration(self):
        registry = builtin_optimizers()
        with pytest.raises(DuplicateName):
            registry.register("sgd", lambda hp: None)


class TestGradientSteps:
    def test_sgd_euler_step(self):
        opt, state = builtin_optimizers().create("sgd", {"lr": 0.1})
        theta, state = opt.step(state, np.array([1.0]), np.array([1.0]))
        assert np.array_equal(theta, [0.9])
        assert state.step == 1

    def test_zero_gradient_fixed_point(self):
        for name in ("sgd", "adam_like"):
            opt, state = builtin_optimizers().create(name, {"lr": 0.1})
            theta = np.array([0.3, -0.7])
            updated, _ = opt.step(state, theta, np.zeros(2))
            assert np.array_equal(updated, theta), name

    def test_adam_first_step_closed_form(self):
        # bias-corrected m_hat / sqrt(v_hat) = 1 on the first step
        opt, state = builtin_optimizers().create("adam_like", {"lr": 0.1})
        theta, state = opt.step(state, np.array([0.0]), np.array([1.0]))
        assert theta[0] == pytest.approx(-0.1, abs=1e-8)
        assert state.step == 1
        assert state.m is not None and state.v is not None

    def test_adam_state_advances(self):
        opt, state = builtin_optimizers().create("adam_like", {"lr": 0.01})
        theta = np.array([1.0, 2.0])
        for expected_step in (1, 2, 3):
            theta, state = opt.step(state, theta, np.array([0.5, -0.5]))
            assert state.step == expected_step

    def test_gradient_length_checked(self):
        opt, state = builtin_optimizers().create("sgd", {"lr": 0.1})
        with pytest.raises(DimensionMismatch):
            opt.step(state, np.array([1.0, 2.0]), np.array([1.0]))


class TestFiniteDifference:
    def test_gradient_matches_analytic_on_quadratic(self):
        grad = finite_difference_gradient(lambda th: float(np.sum(th**2)), np.array([1.0]), h=1e-4)
        assert abs(grad[0] - 2.0) <= 1e-6

    def test_step_applies_sgd_update(self):
        opt, state = builtin_optimizers().create("finite_diff", {"lr": 0.1})
        theta, state, evals = opt.step(state, np.array([1.0]), lambda th: float(np.sum(th**2)))
        assert theta[0] == pytest.approx(1.0 - 0.1 * 2.0, abs=1e-6)
        assert evals == 2

    def test_eval_count_scales_with_dimension(self):
        calls = []

        def objective(th):
            calls.append(1)
            return float(np.sum(th**2))

        opt, state = builtin_optimizers().create("finite_diff", {"lr": 0.1})
        _, _, evals = opt.step(state, np.zeros(4), objective)
        assert evals == 8 and len(calls) == 8

    def test_constant_objective_is_fixed_point(self):
        opt, state = builtin_optimizers().create("finite_diff", {"lr": 0.5})
        theta = np.array([2.0, -3.0])
        updated, _, _ = opt.step(state, theta, lambda th: 7.0)
        assert np.array_equal(updated, theta)

    def test_non_finite_objective(self):
        opt, state = builtin_optimizers().create("finite_diff", {"lr": 0.1})
        with pytest.raises(NonFiniteObjective):
            opt.step(state, np.array([1.0]), lambda th: float("nan"))


class TestSPSA:
    def test_constant_objective_is_fixed_point(self):
        opt, state = builtin_optimizers().create("spsa", {"seed": 3})
        theta = np.array([1.0, 2.0, 3.0])
        updated, state, evals = opt.step(state, theta, lambda th: 5.0)
        assert np.array_equal(updated, theta)
        assert evals == 2

    def test_seeded_determinism(self):
        def run():
            opt, state = builtin_optimizers().create("spsa", {"seed": 11})
            theta = np.array([0.5, -0.5])
            for _ in range(5):
                theta, state, _ = opt.step(state, theta, lambda th: float(np.sum(th**2)))
            return theta

        assert np.array_equal(run(), run())

    def test_decreases_quadratic_objective(self):
        opt, state = builtin_optimizers().create("spsa", {"seed": 0, "a": 0.2})
        objective = lambda th: float(np.sum(th**2))
        theta = np.array([1.5, -2.0])
        start = objective(theta)
        for _ in range(150):
            theta, state, _ = opt.step(state, theta, objective)
        assert objective(theta) < start * 0.1


class TestScalarTrustRegion:
    def test_converges_to_scalar_optimum(self):
        opt = ScalarTrustRegion(seed=4)
        state = opt.init_state()
        alpha = 1.0
        for _ in range(300):
            alpha, state = opt.step(state, alpha, lambda a: (a - 1.04) ** 2)
            if abs(alpha - 1.04) <= 0.01:
                break
        assert abs(alpha - 1.04) <= 0.01

    def test_constant_objective_rejects_everything(self):
        opt = ScalarTrustRegion(seed=1)
        state = opt.init_state()
        alpha = 1.0
        for _ in range(200):
            alpha, state = opt.step(state, alpha, lambda a: 3.0)
        assert alpha == 1.0
        assert state.radius == pytest.approx(opt.r_min)

    def test_seeded_trajectory_determinism(self):
        def run():
            opt = ScalarTrustRegion(seed=7)
            state = opt.init_state()
            alpha, path = 0.5, []
            for _ in range(50):
                alpha, state = opt.step(state, alpha, lambda a: abs(a - 2.0))
                path.append(alpha)
            return path

        assert run() == run()

    def test_accepted_values_monotone_nonincreasing(self):
        opt = ScalarTrustRegion(seed=9)
        state = opt.init_state()
        alpha = 0.0
        objective = lambda a: (a - 0.5) ** 2 + 0.1 * np.sin(20 * a)
        accepted = [objective(alpha)]
        for _ in range(200):
            new_alpha, state = opt.step(state, alpha, objective)
            if new_alpha != alpha:
                accepted.append(objective(new_alpha))
            alpha = new_alpha
        assert all(b <= a for a, b in zip(accepted, accepted[1:]))

    def test_radius_stays_in_bounds(self):
        opt = ScalarTrustRegion(seed=2)
        state = opt.init_state()
        alpha = 0.0
        rng_obj = lambda a: (a - 3.0) ** 2
        for _ in range(400):
            assert opt.r_min <= state.radius <= opt.r_max
            alpha, state = opt.step(state, alpha, rng_obj)

    def test_non_finite_objective(self):
        opt = ScalarTrustRegion(seed=1)
        with pytest.raises(NonFiniteObjective):
            opt.step(opt.init_state(), 0.0, lambda a: float("inf"))

    def test_bad_radius_config(self):
        with pytest.raises(InvalidConfig):
            ScalarTrustRegion(r0=0.5, r_max=0.2)
