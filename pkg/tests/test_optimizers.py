"""Unit tests for the update rules, run loop, and guarantee formulas."""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from simplex_langevin.geometry import exp_map
from simplex_langevin.objectives import Objective
from simplex_langevin.objectives import test_function as benchmark
from simplex_langevin.optimizers import (
    LmwuConfig,
    Method,
    StepFailureError,
    StepSizeError,
    TheoryBudget,
    lmwu_multi_step,
    lmwu_step,
    mwu_exponential_step,
    mwu_linear_step,
    projected_langevin_step,
    run_optimizer,
    theoretical_iteration_budget,
    theoretical_step_bound,
)


class ZeroGauss:
    """Stub generator: standard normals forced to zero, so only the
    deterministic drift part of the noise survives."""

    def standard_normal(self, shape=None):
        return np.zeros(shape if shape is not None else ())


def linear_objective(c):
    c = np.asarray(c, dtype=float)
    return Objective(
        name="linear",
        dim=c.size,
        block_dims=(c.size,),
        eval_fn=lambda p: float(p @ c),
        grad_fn=lambda p: c.copy(),
    )


class TestLinearMwuStep:
    def test_hand_value(self):
        y = mwu_linear_step(np.array([0.5, 0.5]), np.array([1.0, 0.0]), 0.2)
        # multipliers (0.8, 1), denominator 0.9
        assert_allclose(y, [4.0 / 9.0, 5.0 / 9.0], rtol=1e-15)

    def test_oversized_step_rejected(self):
        with pytest.raises(StepSizeError):
            mwu_linear_step(np.array([0.5, 0.5]), np.array([1.0, 0.0]), 2.0)

    def test_uniform_gradient_is_fixed_point(self):
        x = np.array([0.3, 0.6, 0.1])
        y = mwu_linear_step(x, np.full(3, 2.5), 0.1)
        assert_allclose(y, x, rtol=0, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mwu_linear_step(np.array([0.5, 0.5]), np.zeros(3), 0.1)


class TestExponentialMwuStep:
    def test_equals_exp_map_of_scaled_gradient(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            x = rng.random(n) + 0.1
            x /= x.sum()
            g = rng.normal(0.0, 3.0, n)
            eps = float(rng.uniform(1e-4, 0.5))
            assert np.array_equal(
                mwu_exponential_step(x, g, eps), exp_map(x, -eps * g)
            )

    def test_agrees_with_linear_step_for_small_eps(self):
        x = np.array([0.3, 0.6, 0.1])
        g = np.array([1.0, -0.5, 0.2])
        assert_allclose(
            mwu_exponential_step(x, g, 1e-6),
            mwu_linear_step(x, g, 1e-6),
            rtol=0, atol=1e-11,
        )


class TestLmwuStep:
    def test_drift_only_keeps_barycenter_fixed(self):
        # At the barycenter the drift is symmetric, so the normalized update
        # returns the same point exactly once the Gaussian part is zeroed.
        cfg = LmwuConfig(eps=0.1, beta=1.0, max_iters=1)
        res = lmwu_step(np.array([0.5, 0.5]), np.zeros(2), cfg, ZeroGauss())
        assert np.array_equal(res.point, np.array([0.5, 0.5]))
        assert not res.clamped and not res.resampled

    def test_drift_only_numerators(self):
        # eps=0.1, beta=1, n=2 barycenter: drift −0.15 per coordinate,
        # numerators 0.35 summing to 0.7
        cfg = LmwuConfig(eps=0.1, beta=1.0, max_iters=1)
        res = lmwu_step(np.array([0.5, 0.5]), np.zeros(2), cfg, ZeroGauss())
        assert res.point[0] == 0.35 / 0.7

    def test_collapses_to_linear_mwu_at_huge_beta(self):
        rng = np.random.default_rng(23)
        cfg = LmwuConfig(eps=1e-3, beta=1e30, max_iters=1)
        obj = benchmark("f1")
        x = np.array([0.3, 0.6, 0.1])
        for _ in range(100):
            g = obj.gradient(x)
            res = lmwu_step(x, g, cfg, np.random.default_rng(rng.integers(2**32)))
            assert_allclose(res.point, mwu_linear_step(x, g, cfg.eps),
                            rtol=0, atol=1e-12)
            x = res.point

    def test_step_failure_when_drift_dominates(self):
        # eps/beta so large the drift sends every numerator far negative
        cfg = LmwuConfig(eps=0.1, beta=1e-3, max_iters=1)
        with pytest.raises(StepFailureError):
            lmwu_step(np.array([0.5, 0.5]), np.zeros(2),
                      cfg, np.random.default_rng(0))

    def test_clamp_path_after_exhausted_resamples(self):
        # one numerator is deterministically negative but the sum is healthy:
        # every resample fails, then the clamp repair kicks in
        cfg = LmwuConfig(eps=0.1, beta=1e30, max_iters=1, resample_limit=4)
        res = lmwu_step(np.array([0.9, 0.1]), np.array([0.0, 11.0]),
                        cfg, np.random.default_rng(1))
        assert res.clamped and res.resampled
        assert res.point[1] == cfg.floor
        assert abs(res.point.sum() - 1.0) < 1e-14

    def test_deterministic_per_seed(self):
        cfg = LmwuConfig(eps=1e-3, beta=50.0, max_iters=1)
        x = np.array([0.3, 0.6, 0.1])
        g = np.array([0.5, -1.0, 2.0])
        a = lmwu_step(x, g, cfg, np.random.default_rng(77))
        b = lmwu_step(x, g, cfg, np.random.default_rng(77))
        assert np.array_equal(a.point, b.point)


class TestLmwuMultiStep:
    def test_single_block_matches_plain_step(self):
        cfg = LmwuConfig(eps=1e-3, beta=50.0, max_iters=1)
        x = np.array([0.3, 0.6, 0.1])
        g = np.array([0.5, -1.0, 2.0])
        plain = lmwu_step(x, g, cfg, np.random.default_rng(5))
        multi = lmwu_multi_step(x, g, (3,), cfg, [np.random.default_rng(5)])
        assert np.array_equal(plain.point, multi.point)
        assert plain.clamped == multi.clamped
        assert plain.resampled == multi.resampled

    def test_identical_blocks_evolve_identically(self):
        cfg = LmwuConfig(eps=1e-2, beta=10.0, max_iters=1)
        x = np.array([0.4, 0.6, 0.4, 0.6])
        g = np.array([1.0, -0.5, 1.0, -0.5])
        res = lmwu_multi_step(
            x, g, (2, 2), cfg,
            [np.random.default_rng(9), np.random.default_rng(9)],
        )
        assert np.array_equal(res.point[:2], res.point[2:])

    def test_failing_block_is_tagged(self):
        cfg = LmwuConfig(eps=0.1, beta=1e-3, max_iters=1)
        x = np.array([0.5, 0.5, 0.5, 0.5])
        with pytest.raises(StepFailureError) as info:
            lmwu_multi_step(
                x, np.zeros(4), (2, 2), cfg,
                [np.random.default_rng(0), np.random.default_rng(1)],
            )
        assert info.value.block == 0

    def test_layout_validation(self):
        cfg = LmwuConfig(eps=0.1, beta=1.0, max_iters=1)
        with pytest.raises(ValueError):
            lmwu_multi_step(np.array([0.5, 0.5]), np.zeros(2), (3,),
                            cfg, [np.random.default_rng(0)])
        with pytest.raises(ValueError):
            lmwu_multi_step(np.array([0.5, 0.5]), np.zeros(2), (2,), cfg, [])


class TestProjectedLangevinStep:
    def test_hand_value_with_collapsed_noise(self):
        y = projected_langevin_step(
            np.array([0.5, 0.5]), np.array([1.0, 0.0]), 0.1, 1e30,
            np.random.default_rng(3),
        )
        # x − ε·grad = (0.4, 0.5); projecting adds 0.05 to each coordinate
        assert_allclose(y, [0.45, 0.55], rtol=0, atol=1e-14)

    def test_output_is_interior(self):
        rng = np.random.default_rng(21)
        y = projected_langevin_step(
            np.array([0.05, 0.95]), np.array([30.0, -1.0]), 0.1, 1e4, rng,
            floor=1e-9,
        )
        assert y.min() >= 1e-9
        assert abs(y.sum() - 1.0) < 1e-9

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            projected_langevin_step(np.array([0.5, 0.5]), np.zeros(2),
                                    -0.1, 1.0, np.random.default_rng(0))


class TestRunOptimizer:
    def test_zero_iterations_records_init_only(self):
        obj = benchmark("f1")
        cfg = LmwuConfig(eps=1e-3, beta=100.0, max_iters=0)
        traj = run_optimizer(Method.LMWU, obj, [0.3, 0.6, 0.1], cfg)
        assert len(traj) == 1
        assert traj.iters == 0
        assert np.array_equal(traj.points[0], [0.3, 0.6, 0.1])
        assert traj.final_f == obj.value([0.3, 0.6, 0.1])

    def test_trajectory_has_budget_plus_one_records(self):
        obj = benchmark("f2")
        cfg = LmwuConfig(eps=1e-4, beta=100.0, max_iters=50, seed=4)
        traj = run_optimizer("lmwu", obj, np.full(3, 1.0 / 3.0), cfg)
        assert len(traj) == 51
        rec = traj[-1]
        assert rec.iteration == 50
        assert rec.f_value == traj.final_f

    def test_method_accepts_string_or_enum(self):
        obj = benchmark("f1")
        cfg = LmwuConfig(eps=1e-3, beta=1.0, max_iters=5, seed=2)
        a = run_optimizer("linear-mwu", obj, [0.3, 0.6, 0.1], cfg)
        b = run_optimizer(Method.LINEAR_MWU, obj, [0.3, 0.6, 0.1], cfg)
        assert np.array_equal(a.points, b.points)

    def test_deterministic_per_seed(self):
        obj = benchmark("f1")
        cfg = LmwuConfig(eps=1e-4, beta=100.0, max_iters=200, seed=12)
        a = run_optimizer("lmwu", obj, [0.3, 0.6, 0.1], cfg)
        b = run_optimizer("lmwu", obj, [0.3, 0.6, 0.1], cfg)
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.f_values, b.f_values)

    def test_seeds_differ(self):
        obj = benchmark("f1")
        base = LmwuConfig(eps=1e-4, beta=100.0, max_iters=50, seed=0)
        other = LmwuConfig(eps=1e-4, beta=100.0, max_iters=50, seed=1)
        a = run_optimizer("lmwu", obj, [0.3, 0.6, 0.1], base)
        b = run_optimizer("lmwu", obj, [0.3, 0.6, 0.1], other)
        assert not np.array_equal(a.points, b.points)

    def test_linear_objective_concentrates_on_argmin(self):
        obj = linear_objective([0.5, 0.2, 0.9])
        cfg = LmwuConfig(eps=0.1, beta=1.0, max_iters=2000)
        traj = run_optimizer("linear-mwu", obj, np.full(3, 1.0 / 3.0), cfg)
        assert traj.final_point[1] > 0.999
        diffs = np.diff(traj.f_values)
        assert (diffs <= 1e-15).all()          # descent up to float rounding
        assert (diffs[:200] < 0).all()         # strict while far from a vertex

    def test_iterates_stay_on_simplex(self):
        obj = benchmark("f3")
        cfg = LmwuConfig(eps=1e-3, beta=2000.0, max_iters=500, seed=8)
        traj = run_optimizer("lmwu", obj, [0.2, 0.75, 0.05], cfg)
        assert np.abs(traj.points.sum(axis=1) - 1.0).max() < 1e-9
        assert traj.points.min() > 0.0

    def test_step_failure_carries_iteration(self):
        obj = benchmark("f1")
        cfg = LmwuConfig(eps=0.1, beta=1e-3, max_iters=10)
        with pytest.raises(StepFailureError) as info:
            run_optimizer("lmwu", obj, [0.3, 0.6, 0.1], cfg)
        assert info.value.iteration == 1

    def test_step_size_error_propagates(self):
        obj = linear_objective([5.0, -5.0])
        cfg = LmwuConfig(eps=1.0, beta=1.0, max_iters=3)
        with pytest.raises(StepSizeError):
            run_optimizer("linear-mwu", obj, [0.5, 0.5], cfg)

    def test_init_validation(self):
        obj = benchmark("f1")
        cfg = LmwuConfig(eps=1e-3, beta=1.0, max_iters=1)
        with pytest.raises(ValueError):
            run_optimizer("lmwu", obj, [0.5, 0.5], cfg)  # wrong dim
        with pytest.raises(ValueError):
            run_optimizer("lmwu", obj, [0.5, 0.6, 0.1], cfg)  # bad sum
        with pytest.raises(ValueError):
            run_optimizer("lmwu", obj, [0.5, 0.5 - 1e-13, 1e-13], cfg)  # < floor

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LmwuConfig(eps=0.0, beta=1.0, max_iters=1)
        with pytest.raises(ValueError):
            LmwuConfig(eps=0.1, beta=-1.0, max_iters=1)
        with pytest.raises(ValueError):
            LmwuConfig(eps=0.1, beta=1.0, max_iters=-1)
        with pytest.raises(ValueError):
            LmwuConfig(eps=0.1, beta=1.0, max_iters=1, floor=2.0)
        with pytest.raises(ValueError):
            LmwuConfig(eps=0.1, beta=1.0, max_iters=1, resample_limit=-1)


class TestGuaranteeFormulas:
    def test_step_bound_hand_value(self):
        tb = TheoryBudget(M=0.0, B=1.0, sigma=0.0, alpha=1.0, C=1.0, delta=1.0)
        assert theoretical_step_bound(tb) == 0.125

    def test_step_bound_scalings(self):
        tb1 = TheoryBudget(M=0.0, B=1.0, sigma=0.0, alpha=1.0, C=1.0, delta=1.0)
        tb2 = TheoryBudget(M=0.0, B=1.0, sigma=0.0, alpha=1.0, C=1.0, delta=2.0)
        tb3 = TheoryBudget(M=0.0, B=1.0, sigma=0.0, alpha=1.0, C=2.0, delta=1.0)
        assert theoretical_step_bound(tb2) == 4.0 * theoretical_step_bound(tb1)
        assert theoretical_step_bound(tb3) == 0.5 * theoretical_step_bound(tb1)

    def test_iteration_budget_hand_value(self):
        tb = TheoryBudget(M=0.0, B=1.0, sigma=0.0, alpha=1.0, C=1.0, delta=1.0)
        assert theoretical_iteration_budget(tb, 1.0) == 15
        assert theoretical_iteration_budget(tb, 0.5) == 30

    def test_iteration_budget_clamps_at_one(self):
        # log argument exactly 1: 16·B²/(δ²α) with B=1/4, δ=2, α=1
        tb = TheoryBudget(M=0.0, B=0.25, sigma=0.0, alpha=1.0, C=1.0, delta=2.0)
        assert theoretical_iteration_budget(tb, 1.0) == 1

    def test_validation(self):
        with pytest.raises(ValueError):
            TheoryBudget(M=0.0, B=1.0, sigma=0.0, alpha=0.0, C=1.0, delta=1.0)
        with pytest.raises(ValueError):
            TheoryBudget(M=-1.0, B=1.0, sigma=0.0, alpha=1.0, C=1.0, delta=1.0)
        tb = TheoryBudget(M=0.0, B=0.0, sigma=0.0, alpha=1.0, C=1.0, delta=1.0)
        with pytest.raises(ValueError):
            theoretical_step_bound(tb)
        good = TheoryBudget(M=0.0, B=1.0, sigma=0.0, alpha=1.0, C=1.0, delta=1.0)
        with pytest.raises(ValueError):
            theoretical_iteration_budget(good, 0.0)
