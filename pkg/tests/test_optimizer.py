"""Worst-case weight solver checks against analytic and grid answers."""

import math
import unittest

import numpy as np

from fourier_marginals import core, mechanism, optimizer, oracle


def workload(sizes, sets, kinds=None, kind="marginal", phi=None):
    u = core.build_universe(sizes, kinds)
    return core.Workload(universe=u, sets=sets,
                         weights=np.full(len(sets), 1.0 / len(sets)),
                         kind=kind, phi=phi)


class SymmetricSolutions(unittest.TestCase):

    def test_all_two_way_binary_is_uniform(self):
        w = workload((2, 2, 2), ((0, 1), (0, 2), (1, 2)))
        sol = optimizer.optimize_pstar(w)
        np.testing.assert_allclose(sol.p_star, 1 / 3, atol=1e-6)
        self.assertLessEqual(sol.kkt_residual, 1e-8)
        self.assertEqual(sol.iterations, 0)  # uniform start is already p*

    def test_all_two_way_ternary_is_uniform(self):
        sets = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
        w = workload((3, 3, 3, 3), sets)
        sol = optimizer.optimize_pstar(w)
        np.testing.assert_allclose(sol.p_star, 1 / 6, atol=1e-6)
        self.assertLessEqual(sol.kkt_residual, 1e-10)

    def test_single_set_is_trivial(self):
        w = workload((2, 3), ((0, 1),))
        sol = optimizer.optimize_pstar(w)
        self.assertEqual(sol.p_star[0], 1.0)
        self.assertEqual(sol.kkt_residual, 0.0)

    def test_error_equals_max_sigma_at_optimum(self):
        w = workload((2, 2, 2), ((0, 1), (0, 2), (1, 2)))
        sol = optimizer.optimize_pstar(w)
        report = mechanism.predicted_error(w, p=sol.p_star, mu=1.0)
        self.assertAlmostEqual(report["weighted_rms"],
                               report["max_sigma"], delta=1e-8)


class AnalyticSolution(unittest.TestCase):
    # sets {0} and {0,1} over a 2x2 domain: with x on the pair,
    # f = (sqrt(4-3x) + sqrt(x))/2, maximized at x = 1/3

    def test_nested_pair_weights(self):
        w = workload((2, 2), ((0,), (0, 1)))
        sol = optimizer.optimize_pstar(w, tol=1e-10)
        np.testing.assert_allclose(sol.p_star, [2 / 3, 1 / 3], atol=1e-6)
        self.assertAlmostEqual(sol.objective, 2 / math.sqrt(3), delta=1e-9)

    def test_nested_pair_error_equals_max_sigma(self):
        w = workload((2, 2), ((0,), (0, 1)))
        sol = optimizer.optimize_pstar(w, tol=1e-10)
        report = mechanism.predicted_error(w, p=sol.p_star, mu=1.0)
        self.assertAlmostEqual(report["weighted_rms"],
                               report["max_sigma"], delta=1e-8)
        self.assertAlmostEqual(report["weighted_rms"],
                               2 / math.sqrt(3), delta=1e-8)


class GridAgreement(unittest.TestCase):

    def check(self, w, step, phi=None):
        sol = optimizer.optimize_pstar(w)
        grid_w, grid_val = oracle.grid_search_pstar(
            w.universe.domain_sizes, w.sets, step, phi=phi)
        self.assertLessEqual(abs(sol.objective - grid_val),
                             1e-4 * grid_val)
        # the solver maximizes, so the grid can only trail it
        self.assertGreaterEqual(sol.objective, grid_val - 1e-12)
        return sol, grid_w

    def test_two_set_marginal(self):
        w = workload((2, 2), ((0,), (0, 1)))
        sol, grid_w = self.check(w, 1e-4)
        np.testing.assert_allclose(sol.p_star, grid_w, atol=2e-4)

    def test_three_set_marginal_asymmetric(self):
        w = workload((2, 3), ((0,), (1,), (0, 1)))
        self.check(w, 1e-4)

    def test_two_set_product(self):
        phi = ((1.0, 0.25), (0.5, 1.0, 0.0))
        w = workload((2, 3), ((0,), (0, 1)), kind="product", phi=phi)
        self.check(w, 1e-4, phi=[list(t) for t in phi])


class KktReports(unittest.TestCase):

    def test_uniform_all_kway_residual_zero(self):
        w = workload((2, 2, 2), ((0, 1), (0, 2), (1, 2)))
        report = optimizer.kkt_check(w, [1 / 3, 1 / 3, 1 / 3])
        self.assertLessEqual(report["residual"], 1e-10)
        self.assertLessEqual(report["sigma_gap"], 1e-10)
        self.assertEqual(len(report["supported"]), 3)

    def test_perturbed_optimum_has_positive_residual(self):
        w = workload((2, 2, 2), ((0, 1), (0, 2), (1, 2)))
        p = np.array([1 / 3 + 1e-3, 1 / 3 - 1e-3, 1 / 3])
        report = optimizer.kkt_check(w, p)
        self.assertGreater(report["residual"], 1e-6)
        self.assertGreater(report["sigma_gap"], 0.0)

    def test_strict_subset_support_is_flagged(self):
        w = workload((2, 2), ((0,), (1,)))
        report = optimizer.kkt_check(w, [1.0, 0.0])
        self.assertEqual(report["supported"], [(0,)])
        self.assertTrue(math.isinf(report["residual"]))
        self.assertTrue(math.isinf(report["sigma_gap"]))

    def test_interior_non_optimum_sigma_gap(self):
        w = workload((2, 2), ((0,), (0, 1)))
        report = optimizer.kkt_check(w, [0.9, 0.1])
        self.assertGreater(report["residual"], 0.0)
        self.assertGreater(report["sigma_gap"], 0.0)
        self.assertTrue(math.isfinite(report["sigma_gap"]))

    def test_checker_confirms_solver_output(self):
        phi = ((1.0, 0.25), (0.5, 1.0, 0.0))
        w = workload((2, 3), ((0,), (0, 1)), kind="product", phi=phi)
        sol = optimizer.optimize_pstar(w, tol=1e-9)
        report = optimizer.kkt_check(w, sol.p_star)
        self.assertLessEqual(report["residual"], 1e-9)

    def test_rejects_points_off_the_simplex(self):
        w = workload((2, 2), ((0,), (1,)))
        with self.assertRaises(optimizer.NotOnSimplex):
            optimizer.kkt_check(w, [0.5, 0.6])
        with self.assertRaises(optimizer.NotOnSimplex):
            optimizer.kkt_check(w, [1.5, -0.5])
        with self.assertRaises(optimizer.NotOnSimplex):
            optimizer.kkt_check(w, [1.0])


class SolverBehaviour(unittest.TestCase):

    def test_trace_is_nondecreasing(self):
        w = workload((2, 3), ((0,), (1,), (0, 1)))
        sol = optimizer.optimize_pstar(w)
        trace = sol.objective_trace
        self.assertGreater(len(trace), 1)
        for earlier, later in zip(trace, trace[1:]):
            self.assertGreaterEqual(later, earlier - 1e-12)

    def test_deterministic(self):
        w = workload((2, 3), ((0,), (1,), (0, 1)))
        a = optimizer.optimize_pstar(w)
        b = optimizer.optimize_pstar(w)
        np.testing.assert_array_equal(a.p_star, b.p_star)
        self.assertEqual(a.objective, b.objective)
        self.assertEqual(a.iterations, b.iterations)

    def test_input_weights_are_ignored(self):
        u = core.build_universe([2, 3])
        sets = ((0,), (1,), (0, 1))
        wa = core.Workload(universe=u, sets=sets,
                           weights=np.array([1.0, 0.0, 0.0]))
        wb = core.Workload(universe=u, sets=sets,
                           weights=np.array([0.1, 0.2, 0.7]))
        a = optimizer.optimize_pstar(wa)
        b = optimizer.optimize_pstar(wb)
        np.testing.assert_array_equal(a.p_star, b.p_star)

    def test_inner_sums_positive_at_optimum(self):
        w = workload((2, 3), ((0,), (1,), (0, 1)))
        sol = optimizer.optimize_pstar(w)
        p = sol.as_map()
        for member in core.downward_closure(w):
            inner = sum(p[s] / w.universe.subuniverse_size(s) ** 2
                        for s in w.sets if set(member).issubset(s))
            self.assertGreater(inner, 1e-12)

    def test_no_convergence_carries_best_iterate(self):
        w = workload((2, 3), ((0,), (1,), (0, 1)))
        with self.assertRaises(optimizer.NoConvergence) as ctx:
            optimizer.optimize_pstar(w, max_iter=0)
        best = ctx.exception.best
        self.assertEqual(ctx.exception.max_iter, 0)
        self.assertEqual(best.iterations, 0)
        self.assertGreater(best.objective, 0.0)
        self.assertGreater(best.kkt_residual, 1e-8)

    def test_rejects_bad_tolerance(self):
        w = workload((2, 2), ((0,),))
        with self.assertRaises(core.FourierMarginalsError):
            optimizer.optimize_pstar(w, tol=0.0)


class ExtendedAndDegenerate(unittest.TestCase):

    def test_extended_matches_embedded_grid(self):
        u = core.build_universe([3, 2], [core.NUMERICAL, core.CATEGORICAL])
        w = core.Workload(universe=u, sets=((0,), (0, 1)),
                          weights=np.array([0.5, 0.5]), kind="extended")
        sol = optimizer.optimize_pstar(w)
        phi = [[1.0, 1.0, 1.0, 0.0, 0.0, 0.0], [1.0, 0.0]]
        grid_w, grid_val = oracle.grid_search_pstar((6, 2), w.sets, 1e-4,
                                                    phi=phi)
        self.assertLessEqual(abs(sol.objective - grid_val), 1e-4 * grid_val)

    def test_extended_on_categorical_equals_marginal(self):
        w = workload((3, 2), ((0,), (0, 1)))
        plain = optimizer.optimize_pstar(w)
        ext = optimizer.optimize_pstar(w, kind="extended")
        np.testing.assert_allclose(ext.p_star, plain.p_star, atol=1e-9)
        self.assertAlmostEqual(ext.objective, plain.objective, delta=1e-12)

    def test_all_zero_factors_solve_trivially(self):
        phi = ((0.0, 0.0), (1.0, 1.0))
        w = workload((2, 2), ((0,), (0, 1)), kind="product", phi=phi)
        sol = optimizer.optimize_pstar(w)
        self.assertEqual(sol.objective, 0.0)
        self.assertEqual(sol.kkt_residual, 0.0)


if __name__ == "__main__":
    unittest.main()
