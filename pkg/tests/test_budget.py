"""Budget plan and sampler tests."""

import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from fourier_marginals import budget, core, fourier

from conftest import workloads


def two_singletons():
    u = core.build_universe([2, 2])
    return core.Workload(universe=u, sets=((0,), (1,)),
                         weights=np.array([0.5, 0.5]))


class TestTauMarginal(unittest.TestCase):

    def test_two_singleton_values(self):
        tau = budget.tau_marginal(two_singletons())
        self.assertAlmostEqual(tau[(0, 0)], 0.5, places=15)
        self.assertAlmostEqual(tau[(1, 0)], 1 / (2 * math.sqrt(2)), places=15)
        self.assertAlmostEqual(tau[(0, 1)], 1 / (2 * math.sqrt(2)), places=15)

    def test_single_set_is_uniform(self):
        u = core.build_universe([3, 4])
        w = core.Workload(universe=u, sets=((0, 1),), weights=np.array([1.0]))
        tau = budget.tau_marginal(w)
        self.assertEqual(len(tau), 12)
        for value in tau.values():
            self.assertAlmostEqual(value, 1 / 12, places=15)

    def test_zero_weights_give_zero_tau(self):
        u = core.build_universe([2, 2])
        w = core.Workload(universe=u, sets=((0,), (1,)),
                          weights=np.array([0.0, 0.0]))
        self.assertEqual(set(budget.tau_marginal(w).values()), {0.0})

    @given(st.data())
    @settings(max_examples=40, deadline=None)
    def test_tau_monotone_in_weights(self, data):
        w = data.draw(workloads(max_d=3, max_m=3))
        bump = data.draw(st.integers(0, len(w.sets) - 1))
        before = budget.tau_marginal(w)
        raised = np.asarray(w.weights).copy()
        raised[bump] += data.draw(st.floats(0.1, 2.0))
        after = budget.tau_marginal(w, raised)
        for a, value in before.items():
            self.assertGreaterEqual(after[a] + 1e-15, value)


class TestTauProduct(unittest.TestCase):

    def test_flat_spectrum_matches_marginal(self):
        w = two_singletons()
        marginal = budget.tau_marginal(w)
        product = budget.tau_product(w)
        self.assertEqual(set(marginal), set(product))
        for a in marginal:
            self.assertAlmostEqual(marginal[a], product[a], places=14)

    def test_even_prefix_frequencies_vanish(self):
        m = 3
        u = core.build_universe([2 * m])
        phi = ((1.0,) * m + (0.0,) * m,)
        w = core.Workload(universe=u, sets=((0,),), weights=np.array([1.0]),
                          kind="product", phi=phi)
        tau = budget.tau_product(w)
        for a in range(1, 2 * m):
            if a % 2 == 0:
                self.assertEqual(tau[(a,)], 0.0)
            else:
                self.assertGreater(tau[(a,)], 0.0)

    def test_prefix_zero_frequency_weight(self):
        for m in (2, 3, 5):
            u = core.build_universe([2 * m])
            phi = ((1.0,) * m + (0.0,) * m,)
            w = core.Workload(universe=u, sets=((0,),),
                              weights=np.array([1.0]), kind="product",
                              phi=phi)
            tau = budget.tau_product(w)
            self.assertAlmostEqual(tau[(0,) * 1], 0.5, places=14)

    def test_spectrum_shape_checked(self):
        w = two_singletons()
        bad = fourier.phi_spectrum([[1.0, 0.0]])
        with self.assertRaises(core.LengthMismatch):
            budget.tau_product(w, spectrum=bad)


class TestKWayBudget(unittest.TestCase):

    def test_full_way_budget_is_universe_size(self):
        for d, m in ((1, 2), (2, 3), (3, 2), (2, 5)):
            plan = budget.k_way_budget(d, d, m, mu=1.0)
            self.assertAlmostEqual(plan.tau_total * 1.0 ** 2, m ** d,
                                   places=10)

    def test_three_attributes_pairwise(self):
        plan = budget.k_way_budget(3, 2, 2, mu=1.0)
        expected = math.sqrt(3) + 3 * math.sqrt(2) + 3
        self.assertAlmostEqual(plan.tau_total, expected, places=12)
        self.assertAlmostEqual(budget.k_way_tau_total(3, 2, 2, 1.0),
                               expected, places=12)

    def test_single_binary_attribute(self):
        plan = budget.k_way_budget(1, 1, 2, mu=1.0)
        self.assertAlmostEqual(plan.tau_total, 2.0, places=14)
        self.assertAlmostEqual(plan.variances[(1,)], 4.0, places=14)

    def test_variance_ratio_follows_remaining_choices(self):
        d, k, m = 4, 2, 3
        plan = budget.k_way_budget(d, k, m, mu=1.0)
        top = plan.variances[(1, 2, 0, 0)]
        for a, ratio in (((0, 0, 0, 0), math.comb(d, k)),
                         ((0, 0, 1, 0), d - 1)):
            self.assertAlmostEqual(top / plan.variances[a],
                                   math.sqrt(ratio), places=10)

    def test_matches_uniform_weight_plan(self):
        import itertools
        d, k, m = 4, 2, 2
        u = core.build_universe([m] * d)
        sets = tuple(itertools.combinations(range(d), k))
        w = core.Workload(universe=u, sets=sets,
                          weights=np.full(len(sets), 1 / len(sets)))
        direct = budget.plan_from_tau(2.0, budget.tau_marginal(w))
        closed = budget.k_way_budget(d, k, m, mu=2.0)
        self.assertEqual(set(direct.variances), set(closed.variances))
        for a in direct.variances:
            self.assertAlmostEqual(direct.variances[a], closed.variances[a],
                                   places=10)
            self.assertAlmostEqual(direct.shares[a], closed.shares[a],
                                   places=10)

    def test_bad_arity(self):
        for d, k, m in ((2, 0, 2), (2, 3, 2), (3, 1, 1)):
            with self.assertRaises(budget.BadArity):
                budget.k_way_budget(d, k, m, mu=1.0)


class TestSampler(unittest.TestCase):

    def test_zero_variance_is_exact_zero(self):
        s = budget.SeededSampler(1)
        self.assertEqual(budget.sample_complex_gaussian(0.0, s), 0j)
        self.assertEqual(s.counter, 0)

    def test_negative_variance_rejected(self):
        s = budget.SeededSampler(1)
        with self.assertRaises(budget.NegativeVariance):
            budget.sample_complex_gaussian(-1.0, s)

    def test_identical_seeds_identical_streams(self):
        a = budget.SeededSampler(123)
        b = budget.SeededSampler(123)
        for _ in range(50):
            self.assertEqual(budget.sample_complex_gaussian(2.0, a),
                             budget.sample_complex_gaussian(2.0, b))
        self.assertEqual(a.counter, 100)

    def test_children_are_reproducible_and_distinct(self):
        base = budget.SeededSampler(7)
        first = [budget.sample_complex_gaussian(1.0, base.child(0))
                 for _ in range(1)]
        again = budget.sample_complex_gaussian(1.0, base.child(0))
        self.assertEqual(first[0], again)
        other = budget.sample_complex_gaussian(1.0, base.child(1))
        self.assertNotEqual(first[0], other)

    def test_component_variances(self):
        s = budget.SeededSampler(99)
        draws = np.array([budget.sample_complex_gaussian(2.0, s)
                          for _ in range(10 ** 6)])
        self.assertLess(abs(draws.real.var() - 1.0), 0.02)
        self.assertLess(abs(draws.imag.var() - 1.0), 0.02)

    def test_unbiased_mean(self):
        s = budget.SeededSampler(5)
        variance = 3.0
        n = 10 ** 5
        draws = np.array([budget.sample_complex_gaussian(variance, s)
                          for _ in range(n)])
        bound = 5 * math.sqrt(variance / n)
        self.assertLess(abs(draws.real.mean()), bound)
        self.assertLess(abs(draws.imag.mean()), bound)


class TestAccounting(unittest.TestCase):

    def test_valid_plan_has_tiny_residual(self):
        plan = budget.plan_from_tau(2.0, budget.tau_marginal(two_singletons()))
        report = budget.accounting(plan)
        self.assertLessEqual(report["residual"], 1e-12 * plan.mu ** 2)
        self.assertAlmostEqual(report["share_total"], 4.0, places=12)

    def test_missing_frequency_detected(self):
        plan = budget.plan_from_tau(1.0, budget.tau_marginal(two_singletons()))
        shares = dict(plan.shares)
        shares.pop((1, 0))
        broken = budget.BudgetPlan(mu=plan.mu, tau_total=plan.tau_total,
                                   tau_map=plan.tau_map,
                                   variances=plan.variances, shares=shares)
        with self.assertRaises(budget.BudgetMismatch):
            budget.accounting(broken)

    def test_empty_plan_rejected(self):
        with self.assertRaises(budget.BudgetMismatch):
            budget.plan_from_tau(1.0, {})
        empty = budget.BudgetPlan(mu=1.0, tau_total=0.0, tau_map={},
                                  variances={}, shares={})
        with self.assertRaises(budget.BudgetMismatch):
            budget.accounting(empty)

    def test_document_shape(self):
        plan = budget.plan_from_tau(1.5, budget.tau_marginal(two_singletons()))
        doc = plan.to_document()
        self.assertEqual(doc["mu"], 1.5)
        self.assertEqual([e["a"] for e in doc["entries"]],
                         [[0, 0], [0, 1], [1, 0]])
        for entry in doc["entries"]:
            self.assertAlmostEqual(
                entry["variance"] * entry["tau"], 2 * doc["tau_total"],
                places=12)


if __name__ == "__main__":
    unittest.main()
