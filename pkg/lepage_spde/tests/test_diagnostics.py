import math
import unittest
import numpy as np
from scipy import special
from lepage_spde import (
    StableParams, make_weight, sample_cloud, make_kernel, KernelKind,
    Verdict, Interval, admissible_p_range, k_np_montecarlo, k_np_bound,
    log_k_np_bound, k_np_quadrature, wave_bound_constant, assumption_a2_report,
    assumption_a3_report, stirling_sandwich, tail_diagnostic,
    Proposal, DomainError, DivergenceError, HypothesisError
)
from lepage_spde.diagnostics import _fit_verdict

class test_admissible_p_range(unittest.TestCase):

    def test_wave(self):
        r = admissible_p_range(make_kernel(KernelKind.WAVE, 1), 1.5, 1.5)
        self.assertEqual((r.lo, r.hi, r.hi_closed), (1.5, 2.0, True))
        self.assertIn(2.0, r)
        self.assertNotIn(1.5, r)
        r = admissible_p_range(make_kernel(KernelKind.WAVE, 2), 1.5, 2.0)
        self.assertNotIn(2.0, r)
        self.assertIn(1.9, r)

    def test_heat(self):
        r = admissible_p_range(make_kernel(KernelKind.HEAT, 1), 1.5, 1.5)
        self.assertEqual(str(r), '(1.5, 2]')
        r = admissible_p_range(make_kernel(KernelKind.HEAT, 2), 1.5, 2.0)
        self.assertAlmostEqual(r.hi, 1.75, places=15)
        self.assertFalse(r.hi_closed)
        self.assertAlmostEqual(r.midpoint, 1.625, places=15)

    def test_heat_small_alpha(self):
        r = admissible_p_range(make_kernel(KernelKind.HEAT, 1), 0.7, 1.5)
        self.assertEqual(r.lo, 0.7)
        self.assertAlmostEqual(r.hi, 1.62, places=12)
        self.assertFalse(r.lo_closed)
        self.assertFalse(r.hi_closed)
        self.assertIn(1.0, r)

    def test_empty(self):
        r = admissible_p_range(make_kernel(KernelKind.HEAT, 3), 1.8, 2.0)
        self.assertTrue(r.empty)
        self.assertEqual(str(r), 'empty')
        self.assertNotIn(1.9, r)
        with self.assertRaises(ValueError):
            r.midpoint
        # upper end within rounding of alpha
        self.assertTrue(admissible_p_range(make_kernel(KernelKind.HEAT, 2), 2 - 1e-13, 1e3).empty)

    def test_interval(self):
        i = Interval(0.0, 1.0, lo_closed=True)
        self.assertIn(0.0, i)
        self.assertNotIn(1.0, i)
        self.assertEqual(str(i), '[0, 1)')

class test_k_np(unittest.TestCase):

    def setUp(self):
        self.params = StableParams(alpha=1.5)
        self.w = make_weight(1.5, self.params)
        self.wave = make_kernel(KernelKind.WAVE, 1)
        self.heat = make_kernel(KernelKind.HEAT, 1)

    def test_wave_quadrature(self):
        for n in (1, 2):
            for x in (0.0, 0.7):
                exact = k_np_quadrature(self.wave, self.w, n, 1.8, 1.0, x)
                mean, stderr = k_np_montecarlo(self.wave, self.w, n, 1.8, 1.0, x, samples=20_000, seed=n, num_workers=1)
                self.assertAlmostEqual(mean, exact, delta=4 * stderr + 1e-3 * exact)

    def test_kernel_proposal_matches_quadrature(self):
        for n in (1, 2):
            for x in (0.0, 0.7):
                exact = k_np_quadrature(self.wave, self.w, n, 1.8, 1.0, x)
                mean, stderr = k_np_montecarlo(
                    self.wave, self.w, n, 1.8, 1.0, x, samples=20_000, seed=n, num_workers=1, proposal=Proposal.KERNEL
                )
                self.assertAlmostEqual(mean, exact, delta=4 * stderr + 1e-3 * exact)

    def test_first_order_unit_power(self):
        # p = alpha: K_1 = int int G^alpha = 2^-alpha for the d = 1 wave kernel
        w = make_weight(1.5, StableParams(alpha=0.7))
        expected = 2**-0.7
        # antithetic gaps u, 1-u make every kernel-walk pair exact
        mean, _ = k_np_montecarlo(self.wave, w, 1, 0.7, 1.0, 0.0, samples=1000, seed=1, num_workers=1, proposal='kernel')
        self.assertAlmostEqual(mean, expected, places=12)
        mean, stderr = k_np_montecarlo(self.wave, w, 1, 0.7, 1.0, 0.0, samples=20_000, seed=1, num_workers=1)
        self.assertAlmostEqual(mean, expected, delta=4 * stderr + 1e-3)

    def test_wave_plane(self):
        params = StableParams(alpha=1.5, dim=2)
        w = make_weight(2.0, params)
        k = make_kernel(KernelKind.WAVE, 2)
        x = np.zeros(2)
        # the light cone stays in the unit ball, where phi = c
        expected = w.c**(1.5 - 1.7) * k.coefficients(1.7).constant
        mean, stderr = k_np_montecarlo(k, w, 1, 1.7, 1.0, x, samples=20_000, seed=2, num_workers=1, proposal=Proposal.KERNEL)
        self.assertAlmostEqual(mean, expected, delta=4 * stderr + 1e-9)
        for n in (1, 2, 3):
            mean, stderr = k_np_montecarlo(k, w, n, 1.7, 1.0, x, samples=20_000, seed=7, num_workers=1, proposal=Proposal.KERNEL)
            self.assertGreater(mean, 0.0)
            self.assertGreater(stderr, 0.0)
            self.assertLessEqual(mean - 4 * stderr, k_np_bound(k, w, n, 1.7, 1.0, x))

    def test_heat_small_alpha(self):
        w = make_weight(1.5, StableParams(alpha=0.7))
        for n in (1, 2, 3):
            mean, stderr = k_np_montecarlo(self.heat, w, n, 1.0, 1.0, 0.0, samples=20_000, seed=11, num_workers=1)
            self.assertGreater(mean, 0.0)
            self.assertLessEqual(mean - 4 * stderr, k_np_bound(self.heat, w, n, 1.0, 1.0, 0.0))
        a, sa = k_np_montecarlo(self.heat, w, 2, 1.0, 1.0, 0.0, samples=20_000, seed=3, num_workers=1)
        b, sb = k_np_montecarlo(self.heat, w, 2, 1.0, 1.0, 0.0, samples=20_000, seed=3, num_workers=1, proposal=Proposal.KERNEL)
        self.assertAlmostEqual(a, b, delta=4 * math.hypot(sa, sb))

    def test_quadrature_first_order_at_unit_power(self):
        # p = alpha: phi^0 = 1, so K_1 is the plain L^p mass
        w = make_weight(1.5, StableParams(alpha=1.5))
        self.assertAlmostEqual(k_np_quadrature(self.wave, w, 1, 1.5, 1.0, 0.0), 2**-1.5, places=9)

    def test_quadrature_rejects(self):
        with self.assertRaises(ValueError):
            k_np_quadrature(self.heat, self.w, 1, 1.8, 1.0, 0.0)
        with self.assertRaises(ValueError):
            k_np_quadrature(self.wave, self.w, 3, 1.8, 1.0, 0.0)

    def test_bound_dominates(self):
        for k in (self.wave, self.heat):
            for n in (1, 2, 3):
                mean, stderr = k_np_montecarlo(k, self.w, n, 1.8, 1.0, 0.3, samples=20_000, seed=7, num_workers=1)
                self.assertLessEqual(mean - 4 * stderr, k_np_bound(k, self.w, n, 1.8, 1.0, 0.3))

    def test_reproducible(self):
        a = k_np_montecarlo(self.wave, self.w, 2, 1.8, 1.0, 0.0, samples=2000, seed=3, num_workers=1)
        b = k_np_montecarlo(self.wave, self.w, 2, 1.8, 1.0, 0.0, samples=2000, seed=3, num_workers=2)
        self.assertEqual(a, b)

    def test_montecarlo_rejects(self):
        with self.assertRaises(ValueError):
            k_np_montecarlo(self.wave, self.w, 0, 1.8, 1.0, 0.0)
        with self.assertRaises(ValueError):
            k_np_montecarlo(self.wave, self.w, 1, 1.8, 1.0, 0.0, samples=10)
        with self.assertRaises(DomainError):
            k_np_montecarlo(self.wave, self.w, 1, 1.8, 0.0, 0.0)
        with self.assertRaises(HypothesisError):
            k_np_montecarlo(self.wave, self.w, 1, 2.5, 1.0, 0.0, proposal=Proposal.KERNEL)
        with self.assertRaises(ValueError):
            k_np_montecarlo(self.wave, self.w, 1, 1.8, 1.0, 0.0, proposal='uniform')

    def test_log_bound(self):
        value = log_k_np_bound(self.heat, self.w, 40, 1.8, 1.0, 0.0)
        self.assertTrue(math.isfinite(value))
        self.assertAlmostEqual(math.exp(value), k_np_bound(self.heat, self.w, 40, 1.8, 1.0, 0.0))
        # factorial decay wins eventually
        self.assertLess(log_k_np_bound(self.wave, self.w, 60, 1.8, 1.0, 0.0), log_k_np_bound(self.wave, self.w, 30, 1.8, 1.0, 0.0))

    def test_bound_rejects(self):
        with self.assertRaises(DivergenceError):
            k_np_bound(self.heat, self.w, 1, 1.5, 1.0, 0.0)
        with self.assertRaises(ValueError):
            k_np_bound(self.heat, self.w, 0, 1.8, 1.0, 0.0)

    def test_wave_constant(self):
        # eta = 0.45 <= 1, so the 2^{eta-1} factor is 1
        self.assertAlmostEqual(wave_bound_constant(1.8, 1.5, 1.5, 1), 3 * 2**-1.8 * 2, places=14)

class test_fit_verdict(unittest.TestCase):

    def test_factorial(self):
        ns = np.arange(1, 31)
        self.assertEqual(_fit_verdict(ns, -special.gammaln(ns + 1))[0], Verdict.CONVERGES)
        self.assertEqual(_fit_verdict(ns, 0.5 * special.gammaln(ns + 1))[0], Verdict.DIVERGES)

    def test_geometric(self):
        ns = np.arange(1, 31)
        self.assertEqual(_fit_verdict(ns, ns * math.log(0.5))[0], Verdict.CONVERGES)
        self.assertEqual(_fit_verdict(ns, ns * math.log(1.5))[0], Verdict.DIVERGES)
        self.assertEqual(_fit_verdict(ns, np.zeros(30))[0], Verdict.INCONCLUSIVE)

    def test_few_terms(self):
        verdict, ratio, notes = _fit_verdict(np.arange(1, 4), np.array([0.0, -1.0, -2.0]))
        self.assertEqual(verdict, Verdict.CONVERGES)
        self.assertAlmostEqual(ratio, math.exp(-1))
        self.assertIn('last ratio', notes)

class test_assumption_reports(unittest.TestCase):

    def setUp(self):
        self.params = StableParams(alpha=1.5)
        self.w = make_weight(1.5, self.params)
        self.cloud = sample_cloud(1000, 42, self.params, self.w)

    def test_converges(self):
        for kind in KernelKind:
            k = make_kernel(kind, 1)
            for report_fn in (assumption_a2_report, assumption_a3_report):
                report = report_fn(k, self.w, self.cloud, 1.8, 1.0, 0.0, n_max=30)
                self.assertEqual(len(report.terms), 30)
                self.assertEqual(report.verdict, Verdict.CONVERGES, f"{kind} {report_fn.__name__}: {report.notes}")
                self.assertTrue(all(v >= 0 for _, v in report.terms))

    def test_small_alpha(self):
        params = StableParams(alpha=0.7)
        w = make_weight(1.5, params)
        cloud = sample_cloud(1000, 42, params, w)
        for kind in KernelKind:
            k = make_kernel(kind, 1)
            for report_fn in (assumption_a2_report, assumption_a3_report):
                report = report_fn(k, w, cloud, 1.0, 1.0, 0.0, n_max=30)
                self.assertEqual(report.verdict, Verdict.CONVERGES, f"{kind} {report_fn.__name__}: {report.notes}")

    def test_wave_plane(self):
        params = StableParams(alpha=1.5, dim=2)
        w = make_weight(2.0, params)
        cloud = sample_cloud(1000, 42, params, w)
        k = make_kernel(KernelKind.WAVE, 2)
        for report_fn in (assumption_a2_report, assumption_a3_report):
            report = report_fn(k, w, cloud, 1.7, 1.0, np.zeros(2), n_max=30)
            self.assertEqual(report.verdict, Verdict.CONVERGES, f"{report_fn.__name__}: {report.notes}")
            self.assertTrue(all(v >= 0 for _, v in report.terms))

    def test_text(self):
        report = assumption_a2_report(make_kernel(KernelKind.WAVE, 1), self.w, self.cloud, 1.8, 1.0, 0.0, n_max=5)
        lines = report.to_text().splitlines()
        self.assertEqual(lines[1], 'n,term,ratio')
        self.assertEqual(len(lines), 2 + 5 + 2)
        self.assertTrue(lines[-1].startswith('verdict: '))
        self.assertTrue(lines[2].endswith(','))

    def test_rejects(self):
        k = make_kernel(KernelKind.HEAT, 1)
        with self.assertRaises(ValueError):
            assumption_a2_report(k, self.w, self.cloud, 1.8, 1.0, 0.0, n_max=1)
        with self.assertRaises(DivergenceError):
            assumption_a2_report(k, self.w, self.cloud, 1.5, 1.0, 0.0)
        params = StableParams(alpha=1.5, dim=2)
        w = make_weight(2.0, params)
        cloud = sample_cloud(100, 1, params, w)
        with self.assertRaises(DomainError):
            assumption_a3_report(make_kernel(KernelKind.HEAT, 2), w, cloud, 1.9, 1.0, np.zeros(2))

class test_stirling_sandwich(unittest.TestCase):

    def test_central_binomial(self):
        c_lower, c_upper = stirling_sandwich(2.0, 0.0, 50)
        self.assertEqual(c_lower, 1.0)
        self.assertGreater(c_upper, 3.7)
        self.assertLessEqual(c_upper, 4.0)

    def test_holds(self):
        for a, b in [(0.5, 0.0), (1.3, 0.7), (2.5, -0.5)]:
            c_lower, c_upper = stirling_sandwich(a, b, 40)
            n = np.arange(1, 41)
            log_gamma = special.gammaln(a * n + 1 + b)
            log_fact = a * special.gammaln(n + 1)
            self.assertTrue(np.all(log_gamma <= n * math.log(c_upper) + log_fact + 1e-9))
            self.assertTrue(np.all(log_gamma >= -n * math.log(c_lower) + log_fact - 1e-9))

    def test_domain(self):
        with self.assertRaises(DomainError):
            stirling_sandwich(0.0, 0.0, 10)
        with self.assertRaises(DomainError):
            stirling_sandwich(1.0, -2.5, 10)
        with self.assertRaises(ValueError):
            stirling_sandwich(1.0, 0.0, 0)

class test_tail_diagnostic(unittest.TestCase):

    def test_first_order_tail(self):
        params = StableParams(alpha=1.5)
        w = make_weight(1.5, params)
        check = tail_diagnostic(
            params, w, make_kernel(KernelKind.WAVE, 1), 1.0, 0.0,
            replications=4000, atoms=200, seed=5, quantile=0.99, num_workers=1
        )
        self.assertAlmostEqual(check.empirical, 0.01, delta=1e-3)
        self.assertTrue(check.passed, f"ratio {check.ratio}")

    def test_heat_small_alpha(self):
        params = StableParams(alpha=0.7)
        w = make_weight(1.5, params)
        check = tail_diagnostic(
            params, w, make_kernel(KernelKind.HEAT, 1), 1.0, 0.0,
            replications=4000, atoms=200, seed=5, quantile=0.99, num_workers=1
        )
        self.assertAlmostEqual(check.empirical, 0.01, delta=1e-3)
        self.assertTrue(check.passed, f"ratio {check.ratio}")

if __name__ == '__main__':
    unittest.main()
