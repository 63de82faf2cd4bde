import os
import math
import tempfile
import unittest
import numpy as np
from scipy import stats
from lepage_spde import (
    StableParams, make_weight, make_cloud, sample_cloud, stable_constant,
    BoxRegion, z_measure, empirical_cf, stable_cf_target, additive_solution,
    replicate_z_measure, compare_cf, validate_cf, write_cf_csv,
    make_kernel, KernelKind, HypothesisError
)

class test_box_region(unittest.TestCase):

    def test_lebesgue(self):
        self.assertEqual(BoxRegion(0.0, 0.5, (0.0, -1.0), (2.0, 1.0)).lebesgue, 2.0)
        self.assertEqual(BoxRegion(0.2, 0.2, 0.0, 1.0).lebesgue, 0.0)

    def test_half_open(self):
        B = BoxRegion(0.0, 1.0, 0.0, 1.0)
        inside = B.contains([0.0, 0.5, 1.0, 0.5, 0.5], [[0.5], [0.0], [0.5], [1.0], [-0.1]])
        self.assertEqual(list(inside), [True, True, False, False, False])

    def test_invalid(self):
        with self.assertRaises(ValueError):
            BoxRegion(1.0, 0.5, 0.0, 1.0)
        with self.assertRaises(ValueError):
            BoxRegion(0.0, 1.0, 1.0, 0.0)
        with self.assertRaises(ValueError):
            BoxRegion(0.0, 1.0, (0.0, 0.0), (1.0,))

class test_z_measure(unittest.TestCase):

    def setUp(self):
        self.params = StableParams(alpha=1.5)
        self.w = make_weight(1.5, self.params)

    def test_hand_cloud(self):
        cloud = make_cloud([1, -1, 1], [1.0, 2.0, 4.0], [0.1, 0.5, 0.9], [[0.2], [3.0], [0.7]], self.params, self.w)
        v = cloud.prefactors()
        self.assertAlmostEqual(z_measure(cloud, BoxRegion(0.0, 1.0, -1.0, 1.0)), v[0] + v[2], places=14)
        self.assertAlmostEqual(z_measure(cloud, BoxRegion(0.0, 0.6, 0.0, 5.0)), v[0] + v[1], places=14)
        self.assertEqual(z_measure(cloud, BoxRegion(0.95, 1.0, -10.0, 10.0)), 0.0)

    def test_additive(self):
        cloud = sample_cloud(2000, 8, self.params, self.w)
        left = BoxRegion(0.0, 0.4, -2.0, 2.0)
        right = BoxRegion(0.4, 1.0, -2.0, 2.0)
        union = BoxRegion(0.0, 1.0, -2.0, 2.0)
        self.assertAlmostEqual(z_measure(cloud, left) + z_measure(cloud, right), z_measure(cloud, union), places=10)

    def test_empty(self):
        cloud = sample_cloud(0, 8, self.params, self.w)
        self.assertEqual(z_measure(cloud, BoxRegion(0.0, 1.0, 0.0, 1.0)), 0.0)

    def test_dimension_mismatch(self):
        cloud = sample_cloud(10, 8, self.params, self.w)
        with self.assertRaises(ValueError):
            z_measure(cloud, BoxRegion(0.0, 1.0, (0.0, 0.0), (1.0, 1.0)))

class test_characteristic_function(unittest.TestCase):

    def test_empirical(self):
        self.assertEqual(empirical_cf(np.zeros(10), 3.0), 1.0)
        cf = empirical_cf([math.pi, -math.pi], 1.0)
        self.assertAlmostEqual(cf.real, -1.0, places=15)
        self.assertAlmostEqual(cf.imag, 0.0, places=15)
        with self.assertRaises(ValueError):
            empirical_cf([], 1.0)

    def test_target(self):
        self.assertEqual(stable_cf_target(1.2, 0.0, 2.0), 1.0)
        self.assertAlmostEqual(stable_cf_target(1.0, 1.0, 1.0), math.exp(-math.pi / 2), places=14)

    def test_compare_exact_samples(self):
        alpha, leb = 1.5, 0.8
        scale = (leb / stable_constant(alpha))**(1 / alpha)
        samples = stats.levy_stable.rvs(alpha, 0.0, scale=scale, size=4000, random_state=np.random.default_rng(3))
        checks = compare_cf(samples, alpha, leb)
        self.assertEqual([c.u for c in checks], [0.5, 1.0, 2.0])
        for c in checks:
            self.assertAlmostEqual(c.band, 4 / math.sqrt(4000))
            self.assertTrue(c.passed, f"u={c.u}: {c.empirical_re} vs {c.target}")

    def test_compare_rejects_wrong_scale(self):
        samples = np.random.default_rng(4).normal(scale=5.0, size=4000)
        checks = compare_cf(samples, 1.5, 0.1)
        self.assertFalse(all(c.passed for c in checks))

    def test_lepage_series(self):
        # only about c^alpha of the atoms fall into the unit box
        params = StableParams(alpha=0.7)
        w = make_weight(1.5, params)
        B = BoxRegion(0.0, 1.0, 0.0, 1.0)
        checks = validate_cf(params, w, B, atoms=300, replications=4000, seed=10, num_workers=1)
        for c in checks:
            self.assertTrue(c.passed, f"u={c.u}: {c.empirical_re} vs {c.target} +- {c.band}")

    def test_replications_reproducible(self):
        params = StableParams(alpha=1.2)
        w = make_weight(1.5, params)
        B = BoxRegion(0.0, 1.0, -1.0, 1.0)
        a = replicate_z_measure(params, w, B, 50, 40, seed=1, num_workers=1)
        b = replicate_z_measure(params, w, B, 50, 40, seed=1, num_workers=2)
        self.assertEqual(a.shape, (40,))
        self.assertTrue(np.array_equal(a, b))

    def test_write(self):
        checks = compare_cf(np.zeros(16), 1.0, 0.0)
        with tempfile.TemporaryDirectory() as tmp:
            filename = os.path.join(tmp, 'cf.csv')
            write_cf_csv(filename, checks)
            with open(filename) as f:
                self.assertEqual(f.readline().strip(), 'u,empirical_re,empirical_im,target,band')
            table = np.loadtxt(filename, delimiter=',', skiprows=1)
        self.assertEqual(table.shape, (3, 5))
        self.assertTrue(np.all(table[:, 3] == 1.0))

class test_additive_solution(unittest.TestCase):

    def test_wave_hand_cloud(self):
        params = StableParams(alpha=1.5)
        w = make_weight(1.5, params)
        k = make_kernel(KernelKind.WAVE, 1)
        cloud = make_cloud([1, -1, 1], [1.0, 2.0, 3.0], [0.2, 0.4, 0.9], [[0.1], [2.0], [0.0]], params, w)
        v = cloud.prefactors()
        # atom 1 is outside the light cone of (0.8, 0), atom 2 comes after t
        self.assertAlmostEqual(additive_solution(cloud, k, 0.8, 0.0), 1.0 + 0.5 * v[0], places=14)

    def test_empty_cloud(self):
        params = StableParams(alpha=1.5)
        w = make_weight(1.5, params)
        cloud = sample_cloud(0, 1, params, w)
        self.assertEqual(additive_solution(cloud, make_kernel(KernelKind.HEAT, 1), 1.0, 0.0), 1.0)

    def test_causal(self):
        params = StableParams(alpha=1.5)
        w = make_weight(1.5, params)
        k = make_kernel(KernelKind.HEAT, 1)
        cloud = sample_cloud(200, 2, params, w)
        self.assertEqual(additive_solution(cloud, k, float(cloud.times.min()), 0.3), 1.0)

    def test_hypothesis(self):
        params = StableParams(alpha=1.8, dim=3)
        w = make_weight(2.0, params)
        cloud = sample_cloud(10, 1, params, w)
        with self.assertRaises(HypothesisError):
            additive_solution(cloud, make_kernel(KernelKind.HEAT, 3), 1.0, np.zeros(3))

if __name__ == '__main__':
    unittest.main()
