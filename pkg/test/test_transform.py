#!/usr/bin/env python
# -*- coding: utf-8 -*-
# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING.txt in the root directory of this package.


# std imports
import math
import os
import os.path as op_
import random
import sys
import unittest
# external imports
import numpy as np


pwd = op_.dirname(op_.realpath(__file__))

try:
    from skewsim import measure, simUtils, transform
except ImportError:
    os.chdir(op_.join(op_.split(pwd)[0]))
    sys.path.insert(0, os.getcwd())
    sys.modules['skewsim'] = __import__('src')
    from skewsim import measure, simUtils, transform


DOMAIN = (-2.0, 2.0)


def unit_sigma (x):
    return 1.0


def abs_sigma (x):
    return np.abs(x)


class TestTransform (unittest.TestCase):

    def testSkewAtom (self):
        nu = measure.SignedMeasure.dirac(0.0, 0.5)
        t = transform.build_transform(nu, DOMAIN, 64)
        self.assertAlmostEqual(transform.eval_F(t, 1.0), 1 / 3, places=12)
        self.assertAlmostEqual(transform.eval_F(t, -1.0), -1.0, places=12)
        self.assertEqual(transform.eval_F(t, 0.0), 0.0)
        self.assertAlmostEqual(transform.eval_f(t, 0.0), 1 / 3, places=12)
        self.assertAlmostEqual(transform.eval_f(t, -0.5), 1.0, places=12)
        self.assertAlmostEqual(t.m_lower, 1 / 3, places=12)
        self.assertAlmostEqual(t.m_upper, 1.0, places=12)
        self.assertEqual(t.image, (-2.0, t.F(2.0)))
        # the atom is listed twice with both one-sided limits
        i = int(np.searchsorted(t.knots, 0.0))
        self.assertEqual(list(t.knots[i:i + 2]), [0.0, 0.0])
        self.assertAlmostEqual(t.f_values[i], 1.0, places=12)
        self.assertAlmostEqual(t.f_values[i + 1], 1 / 3, places=12)

    def testRoundTrip (self):
        nu = measure.SignedMeasure([(-0.5, 0.3), (0.7, -0.6)],
                                   [measure.DensityPiece(-1, 1.5, 'poly', [0.2, -0.1])])
        t = transform.build_transform(nu, DOMAIN, 256)
        for _ in range(200):
            x = random.uniform(*DOMAIN)
            y = transform.eval_F(t, x)
            self.assertAlmostEqual(transform.eval_F_inverse(t, y), x, places=10)
        xs = np.linspace(-1.9, 1.9, 101)
        self.assertTrue(np.all(np.diff(t.F(xs)) > 0))

    def testContinuousDensity (self):
        c = 0.25
        nu = measure.SignedMeasure([], [measure.DensityPiece(0, 1, 'const', c)])
        t = transform.build_transform(nu, DOMAIN, 64)
        self.assertAlmostEqual(t.F(1.0), (1 - math.exp(-2 * c)) / (2 * c), places=8)
        self.assertAlmostEqual(t.f(0.5), math.exp(-2 * c * 0.5), places=3)
        self.assertAlmostEqual(t.f(1.5), math.exp(-2 * c), places=12)

    def testIdentity (self):
        t = transform.build_transform(measure.SignedMeasure.zero(), DOMAIN, 16)
        self.assertTrue(t.identity)
        xs = np.array([random.uniform(-2, 2) for _ in range(100)])
        self.assertTrue(np.array_equal(t.F(xs), xs))
        self.assertTrue(np.array_equal(t.F_inverse(xs), xs))
        self.assertTrue(np.array_equal(t.f(xs), np.ones(100)))

    def testRange (self):
        t = transform.build_transform(measure.SignedMeasure.dirac(0.0, 0.5), DOMAIN, 16)
        self.assertRaises(simUtils.RangeError, t.F, 3.0)
        self.assertRaises(simUtils.RangeError, t.F, [0.0, math.nan])
        self.assertRaises(simUtils.RangeError, t.F_inverse, 1.0)
        self.assertRaises(simUtils.RangeError, t.f, -2.5)
        self.assertAlmostEqual(t.F(3.0, extend=True), 1.0, places=12)
        self.assertAlmostEqual(t.F(-3.0, extend=True), -3.0, places=12)
        self.assertAlmostEqual(t.F_inverse(1.0, extend=True), 3.0, places=12)

    def testBuildErrors (self):
        bad = measure.SignedMeasure.dirac(0.0, 1.5)
        with self.assertRaises(simUtils.ConditionError) as ctx:
            transform.build_transform(bad, DOMAIN, 16)
        self.assertEqual(ctx.exception.condition, 'A1')
        with self.assertRaises(simUtils.ConditionError) as ctx:
            transform.build_transform(bad, DOMAIN, 16, zero_set=simUtils.ZeroSet([0.0]))
        self.assertEqual(ctx.exception.condition, 'A1-weak')
        self.assertRaises(simUtils.InputError, transform.build_transform,
                          measure.SignedMeasure.dirac(5.0, 0.5), DOMAIN, 16)
        self.assertRaises(simUtils.InputError, transform.build_transform,
                          measure.SignedMeasure.zero(), DOMAIN, 0)
        self.assertRaises(simUtils.InputError, transform.build_transform,
                          measure.SignedMeasure.zero(), (1.0, 1.0), 16)
        self.assertRaises(simUtils.InputError, transform.build_transform,
                          measure.SignedMeasure.zero(), (-math.inf, 1.0), 16)

    def testWeakenedRestriction (self):
        # the atom sits on a zero of sigma: dropped from the transform
        nu = measure.SignedMeasure([(0.0, 0.5), (1.0, 0.5)])
        t = transform.build_transform(nu, DOMAIN, 64, zero_set=simUtils.ZeroSet([0.0]))
        self.assertEqual([a.location for a in t.nu.atoms], [1.0])
        self.assertAlmostEqual(t.F(1.0), 1.0, places=12)

    def testExtraKnots (self):
        t = transform.build_transform(measure.SignedMeasure.dirac(0.0, 0.5),
                                      DOMAIN, 4, extra_knots=[0.123, 7.0])
        self.assertIn(0.123, list(t.unique_knots))
        self.assertNotIn(7.0, list(t.unique_knots))


class TestSpec (unittest.TestCase):

    def testDiffusionSpec (self):
        spec = transform.DiffusionSpec(abs_sigma, simUtils.ZeroSet([0.0]), growth_bound=(1, 0))
        self.assertEqual(spec.growth_bound, (1.0, 0.0))
        self.assertTrue(np.array_equal(spec.drift_at([1.0, 2.0]), [0.0, 0.0]))
        self.assertEqual(spec.sigma_max(-1, 1), 1.0)
        self.assertAlmostEqual(spec.sigma_min(-1, 1), 0.0, places=12)
        self.assertEqual(len(spec.hash), 64)
        self.assertRaises(simUtils.InputError, transform.DiffusionSpec,
                          unit_sigma, simUtils.ZeroSet([0.0]))
        self.assertRaises(simUtils.InputError, transform.DiffusionSpec,
                          lambda x: x * x, growth_bound=(1, 1))
        self.assertRaises(simUtils.InputError, transform.DiffusionSpec, 'sigma')
        self.assertRaises(simUtils.InputError, transform.DiffusionSpec,
                          unit_sigma, drift=lambda x: x,
                          drift_zero_set=simUtils.ZeroSet([1.0]))
        bare = transform.DiffusionSpec(unit_sigma, drift=lambda x: x).without_drift()
        self.assertIsNone(bare.drift)

    def testSigmaTilde (self):
        spec = transform.DiffusionSpec(unit_sigma)
        t = transform.build_transform(measure.SignedMeasure.dirac(0.0, 0.5), DOMAIN, 32)
        st = transform.build_sigma_tilde(t, spec)
        self.assertAlmostEqual(float(st(0.5)), 1 / 3, places=12)
        self.assertAlmostEqual(float(st(-0.5)), 1.0, places=12)
        self.assertAlmostEqual(st.sup(-1, 0.5), 1.0, places=12)
        self.assertEqual(st.description['kind'], 'sigma_tilde')

    def testTransformedZeroSet (self):
        t = transform.build_transform(measure.SignedMeasure.dirac(0.0, 0.5), DOMAIN, 32)
        img = transform.transformed_zero_set(t, simUtils.ZeroSet([1.0], [(-1.0, -0.5)]))
        self.assertAlmostEqual(img.points[0], 1 / 3, places=12)
        self.assertAlmostEqual(img.intervals[0][0], -1.0, places=12)
        self.assertAlmostEqual(img.intervals[0][1], -0.5, places=12)

    def testGrowthBound (self):
        spec = transform.DiffusionSpec(abs_sigma, simUtils.ZeroSet([0.0]), growth_bound=(1, 0))
        t = transform.build_transform(measure.SignedMeasure.dirac(0.0, 0.5), DOMAIN, 32)
        a, b = transform.transformed_growth_bound(t, spec)
        self.assertAlmostEqual(a, 3.0, places=12)
        self.assertAlmostEqual(b, 0.0, places=12)
        st = transform.build_sigma_tilde(t, spec)
        ys = np.linspace(*t.image, 101)
        self.assertTrue(np.all(np.abs(st(ys)) <= a * (b + np.abs(ys)) + 1e-12))
        self.assertRaises(simUtils.ConfigurationError, transform.transformed_growth_bound,
                          t, transform.DiffusionSpec(unit_sigma))

    def testDriftToMeasure (self):
        spec = transform.DiffusionSpec(unit_sigma, drift=lambda x: 0.5)
        nu = transform.drift_to_measure(spec, (-1.0, 1.0), 8)
        self.assertAlmostEqual(nu.density(0.3), 0.5, places=12)
        self.assertAlmostEqual(measure.tv_on(nu, simUtils.IntervalUnion.real_line()),
                               1.0, places=12)
        self.assertTrue(transform.drift_to_measure(
            transform.DiffusionSpec(unit_sigma, drift=lambda x: 0.0), (-1, 1), 8).is_zero)
        self.assertRaises(simUtils.InputError, transform.drift_to_measure,
                          transform.DiffusionSpec(unit_sigma))
        degenerate = transform.DiffusionSpec(abs_sigma, simUtils.ZeroSet([0.0]),
                                             drift=lambda x: 1.0)
        with self.assertRaises(simUtils.ConditionError) as ctx:
            transform.drift_to_measure(degenerate, (-1.0, 1.0), 8)
        self.assertEqual(ctx.exception.condition, 'A2prime')

    def testISigma (self):
        ok = transform.check_I_sigma(transform.DiffusionSpec(abs_sigma, simUtils.ZeroSet([0.0])),
                                     [(-1.0, 1.0)])
        self.assertTrue(ok.passed)
        hidden = transform.DiffusionSpec(lambda x: np.where(np.abs(x) < 0.5, 0.0, 1.0))
        report = transform.check_I_sigma(hidden, [(-1.0, 1.0)], samples=17)
        self.assertFalse(report.holds('I_sigma'))
        self.assertTrue(all(abs(w) <= 0.5 for w in report.witnesses('I_sigma')))


def load_tests (args=None, *rest):
    loader = unittest.TestLoader()
    if not args or isinstance(args, unittest.TestLoader):
        test_cases = (TestTransform, TestSpec)
    else:
        g = globals()
        test_cases = (g[t] for t in args)
    return unittest.TestSuite(loader.loadTestsFromTestCase(t) for t in test_cases)



if __name__ == '__main__':
    os.chdir(pwd)
    unittest.TextTestRunner(verbosity=2).run(
        unittest.TestSuite(load_tests(sys.argv[1:])))
