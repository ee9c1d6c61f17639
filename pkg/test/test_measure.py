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
    from skewsim import measure, simUtils
except ImportError:
    os.chdir(op_.join(op_.split(pwd)[0]))
    sys.path.insert(0, os.getcwd())
    sys.modules['skewsim'] = __import__('src')
    from skewsim import measure, simUtils


def random_atoms (n, bound=0.9):
    locs = random.sample(range(-50, 50), n)
    return [(l / 10, random.uniform(-bound, bound) or 0.5) for l in locs]


class TestDensityPiece (unittest.TestCase):

    def testConst (self):
        p = measure.DensityPiece(0, 2, 'const', -1.5)
        self.assertEqual(p.integral(), -3.0)
        self.assertEqual(p.abs_integral(), 3.0)
        self.assertEqual(p(1.0), -1.5)
        self.assertEqual(p(2.0), 0.0)
        self.assertEqual(p(-0.1), 0.0)
        self.assertTrue(np.allclose(p.cumulative([-1, 0, 1, 3]), [0, 0, -1.5, -3]))

    def testPoly (self):
        # x - 1 on [0, 3): signed integral 1.5, absolute 0.5 + 2
        p = measure.DensityPiece(0, 3, 'poly', [-1, 1])
        self.assertAlmostEqual(p.integral(), 1.5, places=12)
        self.assertAlmostEqual(p.abs_integral(), 2.5, places=12)
        self.assertAlmostEqual(p.abs_integral(0, 1), 0.5, places=12)
        self.assertAlmostEqual(float(p.cumulative(2.0)), 0.0, places=12)

    def testTable (self):
        p = measure.DensityPiece(0, 2, 'table', ([0, 1, 2], [1, -1, 1]))
        self.assertAlmostEqual(p.integral(), 0.0, places=12)
        # four triangles of area 1/4
        self.assertAlmostEqual(p.abs_integral(), 1.0, places=12)
        self.assertAlmostEqual(float(p.cumulative(1.0)), 0.0, places=12)
        self.assertAlmostEqual(float(p.cumulative(0.5)), 0.25, places=12)
        self.assertRaises(simUtils.InputError, measure.DensityPiece,
                          -1, 2, 'table', ([0, 1, 2], [1, 1, 1]))
        self.assertRaises(simUtils.InputError, measure.DensityPiece,
                          0, 2, 'table', ([0, 2, 1], [1, 1, 1]))

    def testFunction (self):
        p = measure.DensityPiece(-math.inf, math.inf, 'function', lambda x: np.exp(-x * x))
        self.assertAlmostEqual(p.integral(), math.sqrt(math.pi), places=8)
        self.assertAlmostEqual(float(p.cumulative(0.0)), math.sqrt(math.pi) / 2, places=8)
        cum = p.cumulative(np.array([1.0, -1.0, 0.0]))
        self.assertTrue(cum[1] < cum[2] < cum[0])

    def testErrors (self):
        self.assertRaises(simUtils.InputError, measure.DensityPiece, 0, 1, 'spam', 1)
        self.assertRaises(simUtils.InputError, measure.DensityPiece, 1, 0, 'const', 1)
        self.assertRaises(simUtils.InputError, measure.DensityPiece, 0, math.inf, 'const', 1)

    def testRestricted (self):
        p = measure.DensityPiece(0, 4, 'poly', [0, 1])
        self.assertIs(p.restricted(-1, 5), p)
        q = p.restricted(1, 2)
        self.assertEqual((q.lo, q.hi), (1.0, 2.0))
        self.assertAlmostEqual(q.integral(), 1.5, places=12)


class TestSignedMeasure (unittest.TestCase):

    def testConstruction (self):
        nu = measure.SignedMeasure([(1.0, 0.2), (-1.0, -0.3)])
        self.assertEqual([a.location for a in nu.atoms], [-1.0, 1.0])
        self.assertEqual(nu.atom_weight(1.0), 0.2)
        self.assertEqual(nu.atom_weight(0.5), 0.0)
        self.assertTrue(nu.is_atomic)
        self.assertFalse(nu.is_zero)
        self.assertTrue(measure.SignedMeasure.zero().is_zero)
        self.assertEqual(measure.SignedMeasure.dirac(0, 0.5).atoms, (measure.Atom(0.0, 0.5),))
        self.assertRaises(simUtils.InputError, measure.SignedMeasure, [(0, 0.1), (0, 0.2)])
        self.assertRaises(simUtils.InputError, measure.SignedMeasure, [(0, 0.0)])
        self.assertRaises(simUtils.InputError, measure.SignedMeasure, [(math.nan, 0.1)])
        pieces = [measure.DensityPiece(0, 2, 'const', 1), measure.DensityPiece(1, 3, 'const', 1)]
        self.assertRaises(simUtils.InputError, measure.SignedMeasure, [], pieces)

    def testDensityAndBreakpoints (self):
        nu = measure.SignedMeasure([], [measure.DensityPiece(0, 1, 'const', 2),
                                        measure.DensityPiece(1, 2, 'const', -1)])
        self.assertEqual(nu.density(0.5), 2.0)
        self.assertEqual(nu.density(1.5), -1.0)
        self.assertEqual(nu.breakpoints(), [0.0, 1.0, 2.0])
        self.assertFalse(nu.is_atomic)

    def testDescribeEquality (self):
        nu = measure.SignedMeasure([(0, 0.5)], [measure.DensityPiece(-1, 1, 'poly', [1, 2])])
        desc = nu.describe()
        self.assertEqual(desc['atoms'], [{'a': 0.0, 'alpha': 0.5}])
        self.assertEqual(desc['density'][0]['kind'], 'poly')
        again = measure.SignedMeasure(
            [(a['a'], a['alpha']) for a in desc['atoms']],
            [measure.DensityPiece(p['lo'], p['hi'], p['kind'], p['data'])
             for p in desc['density']])
        self.assertEqual(nu, again)


class TestMeasureFunctions (unittest.TestCase):

    def testTotalVariation (self):
        nu = measure.SignedMeasure([(0, 0.5), (2, -0.25)],
                                   [measure.DensityPiece(-1, 1, 'const', -1)])
        line = simUtils.IntervalUnion.real_line()
        self.assertAlmostEqual(measure.tv_on(nu, line), 2.75, places=12)
        self.assertAlmostEqual(measure.tv_on(nu, simUtils.IntervalUnion([(0.5, 3)])),
                               0.75, places=12)
        without0 = simUtils.IntervalUnion(exclude=[0.0])
        self.assertAlmostEqual(measure.tv_on(nu, without0), 2.25, places=12)
        self.assertRaises(simUtils.InputError, measure.tv_on, nu, [(0, 1)])

    def testTotalVariationDiverges (self):
        heavy = measure.DensityPiece(1, 2, 'const', 1e13)
        self.assertTrue(math.isinf(measure.tv_on(
            measure.SignedMeasure([], [heavy]), simUtils.IntervalUnion.real_line())))

    def testAtomProduct (self):
        nu = measure.SignedMeasure([(0, 0.5), (1, -0.5)])
        self.assertEqual(measure.atom_product(nu, -1.0), 1.0)
        self.assertAlmostEqual(measure.atom_product(nu, 0.0), 1 / 3, places=15)
        self.assertAlmostEqual(measure.atom_product(nu, 0.5), 1 / 3, places=15)
        self.assertAlmostEqual(measure.atom_product(nu, 1.0), 1.0, places=15)
        vals = measure.atom_product(nu, np.array([-1.0, 0.0, 2.0]))
        self.assertTrue(np.allclose(vals, [1.0, 1 / 3, 1.0]))
        bad = measure.SignedMeasure([(0, 1.5)])
        self.assertEqual(measure.atom_product(bad, -0.5), 1.0)
        with self.assertRaises(simUtils.ConditionError) as ctx:
            measure.atom_product(bad, 0.0)
        self.assertEqual(ctx.exception.condition, 'A1')

    def testAtomProductRandom (self):
        for _ in range(50):
            atoms = random_atoms(random.randint(1, 6))
            nu = measure.SignedMeasure(atoms)
            x = random.uniform(-6, 6)
            expected = 1.0
            for a, w in atoms:
                if a <= x:
                    expected *= (1 - w) / (1 + w)
            self.assertAlmostEqual(measure.atom_product(nu, x), expected, places=10)

    def testContinuousCdf (self):
        nu = measure.SignedMeasure([], [measure.DensityPiece(0, 2, 'const', 0.5)])
        self.assertEqual(measure.continuous_cdf(nu, -1.0), 0.0)
        self.assertAlmostEqual(measure.continuous_cdf(nu, 1.0), 0.5, places=15)
        self.assertAlmostEqual(measure.continuous_cdf(nu, 5.0), 1.0, places=15)
        self.assertTrue(np.allclose(measure.continuous_cdf(nu, np.array([0.0, 2.0])),
                                    [0.0, 1.0]))

    def testRestrict (self):
        nu = measure.SignedMeasure([(0, 1.5), (2, 0.5)],
                                   [measure.DensityPiece(-2, 2, 'const', 1)])
        zero = simUtils.ZeroSet([0.0], [(-1.0, 1.0)])
        r = measure.restrict(nu, zero)
        self.assertEqual([a.location for a in r.atoms], [2.0])
        self.assertEqual([(p.lo, p.hi) for p in r.continuous], [(-2.0, -1.0), (1.0, 2.0)])
        self.assertAlmostEqual(measure.tv_on(r, simUtils.IntervalUnion.real_line()),
                               2.5, places=12)

    def testConditions (self):
        nu = measure.SignedMeasure.dirac(0.0, 1.5)
        report = measure.check_measure_conditions(nu, simUtils.ZeroSet([1.0]))
        self.assertFalse(report.holds('A1'))
        self.assertTrue(report.holds('A2'))
        self.assertTrue(report.holds('A1-weak', 'A2-weak'))
        self.assertEqual(report.witnesses('A1'), [0.0])
        report = measure.check_measure_conditions(nu, simUtils.ZeroSet([0.0]))
        self.assertFalse(report.holds('A1-weak'))
        self.assertFalse(report.passed)
        heavy = measure.SignedMeasure([], [measure.DensityPiece(1, 2, 'const', 1e13)])
        report = measure.check_measure_conditions(heavy, simUtils.ZeroSet([], [(1.0, 2.0)]))
        self.assertFalse(report.holds('A2'))
        self.assertTrue(report.holds('A2-weak'))
        ok = measure.check_measure_conditions(measure.SignedMeasure.dirac(0, 0.5),
                                              simUtils.ZeroSet())
        self.assertTrue(ok.passed)
        self.assertEqual(ok.as_dict()['violations'], [])

    def testReportMerge (self):
        a = measure.ConditionReport([measure.Violation('A1', 0.0, 1.5)], 'one')
        b = measure.ConditionReport([measure.Violation('A2', None, math.inf)], 'two')
        merged = a.merge(b)
        self.assertEqual(len(merged.violations), 2)
        self.assertEqual(merged.notes, 'one; two')
        self.assertFalse(merged.holds('A1', 'A2'))
        self.assertTrue(merged.holds('A3'))


def load_tests (args=None, *rest):
    loader = unittest.TestLoader()
    if not args or isinstance(args, unittest.TestLoader):
        test_cases = (TestDensityPiece, TestSignedMeasure, TestMeasureFunctions)
    else:
        g = globals()
        test_cases = (g[t] for t in args)
    return unittest.TestSuite(loader.loadTestsFromTestCase(t) for t in test_cases)



if __name__ == '__main__':
    os.chdir(pwd)
    unittest.TextTestRunner(verbosity=2).run(
        unittest.TestSuite(load_tests(sys.argv[1:])))
