#!/usr/bin/env python
# -*- coding: utf-8 -*-
# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING.txt in the root directory of this package.


# std imports
import os
import os.path as op_
import shutil
import sys
import tempfile
import unittest
# external imports
import numpy as np


pwd = op_.dirname(op_.realpath(__file__))

try:
    from skewsim import fk, measure, simUtils, transform
except ImportError:
    os.chdir(op_.join(op_.split(pwd)[0]))
    sys.path.insert(0, os.getcwd())
    sys.modules['skewsim'] = __import__('src')
    from skewsim import fk, measure, simUtils, transform


def unit_sigma (x):
    return np.ones_like(np.asarray(x, dtype=float))


def square (x):
    return np.asarray(x, dtype=float) ** 2


def wavy_sigma (x):
    return 1.0 + 0.5 * np.sin(np.asarray(x, dtype=float))


class TestPde (unittest.TestCase):

    def testGrid (self):
        g = fk.PdeGrid(-1, 1, 20, 5, start=0.5, horizon=1.5)
        self.assertAlmostEqual(g.dy, 0.1, places=15)
        self.assertAlmostEqual(g.dtau, 0.2, places=15)
        self.assertEqual(g.nodes.size, 21)
        self.assertAlmostEqual(g.times[-1], 1.5, places=15)
        self.assertRaises(simUtils.InputError, fk.PdeGrid, 1, 1, 20, 5)
        self.assertRaises(simUtils.InputError, fk.PdeGrid, -1, 1, 1, 5)
        self.assertRaises(simUtils.InputError, fk.PdeGrid, -1, 1, 20, 5, 1.0, 1.0)
        cfl = fk.PdeGrid.for_sigma(unit_sigma, -1, 1, 20)
        self.assertLessEqual(cfl.dtau, cfl.dy ** 2)
        cfl.check_cfl(1.0)
        self.assertRaises(simUtils.ConfigurationError, fk.PdeGrid(-1, 1, 20, 1).check_cfl, 1.0)

    def testRunningCost (self):
        # f = 0, g = 1: u(s, y) = T - s
        grid = fk.PdeGrid.for_sigma(unit_sigma, -2, 2, 40)
        sol = fk.pde_solve(unit_sigma, lambda y: np.zeros_like(y), grid,
                           lambda t, y: np.ones_like(y))
        for k in (0, grid.K // 2, grid.K):
            self.assertTrue(np.allclose(sol.u[k], grid.horizon - grid.times[k], atol=1e-12))
        self.assertAlmostEqual(sol.value(0.0, 0.3), 1.0, places=12)

    def testHeatEquation (self):
        # f = y^2, sigma~ = 1: u(s, y) = y^2 + (T - s) away from the boundary
        grid = fk.PdeGrid.for_sigma(unit_sigma, -10, 10, 200)
        sol = fk.pde_solve(unit_sigma, square, grid)
        self.assertAlmostEqual(sol.value(0.0, 0.0), 1.0, places=8)
        self.assertAlmostEqual(sol.value(0.0, 1.0), 2.0, places=8)
        self.assertRaises(simUtils.InputError, sol.value, 2.0, 0.0)

    def testCfl (self):
        self.assertRaises(simUtils.ConfigurationError, fk.pde_solve, unit_sigma, square,
                          fk.PdeGrid(-1, 1, 20, 1))

    def testMonotoneScheme (self):
        # raising the terminal data never lowers u
        grid = fk.PdeGrid.for_sigma(wavy_sigma, -3, 3, 60)
        rng = np.random.default_rng(3)
        source = lambda t, y: np.sin(t + y)
        for _ in range(5):
            low = rng.normal(size=grid.J + 1)
            high = low + rng.exponential(size=grid.J + 1) * (rng.random(grid.J + 1) < 0.5)
            u_low = fk.pde_solve(wavy_sigma, lambda y: np.interp(y, grid.nodes, low),
                                 grid, source).u
            u_high = fk.pde_solve(wavy_sigma, lambda y: np.interp(y, grid.nodes, high),
                                  grid, source).u
            self.assertTrue(np.all(u_high >= u_low - 1e-12))
            self.assertTrue(np.all(u_high[-1] - u_low[-1] == high - low))

    def testMaximumPrinciple (self):
        grid = fk.PdeGrid.for_sigma(wavy_sigma, -4, 4, 80, horizon=2.0)
        for g in (lambda t, y: 0.5 * np.cos(t + 3 * y), lambda t, y: -np.ones_like(y)):
            u = fk.pde_solve(wavy_sigma, np.sin, grid, g).u
            g_max = max(float(np.max(np.abs(g(t, grid.nodes)))) for t in grid.times[:-1])
            self.assertGreaterEqual(u.min(), u[-1].min() - 2.0 * g_max - 1e-12)
            self.assertLessEqual(u.max(), u[-1].max() + 2.0 * g_max + 1e-12)
        # g = -1 shifts the source-free field down by the time to maturity
        free = fk.pde_solve(wavy_sigma, np.sin, grid).u
        shift = (grid.horizon - grid.times)[:, None]
        self.assertTrue(np.allclose(u, free - shift, atol=1e-9))

    def testDump (self):
        grid = fk.PdeGrid.for_sigma(unit_sigma, -1, 1, 8)
        sol = fk.pde_solve(unit_sigma, square, grid)
        tmp = tempfile.mkdtemp()
        try:
            out = op_.join(tmp, 'u.csv')
            sol.dump_csv(out, levels=3)
            with open(out) as f:
                lines = f.read().splitlines()
            self.assertEqual(lines[0], 's,y,u')
            self.assertEqual(len(lines), 1 + 3 * 9)
        finally:
            shutil.rmtree(tmp)


class TestPayoff (unittest.TestCase):

    def testBounds (self):
        p = fk.TerminalPayoff(np.tanh, lambda t, x: t * np.cos(x), horizon=2.0)
        self.assertLessEqual(p.f_max, 1.0)
        self.assertAlmostEqual(p.g_max, 2.0, places=12)
        self.assertTrue(np.array_equal(p.running(0.0, [1.0, 2.0]), [0.0, 0.0]))
        self.assertEqual(p.describe()['horizon'], 2.0)
        self.assertRaises(simUtils.InputError, fk.TerminalPayoff, lambda x: x, f_max=1.0)
        self.assertRaises(simUtils.InputError, fk.TerminalPayoff, np.tanh,
                          lambda t, x: 3 + 0 * x, g_max=1.0)
        self.assertRaises(simUtils.InputError, fk.TerminalPayoff, np.tanh, horizon=0)
        self.assertRaises(simUtils.InputError, fk.TerminalPayoff, 'f')
        bare = fk.TerminalPayoff(np.tanh)
        self.assertEqual(bare.g_max, 0.0)
        self.assertTrue(np.array_equal(bare.running(0.5, np.zeros(3)), np.zeros(3)))


class TestFeynmanKac (unittest.TestCase):

    def testMonteCarlo (self):
        spec = transform.DiffusionSpec(unit_sigma)
        payoff = fk.TerminalPayoff(square)
        mc = fk.mc_value(spec, measure.SignedMeasure.zero(), payoff, 0.0, 0.5, 2000, 64,
                         seed=3, domain=(-8.0, 8.0), resolution=256)
        self.assertLess(abs(mc.estimate - 1.25), 4 * mc.stderr)
        self.assertRaises(simUtils.InputError, fk.mc_value, spec,
                          measure.SignedMeasure.zero(), payoff, 1.0, 0.0, 10, 4)

    def testCompareBrownian (self):
        spec = transform.DiffusionSpec(unit_sigma)
        payoff = fk.TerminalPayoff(square)
        r = fk.fk_compare(spec, measure.SignedMeasure.zero(), payoff, [(0.0, 0.0), (0.5, 0.3)],
                          2000, 64, cells=(100, 200), seed=1)
        self.assertEqual(len(r.metrics), 2)
        first, second = [row for row in r.refinement_table if 'pde' in row]
        self.assertAlmostEqual(first['pde'], 1.0, delta=2e-3)
        self.assertAlmostEqual(second['pde'], 0.09 + 0.5, delta=2e-3)
        for row in (first, second):
            self.assertLess(row['discrepancy'], 5 * row['stderr'] + 1e-6)
        self.assertEqual(sorted(r.artifacts), ['u_field_s0.0', 'u_field_s0.5'])

    def testCompareSkew (self):
        spec = transform.DiffusionSpec(unit_sigma)
        payoff = fk.TerminalPayoff(np.tanh)
        nu = measure.SignedMeasure.dirac(0.0, 0.3)
        r = fk.fk_compare(spec, nu, payoff, [(0.0, 0.0)], 200, 32, cells=(40, 80))
        self.assertEqual(len(r.metrics), 1)
        self.assertEqual(r.notes, [])


def load_tests (args=None, *rest):
    loader = unittest.TestLoader()
    if not args or isinstance(args, unittest.TestLoader):
        test_cases = (TestPde, TestPayoff, TestFeynmanKac)
    else:
        g = globals()
        test_cases = (g[t] for t in args)
    return unittest.TestSuite(loader.loadTestsFromTestCase(t) for t in test_cases)



if __name__ == '__main__':
    os.chdir(pwd)
    unittest.TextTestRunner(verbosity=2).run(
        unittest.TestSuite(load_tests(sys.argv[1:])))
