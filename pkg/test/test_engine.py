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
import shutil
import sys
import tempfile
import unittest
# external imports
import numpy as np


pwd = op_.dirname(op_.realpath(__file__))

try:
    from skewsim import engine, measure, simUtils, transform
except ImportError:
    os.chdir(op_.join(op_.split(pwd)[0]))
    sys.path.insert(0, os.getcwd())
    sys.modules['skewsim'] = __import__('src')
    from skewsim import engine, measure, simUtils, transform


def unit_sigma (x):
    return 1.0


def wavy_sigma (x):
    return 1.0 + 0.5 * np.sin(x)


class TestGridAndDriver (unittest.TestCase):

    def testTimeGrid (self):
        g = engine.TimeGrid(1.0, 4)
        self.assertEqual(g.dt, 0.25)
        self.assertTrue(np.array_equal(g.times, [0, 0.25, 0.5, 0.75, 1.0]))
        self.assertEqual(g.index(0.5), 2)
        self.assertRaises(simUtils.RangeError, g.index, 0.3)
        self.assertRaises(simUtils.RangeError, g.index, 2.0)
        self.assertEqual(g.coarsened(2), engine.TimeGrid(1.0, 2))
        self.assertRaises(simUtils.InputError, g.coarsened, 3)
        self.assertRaises(simUtils.InputError, engine.TimeGrid, 0, 4)
        self.assertRaises(simUtils.InputError, engine.TimeGrid, 1, 2.5)

    def testDriverDeterminism (self):
        grid = engine.TimeGrid(1.0, 32)
        seed = random.randint(0, 1000)
        a = engine.sample_driver(seed, 10, grid).increments
        b = engine.sample_driver(seed, 20, grid).increments
        self.assertTrue(np.array_equal(a, b[:10]))
        c = engine.sample_driver(seed + 1, 10, grid).increments
        self.assertFalse(np.array_equal(a, c))
        self.assertFalse(a.flags.writeable)
        chunks = list(engine.iter_drivers(seed, 20, grid, 7))
        self.assertEqual([d.paths for d in chunks], [7, 7, 6])
        self.assertTrue(np.array_equal(np.concatenate([d.increments for d in chunks]), b))

    def testDriverBlockAndCoarsen (self):
        grid = engine.TimeGrid(2.0, 64)
        drv = engine.sample_driver(3, 12, grid)
        fine = drv.increments
        self.assertTrue(np.array_equal(drv.block(4, 9).increments, fine[4:9]))
        self.assertRaises(simUtils.InputError, drv.block, 5, 5)
        coarse = drv.coarsen(4)
        self.assertEqual(coarse.grid, engine.TimeGrid(2.0, 16))
        self.assertTrue(np.allclose(coarse.increments,
                                    fine.reshape(12, 16, 4).sum(axis=2), rtol=0, atol=1e-14))
        W = drv.partial_sums(1.5)
        self.assertEqual(W.shape, (12, 65))
        self.assertTrue(np.all(W[:, 0] == 1.5))
        self.assertTrue(np.allclose(W[:, -1], 1.5 + fine.sum(axis=1)))

    def testDriverErrors (self):
        grid = engine.TimeGrid(1.0, 2 ** 10)
        self.assertRaises(simUtils.ResourceError, engine.sample_driver, 0, 2 ** 20, grid)
        self.assertRaises(simUtils.InputError, engine.sample_driver, 0, 0, grid)
        self.assertRaises(simUtils.InputError, engine.BrownianDriver, -1, 4, grid)
        self.assertRaises(simUtils.InputError, engine.BrownianDriver, 1.5, 4, grid)


class TestSchemes (unittest.TestCase):

    def testIdentityIsBrownian (self):
        grid = engine.TimeGrid(1.0, 128)
        drv = engine.sample_driver(11, 50, grid)
        spec = transform.DiffusionSpec(unit_sigma)
        paths = engine.simulate(engine.const.TRANSFORM, spec, measure.SignedMeasure.zero(),
                                0.0, drv, grid)
        self.assertTrue(np.array_equal(paths.values, drv.partial_sums(0.0)))
        self.assertEqual(paths.meta['exits'], 0)
        self.assertEqual(paths.meta['seed'], 11)

    def testMonotoneInStart (self):
        grid = engine.TimeGrid(1.0, 256)
        drv = engine.sample_driver(21, 400, grid)
        spec = transform.DiffusionSpec(unit_sigma)
        zero = measure.SignedMeasure.zero()
        low = engine.simulate_transform_scheme(spec, zero, -0.2, drv, grid).values
        high = engine.simulate_transform_scheme(spec, zero, 0.1, drv, grid).values
        self.assertTrue(np.all(low < high))
        nu = measure.SignedMeasure.dirac(0.0, 0.4)
        t = transform.build_transform(nu, (-10.0, 10.0), 1024, extra_knots=[0.1, 0.3])
        low = engine.simulate_transform_scheme(spec, nu, 0.1, drv, grid, transform=t).values
        high = engine.simulate_transform_scheme(spec, nu, 0.3, drv, grid, transform=t).values
        # steps taken on one side of the atom keep the order
        side_low, side_high = low[:, :-1] < 0, high[:, :-1] < 0
        kept = (side_low == side_high) & (low[:, :-1] <= high[:, :-1])
        self.assertGreater(kept.sum(), 0)
        self.assertTrue(np.all((low[:, 1:] <= high[:, 1:] + 1e-12)[kept]))
        # pairs never split by the atom stay ordered throughout
        split = np.any(side_low != side_high, axis=1)
        self.assertGreater(np.sum(~split), 0)
        self.assertTrue(np.all(low[~split] <= high[~split] + 1e-12))

    def testStartOnZeroOfSigma (self):
        grid = engine.TimeGrid(1.0, 64)
        spec = transform.DiffusionSpec(np.abs, simUtils.ZeroSet([0.0]))
        nu = measure.SignedMeasure.dirac(1.0, 0.3)
        paths = engine.simulate_transform_scheme(spec, nu, 0.0,
                                                 engine.sample_driver(0, 20, grid), grid)
        self.assertTrue(np.all(paths.values == 0.0))

    def testZeroBetaIsEuler (self):
        grid = engine.TimeGrid(1.0, 100)
        drv = engine.sample_driver(5, 30, grid)
        spec = transform.DiffusionSpec(wavy_sigma)
        flow = engine.AtomicFlow([(0.0, lambda t: np.zeros_like(t), 0.0)])
        atom = engine.simulate_atom_scheme(spec, flow, 0.2, drv, grid)
        euler = engine.simulate_classical(spec, 0.2, drv, grid)
        self.assertTrue(np.array_equal(atom.values, euler.values))

    def testSignLaw (self):
        alpha = 0.4
        grid = engine.TimeGrid(1.0, 256)
        spec = transform.DiffusionSpec(unit_sigma)
        nu = measure.SignedMeasure.dirac(0.0, alpha)
        n = 2000
        for scheme in (engine.const.TRANSFORM, engine.const.ATOM):
            paths = engine.simulate(scheme, spec, nu, 0.0, engine.sample_driver(1, n, grid), grid)
            p = engine.skew_sign_probability(alpha)
            se = math.sqrt(p * (1 - p) / n)
            freq = float(np.mean(paths.final > 0))
            self.assertLessEqual(abs(freq - p), 4 * se + math.sqrt(grid.dt), scheme)
        self.assertEqual(engine.skew_sign_probability(-0.5), 0.25)
        self.assertRaises(simUtils.InputError, engine.skew_sign_probability, 1.0)

    def testReflected (self):
        grid = engine.TimeGrid(1.0, 200)
        drv = engine.sample_driver(7, 40, grid)
        paths, K = engine.simulate_reflected(transform.DiffusionSpec(unit_sigma), 0.1, drv, grid)
        self.assertTrue(np.all(paths.values >= 0))
        self.assertTrue(np.all(np.diff(K, axis=1) >= 0))
        self.assertTrue(np.allclose(paths.values, drv.partial_sums(0.1) + K))
        self.assertGreater(paths.meta['reflecting'], 0)
        self.assertRaises(simUtils.InputError, engine.simulate_reflected,
                          transform.DiffusionSpec(unit_sigma), -0.1, drv, grid)

    def testThreadIndependence (self):
        grid = engine.TimeGrid(1.0, 64)
        spec = transform.DiffusionSpec(wavy_sigma)
        nu = measure.SignedMeasure([(0.0, 0.3)], [measure.DensityPiece(-1, 1, 'const', 0.2)])
        drv = engine.sample_driver(9, 40, grid)
        one = engine.simulate_transform_scheme(spec, nu, 0.0, drv, grid, block_paths=8)
        many = engine.simulate_transform_scheme(spec, nu, 0.0, drv, grid, threads=4,
                                                block_paths=8)
        self.assertTrue(np.array_equal(one.values, many.values))
        fewer = engine.simulate_transform_scheme(spec, nu, 0.0,
                                                 engine.sample_driver(9, 16, grid), grid,
                                                 block_paths=8)
        self.assertTrue(np.array_equal(fewer.values, one.values[:16]))

    def testAbsorption (self):
        grid = engine.TimeGrid(4.0, 64)
        spec = transform.DiffusionSpec(unit_sigma)
        paths = engine.simulate_classical(spec, 0.0, engine.sample_driver(2, 200, grid), grid,
                                          domain=(-0.5, 0.5))
        self.assertGreater(paths.meta['exits'], 0)
        self.assertTrue(np.all(np.abs(paths.values) <= 0.5))
        self.assertGreater(paths.exit_fraction, engine.const.MAX_EXIT_FRACTION)

    def testSchemeErrors (self):
        grid = engine.TimeGrid(1.0, 16)
        drv = engine.sample_driver(0, 4, grid)
        zero = measure.SignedMeasure.zero()
        drifted = transform.DiffusionSpec(unit_sigma, drift=lambda x: -x)
        self.assertRaises(simUtils.ConfigurationError, engine.simulate_transform_scheme,
                          drifted, zero, 0.0, drv, grid)
        self.assertRaises(simUtils.ConfigurationError, engine.simulate, engine.const.TRANSFORM,
                          drifted, measure.SignedMeasure.dirac(0, 0.5), 0.0, drv, grid)
        pushed = transform.DiffusionSpec(unit_sigma, drift=lambda x: 0.1)
        self.assertEqual(engine.simulate(engine.const.TRANSFORM, pushed, zero, 0.0,
                                         drv, grid).paths, 4)
        self.assertRaises(simUtils.InputError, engine.simulate, 'spam',
                          transform.DiffusionSpec(unit_sigma), zero, 0.0, drv, grid)
        self.assertRaises(simUtils.ConfigurationError, engine.simulate, engine.const.CLASSICAL,
                          transform.DiffusionSpec(unit_sigma),
                          measure.SignedMeasure.dirac(0, 0.5), 0.0, drv, grid)
        self.assertRaises(simUtils.InputError, engine.simulate_transform_scheme,
                          transform.DiffusionSpec(unit_sigma), zero, 0.0, drv,
                          engine.TimeGrid(1.0, 8))
        step = transform.DiffusionSpec(lambda x: np.where(x > 0, 1.0, 0.0))
        flow = engine.AtomicFlow.from_measure(measure.SignedMeasure.dirac(0.0, 0.5))
        self.assertRaises(simUtils.ConditionError, engine.simulate_atom_scheme,
                          step, flow, 0.0, drv, grid)
        close = engine.AtomicFlow.from_measure(measure.SignedMeasure([(0, 0.5), (0.01, 0.5)]))
        self.assertRaises(simUtils.ConfigurationError, engine.simulate_atom_scheme,
                          transform.DiffusionSpec(unit_sigma), close, 0.0, drv, grid)
        self.assertRaises(simUtils.RangeError, engine.simulate_atom_scheme,
                          transform.DiffusionSpec(unit_sigma), flow, 20.0, drv, grid)


class TestFlowAndPaths (unittest.TestCase):

    def testAtomicFlow (self):
        grid = engine.TimeGrid(1.0, 100)
        flow = engine.AtomicFlow([(1.0, lambda t: 0.2 * t, 0.2), (-1.0, lambda t: -0.5, 0.0)])
        self.assertEqual([a.location for a in flow.atoms], [-1.0, 1.0])
        table = flow.validate(grid)
        self.assertEqual(table.shape, (2, 100))
        self.assertTrue(np.all(table[0] == -0.5))
        high = engine.AtomicFlow([(0.0, lambda t: 0.95 + 0.1 * t, 0.1)])
        with self.assertRaises(simUtils.ConditionError) as ctx:
            high.validate(grid)
        self.assertEqual(ctx.exception.condition, 'A1')
        fast = engine.AtomicFlow([(0.0, lambda t: 0.5 * np.sin(10 * t), 1.0)])
        with self.assertRaises(simUtils.ConditionError) as ctx:
            fast.validate(grid)
        self.assertEqual(ctx.exception.condition, 'beta-lipschitz')
        self.assertRaises(simUtils.InputError, engine.AtomicFlow, [(0.0, 0.5, 0.0)])
        self.assertRaises(simUtils.InputError, engine.AtomicFlow.from_measure,
                          measure.SignedMeasure([], [measure.DensityPiece(0, 1, 'const', 1)]))

    def testPathSet (self):
        grid = engine.TimeGrid(1.0, 4)
        a = engine.PathSet(grid, [[0, 1, 2, 3, 4], [0, -1, -2, -3, -4]],
                           {'scheme': 'x', 'seed': 3})
        b = engine.PathSet(grid, np.zeros((2, 5)), {'scheme': 'y'})
        self.assertTrue(np.array_equal(a.at(0.5), [2, -2]))
        self.assertTrue(np.array_equal(a.combine(b, 'max').final, [4, 0]))
        self.assertTrue(np.array_equal(a.combine(b, 'min').final, [0, -4]))
        self.assertEqual(a.combine(b, 'diff').meta['of'], ['x', 'y'])
        self.assertRaises(simUtils.InputError, a.combine, b, 'spam')
        self.assertRaises(simUtils.InputError, engine.PathSet, grid, np.zeros((2, 4)))
        self.assertRaises(simUtils.InputError, engine.PathSet, grid, [[0, 1, math.inf, 0, 0]])
        tmp = tempfile.mkdtemp()
        try:
            out = op_.join(tmp, 'paths.csv')
            a.dump_csv(out, max_paths=1)
            with open(out) as f:
                lines = f.read().splitlines()
            self.assertEqual(lines[0], '# seed=3')
            self.assertEqual(lines[2], 't,path_0')
            self.assertEqual(len(lines), 3 + 5)
        finally:
            shutil.rmtree(tmp)


def load_tests (args=None, *rest):
    loader = unittest.TestLoader()
    if not args or isinstance(args, unittest.TestLoader):
        test_cases = (TestGridAndDriver, TestSchemes, TestFlowAndPaths)
    else:
        g = globals()
        test_cases = (g[t] for t in args)
    return unittest.TestSuite(loader.loadTestsFromTestCase(t) for t in test_cases)



if __name__ == '__main__':
    os.chdir(pwd)
    unittest.TextTestRunner(verbosity=2).run(
        unittest.TestSuite(load_tests(sys.argv[1:])))
