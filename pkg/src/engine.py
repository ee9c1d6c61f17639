# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.


"""
Path simulation: seeded Brownian drivers and the Euler type schemes
(transformed, atomic time-dependent, reflected, classical).

Every path owns its random stream, paths are simulated in fixed-size
blocks on a thread pool, hence the output depends neither on the
thread count nor on how many paths are requested after it.
"""


# std imports
import collections
import logging
import math
from concurrent.futures import ThreadPoolExecutor
# local imports
from skewsim import const
from skewsim.simUtils import (ConditionError, ConfigurationError, InputError,
                              RangeError, ResourceError, path_blocks, write_csv)
from skewsim.transform import build_sigma_tilde, build_transform, drift_to_measure
# external imports
import numpy as np


log = logging.getLogger(__name__)

FlowAtom = collections.namedtuple('FlowAtom', 'location beta bound')


#############
# FUNCTIONS #
#############

def sample_driver (seed, paths, grid):
    """
    Returns the BrownianDriver of seed with paths paths on grid.
    Raise InputError for non-positive sizes or a negative seed.
    Raise ResourceError if paths * steps exceeds the memory budget.
    """
    if paths < 1 or grid.steps < 1:
        raise InputError("need paths, steps >= 1, got <{}, {}>".format(paths, grid.steps))
    if paths * grid.steps > const.MAX_ELEMENTS:
        raise ResourceError("driver of {}x{} increments exceeds the budget of {}".format(
            paths, grid.steps, const.MAX_ELEMENTS))
    return BrownianDriver(seed, paths, grid)


def iter_drivers (seed, paths, grid, chunk_paths):
    """
    Yields consecutive drivers covering paths 0..paths-1 of seed, at most
    chunk_paths each (path i always gets the same increments).
    """
    for start, stop in path_blocks(paths, chunk_paths):
        yield BrownianDriver(seed, stop - start, grid, first_path=start)


def _run_blocks (driver, step_block, threads, block_paths):
    blocks = path_blocks(driver.paths, block_paths)
    job = lambda bounds: step_block(driver.block(*bounds))
    if threads <= 1 or len(blocks) == 1:
        return [job(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, blocks))


def _check_driver (driver, grid):
    if driver.grid != grid:
        raise InputError("driver grid <{}> differs from <{}>".format(driver.grid, grid))


def _refuse_drift (spec, scheme):
    if spec.drift is not None:
        raise ConfigurationError(
            "the {} scheme takes driftless specs, turn the drift of <{}> into a measure".format(
                scheme, spec.name))


def _absorbing_step (current, proposal, lo, hi, dead):
    """Clip proposal to [lo, hi], freeze already absorbed paths; updates dead."""
    out = (proposal < lo) | (proposal > hi)
    if out.any():
        proposal = np.clip(proposal, lo, hi)
    if dead.any():
        proposal = np.where(dead, current, proposal)
    dead |= out
    return proposal


def _meta (scheme, spec, driver, exits, **extra):
    meta = {'scheme': scheme, 'spec_hash': spec.hash, 'seed': driver.seed,
            'first_path': driver.first_path, 'exits': int(exits),
            'exit_fraction': exits / driver.paths}
    meta.update(extra)
    if meta['exit_fraction'] > const.MAX_EXIT_FRACTION:
        log.warning("%s scheme: %d of %d paths left the domain",
                    scheme, exits, driver.paths)
    return meta


def simulate_transform_scheme (spec, nu, x0, driver, grid,
                               domain=const.DEFAULT_DOMAIN,
                               resolution=const.DEFAULT_RESOLUTION,
                               transform=None, threads=1,
                               block_paths=const.BLOCK_PATHS):
    """
    Euler scheme on Y = F(X): Y_{k+1} = Y_k + sigma~(Y_k) dW_k, X = F^-1(Y).

    transform => a prebuilt ZvonkinTransform (domain, resolution are then
                 ignored); by default x0 is made a knot.
    Paths leaving the image of F are absorbed at its boundary and counted
    in meta['exits'].
    """
    _check_driver(driver, grid)
    _refuse_drift(spec, const.TRANSFORM)
    if transform is None:
        transform = build_transform(nu, domain, resolution,
                                    zero_set=spec.zero_set, extra_knots=[x0])
    sigma_tilde = build_sigma_tilde(transform, spec)
    y0 = transform.F(x0)
    lo, hi = transform.image

    def step_block (drv):
        dW = drv.increments
        m, n = dW.shape
        Y = np.empty((m, n + 1))
        Y[:, 0] = y0
        dead = np.zeros(m, dtype=bool)
        for k in range(n):
            y = Y[:, k]
            Y[:, k + 1] = _absorbing_step(y, y + sigma_tilde(y) * dW[:, k], lo, hi, dead)
        return transform.F_inverse(Y), int(dead.sum())

    results = _run_blocks(driver, step_block, threads, block_paths)
    exits = sum(r[1] for r in results)
    return PathSet(grid, np.concatenate([r[0] for r in results]),
                   _meta(const.TRANSFORM, spec, driver, exits, x0=x0))


def simulate_atom_scheme (spec, flow, x0, driver, grid,
                          domain=const.DEFAULT_DOMAIN, threads=1,
                          block_paths=const.BLOCK_PATHS):
    """
    Scheme for dX = sigma(X) dW + sum_i beta_i(t) dL^{a_i}(X).

    Near an atom (within INFLUENCE_SIGMAS * sigma_max * sqrt(dt)) the step
    is taken through the single-atom transform of beta_i(t_k) * delta_{a_i},
    elsewhere (and wherever beta_i(t_k) = 0) a plain Euler step is used.
    Raise ConditionError if sigma is not bounded away from 0 on domain.
    Raise ConfigurationError if atom influence zones overlap.
    """
    _check_driver(driver, grid)
    _refuse_drift(spec, const.ATOM)
    lo, hi = domain
    if not lo <= x0 <= hi:
        raise RangeError("initial condition <{}> outside <{}>".format(x0, domain))
    s_min, s_max = spec.sigma_min(lo, hi), spec.sigma_max(lo, hi)
    if s_min <= 0:
        raise ConditionError('sigma-bounds', None, s_min,
                             "sigma must be bounded away from 0 on <{}>".format(domain))
    betas = flow.validate(grid)
    radius = const.INFLUENCE_SIGMAS * s_max * math.sqrt(grid.dt)
    locs = [a.location for a in flow.atoms]
    for a1, a2 in zip(locs, locs[1:]):
        if a2 - a1 <= 2 * radius:
            raise ConfigurationError(
                "atoms <{}> and <{}> closer than twice the influence radius <{}>".format(
                    a1, a2, radius))

    def step_block (drv):
        dW = drv.increments
        m, n = dW.shape
        X = np.empty((m, n + 1))
        X[:, 0] = x0
        dead = np.zeros(m, dtype=bool)
        for k in range(n):
            x = X[:, k]
            s = spec.sigma_at(x)
            nxt = x + s * dW[:, k]
            for a, beta in zip(locs, betas[:, k]):
                if beta == 0:
                    continue
                near = np.abs(x - a) <= radius
                if not near.any():
                    continue
                q = (1 - beta) / (1 + beta)
                xn = x[near]
                above = xn >= a
                y = np.where(above, q * (xn - a), xn - a)
                y = y + np.where(above, q, 1.0) * s[near] * dW[near, k]
                nxt[near] = a + np.where(y >= 0, y / q, y)
            X[:, k + 1] = _absorbing_step(x, nxt, lo, hi, dead)
        return X, int(dead.sum())

    results = _run_blocks(driver, step_block, threads, block_paths)
    exits = sum(r[1] for r in results)
    return PathSet(grid, np.concatenate([r[0] for r in results]),
                   _meta(const.ATOM, spec, driver, exits, x0=x0, radius=radius))


def simulate_reflected (spec, x0, driver, grid, threads=1,
                        block_paths=const.BLOCK_PATHS):
    """
    Reflected Euler scheme for X = x0 + int sigma(X) dW + K, X >= 0.

    Returns (PathSet, K) where K (paths x (steps + 1)) accumulates the
    projections X_{k+1} - X~_{k+1}, the discrete half local time at 0.
    Raise InputError if x0 < 0.
    """
    _check_driver(driver, grid)
    _refuse_drift(spec, const.REFLECTED)
    if not x0 >= 0:
        raise InputError("reflected scheme needs x0 >= 0, got <{}>".format(x0))

    def step_block (drv):
        dW = drv.increments
        m, n = dW.shape
        X = np.empty((m, n + 1))
        K = np.empty((m, n + 1))
        X[:, 0] = x0
        K[:, 0] = 0.0
        for k in range(n):
            x = X[:, k]
            free = x + spec.sigma_at(x) * dW[:, k]
            X[:, k + 1] = np.maximum(free, 0.0)
            K[:, k + 1] = K[:, k] + (X[:, k + 1] - free)
        return X, K

    results = _run_blocks(driver, step_block, threads, block_paths)
    K = np.concatenate([r[1] for r in results])
    reflecting = int(np.count_nonzero(K[:, -1] > 0))
    paths = PathSet(grid, np.concatenate([r[0] for r in results]),
                    _meta(const.REFLECTED, spec, driver, 0, x0=x0, reflecting=reflecting))
    return paths, K


def simulate_classical (spec, x0, driver, grid, domain=const.DEFAULT_DOMAIN,
                        threads=1, block_paths=const.BLOCK_PATHS):
    """Euler scheme X_{k+1} = X_k + b(X_k) dt + sigma(X_k) dW_k (b = 0 if absent)."""
    _check_driver(driver, grid)
    lo, hi = domain
    if not lo <= x0 <= hi:
        raise RangeError("initial condition <{}> outside <{}>".format(x0, domain))
    dt = grid.dt

    def step_block (drv):
        dW = drv.increments
        m, n = dW.shape
        X = np.empty((m, n + 1))
        X[:, 0] = x0
        dead = np.zeros(m, dtype=bool)
        for k in range(n):
            x = X[:, k]
            nxt = x + spec.drift_at(x) * dt + spec.sigma_at(x) * dW[:, k]
            X[:, k + 1] = _absorbing_step(x, nxt, lo, hi, dead)
        return X, int(dead.sum())

    results = _run_blocks(driver, step_block, threads, block_paths)
    exits = sum(r[1] for r in results)
    return PathSet(grid, np.concatenate([r[0] for r in results]),
                   _meta(const.CLASSICAL, spec, driver, exits, x0=x0))


def simulate (scheme, spec, nu, x0, driver, grid, domain=const.DEFAULT_DOMAIN,
              resolution=const.DEFAULT_RESOLUTION, transform=None, threads=1):
    """
    Runs the named scheme and returns its PathSet.

    A spec with a drift is simulated by the transform scheme through the
    measure b/sigma^2 of its drift (nu must then be zero).
    Raise InputError for unknown schemes.
    """
    if scheme == const.TRANSFORM:
        if spec.drift is not None:
            if not nu.is_zero:
                raise ConfigurationError("spec <{}> has both a drift and a measure".format(
                    spec.name))
            if transform is None:
                nu = drift_to_measure(spec, domain, resolution)
            spec = spec.without_drift()
        return simulate_transform_scheme(spec, nu, x0, driver, grid, domain, resolution,
                                         transform=transform, threads=threads)
    if scheme == const.ATOM:
        return simulate_atom_scheme(spec, AtomicFlow.from_measure(nu), x0, driver, grid,
                                    domain, threads=threads)
    if scheme == const.REFLECTED:
        return simulate_reflected(spec, x0, driver, grid, threads=threads)[0]
    if scheme == const.CLASSICAL:
        if not nu.is_zero:
            raise ConfigurationError("the classical scheme takes no local time measure")
        return simulate_classical(spec, x0, driver, grid, domain, threads=threads)
    raise InputError("unknown scheme <{}>".format(scheme))


def skew_sign_probability (alpha):
    """
    Returns P(X_T > 0) = (1 + alpha)/2 for sigma = 1, nu = alpha * delta_0
    and x0 = 0, any T > 0.
    Raise InputError if |alpha| >= 1.
    """
    if not abs(alpha) < 1:
        raise InputError("atom weight must satisfy |alpha| < 1, got <{}>".format(alpha))
    return (1 + alpha) / 2


###########
# CLASSES #
###########

class TimeGrid:
    """Uniform grid t_k = k * dt of [0, horizon] with steps cells."""
    def __init__ (self, horizon, steps):
        if not (horizon > 0 and math.isfinite(horizon)):
            raise InputError("horizon must be positive, got <{}>".format(horizon))
        if int(steps) != steps or steps < 1:
            raise InputError("steps must be a positive integer, got <{}>".format(steps))
        self._horizon = float(horizon)
        self._steps = int(steps)

    @property
    def horizon (self):
        return self._horizon

    @property
    def steps (self):
        return self._steps

    @property
    def dt (self):
        return self._horizon / self._steps

    @property
    def times (self):
        return np.arange(self._steps + 1) * self.dt

    def index (self, t):
        """Index of the knot t. Raise RangeError if t is not a knot."""
        k = int(round(t / self.dt))
        if not 0 <= k <= self._steps or not math.isclose(k * self.dt, t, abs_tol=1e-12):
            raise RangeError("<{}> is not a knot of {}".format(t, self))
        return k

    def coarsened (self, factor):
        if self._steps % factor:
            raise InputError("cannot coarsen {} steps by <{}>".format(self._steps, factor))
        return TimeGrid(self._horizon, self._steps // factor)

    def __eq__ (self, other):
        return (isinstance(other, TimeGrid)
                and (self._horizon, self._steps) == (other._horizon, other._steps))

    def __repr__ (self):
        return "TimeGrid({}, {})".format(self._horizon, self._steps)


class BrownianDriver:
    """
    Brownian increments of paths first_path .. first_path + paths - 1.

    Path i draws from Generator(Philox(SeedSequence(seed, spawn_key=(i,))))
    on the fine grid (grid.steps * factor cells); coarsened drivers sum
    groups of factor fine increments, so they carry the same Brownian path.
    Increments are generated on first access.
    """
    def __init__ (self, seed, paths, grid, first_path=0, factor=1):
        if int(seed) != seed or seed < 0:
            raise InputError("seed must be a non-negative integer, got <{}>".format(seed))
        if paths < 1:
            raise InputError("paths must be >= 1, got <{}>".format(paths))
        self._seed = int(seed)
        self._paths = int(paths)
        self._grid = grid
        self._first = int(first_path)
        self._factor = int(factor)
        self._increments = None

    @property
    def seed (self):
        return self._seed

    @property
    def paths (self):
        return self._paths

    @property
    def grid (self):
        return self._grid

    @property
    def first_path (self):
        return self._first

    @property
    def increments (self):
        """paths x steps array of Normal(0, dt) increments."""
        if self._increments is None:
            n, c = self._grid.steps, self._factor
            scale = math.sqrt(self._grid.dt / c)
            out = np.empty((self._paths, n))
            for row in range(self._paths):
                seq = np.random.SeedSequence(self._seed, spawn_key=(self._first + row,))
                rng = np.random.Generator(np.random.Philox(seq))
                fine = rng.standard_normal(n * c) * scale
                out[row] = fine if c == 1 else fine.reshape(n, c).sum(axis=1)
            out.setflags(write=False)
            self._increments = out
        return self._increments

    def block (self, start, stop):
        """Returns the driver of the paths start..stop-1 of this one."""
        if not 0 <= start < stop <= self._paths:
            raise InputError("bad block <{}, {}> of {} paths".format(start, stop, self._paths))
        drv = BrownianDriver(self._seed, stop - start, self._grid,
                             self._first + start, self._factor)
        if self._increments is not None:
            drv._increments = self._increments[start:stop]
        return drv

    def coarsen (self, factor):
        """Returns the same Brownian paths on the grid coarsened by factor."""
        return BrownianDriver(self._seed, self._paths, self._grid.coarsened(factor),
                              self._first, self._factor * factor)

    def partial_sums (self, x0=0.0):
        """x0 + cumulative sums of the increments, paths x (steps + 1)."""
        start = np.full((self._paths, 1), float(x0))
        return np.cumsum(np.concatenate((start, self.increments), axis=1), axis=1)


class PathSet:
    """Simulated values (paths x (steps + 1)) on grid, with provenance in meta."""
    def __init__ (self, grid, values, meta=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != grid.steps + 1:
            raise InputError("values of shape <{}> do not fit {}".format(values.shape, grid))
        if not np.all(np.isfinite(values)):
            raise InputError("non-finite path values")
        self.grid = grid
        self.values = values
        self.meta = dict(meta or {})

    @property
    def paths (self):
        return self.values.shape[0]

    @property
    def initial (self):
        return self.values[:, 0]

    @property
    def final (self):
        return self.values[:, -1]

    @property
    def exit_fraction (self):
        return self.meta.get('exit_fraction', 0.0)

    def at (self, t):
        """Values at the knot t."""
        return self.values[:, self.grid.index(t)]

    def combine (self, other, op):
        """Returns the pointwise 'max', 'min' or 'diff' (self - other) PathSet."""
        if self.grid != other.grid or self.values.shape != other.values.shape:
            raise InputError("cannot combine paths on different grids")
        funcs = {'max': np.maximum, 'min': np.minimum, 'diff': np.subtract}
        if op not in funcs:
            raise InputError("unknown combination <{}>".format(op))
        return PathSet(self.grid, funcs[op](self.values, other.values),
                       {'scheme': op, 'of': [self.meta.get('scheme'), other.meta.get('scheme')]})

    def dump_csv (self, path, max_paths=None):
        """Writes the time-major table t, path_0, ... to path."""
        vals = self.values if max_paths is None else self.values[:max_paths]
        header = ['t'] + ['path_{}'.format(i) for i in range(vals.shape[0])]
        comments = ['{}={}'.format(k, self.meta[k]) for k in ('seed', 'scheme', 'spec_hash')
                    if k in self.meta]
        rows = (np.concatenate(([t], col)) for t, col in zip(self.grid.times, vals.T))
        write_csv(path, header, rows, comments)

    def __repr__ (self):
        return "PathSet({} paths, {}, {})".format(self.paths, self.grid, self.meta.get('scheme'))


class AtomicFlow:
    """
    Time-dependent atomic weights: atoms (location, beta(t), bound) with
    beta valued in (-1, 1) and |beta'| <= bound.
    """
    def __init__ (self, atoms):
        atoms = [a if isinstance(a, FlowAtom) else FlowAtom(*a) for a in atoms]
        atoms.sort(key=lambda a: a.location)
        for atom in atoms:
            if not callable(atom.beta):
                raise InputError("beta of atom <{}> is not callable".format(atom.location))
        for a1, a2 in zip(atoms, atoms[1:]):
            if a1.location == a2.location:
                raise InputError("duplicate atom location <{}>".format(a1.location))
        self.atoms = tuple(atoms)

    @classmethod
    def from_measure (cls, nu):
        """Constant flow beta_i = alpha_i of a purely atomic measure."""
        if not nu.is_atomic:
            raise InputError("measure <{}> has a density part".format(nu))
        def constant (w):
            beta = lambda t: np.full(np.shape(t), w)
            beta.description = {'kind': 'const', 'value': w}
            return beta
        return cls([FlowAtom(a.location, constant(a.weight), 0.0) for a in nu.atoms])

    def validate (self, grid):
        """
        Returns the atoms x steps array of beta_i(t_k).
        Raise ConditionError if some |beta| >= 1 or the derivative bound fails.
        """
        times = grid.times[:-1]
        table = np.empty((len(self.atoms), times.size))
        for i, atom in enumerate(self.atoms):
            vals = np.broadcast_to(np.asarray(atom.beta(times), dtype=float), times.shape)
            if np.any(np.abs(vals) >= 1):
                j = int(np.argmax(np.abs(vals) >= 1))
                raise ConditionError('A1', atom.location, float(vals[j]),
                                     "beta of atom <{}> is <{}> at t=<{}>".format(
                                         atom.location, vals[j], times[j]))
            if vals.size > 1:
                slope = float(np.max(np.abs(np.diff(vals)))) / grid.dt
                if slope > atom.bound * (1 + 1e-9) + 1e-12:
                    raise ConditionError('beta-lipschitz', atom.location, slope)
            table[i] = vals
        return table
