# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.


"""
Feynman-Kac cross validation: the Monte Carlo value

  v(s, x) = E[f(X_T) + int_s^T g(u, X_u) du]

of the skew diffusion against u(s, F(x)), u solving (backward explicit
monotone scheme) the transformed equation

  du/dt + 1/2 sigma~^2 d2u/dy2 + g(t, F^-1(y)) = 0,  u(T, y) = f(F^-1(y)).
"""


# std imports
import collections
import logging
import math
# local imports
from skewsim import const
from skewsim import engine
from skewsim.simUtils import (ConfigurationError, InputError, NumericalError,
                              describe_function, write_csv)
from skewsim.transform import build_sigma_tilde, build_transform
from skewsim.verify import ExperimentReport
# external imports
import numpy as np


log = logging.getLogger(__name__)

MCValue = collections.namedtuple('MCValue', 'estimate stderr')


#############
# FUNCTIONS #
#############

def mc_value (spec, nu, payoff, s, x, paths, steps, seed=0,
              domain=const.DEFAULT_DOMAIN, resolution=const.DEFAULT_RESOLUTION,
              transform=None, threads=1):
    """
    Returns MCValue(estimate, stderr) of f(X_T) + sum_k g(t_k, X_k) dt,
    X simulated from x at time s by the transform scheme (steps steps
    over [s, T]).
    """
    if not 0 <= s < payoff.horizon:
        raise InputError("start time <{}> outside [0, {})".format(s, payoff.horizon))
    grid = engine.TimeGrid(payoff.horizon - s, steps)
    driver = engine.sample_driver(seed, paths, grid)
    X = engine.simulate_transform_scheme(spec, nu, x, driver, grid, domain, resolution,
                                         transform=transform, threads=threads).values
    values = payoff.terminal(X[:, -1])
    if payoff.g is not None:
        times = s + grid.times[:-1]
        values = values + np.sum(payoff.running(times, X[:, :-1]), axis=1) * grid.dt
    stderr = float(np.std(values, ddof=1) / math.sqrt(paths)) if paths > 1 else math.inf
    return MCValue(float(np.mean(values)), stderr)


def pde_solve (sigma_tilde, terminal, grid, source=None):
    """
    Returns the PdeSolution of the backward explicit scheme
    u_k = u_{k+1} + dtau (1/2 sigma~^2 D2 u_{k+1} + source(t_k, y)),
    boundary nodes taking the diffusion-free update.

    sigma_tilde => callable y -> sigma~(y) (extend keyword accepted).
    terminal    => callable y -> u(T, y).
    source      => optional callable (t, y) -> g(t, F^-1(y)).
    Raise ConfigurationError if the CFL condition fails.
    Raise NumericalError if the discrete maximum principle is violated.
    """
    ys = grid.nodes
    try:
        s2 = np.asarray(sigma_tilde(ys, extend=True), dtype=float) ** 2
    except TypeError:
        s2 = np.asarray(sigma_tilde(ys), dtype=float) ** 2
    s2 = np.broadcast_to(s2, ys.shape)
    grid.check_cfl(float(np.max(s2)))
    u = np.empty((grid.K + 1, grid.J + 1))
    u[-1] = np.broadcast_to(np.asarray(terminal(ys), dtype=float), ys.shape)
    coef = 0.5 * s2[1:-1] * grid.dtau / grid.dy ** 2
    g_max = 0.0
    for k in range(grid.K - 1, -1, -1):
        nxt = u[k + 1]
        cur = nxt.copy()
        cur[1:-1] += coef * (nxt[2:] - 2 * nxt[1:-1] + nxt[:-2])
        if source is not None:
            g = np.broadcast_to(np.asarray(source(grid.times[k], ys), dtype=float), ys.shape)
            g_max = max(g_max, float(np.max(np.abs(g))))
            cur += grid.dtau * g
        u[k] = cur
    span = grid.horizon - grid.start
    lo = float(np.min(u[-1])) - span * g_max
    hi = float(np.max(u[-1])) + span * g_max
    slack = 1e-12 * (1 + abs(lo) + abs(hi))
    if np.min(u) < lo - slack or np.max(u) > hi + slack:
        raise NumericalError("maximum principle violated: u in [{}, {}], bounds [{}, {}]".format(
            np.min(u), np.max(u), lo, hi))
    return PdeSolution(grid, u)


def fk_compare (spec, nu, payoff, probes, paths, steps, cells=(100, 200), seed=0,
                domain=const.DEFAULT_DOMAIN, resolution=const.DEFAULT_RESOLUTION,
                threads=1, inputs=None):
    """
    Compares mc_value(s, x) with u(s, F(x)) for each probe (s, x).

    cells => (coarse J, fine J); the PDE error of the fine grid is
             C (dy^2 + dtau) with C from the two-grid difference.
    A probe passes if |mc - u| <= FK_SE_FACTOR se + pde error + FK_ABS_FLOOR;
    probes within FK_INTERIOR_CELLS coarse cells of the boundary are skipped.
    """
    report = ExperimentReport('fk', inputs or {
        'spec': spec.describe(), 'measure': nu.describe(), 'payoff': payoff.describe(),
        'probes': [list(p) for p in probes], 'paths': paths, 'steps': steps,
        'cells': list(cells), 'seed': seed})
    transform = build_transform(nu, domain, resolution, zero_set=spec.zero_set,
                                extra_knots=[x for _, x in probes])
    sigma_tilde = build_sigma_tilde(transform, spec)
    ys = [transform.F(x) for _, x in probes]
    img_lo, img_hi = transform.image
    margin = const.PDE_MARGIN_SIGMAS * sigma_tilde.sup(img_lo, img_hi) \
        * math.sqrt(payoff.horizon)
    y_lo, y_hi = min(ys) - margin, max(ys) + margin
    terminal = lambda y: payoff.terminal(transform.F_inverse(y, extend=True))
    source = None
    if payoff.g is not None:
        source = lambda t, y: payoff.running(t, transform.F_inverse(y, extend=True))
    solutions = {}
    for (s, x), y in zip(probes, ys):
        if s not in solutions:
            solutions[s] = [pde_solve(sigma_tilde, terminal,
                                      PdeGrid.for_sigma(sigma_tilde, y_lo, y_hi, J, s,
                                                        payoff.horizon), source)
                            for J in cells]
        coarse, fine = solutions[s]
        if min(y - y_lo, y_hi - y) < const.FK_INTERIOR_CELLS * coarse.grid.dy:
            report.note("probe <{}> skipped, too close to the boundary".format((s, x)))
            continue
        uc, uf = coarse.value(s, y), fine.value(s, y)
        hc = coarse.grid.dy ** 2 + coarse.grid.dtau
        hf = fine.grid.dy ** 2 + fine.grid.dtau
        c_pde = abs(uf - uc) / (hc - hf) if hc > hf else 0.0
        pde_err = c_pde * hf
        mc = mc_value(spec, nu, payoff, s, x, paths, steps, seed, domain, resolution,
                      transform=transform, threads=threads)
        budget = const.FK_SE_FACTOR * mc.stderr + pde_err + const.FK_ABS_FLOOR
        gap = abs(mc.estimate - uf)
        report.add_row(s=s, x=x, y=y, mc=mc.estimate, stderr=mc.stderr, pde=uf,
                       pde_coarse=uc, pde_error=pde_err, discrepancy=gap, budget=budget)
        report.add_metric('probe ({!r}, {!r})'.format(s, x), gap, budget)
    for s, (_, fine) in solutions.items():
        report.artifacts['u_field_s{!r}'.format(s)] = fine
    return report


###########
# CLASSES #
###########

class TerminalPayoff:
    """
    Terminal f(x) and running g(t, x) data on [0, horizon].
    Declared bounds |f| <= f_max, |g| <= g_max are checked on a sampled
    grid of check_domain x [0, horizon].
    """
    def __init__ (self, f, g=None, horizon=1.0, f_max=None, g_max=None,
                  check_domain=const.SPEC_CHECK_DOMAIN):
        if not callable(f) or (g is not None and not callable(g)):
            raise InputError("payoff functions must be callable")
        if not horizon > 0:
            raise InputError("horizon must be positive, got <{}>".format(horizon))
        self.f, self.g, self.horizon = f, g, float(horizon)
        xs = np.linspace(*check_domain, const.SPEC_CHECK_SAMPLES)
        f_seen = float(np.max(np.abs(self.terminal(xs))))
        if f_max is not None and f_seen > f_max:
            raise InputError("|f| reaches <{}> above the declared bound <{}>".format(
                f_seen, f_max))
        self.f_max = f_seen if f_max is None else float(f_max)
        g_seen = 0.0
        if g is not None:
            ts = np.linspace(0, self.horizon, 17)[:, None]
            g_seen = float(np.max(np.abs(self.running(ts, xs[None, :]))))
            if g_max is not None and g_seen > g_max:
                raise InputError("|g| reaches <{}> above the declared bound <{}>".format(
                    g_seen, g_max))
        self.g_max = g_seen if g_max is None else float(g_max)

    def terminal (self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.f(x), dtype=float), x.shape)

    def running (self, t, x):
        x = np.asarray(x, dtype=float)
        shape = np.broadcast(np.asarray(t), x).shape
        if self.g is None:
            return np.zeros(shape)
        return np.broadcast_to(np.asarray(self.g(t, x), dtype=float), shape)

    def describe (self):
        return {'f': describe_function(self.f),
                'g': None if self.g is None else describe_function(self.g),
                'horizon': self.horizon, 'f_max': self.f_max, 'g_max': self.g_max}


class PdeGrid:
    """J space cells on [y_lo, y_hi] and K time steps on [start, horizon]."""
    def __init__ (self, y_lo, y_hi, J, K, start=0.0, horizon=1.0):
        if not y_lo < y_hi:
            raise InputError("need y_lo < y_hi, got <{}, {}>".format(y_lo, y_hi))
        if J < 2 or K < 1:
            raise InputError("need J >= 2 and K >= 1, got <{}, {}>".format(J, K))
        if not start < horizon:
            raise InputError("need start < horizon, got <{}, {}>".format(start, horizon))
        self.y_lo, self.y_hi = float(y_lo), float(y_hi)
        self.J, self.K = int(J), int(K)
        self.start, self.horizon = float(start), float(horizon)

    @classmethod
    def for_sigma (cls, sigma_tilde, y_lo, y_hi, J, start=0.0, horizon=1.0,
                   safety=const.CFL_SAFETY):
        """Grid with the fewest time steps satisfying CFL with the given safety."""
        ys = np.linspace(y_lo, y_hi, J + 1)
        try:
            s2 = float(np.max(np.asarray(sigma_tilde(ys, extend=True)) ** 2))
        except TypeError:
            s2 = float(np.max(np.asarray(sigma_tilde(ys)) ** 2))
        dy = (y_hi - y_lo) / J
        K = max(1, int(math.ceil((horizon - start) * s2 / (safety * dy ** 2))))
        return cls(y_lo, y_hi, J, K, start, horizon)

    @property
    def dy (self):
        return (self.y_hi - self.y_lo) / self.J

    @property
    def dtau (self):
        return (self.horizon - self.start) / self.K

    @property
    def nodes (self):
        return np.linspace(self.y_lo, self.y_hi, self.J + 1)

    @property
    def times (self):
        return self.start + np.arange(self.K + 1) * self.dtau

    def check_cfl (self, sigma2_max):
        """Raise ConfigurationError unless dtau <= dy^2 / max sigma~^2."""
        if sigma2_max > 0 and self.dtau > self.dy ** 2 / sigma2_max:
            raise ConfigurationError("CFL violated: dtau={} > dy^2/max sigma~^2={}".format(
                self.dtau, self.dy ** 2 / sigma2_max))

    def __repr__ (self):
        return "PdeGrid([{}, {}], J={}, K={}, [{}, {}])".format(
            self.y_lo, self.y_hi, self.J, self.K, self.start, self.horizon)


class PdeSolution:
    """u on the (K + 1) x (J + 1) nodes of grid."""
    def __init__ (self, grid, u):
        self.grid = grid
        self.u = u

    def value (self, s, y):
        """u(s, y), s the nearest time level, linear interpolation in y."""
        k = int(round((s - self.grid.start) / self.grid.dtau))
        if not 0 <= k <= self.grid.K:
            raise InputError("time <{}> outside the solved range".format(s))
        return float(np.interp(y, self.grid.nodes, self.u[k]))

    def dump_csv (self, path, levels=33):
        """Writes (s, y, u) rows at about levels time levels."""
        count = min(levels, self.grid.K + 1)
        ks = np.unique(np.linspace(0, self.grid.K, count).round().astype(int))
        times, ys = self.grid.times, self.grid.nodes
        rows = ((times[k], y, self.u[k, j]) for k in ks for j, y in enumerate(ys))
        write_csv(path, ('s', 'y', 'u'), rows)
