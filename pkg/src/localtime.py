# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.


"""
Local time estimators for discrete paths and numerical checks of the
local time identities (occupation formula, local time of the maximum,
odd powers, support of dL^0(X1 - X2)).

Estimators work on a PathSet and return one value per path.
The occupation estimator targets L^a (occupation density normalization);
the Tanaka residual of (x - a)^+ targets L^a / 2 and is rescaled by the
convention factor (2 for 'right', 1 for the |x - a| 'symmetric' residual).
"""


# std imports
import logging
import math
# local imports
from skewsim import const
from skewsim.engine import PathSet
from skewsim.simUtils import InputError, evaluate, write_csv
# external imports
import numpy as np
from scipy import integrate
from scipy.stats import norm


log = logging.getLogger(__name__)


#############
# FUNCTIONS #
#############

def default_bandwidth (grid):
    """Returns dt ** BANDWIDTH_EXPONENT."""
    return grid.dt ** const.BANDWIDTH_EXPONENT


def _weights (paths, spec):
    """Quadratic variation increments: sigma^2(X_k) dt, or the realized ones."""
    X = paths.values
    if spec is None:
        return np.diff(X, axis=1) ** 2
    return evaluate(spec.sigma, X[:, :-1]) ** 2 * paths.grid.dt


def _check_bandwidth (eps):
    if not eps > 0:
        raise InputError("bandwidth must be positive, got <{}>".format(eps))


def occupation_increments (paths, spec, a, eps):
    """paths x steps increments 1{|X_k - a| < eps} w_k / (2 eps)."""
    _check_bandwidth(eps)
    near = np.abs(paths.values[:, :-1] - a) < eps
    return np.where(near, _weights(paths, spec), 0.0) / (2 * eps)


def tanaka_increments (paths, a, convention=const.RIGHT, factor=None):
    """
    paths x steps increments of the discrete Tanaka residual, each one
    phi(X_{k+1}) - phi(X_k) - phi'(X_k)(X_{k+1} - X_k) >= 0 with
    phi = (x - a)^+ ('right') or |x - a| ('symmetric', sign(0) = 0),
    times the convention factor.
    """
    if convention not in const.CONVENTIONS:
        raise InputError("unknown local time convention <{}>".format(convention))
    if factor is None:
        factor = const.TANAKA_FACTORS[convention]
    Z = paths.values - a
    dZ = np.diff(Z, axis=1)
    if convention == const.RIGHT:
        phi = np.maximum(Z, 0.0)
        slope = (Z[:, :-1] > 0).astype(float)
    else:
        phi = np.abs(Z)
        slope = np.sign(Z[:, :-1])
    return factor * (np.diff(phi, axis=1) - slope * dZ)


def local_time_increments (paths, spec, a, eps=None, estimator=const.TANAKA,
                           convention=const.RIGHT, factor=None):
    """Increments of the chosen estimator (eps defaults to the grid bandwidth)."""
    if estimator == const.OCCUPATION:
        eps = default_bandwidth(paths.grid) if eps is None else eps
        return occupation_increments(paths, spec, a, eps)
    if estimator == const.TANAKA:
        return tanaka_increments(paths, a, convention, factor)
    raise InputError("unknown estimator <{}>".format(estimator))


def _upto (paths, t):
    return paths.grid.steps if t is None else paths.grid.index(t)


def estimate_occupation (paths, spec, a, eps, t=None):
    """
    Returns per path (1/2eps) sum_{t_k < t} 1{|X_k - a| < eps} sigma^2(X_k) dt.

    spec => DiffusionSpec, or None to use the realized quadratic
            variation (X_{k+1} - X_k)^2 (for derived paths).
    t    => a grid knot, the horizon by default.
    Raise InputError if eps <= 0.
    """
    return occupation_increments(paths, spec, a, eps)[:, :_upto(paths, t)].sum(axis=1)


def estimate_tanaka (paths, a, t=None, convention=const.RIGHT, factor=None):
    """Returns per path the scaled Tanaka residual at level a up to t."""
    return tanaka_increments(paths, a, convention, factor)[:, :_upto(paths, t)].sum(axis=1)


def running_occupation (paths, spec, a, eps):
    """paths x (steps + 1) running occupation estimates (0 at t = 0)."""
    inc = occupation_increments(paths, spec, a, eps)
    return np.concatenate((np.zeros((paths.paths, 1)), np.cumsum(inc, axis=1)), axis=1)


def running_tanaka (paths, a, convention=const.RIGHT, factor=None):
    """paths x (steps + 1) running Tanaka estimates (0 at t = 0)."""
    inc = tanaka_increments(paths, a, convention, factor)
    return np.concatenate((np.zeros((paths.paths, 1)), np.cumsum(inc, axis=1)), axis=1)


def level_grid (paths, eps):
    """
    Levels for field estimation: path value quantiles plus a uniform
    grid of spacing LEVEL_SPACING * eps covering the path range.
    """
    X = paths.values
    lo, hi = float(X.min()) - eps, float(X.max()) + eps
    quant = np.quantile(X, np.linspace(0, 1, const.LEVEL_QUANTILES))
    step = const.LEVEL_SPACING * eps
    uniform = np.linspace(lo, hi, int(np.ceil((hi - lo) / step)) + 1)
    return np.unique(np.concatenate((quant, uniform)))


def occupation_profile (paths, spec, levels, eps, upto=None):
    """
    paths x levels occupation estimates at the knot index upto (the
    horizon by default), one sort per path.
    """
    _check_bandwidth(eps)
    upto = paths.grid.steps if upto is None else upto
    levels = np.asarray(levels, dtype=float)
    X = paths.values[:, :upto]
    W = _weights(paths, spec)[:, :upto]
    out = np.empty((X.shape[0], levels.size))
    for row, (x, w) in enumerate(zip(X, W)):
        order = np.argsort(x, kind='stable')
        xs = x[order]
        cw = np.concatenate(([0.0], np.cumsum(w[order])))
        hi = np.searchsorted(xs, levels + eps, side='left')
        lo = np.searchsorted(xs, levels - eps, side='right')
        out[row] = (cw[hi] - cw[lo]) / (2 * eps)
    return out


def occupation_residual (paths, spec, g, eps=None, levels=None):
    """
    Returns per path |int g(a) L^a_T da - sum_k g(X_k) sigma^2(X_k) dt|,
    the level integral by trapezoid on levels (level_grid by default).
    """
    eps = default_bandwidth(paths.grid) if eps is None else eps
    levels = level_grid(paths, eps) if levels is None else np.asarray(levels, dtype=float)
    prof = occupation_profile(paths, spec, levels, eps)
    lhs = integrate.trapezoid(prof * evaluate(g, levels), levels, axis=1)
    rhs = np.sum(evaluate(g, paths.values[:, :-1]) * _weights(paths, spec), axis=1)
    return np.abs(lhs - rhs)


def _check_pair (X1, X2):
    if X1.grid != X2.grid or X1.values.shape != X2.values.shape:
        raise InputError("paths on different grids: <{}> and <{}>".format(X1, X2))


def lattice_identity_check (X1, X2, spec, a, eps=None, estimator=const.TANAKA,
                            convention=const.RIGHT, factor=None):
    """
    Returns per path |L^a_T(X1 v X2) - sum_k (1{X1_k > X2_k} dL^a_k(X1)
    + 1{X1_k <= X2_k} dL^a_k(X2))|.
    Raise InputError if the paths do not share the grid.
    """
    _check_pair(X1, X2)
    opts = dict(eps=eps, estimator=estimator, convention=convention, factor=factor)
    top = X1.combine(X2, 'max')
    lhs = local_time_increments(top, spec, a, **opts).sum(axis=1)
    inc1 = local_time_increments(X1, spec, a, **opts)
    inc2 = local_time_increments(X2, spec, a, **opts)
    above = X1.values[:, :-1] > X2.values[:, :-1]
    rhs = np.where(above, inc1, inc2).sum(axis=1)
    return np.abs(lhs - rhs)


def minmax_additivity_check (X1, X2, spec, a, eps=None, estimator=const.TANAKA,
                             convention=const.RIGHT, factor=None):
    """Returns per path |L(X1 ^ X2) + L(X1 v X2) - L(X1) - L(X2)| at level a."""
    _check_pair(X1, X2)
    opts = dict(eps=eps, estimator=estimator, convention=convention, factor=factor)
    total = lambda p: local_time_increments(p, spec, a, **opts).sum(axis=1)
    return np.abs(total(X1.combine(X2, 'min')) + total(X1.combine(X2, 'max'))
                  - total(X1) - total(X2))


def odd_power_identity_check (X, Y, n, eps=None, estimator=const.OCCUPATION,
                              convention=const.RIGHT, factor=None):
    """
    Checks L^0(X^{2n+1} - Y^{2n+1}) = (2n+1) int (X^{2n} + Y^{2n}) dL^0(X - Y).
    Returns per path arrays (lhs, rhs, residual); estimates use the
    realized quadratic variation.
    Raise InputError if n < 1 or the powers overflow.
    """
    _check_pair(X, Y)
    if int(n) != n or n < 1:
        raise InputError("n must be a positive integer, got <{}>".format(n))
    p = 2 * n + 1
    top = max(np.max(np.abs(X.values)), np.max(np.abs(Y.values)))
    if top > 0 and p * np.log10(top) > 150:
        raise InputError("paths too large for power <{}>, rescale them".format(p))
    odd = PathSet(X.grid, X.values ** p - Y.values ** p, {'scheme': 'odd-power'})
    diff = X.combine(Y, 'diff')
    opts = dict(eps=eps, estimator=estimator, convention=convention, factor=factor)
    lhs = local_time_increments(odd, None, 0.0, **opts).sum(axis=1)
    weight = X.values[:, :-1] ** (2 * n) + Y.values[:, :-1] ** (2 * n)
    rhs = p * np.sum(weight * local_time_increments(diff, None, 0.0, **opts), axis=1)
    return lhs, rhs, np.abs(lhs - rhs)


def support_check (X1, X2, delta, eps=None, estimator=const.TANAKA,
                   convention=const.RIGHT, factor=None):
    """
    Returns (fraction, zero_mass): the share of the estimated dL^0(X1 - X2)
    mass (all paths together) at steps where max(|X1_k|, |X2_k|) > delta,
    and whether that mass is zero (fraction is then 0).
    """
    _check_pair(X1, X2)
    if not delta > 0:
        raise InputError("delta must be positive, got <{}>".format(delta))
    diff = X1.combine(X2, 'diff')
    inc = local_time_increments(diff, None, 0.0, eps=eps, estimator=estimator,
                                convention=convention, factor=factor)
    total = float(inc.sum())
    if total <= 0:
        return 0.0, True
    far = np.maximum(np.abs(X1.values[:, :-1]), np.abs(X2.values[:, :-1])) > delta
    return float(inc[far].sum()) / total, False


def estimate_field (paths, spec, levels=None, times=None, eps=None,
                    estimator=const.OCCUPATION, convention=const.RIGHT, factor=None):
    """
    Returns the LocalTimeField of the path-averaged estimates.

    levels => levels (level_grid by default).
    times  => grid knots (17 evenly spaced knots by default).
    """
    grid = paths.grid
    eps = default_bandwidth(grid) if eps is None else eps
    levels = level_grid(paths, eps) if levels is None else np.asarray(levels, dtype=float)
    if times is None:
        idx = np.unique(np.linspace(0, grid.steps, min(17, grid.steps + 1)).round().astype(int))
    else:
        idx = np.array([grid.index(t) for t in times])
    est = np.empty((levels.size, idx.size))
    if estimator == const.OCCUPATION:
        for j, k in enumerate(idx):
            est[:, j] = occupation_profile(paths, spec, levels, eps, upto=k).mean(axis=0)
    elif estimator == const.TANAKA:
        for i, a in enumerate(levels):
            est[i] = running_tanaka(paths, a, convention, factor)[:, idx].mean(axis=0)
    else:
        raise InputError("unknown estimator <{}>".format(estimator))
    log.debug("%s field: %d levels x %d times", estimator, levels.size, idx.size)
    return LocalTimeField(levels, grid.times[idx], est, estimator,
                          eps if estimator == const.OCCUPATION else None)


def brownian_local_time_mean (horizon, a=0.0, x0=0.0):
    """
    Closed form of E L^a_T for a Brownian motion from x0, by Tanaka:
    E|B_T - a| - |x0 - a| (sqrt(2T/pi) for a = x0).
    """
    m = x0 - a
    s = math.sqrt(horizon)
    mean_abs = m * (2 * norm.cdf(m / s) - 1) + 2 * s * norm.pdf(m / s)
    return float(mean_abs - abs(m))


def brownian_occupation_mean (grid, eps, a=0.0, x0=0.0):
    """
    Exact mean of the occupation estimator for a Brownian motion from x0:
    sum_k dt/(2 eps) P(|B_{t_k} - a| < eps).
    """
    times = grid.times[:-1]
    probs = np.empty(times.size)
    probs[0] = 1.0 if abs(x0 - a) < eps else 0.0
    s = np.sqrt(times[1:])
    probs[1:] = norm.cdf((a + eps - x0) / s) - norm.cdf((a - eps - x0) / s)
    return float(np.sum(probs) * grid.dt / (2 * eps))


###########
# CLASSES #
###########

class LocalTimeField:
    """Estimates levels x times of L^a_t, with the estimator provenance."""
    def __init__ (self, levels, times, estimates, estimator, epsilon=None):
        levels = np.asarray(levels, dtype=float)
        times = np.asarray(times, dtype=float)
        estimates = np.asarray(estimates, dtype=float)
        if estimates.shape != (levels.size, times.size):
            raise InputError("estimates of shape <{}> do not fit {} levels x {} times".format(
                estimates.shape, levels.size, times.size))
        if np.any(np.diff(levels) <= 0):
            raise InputError("levels must be increasing")
        if np.any(estimates < -1e-12) or np.any(np.diff(estimates, axis=1) < -1e-12):
            raise InputError("local time estimates must be non-negative and non-decreasing")
        self.levels = levels
        self.times = times
        self.estimates = estimates
        self.estimator = estimator
        self.epsilon = epsilon

    def at (self, a, t=None):
        """Estimate at level a (linear interpolation) and time t (a stored time)."""
        j = -1 if t is None else int(np.argmin(np.abs(self.times - t)))
        return float(np.interp(a, self.levels, self.estimates[:, j], left=0.0, right=0.0))

    def dump_csv (self, path):
        eps = '' if self.epsilon is None else self.epsilon
        rows = ((a, t, self.estimates[i, j], self.estimator, eps)
                for i, a in enumerate(self.levels) for j, t in enumerate(self.times))
        write_csv(path, ('level', 'time', 'estimate', 'estimator', 'epsilon'), rows)
