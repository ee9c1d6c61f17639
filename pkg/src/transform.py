# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.


"""
The space transform removing the local time term.

For a measure nu satisfying (A1) and (A2):

  f(x) = exp(-2 nu^c((-inf, x])) * prod_{y <= x} (1 - nu{y}) / (1 + nu{y})
  F(x) = integral of f from 0 to x

F is increasing, bi-Lipschitz, and Y = F(X) solves the driftless SDE
dY = sigma~(Y) dW with sigma~ = (f * sigma) o F^-1.
"""


# std imports
import logging
import math
# local imports
from skewsim import const
from skewsim.measure import (ConditionReport, DensityPiece, SignedMeasure,
                             atom_product, check_measure_conditions,
                             continuous_cdf, restrict, tv_on)
from skewsim.simUtils import (ConditionError, ConfigurationError, InputError,
                              IntervalUnion, RangeError, ZeroSet,
                              describe_function, evaluate, stable_hash,
                              write_csv)
# external imports
import numpy as np
from scipy import integrate


log = logging.getLogger(__name__)


#############
# FUNCTIONS #
#############

def _check_domain (domain):
    try:
        lo, hi = map(float, domain)
    except (TypeError, ValueError):
        raise InputError("malformed domain <{}>".format(domain))
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise InputError("domain must be finite with lo < hi, got <{}>".format(domain))
    return lo, hi


def build_transform (nu, domain=const.DEFAULT_DOMAIN,
                     resolution=const.DEFAULT_RESOLUTION,
                     zero_set=None, extra_knots=()):
    """
    Returns the ZvonkinTransform of nu tabulated on domain.

    nu          => a SignedMeasure.
    domain      => (x_min, x_max), must contain every atom of nu.
    resolution  => number of uniform cells of the base grid.
    zero_set    => if given, nu is restricted to its complement first
                   (weakened conditions); the restriction must satisfy
                   (A1) and (A2).
    extra_knots => points made knots (e.g. initial conditions).

    Raise InputError for a bad domain/resolution or atoms outside the domain.
    Raise ConditionError if (A1) or (A2) fails.
    """
    lo, hi = _check_domain(domain)
    if int(resolution) != resolution or resolution < 1:
        raise InputError("resolution must be a positive integer, got <{}>".format(resolution))
    if zero_set is not None:
        report = check_measure_conditions(nu, zero_set)
        for cond in ('A1-weak', 'A2-weak'):
            if not report.holds(cond):
                v = [v for v in report.violations if v.condition == cond][0]
                raise ConditionError(cond, v.witness, v.value)
        nu = restrict(nu, zero_set)
    for atom in nu.atoms:
        if abs(atom.weight) >= 1:
            raise ConditionError('A1', atom.location, atom.weight)
        if not lo <= atom.location <= hi:
            raise InputError("atom at <{}> outside the domain <{}>".format(
                atom.location, (lo, hi)))
    if math.isinf(tv_on(nu, IntervalUnion.real_line())):
        raise ConditionError('A2', None, math.inf)
    extra = [float(x) for x in extra_knots if lo <= x <= hi]
    base = np.linspace(lo, hi, int(resolution) + 1)
    points = [a.location for a in nu.atoms] + extra + nu.breakpoints()
    if lo <= 0 <= hi:
        points.append(0.0)
    knots = np.unique(np.concatenate((base, [p for p in points if lo <= p <= hi])))
    return ZvonkinTransform(nu, knots)


def eval_F (t, x, extend=False):
    """Returns F(x). Raise RangeError outside the domain unless extend."""
    return t.F(x, extend)


def eval_F_inverse (t, y, extend=False):
    """Returns F^-1(y). Raise RangeError outside the image unless extend."""
    return t.F_inverse(y, extend)


def eval_f (t, x, extend=False):
    """Returns the right-continuous f(x)."""
    return t.f(x, extend)


def build_sigma_tilde (t, spec):
    """Returns the callable y -> f(F^-1(y)) * sigma(F^-1(y))."""
    return SigmaTilde(t, spec)


def transformed_zero_set (t, zero_set):
    """Returns F(zero_set), the zero set of sigma~."""
    return zero_set.image(lambda x: t.F(x, extend=True))


def transformed_growth_bound (t, spec):
    """
    Returns (A', B') such that |sigma~(y)| <= A'(B' + |y|), from the
    declared bound |sigma(x)| <= A(B + |x|).
    Raise ConfigurationError if spec has no growth bound.
    """
    if spec.growth_bound is None:
        raise ConfigurationError("spec <{}> declares no growth bound".format(spec.name))
    a, b = spec.growth_bound
    origin = abs(float(t.F_inverse(0.0, extend=True)))
    return (t.m_upper * a / t.m_lower, t.m_lower * (b + origin))


def drift_to_measure (spec, domain=const.DEFAULT_DOMAIN,
                      resolution=const.DEFAULT_RESOLUTION):
    """
    Returns the measure with density b/sigma^2 off N_b, tabulated on domain.
    Raise InputError if spec has no drift.
    Raise ConditionError ('A2prime') if sigma vanishes where b does not
    or the density is not integrable.
    """
    if spec.drift is None:
        raise InputError("spec <{}> has no drift".format(spec.name))
    lo, hi = _check_domain(domain)
    xs = np.linspace(lo, hi, int(resolution) + 1)
    probes = np.concatenate((xs, spec.zero_set.samples()))
    b = evaluate(spec.drift, probes)
    s = evaluate(spec.sigma, probes)
    active = (b != 0) & ~spec.drift_zero_set.contains(probes)
    bad = active & (s == 0)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ConditionError('A2prime', float(probes[i]), float(b[i]),
                             "sigma vanishes at <{}> where the drift is <{}>".format(
                                 probes[i], b[i]))
    n = xs.size
    with np.errstate(divide='ignore', invalid='ignore'):
        dens = np.where(active[:n], b[:n] / s[:n] ** 2, 0.0)
    if not np.any(dens):
        return SignedMeasure()
    total = float(integrate.trapezoid(np.abs(dens), xs))
    if not math.isfinite(total) or total > const.DIVERGENCE_GUARD:
        i = int(np.argmax(np.abs(np.nan_to_num(dens, nan=np.inf))))
        raise ConditionError('A2prime', float(xs[i]), total,
                             "b/sigma^2 not integrable near <{}>".format(xs[i]))
    log.debug("drift density on %s, total variation %g", (lo, hi), total)
    return SignedMeasure([], [DensityPiece(lo, hi, 'table', (xs, dens))])


def check_I_sigma (spec, compacts, samples=65):
    """
    Checks N_sigma^c subset of I_sigma on compacts: sampled points off the
    declared zero set must have a neighbourhood where sigma^-2 is
    integrable. A point is reported when the midpoint integral exceeds
    the guard for every radius of the ladder.
    """
    report = ConditionReport()
    checked = 0
    for compact in compacts:
        lo, hi = _check_domain(compact)
        points = np.linspace(lo, hi, samples)
        points = points[~spec.zero_set.contains(points)]
        for a in points:
            checked += 1
            values = []
            for r in const.I_SIGMA_RADII:
                edges = np.linspace(a - r, a + r, const.I_SIGMA_CELLS + 1)
                mids = (edges[:-1] + edges[1:]) / 2
                s2 = evaluate(spec.sigma, mids) ** 2
                with np.errstate(divide='ignore'):
                    values.append(float(np.sum(1.0 / s2) * (edges[1] - edges[0])))
            if all(v > const.I_SIGMA_GUARD for v in values):
                report.add('I_sigma', float(a), values[-1])
    report.notes = "{} points checked".format(checked)
    return report


###########
# CLASSES #
###########

class DiffusionSpec:
    """
    Time-homogeneous coefficients of the SDE.

    sigma          => callable, the diffusion coefficient.
    zero_set       => ZeroSet, the declared zeros of sigma.
    drift          => optional callable b.
    drift_zero_set => ZeroSet, the declared N_b.
    growth_bound   => optional (A, B) with |sigma(x)| <= A(B + |x|).
    Raise InputError if sigma does not vanish on zero_set or the growth
    bound fails on the sampled check grid.
    """
    def __init__ (self, sigma, zero_set=None, drift=None, drift_zero_set=None,
                  growth_bound=None, name='spec',
                  check_domain=const.SPEC_CHECK_DOMAIN):
        if not callable(sigma):
            raise InputError("sigma must be callable, got <{}>".format(sigma))
        if drift is not None and not callable(drift):
            raise InputError("drift must be callable, got <{}>".format(drift))
        self.sigma = sigma
        self.zero_set = zero_set if zero_set is not None else ZeroSet()
        self.drift = drift
        self.drift_zero_set = drift_zero_set if drift_zero_set is not None else ZeroSet()
        self.name = name
        pts = self.zero_set.samples()
        if pts.size:
            vals = np.abs(evaluate(sigma, pts))
            if np.any(vals > 0):
                i = int(np.argmax(vals > 0))
                raise InputError("sigma(<{}>) = <{}> but the point is declared a zero".format(
                    pts[i], vals[i]))
        if drift is not None:
            pts = self.drift_zero_set.samples()
            if pts.size and np.any(evaluate(drift, pts) != 0):
                raise InputError("drift does not vanish on its declared zero set")
        if growth_bound is not None:
            a, b = map(float, growth_bound)
            xs = np.linspace(*check_domain, const.SPEC_CHECK_SAMPLES)
            excess = np.abs(evaluate(sigma, xs)) - a * (b + np.abs(xs)) * (1 + 1e-12)
            if np.any(excess > 0):
                i = int(np.argmax(excess))
                raise InputError("growth bound <{}> fails at <{}>".format((a, b), xs[i]))
            growth_bound = (a, b)
        self.growth_bound = growth_bound

    def without_drift (self):
        """Returns a copy of this spec with no drift."""
        return DiffusionSpec(self.sigma, self.zero_set, growth_bound=self.growth_bound,
                             name=self.name)

    def sigma_at (self, x):
        return evaluate(self.sigma, x)

    def drift_at (self, x):
        if self.drift is None:
            return np.zeros(np.shape(x))
        return evaluate(self.drift, x)

    def sigma_max (self, lo, hi, samples=const.SPEC_CHECK_SAMPLES):
        """max |sigma| sampled on [lo, hi]."""
        return float(np.max(np.abs(self.sigma_at(np.linspace(lo, hi, samples)))))

    def sigma_min (self, lo, hi, samples=const.SPEC_CHECK_SAMPLES):
        """min |sigma| sampled on [lo, hi]."""
        return float(np.min(np.abs(self.sigma_at(np.linspace(lo, hi, samples)))))

    def describe (self):
        return {'name': self.name,
                'sigma': describe_function(self.sigma),
                'zero_set': self.zero_set.describe(),
                'drift': None if self.drift is None else describe_function(self.drift),
                'drift_zero_set': self.drift_zero_set.describe(),
                'growth_bound': None if self.growth_bound is None else list(self.growth_bound)}

    @property
    def hash (self):
        """sha256 of the spec description."""
        return stable_hash(self.describe())

    def __repr__ (self):
        return "DiffusionSpec({!r})".format(self.name)


class ZvonkinTransform:
    """
    Tabulated f, F and F^-1.

    F is linear between knots (F^-1 is then exactly its inverse) and
    each knot increment integrates f with Simpson's rule, f being
    evaluated exactly from the measure. f is linear between knots and
    right-continuous at atoms.
    """
    def __init__ (self, nu, knots):
        self._nu = nu
        self._u = knots
        self._identity = nu.is_zero
        n = knots.size
        if self._identity:
            self._fl = self._fr = np.ones(n)
            self._F = knots.copy()
            mids = np.ones(n - 1)
        else:
            self._fr = self._exact_f(knots, strict=False)
            self._fl = self._exact_f(knots, strict=True)
            mids = self._exact_f((knots[:-1] + knots[1:]) / 2, strict=False)
            h = np.diff(knots)
            incs = h * (self._fr[:-1] + 4 * mids + self._fl[1:]) / 6
            cum = np.concatenate(([0.0], np.cumsum(incs)))
            if knots[0] <= 0 <= knots[-1]:
                cum -= cum[int(np.searchsorted(knots, 0.0))]
            elif knots[0] > 0:
                cum += self._fr[0] * knots[0]
            else:
                cum += self._fl[-1] * knots[-1] - cum[-1]
            self._F = cum
        for arr in (self._u, self._fl, self._fr, self._F):
            arr.setflags(write=False)
        allf = np.concatenate((self._fl, self._fr, mids))
        self._m_lower = float(np.min(allf))
        self._m_upper = float(np.max(allf))
        if np.any(np.diff(self._F) <= 0):
            raise ConditionError('monotone', None, None, "F is not strictly increasing")
        log.debug("transform on [%g, %g]: %d knots, m in [%g, %g]",
                  knots[0], knots[-1], n, self._m_lower, self._m_upper)

    def _exact_f (self, x, strict):
        if strict:
            prod = atom_product(self._nu, np.nextafter(x, -np.inf))
        else:
            prod = atom_product(self._nu, x)
        return np.exp(-2 * continuous_cdf(self._nu, x)) * prod

    @property
    def nu (self):
        return self._nu

    @property
    def identity (self):
        return self._identity

    @property
    def domain (self):
        return float(self._u[0]), float(self._u[-1])

    @property
    def image (self):
        return float(self._F[0]), float(self._F[-1])

    @property
    def m_lower (self):
        return self._m_lower

    @property
    def m_upper (self):
        return self._m_upper

    @property
    def unique_knots (self):
        return self._u

    @property
    def knots (self):
        """Non-decreasing knots, atom locations twice (left and right limits)."""
        return self._u[self._doubled()]

    @property
    def f_values (self):
        idx = self._doubled()
        first = np.concatenate(([True], idx[1:] != idx[:-1]))
        return np.where(first & self._is_atom()[idx], self._fl[idx], self._fr[idx])

    @property
    def F_values (self):
        return self._F[self._doubled()]

    def _is_atom (self):
        locs = [a.location for a in self._nu.atoms]
        return np.isin(self._u, locs)

    def _doubled (self):
        reps = np.where(self._is_atom(), 2, 1)
        return np.repeat(np.arange(self._u.size), reps)

    def _check (self, x, bounds, extend, what):
        if not extend:
            if np.any(x < bounds[0]) or np.any(x > bounds[1]) or np.any(np.isnan(x)):
                bad = x[(x < bounds[0]) | (x > bounds[1]) | np.isnan(x)]
                raise RangeError("{} <{}> outside <{}>".format(what, bad.ravel()[0], bounds))

    def F (self, x, extend=False):
        x = np.asarray(x, dtype=float)
        self._check(x, self.domain, extend, 'point')
        if self._identity:
            out = x.copy()
        else:
            u, F = self._u, self._F
            out = np.interp(x, u, F)
            if extend:
                out = np.where(x < u[0], F[0] + self._fr[0] * (x - u[0]), out)
                out = np.where(x > u[-1], F[-1] + self._fl[-1] * (x - u[-1]), out)
        return float(out) if out.ndim == 0 else out

    def F_inverse (self, y, extend=False):
        y = np.asarray(y, dtype=float)
        self._check(y, self.image, extend, 'value')
        if self._identity:
            out = y.copy()
        else:
            u, F = self._u, self._F
            out = np.interp(y, F, u)
            if extend:
                out = np.where(y < F[0], u[0] + (y - F[0]) / self._fr[0], out)
                out = np.where(y > F[-1], u[-1] + (y - F[-1]) / self._fl[-1], out)
        return float(out) if out.ndim == 0 else out

    def f (self, x, extend=False):
        x = np.asarray(x, dtype=float)
        self._check(x, self.domain, extend, 'point')
        if self._identity:
            out = np.ones(x.shape)
        else:
            u = self._u
            cx = np.clip(x, u[0], u[-1])
            i = np.clip(np.searchsorted(u, cx, side='right') - 1, 0, u.size - 2)
            w = (cx - u[i]) / (u[i + 1] - u[i])
            out = (1 - w) * self._fr[i] + w * self._fl[i + 1]
            out = np.where(cx == u[-1], self._fr[-1], out)
        return float(out) if out.ndim == 0 else out

    def describe (self):
        return {'measure': self._nu.describe(), 'domain': list(self.domain),
                'knots': int(self._u.size)}

    def dump_csv (self, path):
        """Writes the knot, f, F table to path."""
        write_csv(path, ('knot', 'f', 'F'),
                  zip(self.knots, self.f_values, self.F_values),
                  comments=('m_lower={!r} m_upper={!r}'.format(self._m_lower, self._m_upper),))


class SigmaTilde:
    """The transformed diffusion coefficient (f * sigma) o F^-1."""
    def __init__ (self, transform, spec):
        self.transform = transform
        self.spec = spec

    def __call__ (self, y, extend=False):
        t = self.transform
        x = t.F_inverse(y, extend)
        if t.identity:
            return self.spec.sigma_at(x)
        return t.f(x, extend) * self.spec.sigma_at(x)

    def sup (self, lo, hi, samples=const.SPEC_CHECK_SAMPLES):
        """max |sigma~| over sampled points of [lo, hi] and the knot images inside."""
        ys = np.linspace(lo, hi, samples)
        F = self.transform.F_values
        ys = np.concatenate((ys, F[(F >= lo) & (F <= hi)]))
        return float(np.max(np.abs(self(ys, extend=True))))

    @property
    def description (self):
        return {'kind': 'sigma_tilde', 'transform': self.transform.describe(),
                'spec': self.spec.describe()}
