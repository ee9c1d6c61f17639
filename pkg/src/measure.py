# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.


"""
Signed Radon measures on the real line: finitely many atoms plus a
piecewise density, and the checks of the measure hypotheses
(A1): |nu({a})| < 1 for every a
(A2): |nu|(R) < inf
and of their weakened form, where (A1) is required only on the zero
set of sigma and (A2) only on its complement.
"""


# std imports
import collections
import logging
import math
# local imports
from skewsim import const
from skewsim.simUtils import (ConditionError, InputError, IntervalUnion,
                              describe_function)
# external imports
import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate


log = logging.getLogger(__name__)

Atom = collections.namedtuple('Atom', 'location weight')
Violation = collections.namedtuple('Violation', 'condition witness value')

PIECE_KINDS = ('const', 'poly', 'table', 'function')


#############
# FUNCTIONS #
#############

def tv_on (nu, where):
    """
    Returns |nu|(where), the total variation of nu on where.

    nu    => a SignedMeasure.
    where => an IntervalUnion.
    Returns math.inf when the density integral exceeds the divergence guard.
    Raise InputError if where is not an IntervalUnion.
    """
    if not isinstance(where, IntervalUnion):
        raise InputError("expected an IntervalUnion, got <{}>".format(where))
    total = 0.0
    if nu.atoms:
        locs = np.array([a.location for a in nu.atoms])
        weights = np.array([abs(a.weight) for a in nu.atoms])
        total += float(weights[where.contains(locs)].sum())
    for piece in nu.continuous:
        for lo, hi in where.intervals:
            a, b = max(lo, piece.lo), min(hi, piece.hi)
            if a < b:
                total += piece.abs_integral(a, b)
                if total > const.DIVERGENCE_GUARD:
                    log.debug("total variation diverges on %s", where)
                    return math.inf
    return total


def continuous_cdf (nu, x):
    """
    Returns nu^c((-inf, x]), the continuous part of nu cumulated up to x.
    x may be a scalar or an array.
    Raise InputError when the lower tail of the density diverges.
    """
    xs = np.asarray(x, dtype=float)
    out = np.zeros(xs.shape)
    for piece in nu.continuous:
        out = out + piece.cumulative(xs)
    if not np.all(np.isfinite(out)) or np.any(np.abs(out) > const.DIVERGENCE_GUARD):
        raise InputError("divergent continuous part below <{}>".format(x))
    return float(out) if out.ndim == 0 else out


def atom_product (nu, x):
    """
    Returns the product of (1 - w)/(1 + w) over the atoms (a, w) of nu
    with a <= x. x may be a scalar or an array.
    Raise ConditionError if an atom below x has |w| >= 1.
    """
    xs = np.asarray(x, dtype=float)
    if not nu.atoms:
        out = np.ones(xs.shape)
        return float(out) if out.ndim == 0 else out
    locs = np.array([a.location for a in nu.atoms])
    idx = np.searchsorted(locs, xs, side='right')
    top = int(np.max(idx)) if idx.size else 0
    for atom in nu.atoms[:top]:
        if abs(atom.weight) >= 1:
            raise ConditionError('A1', atom.location, atom.weight,
                                 "atom <{}> has weight <{}>, |w| must be < 1".format(
                                     atom.location, atom.weight))
    weights = np.array([a.weight for a in nu.atoms[:top]])
    factors = np.concatenate(([1.0], np.cumprod((1 - weights) / (1 + weights))))
    out = factors[idx]
    return float(out) if out.ndim == 0 else out


def restrict (nu, zero_set):
    """
    Returns the restriction of nu to the complement of zero_set:
    atoms inside zero_set are dropped, densities are cut away from its
    intervals (points carry no density mass).
    """
    atoms = [a for a in nu.atoms if not zero_set.contains(a.location)]
    pieces = []
    for piece in nu.continuous:
        segments = [(piece.lo, piece.hi)]
        for zlo, zhi in zero_set.intervals:
            cut = []
            for lo, hi in segments:
                if zhi < lo or zlo >= hi:
                    cut.append((lo, hi))
                    continue
                if lo < zlo:
                    cut.append((lo, zlo))
                if zhi < hi:
                    cut.append((zhi, hi))
            segments = cut
        pieces.extend(piece.restricted(lo, hi) for lo, hi in segments if lo < hi)
    return SignedMeasure(atoms, pieces)


def check_measure_conditions (nu, zero_set):
    """
    Returns a ConditionReport about the strong pair (A1), (A2) and
    the weakened pair (A1-weak), (A2-weak) relative to zero_set.
    """
    report = ConditionReport()
    for atom in nu.atoms:
        if abs(atom.weight) >= 1:
            report.add('A1', atom.location, atom.weight)
            if zero_set.contains(atom.location):
                report.add('A1-weak', atom.location, atom.weight)
    total = tv_on(nu, IntervalUnion.real_line())
    if math.isinf(total):
        report.add('A2', None, total)
    outside = tv_on(nu, zero_set.complement())
    if math.isinf(outside):
        report.add('A2-weak', None, outside)
    report.notes = "|nu|(R) = {}; |nu|(N_sigma^c) = {}".format(total, outside)
    return report


###########
# CLASSES #
###########

class DensityPiece:
    """
    A density on [lo, hi).

    kind => 'const' (data: the value), 'poly' (data: ascending coefficients
            in x), 'table' (data: (xs, ys) linearly interpolated, xs must
            cover [lo, hi]) or 'function' (data: a callable).
    Infinite bounds are allowed for the 'function' kind only.
    """
    def __init__ (self, lo, hi, kind, data):
        lo, hi = float(lo), float(hi)
        if kind not in PIECE_KINDS:
            raise InputError("unknown density kind <{}>".format(kind))
        if math.isnan(lo) or math.isnan(hi) or not lo < hi:
            raise InputError("density piece needs lo < hi, got <{}, {}>".format(lo, hi))
        if kind != 'function' and (math.isinf(lo) or math.isinf(hi)):
            raise InputError("unbounded <{}> density piece".format(kind))
        self._lo, self._hi, self._kind = lo, hi, kind
        if kind == 'const':
            self._data = float(data)
            self._poly = Polynomial([self._data])
        elif kind == 'poly':
            self._data = tuple(float(c) for c in data)
            if not self._data:
                raise InputError("empty polynomial density")
            self._poly = Polynomial(self._data)
        elif kind == 'table':
            try:
                xs, ys = (np.array(v, dtype=float) for v in data)
            except (TypeError, ValueError):
                raise InputError("malformed density table <{}>".format(data))
            if (xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2
                    or np.any(np.diff(xs) <= 0)):
                raise InputError("density table needs increasing abscissae")
            if xs[0] > lo or xs[-1] < hi:
                raise InputError("density table <{}, {}> does not cover <{}, {}>".format(
                    xs[0], xs[-1], lo, hi))
            if not np.all(np.isfinite(ys)):
                raise InputError("non-finite density table values")
            xs.setflags(write=False)
            ys.setflags(write=False)
            self._data = (xs, ys)
            self._table_cum = np.concatenate(
                ([0.0], integrate.cumulative_trapezoid(ys, xs)))
        else:
            if not callable(data):
                raise InputError("function density needs a callable, got <{}>".format(data))
            self._data = data
        if kind in ('const', 'poly'):
            self._anti = self._poly.integ()
        if not math.isfinite(self.abs_integral(lo, hi)):
            raise InputError("density not integrable on <{}, {}>".format(lo, hi))

    @property
    def lo (self):
        return self._lo

    @property
    def hi (self):
        return self._hi

    @property
    def kind (self):
        return self._kind

    @property
    def data (self):
        return self._data

    def _values (self, x):
        if self._kind in ('const', 'poly'):
            return self._poly(x) + np.zeros(np.shape(x))
        if self._kind == 'table':
            return np.interp(x, *self._data)
        return np.asarray(self._data(x), dtype=float) + np.zeros(np.shape(x))

    def __call__ (self, x):
        """Density values, zero outside [lo, hi)."""
        x = np.asarray(x, dtype=float)
        inside = (x >= self._lo) & (x < self._hi)
        out = np.where(inside, self._values(np.where(inside, x, self._lo)), 0.0)
        return float(out) if out.ndim == 0 else out

    def _antiderivative (self, x):
        if self._kind in ('const', 'poly'):
            return self._anti(x)
        xs, ys = self._data
        i = np.clip(np.searchsorted(xs, x, side='right') - 1, 0, xs.size - 2)
        return self._table_cum[i] + (x - xs[i]) * (ys[i] + np.interp(x, xs, ys)) / 2

    def cumulative (self, x):
        """Returns the integral of the density from lo to x (vectorized)."""
        x = np.asarray(x, dtype=float)
        cx = np.clip(x, self._lo, self._hi)
        if self._kind != 'function':
            out = self._antiderivative(cx) - self._antiderivative(self._lo)
            return np.asarray(out, dtype=float)
        flat = cx.ravel()
        order = np.argsort(flat, kind='stable')
        ends = flat[order]
        starts = np.concatenate(([self._lo], ends[:-1]))
        incs = [self._quad(a, b, absolute=False) if b > a else 0.0
                for a, b in zip(starts, ends)]
        out = np.empty_like(flat)
        out[order] = np.cumsum(incs)
        return out.reshape(cx.shape)

    def _quad (self, a, b, absolute):
        func = self._data
        if absolute:
            integrand = lambda t: abs(float(func(t)))
        else:
            integrand = lambda t: float(func(t))
        value, _, info = integrate.quad(
            integrand, a, b, epsabs=const.INTEGRAL_ATOL, limit=200, full_output=1)[:3]
        if not math.isfinite(value) or abs(value) > const.DIVERGENCE_GUARD:
            return math.inf if absolute else math.copysign(math.inf, value)
        return value

    def integral (self, a=None, b=None):
        """Signed integral on [a, b] intersected with [lo, hi)."""
        a = self._lo if a is None else max(a, self._lo)
        b = self._hi if b is None else min(b, self._hi)
        if a >= b:
            return 0.0
        if self._kind == 'function':
            return self._quad(a, b, absolute=False)
        return float(self._antiderivative(b) - self._antiderivative(a))

    def abs_integral (self, a=None, b=None):
        """Integral of |density| on [a, b] intersected with [lo, hi)."""
        a = self._lo if a is None else max(a, self._lo)
        b = self._hi if b is None else min(b, self._hi)
        if a >= b:
            return 0.0
        if self._kind == 'const':
            return abs(self._data) * (b - a)
        if self._kind == 'poly':
            roots = [r.real for r in self._poly.roots()
                     if abs(r.imag) < 1e-12 and a < r.real < b]
            edges = [a] + sorted(roots) + [b]
            return float(sum(abs(self._anti(q) - self._anti(p))
                             for p, q in zip(edges, edges[1:])))
        if self._kind == 'table':
            xs, ys = self._data
            inner = xs[(xs > a) & (xs < b)]
            nodes = np.concatenate(([a], inner, [b]))
            vals = np.interp(nodes, xs, ys)
            # split segments at sign changes, |y| is then linear on each one
            sign_change = vals[:-1] * vals[1:] < 0
            if np.any(sign_change):
                i = np.nonzero(sign_change)[0]
                roots = nodes[i] - vals[i] * (nodes[i + 1] - nodes[i]) / (vals[i + 1] - vals[i])
                nodes = np.sort(np.concatenate((nodes, roots)))
                vals = np.interp(nodes, xs, ys)
            return float(integrate.trapezoid(np.abs(vals), nodes))
        return self._quad(a, b, absolute=True)

    def restricted (self, lo, hi):
        """Returns the same density on [lo, hi) (within this piece)."""
        lo, hi = max(lo, self._lo), min(hi, self._hi)
        if (lo, hi) == (self._lo, self._hi):
            return self
        return DensityPiece(lo, hi, self._kind, self._data)

    def describe (self):
        if self._kind == 'table':
            data = [list(map(float, v)) for v in self._data]
        elif self._kind == 'function':
            data = describe_function(self._data)
        else:
            data = self._data if self._kind == 'const' else list(self._data)
        return {'lo': self._lo, 'hi': self._hi, 'kind': self._kind, 'data': data}

    def __eq__ (self, other):
        if not isinstance(other, DensityPiece):
            return NotImplemented
        if (self._lo, self._hi, self._kind) != (other._lo, other._hi, other._kind):
            return False
        if self._kind == 'table':
            return all(np.array_equal(u, v) for u, v in zip(self._data, other._data))
        if self._kind == 'function':
            return self._data is other._data
        return self._data == other._data

    def __repr__ (self):
        return "DensityPiece({}, {}, {!r})".format(self._lo, self._hi, self._kind)


class SignedMeasure:
    """
    Signed measure made of finitely many atoms and finitely many
    non-overlapping density pieces. Instances are immutable.
    """
    def __init__ (self, atoms=(), continuous=()):
        atoms = [a if isinstance(a, Atom) else Atom(*a) for a in atoms]
        atoms = [Atom(float(a.location), float(a.weight)) for a in atoms]
        atoms.sort(key=lambda a: a.location)
        for atom in atoms:
            if not (math.isfinite(atom.location) and math.isfinite(atom.weight)):
                raise InputError("non-finite atom <{}>".format(atom))
            if atom.weight == 0:
                raise InputError("zero-weight atom at <{}>".format(atom.location))
        for a1, a2 in zip(atoms, atoms[1:]):
            if a1.location == a2.location:
                raise InputError("duplicate atom location <{}>".format(a1.location))
        pieces = sorted(continuous, key=lambda p: p.lo)
        for p1, p2 in zip(pieces, pieces[1:]):
            if p2.lo < p1.hi:
                raise InputError("overlapping density pieces <{}> and <{}>".format(p1, p2))
        self._atoms = tuple(atoms)
        self._continuous = tuple(pieces)

    @classmethod
    def dirac (cls, location, weight):
        """Returns the measure weight * delta_location."""
        return cls([Atom(location, weight)])

    @classmethod
    def zero (cls):
        return cls()

    @property
    def atoms (self):
        return self._atoms

    @property
    def continuous (self):
        return self._continuous

    @property
    def is_zero (self):
        return not (self._atoms or self._continuous)

    @property
    def is_atomic (self):
        return not self._continuous

    def atom_weight (self, x):
        """Returns nu({x})."""
        for atom in self._atoms:
            if atom.location == x:
                return atom.weight
        return 0.0

    def density (self, x):
        """Returns the density of the continuous part at x (vectorized)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for piece in self._continuous:
            out = out + piece(x)
        return float(out) if out.ndim == 0 else out

    def breakpoints (self):
        """Sorted finite piece endpoints."""
        pts = set()
        for p in self._continuous:
            pts.update(v for v in (p.lo, p.hi) if math.isfinite(v))
        return sorted(pts)

    def describe (self):
        return {'atoms': [{'a': a.location, 'alpha': a.weight} for a in self._atoms],
                'density': [p.describe() for p in self._continuous]}

    def __eq__ (self, other):
        if not isinstance(other, SignedMeasure):
            return NotImplemented
        return (self._atoms == other._atoms
                and len(self._continuous) == len(other._continuous)
                and all(p == q for p, q in zip(self._continuous, other._continuous)))

    def __repr__ (self):
        return "SignedMeasure(atoms={}, continuous={})".format(
            list(self._atoms), list(self._continuous))


class ConditionReport:
    """Outcome of a hypothesis check: passed iff there are no violations."""
    def __init__ (self, violations=(), notes=''):
        self.violations = list(violations)
        self.notes = notes

    @property
    def passed (self):
        return not self.violations

    def add (self, condition, witness=None, value=None):
        self.violations.append(Violation(condition, witness, value))

    def holds (self, *conditions):
        """True if none of the named conditions is violated."""
        return not any(v.condition in conditions for v in self.violations)

    def witnesses (self, condition):
        return [v.witness for v in self.violations if v.condition == condition]

    def merge (self, other):
        """Returns a new report with the violations of both."""
        notes = '; '.join(n for n in (self.notes, other.notes) if n)
        return ConditionReport(self.violations + other.violations, notes)

    def as_dict (self):
        return {'passed': self.passed,
                'violations': [v._asdict() for v in self.violations],
                'notes': self.notes}

    def __repr__ (self):
        return "ConditionReport(passed={}, violations={})".format(
            self.passed, self.violations)
