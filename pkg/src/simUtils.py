# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.


"""
This module contains some functions and classes shared by the
simulation modules: the errors hierarchy, interval unions, zero sets
and a few numerical helpers.
"""


# std imports
import csv
import hashlib
import json
import math
# external imports
import numpy as np


##########
# ERRORS #
##########

class SkewSimError (Exception):
    pass

class InputError (SkewSimError, ValueError):
    pass

class RangeError (SkewSimError, ValueError):
    pass

class ConfigurationError (SkewSimError):
    pass

class ResourceError (SkewSimError, MemoryError):
    pass

class NumericalError (SkewSimError, ArithmeticError):
    pass

class ConditionError (SkewSimError, ValueError):
    """A hypothesis violation, with the condition name and a witness."""
    def __init__ (self, condition, witness=None, value=None, msg=None):
        self.condition = condition
        self.witness = witness
        self.value = value
        if msg is None:
            msg = "condition ({}) violated at <{}> (value: {})".format(
                condition, witness, value)
        super().__init__(msg)


#############
# FUNCTIONS #
#############

def evaluate (func, x):
    """Returns func(x) as a float array shaped like x.
    Accepts functions returning scalars (e.g. constants).
    """
    x = np.asarray(x, dtype=float)
    return np.broadcast_to(np.asarray(func(x), dtype=float), x.shape)


def describe_function (func):
    """Returns a json-able description of func."""
    desc = getattr(func, 'description', None)
    if desc is not None:
        return desc
    return {'kind': 'python', 'name': getattr(func, '__name__', repr(func))}


def stable_hash (obj):
    """Returns the sha256 hex digest of the canonical json dump of obj."""
    data = json.dumps(obj, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(data.encode('utf-8')).hexdigest()


def file_hash (path):
    """Returns the sha256 hex digest of the file at path."""
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            h.update(chunk)
    return h.hexdigest()


def write_csv (path, header, rows, comments=()):
    """Writes rows (a sequence of sequences) to the csv file at path.
    comments => lines written first, prefixed by '# '.
    """
    with open(path, 'w', newline='') as f:
        for line in comments:
            f.write('# {}\n'.format(line))
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_number(v) for v in row])


def fmt_number (value):
    """Stable text form for csv cells (repr keeps floats round-trippable)."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return value


def path_blocks (n, block_size):
    """
    Returns a list of (start, stop) pairs splitting range(n) in
    consecutive blocks of at most block_size items.
    n should be >= 0, if not, returns an empty list.
    """
    if block_size < 1:
        raise InputError("block size must be >= 1, got <{}>".format(block_size))
    return [(i, min(i + block_size, n)) for i in range(0, max(n, 0), block_size)]


def dyadic_ladder (first, last):
    """Returns [first, 2*first, 4*first, ...] up to last (included if hit)."""
    if first <= 0:
        raise InputError("ladder start must be positive, got <{}>".format(first))
    values = []
    v = first
    while v <= last:
        values.append(v)
        v *= 2
    return values


def non_increasing (values, slack=0.0):
    """Return True if each value is <= the previous one plus slack."""
    return all(b <= a + slack for a, b in zip(values, values[1:]))


def grows_without_bound (values, rtol=1e-9):
    """
    Divergence rule for integrals over shrinking (or refining) ladders:
    True if the sequence increases (each increment above rtol relative to
    the last value) and each increment is at least half the previous one,
    or if any value is not finite.
    """
    values = list(values)
    if not all(map(math.isfinite, values)):
        return True
    incs = [b - a for a, b in zip(values, values[1:])]
    floor = rtol * (1 + abs(values[-1])) if values else 0
    if not incs or any(i <= floor for i in incs):
        return False
    return all(b >= 0.5 * a for a, b in zip(incs, incs[1:]))


###########
# CLASSES #
###########

class IntervalUnion:
    """
    Finite union of half-open intervals [lo, hi) (lo may be -inf, hi may
    be +inf) minus a finite set of points.
    """
    def __init__ (self, intervals=((-math.inf, math.inf),), exclude=()):
        ivals = []
        for item in intervals:
            try:
                lo, hi = map(float, item)
            except (TypeError, ValueError):
                raise InputError("malformed interval <{}>".format(item))
            if math.isnan(lo) or math.isnan(hi) or not lo < hi:
                raise InputError("malformed interval <{}>".format(item))
            ivals.append((lo, hi))
        ivals.sort()
        merged = []
        for lo, hi in ivals:
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
            else:
                merged.append((lo, hi))
        try:
            points = sorted(set(map(float, exclude)))
        except (TypeError, ValueError):
            raise InputError("malformed excluded points <{}>".format(exclude))
        if any(math.isnan(p) for p in points):
            raise InputError("NaN in excluded points")
        self._intervals = tuple(merged)
        self._exclude = tuple(points)

    @classmethod
    def real_line (cls):
        return cls()

    @property
    def intervals (self):
        return self._intervals

    @property
    def exclude (self):
        return self._exclude

    def contains (self, x):
        """Vectorized membership test."""
        x = np.asarray(x, dtype=float)
        inside = np.zeros(x.shape, dtype=bool)
        for lo, hi in self._intervals:
            inside |= (x >= lo) & (x < hi)
        if self._exclude:
            inside &= ~np.isin(x, self._exclude)
        return inside

    def __contains__ (self, x):
        return bool(self.contains(x))

    def __eq__ (self, other):
        return (isinstance(other, IntervalUnion)
                and self._intervals == other._intervals
                and self._exclude == other._exclude)

    def __repr__ (self):
        return "IntervalUnion({}, exclude={})".format(
            list(self._intervals), list(self._exclude))


class ZeroSet:
    """
    Declared zero set of a coefficient: finitely many points plus
    finitely many disjoint closed intervals.
    """
    def __init__ (self, points=(), intervals=()):
        try:
            pts = sorted(float(p) for p in points)
            ivals = sorted((float(lo), float(hi)) for lo, hi in intervals)
        except (TypeError, ValueError):
            raise InputError("malformed zero set <{}, {}>".format(points, intervals))
        for lo, hi in ivals:
            if math.isnan(lo) or math.isnan(hi) or lo > hi:
                raise InputError("malformed zero interval <{}>".format((lo, hi)))
        comps = [(p, p) for p in pts] + ivals
        comps.sort()
        for (lo1, hi1), (lo2, hi2) in zip(comps, comps[1:]):
            if lo2 <= hi1:
                raise InputError(
                    "zero set components overlap: <{}> and <{}>".format(
                        (lo1, hi1), (lo2, hi2)))
        self._points = tuple(pts)
        self._intervals = tuple(ivals)

    @property
    def points (self):
        return self._points

    @property
    def intervals (self):
        return self._intervals

    @property
    def is_empty (self):
        return not (self._points or self._intervals)

    def components (self):
        """Sorted (lo, hi) pairs, points as degenerate intervals."""
        return sorted([(p, p) for p in self._points] + list(self._intervals))

    def contains (self, x):
        """Vectorized membership test, exact at points and endpoints."""
        x = np.asarray(x, dtype=float)
        inside = np.zeros(x.shape, dtype=bool)
        if self._points:
            inside |= np.isin(x, self._points)
        for lo, hi in self._intervals:
            inside |= (x >= lo) & (x <= hi)
        return inside

    def __contains__ (self, x):
        return bool(self.contains(x))

    def complement (self):
        """Returns the complement as an IntervalUnion."""
        edges = [-math.inf]
        exclude = list(self._points)
        for lo, hi in self._intervals:
            edges.extend((lo, hi))
            exclude.append(hi)
        edges.append(math.inf)
        ivals = [(lo, hi) for lo, hi in zip(edges[::2], edges[1::2]) if lo < hi]
        return IntervalUnion(ivals or [], exclude)

    def samples (self, per_interval=33):
        """Returns the points plus per_interval samples of each interval."""
        xs = list(self._points)
        for lo, hi in self._intervals:
            if math.isinf(lo) or math.isinf(hi):
                lo, hi = max(lo, -1e6), min(hi, 1e6)
            xs.extend(np.linspace(lo, hi, per_interval))
        return np.asarray(xs, dtype=float)

    def first_missing (self, other):
        """
        Returns the first component of this set not covered by other
        (another ZeroSet), or None if self is a subset of other.
        """
        for lo, hi in self.components():
            covered = any(olo <= lo and hi <= ohi for olo, ohi in other.components())
            if not covered:
                return lo if lo == hi else (lo, hi)
        return None

    def issubset (self, other):
        return self.first_missing(other) is None

    def image (self, func):
        """Returns the image of this set through the increasing function func."""
        pts = [float(func(p)) for p in self._points]
        ivals = [(float(func(lo)), float(func(hi))) for lo, hi in self._intervals]
        return ZeroSet(pts, ivals)

    def describe (self):
        return {'points': list(self._points),
                'intervals': [list(i) for i in self._intervals]}

    def __eq__ (self, other):
        return (isinstance(other, ZeroSet)
                and self._points == other._points
                and self._intervals == other._intervals)

    def __repr__ (self):
        return "ZeroSet(points={}, intervals={})".format(
            list(self._points), list(self._intervals))
