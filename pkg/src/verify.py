# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.


"""
Numerical experiments and condition checkers.

Experiments return an ExperimentReport: a list of metrics, each with
its tolerance and outcome, a refinement table and a verdict (all metrics
pass). Checkers never raise for violated hypotheses, they report them.

(A3): int_{0+} da / h^2(a) = inf and f/sigma in L^2_loc (off N_f)
(A4): |sigma(x) - sigma(y)| <= (f(x) + f(y)) h(|x - y|) and N_sigma in N_f
"""


# std imports
import collections
import json
import logging
import math
# local imports
from skewsim import const
from skewsim import engine
from skewsim import localtime
from skewsim.measure import check_measure_conditions
from skewsim.simUtils import (ConditionError, ConfigurationError, InputError,
                              NumericalError, ZeroSet,
                              describe_function, dyadic_ladder,
                              grows_without_bound, non_increasing, write_csv)
from skewsim.transform import (build_transform, check_I_sigma, drift_to_measure,
                               transformed_growth_bound)
# external imports
import numpy as np
from scipy import fft, integrate, stats


log = logging.getLogger(__name__)

Metric = collections.namedtuple('Metric', 'label value tolerance passed')


#############
# FUNCTIONS #
#############

def _jsonable (value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    if value is None or isinstance(value, str):
        return value
    return str(value)


def _inputs (spec, nu, **extra):
    inputs = {'spec': spec.describe()}
    if nu is not None:
        inputs['measure'] = nu.describe()
    inputs.update(extra)
    return inputs


def _sup_gaps (p, q):
    return np.max(np.abs(p.values - q.values), axis=1)


def uniqueness_experiment (spec, nu, x0, deltas=const.UNIQUENESS_DELTAS,
                           ladder=const.DEFAULT_LADDER, horizon=1.0, paths=256,
                           seed=0, schemes=(const.TRANSFORM, const.ATOM),
                           threshold=const.UNIQUENESS_THRESHOLD,
                           domain=const.DEFAULT_DOMAIN,
                           resolution=const.DEFAULT_RESOLUTION,
                           threads=1, inputs=None):
    """
    Shared driver agreement under refinement.

    For each number of steps in ladder (the coarser drivers are the finest
    one coarsened, i.e. the same Brownian paths) simulates
      (a) the two schemes from x0,
      (b) the first scheme from x0 and from x0 + delta, delta in deltas,
    and records mean and 95th percentile sup-gaps.
    Passes if the scheme gap does not increase under refinement and is
    below threshold at the finest level, and the perturbation gaps at the
    finest level do not increase as delta shrinks.
    A scheme whose preconditions fail is skipped with a note.
    """
    report = ExperimentReport('uniqueness', inputs or _inputs(
        spec, nu, x0=x0, deltas=list(deltas), ladder=list(ladder), horizon=horizon,
        paths=paths, seed=seed, schemes=list(schemes), threshold=threshold))
    ladder = sorted(ladder)
    fine = engine.sample_driver(seed, paths, engine.TimeGrid(horizon, ladder[-1]))
    starts = [x0] + [x0 + d for d in deltas]
    first, second = schemes
    transform = None
    if const.TRANSFORM in schemes:
        transform = _scheme_transform(spec, nu, starts, domain, resolution)
    pair_gaps, skipped = [], False
    pert_last = {}
    for steps in ladder:
        grid = engine.TimeGrid(horizon, steps)
        driver = fine.coarsen(ladder[-1] // steps)
        run = lambda scheme, start: engine.simulate(
            scheme, spec, nu, start, driver, grid, domain, resolution,
            transform=transform if scheme == const.TRANSFORM else None, threads=threads)
        base = run(first, x0)
        if not skipped:
            try:
                other = run(second, x0)
            except (ConditionError, ConfigurationError, InputError) as err:
                skipped = True
                report.note("scheme pair skipped: {}".format(err))
            else:
                gaps = _sup_gaps(base, other)
                pair_gaps.append(float(gaps.mean()))
                report.add_row(dt=grid.dt, steps=steps, compare='{}/{}'.format(first, second),
                               mean_gap=gaps.mean(), p95_gap=np.percentile(gaps, 95))
        for delta, start in zip(deltas, starts[1:]):
            gaps = _sup_gaps(base, run(first, start))
            pert_last[delta] = float(gaps.mean())
            report.add_row(dt=grid.dt, steps=steps, compare='delta={!r}'.format(delta),
                           mean_gap=gaps.mean(), p95_gap=np.percentile(gaps, 95))
    if pair_gaps:
        rise = max([b - a for a, b in zip(pair_gaps, pair_gaps[1:])] + [0.0])
        report.add_metric('scheme gap non-increasing', rise, const.MONOTONE_SLACK)
        report.add_metric('scheme gap at finest level', pair_gaps[-1], threshold)
    if pert_last:
        by_delta = [pert_last[d] for d in sorted(pert_last, reverse=True)]
        report.add_metric('perturbation gap shrinks with delta',
                          non_increasing(by_delta, const.MONOTONE_SLACK), True, compare='eq')
    return report


def _diverges_at_zero (h):
    """Numerical divergence of int_l^1 da / h(a)^2 for l in A3_LOWER_LIMITS."""
    values = []
    for lower in const.A3_LOWER_LIMITS:
        value, _ = integrate.quad(lambda a: 1.0 / max(float(h(a)) ** 2, 1e-300),
                                  lower, 1.0, limit=200, points=[lower * 10])
        values.append(value)
    return grows_without_bound(values), values


def _grid_integral_diverges (integrand, lo, hi, cells=const.L2_CELLS):
    """
    Midpoint integrals of integrand on [lo, hi] over refining grids:
    returns (diverges, values, witness), witness being the midpoint
    with the largest integrand on the finest grid.
    """
    values, witness = [], None
    for n in cells:
        edges = np.linspace(lo, hi, n + 1)
        mids = (edges[:-1] + edges[1:]) / 2
        vals = integrand(mids)
        values.append(float(np.sum(vals) * (hi - lo) / n))
        witness = float(mids[int(np.argmax(np.nan_to_num(vals, nan=np.inf)))])
    diverges = grows_without_bound(values) or values[-1] > const.DIVERGENCE_GUARD
    return diverges, values, witness


def check_A3A4 (spec, pair, domain, samples=const.MODULUS_SAMPLES, seed=0, inputs=None):
    """
    Checks (A3) and (A4) for the ModulusPair pair on domain.
    The divergence of int da/h^2 is analytic for h = |a|^gamma
    (diverges iff gamma >= 1/2) and numeric otherwise; f/sigma is
    integrated on refining grids off N_f; the modulus inequality is
    sampled on random pairs (half of them at small distances).
    """
    lo, hi = domain
    report = ExperimentReport('A3A4', inputs or {
        'spec': spec.describe(), 'pair': pair.describe(), 'domain': list(domain),
        'samples': samples, 'seed': seed})
    numeric, values = _diverges_at_zero(pair.h)
    if pair.gamma is not None:
        analytic = pair.gamma >= 0.5
        report.add_row(check='h divergence', analytic=analytic, numeric=numeric,
                       integrals=values)
        report.add_metric('A3: int da/h^2 diverges', analytic, True, compare='eq')
    else:
        report.add_row(check='h divergence', numeric=numeric, integrals=values)
        report.add_metric('A3: int da/h^2 diverges', numeric, True, compare='eq')

    def ratio2 (x):
        f = np.abs(pair.f_at(x))
        s = spec.sigma_at(x)
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where(f > 0, (f / s) ** 2, 0.0)
    diverges, values, witness = _grid_integral_diverges(ratio2, lo, hi)
    report.add_row(check='f/sigma L2', integrals=values, witness=witness)
    report.add_metric('A3: f/sigma in L2_loc', not diverges, True, compare='eq',
                      witness=witness if diverges else None)

    rng = np.random.default_rng(seed)
    x = rng.uniform(lo, hi, samples)
    y = rng.uniform(lo, hi, samples)
    half = samples // 2
    y[:half] = np.clip(x[:half] + rng.uniform(-1, 1, half) * 10.0 ** -rng.uniform(0, 6, half),
                       lo, hi)
    lhs = np.abs(spec.sigma_at(x) - spec.sigma_at(y))
    rhs = (np.abs(pair.f_at(x)) + np.abs(pair.f_at(y))) * pair.h(np.abs(x - y))
    excess = lhs - rhs - 1e-12 * (1 + lhs)
    i = int(np.argmax(excess))
    report.add_metric('A4: modulus inequality', float(max(excess[i], 0.0)), 0.0,
                      witness=[float(x[i]), float(y[i])] if excess[i] > 0 else None)

    missing = None
    pts = spec.zero_set.samples()
    for p in pts:
        if not pair.zero_set.contains(p) and abs(float(pair.f_at(p))) > const.ZERO_FLOOR:
            missing = float(p)
            break
    report.add_metric('A4: N_sigma in N_f', missing is None, True, compare='eq',
                      witness=missing)
    return report


def frac_half_derivative (samples, dx=1.0, pad='mirror', xs=None):
    """
    Returns the Fourier multiplier |z|^{1/2} applied to samples.

    samples => values on a uniform grid, length a power of two.
    dx      => grid step (ignored when xs is given).
    pad     => 'mirror' (even extension, no wrap-around jump) or None
               (samples taken as periodic).
    Raise InputError for a non-uniform grid or a bad length.
    Raise NumericalError if the imaginary residue is not negligible.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2 or n & (n - 1):
        raise InputError("need a power of two samples, got <{}>".format(n))
    if xs is not None:
        steps = np.diff(np.asarray(xs, dtype=float))
        if steps.size != n - 1 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise InputError("samples must lie on a uniform grid")
        dx = float(steps[0])
    if pad == 'mirror':
        ext = np.concatenate((samples, samples[::-1]))
    elif pad is None:
        ext = samples
    else:
        raise InputError("unknown padding <{}>".format(pad))
    z = 2 * np.pi * fft.fftfreq(ext.size, d=dx)
    out = fft.ifft(np.abs(z) ** 0.5 * fft.fft(ext))[:n]
    scale = max(1.0, float(np.max(np.abs(out.real))))
    if np.max(np.abs(out.imag)) > const.IMAG_RTOL * scale:
        raise NumericalError("imaginary residue <{}> in the half derivative".format(
            np.max(np.abs(out.imag))))
    return out.real


def maximal_operator (field, radii=None, dx=1.0):
    """
    Returns max over the radii (plus the zero radius) of the centered
    window averages of |field|; windows are cut at the grid ends.
    radii default to the dyadic ladder from dx to the grid width.
    """
    field = np.abs(np.asarray(field, dtype=float))
    n = field.size
    if radii is None:
        radii = dyadic_ladder(dx, n * dx)
    cum = np.concatenate(([0.0], np.cumsum(field)))
    idx = np.arange(n)
    out = field.copy()
    for r in radii:
        w = int(round(r / dx))
        if w < 1:
            continue
        left = np.maximum(idx - w, 0)
        right = np.minimum(idx + w, n - 1)
        avg = (cum[right + 1] - cum[left]) / (right - left + 1)
        out = np.maximum(out, avg)
    return out


def check_sobolev_condition (spec, domain, resolution=const.SOBOLEV_RESOLUTION,
                             samples=const.MODULUS_SAMPLES, seed=0,
                             modulus_constant=const.SOBOLEV_MODULUS_CONSTANT, inputs=None):
    """
    With g = M(d^{1/2} sigma) (maximal operator of the half derivative)
    checks g/sigma in L^2_loc off N_sigma, N_sigma in {g = 0} and the
    modulus bound |sigma(x) - sigma(y)| <= C (g(x) + g(y)) |x - y|^{1/2}.

    C is modulus_constant. The continuous inequality holds up to a
    universal constant of the half derivative and maximal function
    estimates, and the discrete g loses up to a factor 2 more by scanning
    dyadic radii only: C absorbs both.
    """
    lo, hi = domain
    report = ExperimentReport('sobolev', inputs or {
        'spec': spec.describe(), 'domain': list(domain), 'resolution': resolution,
        'samples': samples, 'seed': seed,
        'modulus_constant': modulus_constant})
    xs = np.linspace(lo, hi, resolution, endpoint=False)
    dx = xs[1] - xs[0]
    sig = spec.sigma_at(xs)
    g = maximal_operator(frac_half_derivative(sig, dx), dyadic_ladder(dx, hi - lo), dx)
    off = ~spec.zero_set.contains(xs) & (g > const.ZERO_FLOOR)
    with np.errstate(divide='ignore', invalid='ignore'):
        integrand = np.where(off, (g / sig) ** 2, 0.0)
    total = float(np.sum(integrand) * dx)
    finite = math.isfinite(total) and total <= const.DIVERGENCE_GUARD
    witness = None
    if not finite:
        bad = ~np.isfinite(integrand) | (integrand * dx > const.DIVERGENCE_GUARD)
        witness = float(xs[bad][np.argmax(g[bad])])
    report.add_row(check='g/sigma L2', integral=total, witness=witness)
    report.add_metric('g/sigma in L2_loc', finite, True, compare='eq', witness=witness)

    zeros = spec.zero_set.samples()
    zeros = zeros[(zeros >= lo) & (zeros < hi)]
    g_zero = float(np.max(np.interp(zeros, xs, g))) if zeros.size else 0.0
    report.add_metric('N_sigma in {g = 0}', g_zero, const.ZERO_FLOOR)

    rng = np.random.default_rng(seed)
    a = rng.uniform(lo, xs[-1], samples)
    b = np.clip(a + rng.uniform(-1, 1, samples) * 10.0 ** -rng.uniform(0, 3, samples),
                lo, xs[-1])
    lhs = np.abs(spec.sigma_at(a) - spec.sigma_at(b))
    rhs = modulus_constant * (np.interp(a, xs, g) + np.interp(b, xs, g)) \
        * np.abs(a - b) ** 0.5
    excess = lhs - rhs
    i = int(np.argmax(excess))
    report.add_metric('modulus bound', float(max(excess[i], 0.0)), 0.0,
                      witness=[float(a[i]), float(b[i])] if excess[i] > 0 else None)
    return report


def holder_norm (path, alpha, dt=1.0):
    """
    Returns sup |X| + max over dyadic lags L of max_k |X_{k+L} - X_k| / (L dt)^alpha.

    path => 1-d array (returns a float) or 2-d paths x knots array (one
            value per row).
    Only dyadic lags (and the full span) are scanned, the result is a lower
    bound of the discrete norm, within a factor 2.
    Raise InputError unless 0 <= alpha < 1.
    """
    if not 0 <= alpha < 1:
        raise InputError("Hölder exponent must be in [0, 1), got <{}>".format(alpha))
    X = np.atleast_2d(np.asarray(path, dtype=float))
    n = X.shape[1] - 1
    norm = np.max(np.abs(X), axis=1)
    lags = dyadic_ladder(1, n) if n >= 1 else []
    if n >= 1 and n not in lags:
        lags.append(n)
    best = np.zeros(X.shape[0])
    for lag in lags:
        inc = np.max(np.abs(X[:, lag:] - X[:, :-lag]), axis=1) / (lag * dt) ** alpha
        best = np.maximum(best, inc)
    out = norm + best
    return float(out[0]) if np.ndim(path) == 1 else out


def continuity_experiment (spec, nu, x0, offsets, alpha, eps_level, grid,
                           paths=256, seed=0, floor=const.CONTINUITY_FLOOR,
                           domain=const.DEFAULT_DOMAIN,
                           resolution=const.DEFAULT_RESOLUTION, threads=1, inputs=None):
    """
    Estimates P(||X^{x0+o} - X^{x0}||_alpha > eps_level) for each offset o
    on a shared driver. Passes if the estimates do not increase as the
    offset shrinks and the smallest offset gives at most floor.
    Raise ConfigurationError if spec declares no growth bound.
    """
    if spec.growth_bound is None:
        raise ConfigurationError("continuity needs a declared growth bound")
    report = ExperimentReport('continuity', inputs or _inputs(
        spec, nu, x0=x0, offsets=list(offsets), alpha=alpha, eps_level=eps_level,
        horizon=grid.horizon, steps=grid.steps, paths=paths, seed=seed))
    offsets = sorted(offsets, key=abs, reverse=True)
    transform = build_transform(nu, domain, resolution, zero_set=spec.zero_set,
                                extra_knots=[x0] + [x0 + o for o in offsets])
    a_, b_ = transformed_growth_bound(transform, spec)
    report.note("sigma~ growth bound: A'={!r} B'={!r}".format(a_, b_))
    driver = engine.sample_driver(seed, paths, grid)
    run = lambda start: engine.simulate_transform_scheme(
        spec, nu, start, driver, grid, transform=transform, threads=threads)
    base = run(x0)
    probs = []
    for offset in offsets:
        other = run(x0 + offset)
        norms = holder_norm(other.values - base.values, alpha, grid.dt)
        prob = float(np.mean(norms > eps_level))
        probs.append(prob)
        report.add_row(offset=offset, probability=prob, mean_norm=norms.mean())
    report.add_metric('probability non-increasing', non_increasing(probs), True, compare='eq')
    report.add_metric('probability at smallest offset', probs[-1] if probs else 0.0, floor)
    return report


def time_regularity_experiment (spec, nu, x0, grid, paths=256, seed=0,
                                scheme=const.TRANSFORM, domain=const.DEFAULT_DOMAIN,
                                resolution=const.DEFAULT_RESOLUTION,
                                slope_band=const.REGULARITY_SLOPE_BAND,
                                threads=1, inputs=None):
    """
    Estimates E|X_t - X_s|^2 on a mesh of (s, t) pairs (dyadic lags,
    REGULARITY_STARTS start times), checks the bound C |t - s|^{1/2} with
    C = REGULARITY_C_FACTOR * max ratio and fits the log-log slope of the
    lag averages. For a Brownian motion (sigma = 1, nu = 0) the slope
    must be within REGULARITY_SE_FACTOR standard errors of 1, otherwise
    in slope_band.
    """
    report = ExperimentReport('regularity', inputs or _inputs(
        spec, nu, x0=x0, horizon=grid.horizon, steps=grid.steps, paths=paths, seed=seed))
    driver = engine.sample_driver(seed, paths, grid)
    X = engine.simulate(scheme, spec, nu, x0, driver, grid, domain, resolution,
                        threads=threads).values
    n = grid.steps
    lags = dyadic_ladder(1, n // 2) if n >= 2 else [1]
    mesh, lag_spans, lag_means = [], [], []
    for lag in lags:
        starts = np.unique(np.linspace(0, n - lag, const.REGULARITY_STARTS).round().astype(int))
        moments = [float(np.mean((X[:, s + lag] - X[:, s]) ** 2)) for s in starts]
        mesh.extend((lag * grid.dt, m) for m in moments)
        lag_spans.append(lag * grid.dt)
        lag_means.append(np.mean(moments))
        report.add_row(lag=lag * grid.dt, moment=lag_means[-1])
    spans = np.array([m[0] for m in mesh])
    moments = np.array([m[1] for m in mesh])
    ratio = moments / spans ** 0.5
    c_hat = const.REGULARITY_C_FACTOR * float(ratio.max())
    excess = float(np.max(moments - c_hat * spans ** 0.5))
    report.add_metric('bound E|X_t-X_s|^2 <= C|t-s|^1/2', excess, 0.0, constant=c_hat)
    lag_means, lag_spans = np.array(lag_means), np.array(lag_spans)
    if np.all(lag_means > 0) and lag_means.size >= 2:
        fit = stats.linregress(np.log(lag_spans), np.log(lag_means))
        if _unit_sigma(spec) and nu.is_zero:
            report.add_metric('log-log slope deviation from 1', abs(fit.slope - 1.0),
                              const.REGULARITY_SE_FACTOR * fit.stderr, slope=fit.slope,
                              stderr=fit.stderr)
        else:
            report.add_metric('log-log slope', fit.slope, tuple(slope_band), compare='in',
                              stderr=fit.stderr)
    else:
        report.note("zero increments, slope not fitted")
    return report


def _total_variation (func, lo, hi, cells):
    xs = np.linspace(lo, hi, cells + 1)
    return float(np.sum(np.abs(np.diff(func(xs)))))


def _relative_change (fine, coarse):
    return abs(fine - coarse) / fine if fine > 1e-12 else 0.0


def nakao_check (spec, eps_floor, compacts, cells=const.NAKAO_CELLS, inputs=None):
    """
    Checks sigma >= eps_floor on compacts and the bounded variation of
    1/sigma: the total variation over refining grids must be stable within
    NAKAO_TV_RTOL across the last two refinements (the worst relative
    change is the metric).
    Raise InputError if cells has less than three grids.
    """
    if len(cells) < 3:
        raise InputError("two refinements need three grids, got <{}>".format(cells))
    report = ExperimentReport('nakao', inputs or {
        'spec': spec.describe(), 'eps_floor': eps_floor,
        'compacts': [list(c) for c in compacts]})
    for lo, hi in compacts:
        xs = np.linspace(lo, hi, cells[-1] + 1)
        s = np.abs(spec.sigma_at(xs))
        i = int(np.argmin(s))
        label = '[{!r}, {!r}]'.format(lo, hi)
        report.add_metric('sigma >= floor on ' + label, s[i] >= eps_floor, True, compare='eq',
                          witness=None if s[i] >= eps_floor else float(xs[i]))
        if s[i] <= 0:
            continue
        inverse = lambda x: 1.0 / np.abs(spec.sigma_at(x))
        tvs = [_total_variation(inverse, lo, hi, n) for n in cells]
        for n, tv in zip(cells, tvs):
            report.add_row(compact=label, cells=n, tv=tv)
        change = max(_relative_change(tvs[-1], tvs[-2]), _relative_change(tvs[-2], tvs[-3]))
        report.add_metric('TV(1/sigma) stable on ' + label, change, const.NAKAO_TV_RTOL,
                          tv=tvs[-1])
    return report


def check_support_condition (spec, n, domain=(0.0, 5.0), samples=const.SUPPORT_SAMPLES,
                             seed=0, cap=const.SUPPORT_CONSTANT_CAP, inputs=None):
    """
    Estimates the smallest C with
    |x^{2n} sigma(x) - y^{2n} sigma(y)|^2 <= C |x^{2n+1} - y^{2n+1}|
    on random pairs of domain (a subset of [0, inf)); passes if C <= cap.
    """
    lo, hi = domain
    if lo < 0:
        raise InputError("the support condition lives on [0, inf), got <{}>".format(domain))
    report = ExperimentReport('support-condition', inputs or {
        'spec': spec.describe(), 'n': n, 'domain': list(domain), 'samples': samples})
    rng = np.random.default_rng(seed)
    x = rng.uniform(lo, hi, samples)
    y = x.copy()
    y[: samples // 2] = rng.uniform(lo, hi, samples // 2)
    rest = samples - samples // 2
    y[samples // 2:] = np.clip(x[samples // 2:] + rng.uniform(-1, 1, rest)
                               * 10.0 ** -rng.uniform(0, 4, rest), lo, hi)
    p = 2 * n
    num = (x ** p * spec.sigma_at(x) - y ** p * spec.sigma_at(y)) ** 2
    den = np.abs(x ** (p + 1) - y ** (p + 1))
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(den > 0, num / den, np.where(num > 0, np.inf, 0.0))
    c_hat = float(np.max(ratio))
    report.add_metric('support constant', c_hat, cap)
    return report


def conditions_experiment (spec, nu, pair=None, domain=const.SPEC_CHECK_DOMAIN,
                           compacts=None, samples=const.MODULUS_SAMPLES, seed=0,
                           inputs=None):
    """
    Existence and uniqueness checklist: measure conditions (weakened pair
    as metric, the strong pair as rows), (A2') for drifts,
    N_sigma^c in I_sigma, and (A3)/(A4) when pair is given.
    """
    report = ExperimentReport('conditions', inputs or _inputs(spec, nu, domain=list(domain)))
    measure = check_measure_conditions(nu, spec.zero_set)
    for cond in ('A1', 'A2', 'A1-weak', 'A2-weak'):
        report.add_row(condition=cond, holds=measure.holds(cond),
                       witnesses=measure.witnesses(cond))
    report.add_metric('A1-weak and A2-weak', measure.holds('A1-weak', 'A2-weak'), True,
                      compare='eq')
    if spec.drift is not None:
        try:
            drift_to_measure(spec, domain)
        except ConditionError as err:
            report.add_metric("A2'", False, True, compare='eq', witness=err.witness)
        else:
            report.add_metric("A2'", True, True, compare='eq')
    isig = check_I_sigma(spec, compacts or [domain])
    report.add_metric('N_sigma^c in I_sigma', isig.passed, True, compare='eq',
                      witness=[v.witness for v in isig.violations][:1] or None)
    if pair is not None:
        sub = check_A3A4(spec, pair, domain, samples, seed)
        report.metrics.extend(sub.metrics)
        report.refinement_table.extend(sub.refinement_table)
    return report


def _scheme_transform (spec, nu, starts, domain, resolution):
    """The shared transform of a run (drift turned into its measure)."""
    if spec.drift is not None and nu.is_zero:
        nu = drift_to_measure(spec, domain, resolution)
    return build_transform(nu, domain, resolution, zero_set=spec.zero_set,
                           extra_knots=starts)


def _unit_sigma (spec):
    xs = np.linspace(*const.SPEC_CHECK_DOMAIN, const.SPEC_CHECK_SAMPLES)
    return spec.drift is None and bool(np.all(spec.sigma_at(xs) == 1.0))


def _head (paths, count):
    return engine.PathSet(paths.grid, paths.values[:count], paths.meta)


def simulation_experiment (spec, nu, x0, grid, paths=256, seed=0, scheme=const.TRANSFORM,
                           sign_law=False, dump_paths=const.DUMP_PATHS,
                           domain=const.DEFAULT_DOMAIN, resolution=const.DEFAULT_RESOLUTION,
                           threads=1, inputs=None):
    """
    Simulates paths with the named scheme; passes if the domain exit
    fraction is at most MAX_EXIT_FRACTION and, with sign_law, if the
    share of positive final values is within SIGN_LAW_SE_FACTOR standard
    errors plus sqrt(dt) of (1 + alpha)/2.
    Raise ConfigurationError if sign_law is asked outside its setting
    (sigma = 1, one atom at 0, x0 = 0).
    """
    report = ExperimentReport('simulate', inputs or _inputs(
        spec, nu, x0=x0, horizon=grid.horizon, steps=grid.steps, paths=paths,
        seed=seed, scheme=scheme))
    driver = engine.sample_driver(seed, paths, grid)
    transform = None
    if scheme == const.TRANSFORM:
        transform = _scheme_transform(spec, nu, [x0], domain, resolution)
        report.artifacts['transform'] = transform
    X = engine.simulate(scheme, spec, nu, x0, driver, grid, domain, resolution,
                        transform=transform, threads=threads)
    report.artifacts['paths'] = _head(X, dump_paths)
    for k in np.unique(np.linspace(0, grid.steps, min(9, grid.steps + 1)).round().astype(int)):
        col = X.values[:, k]
        report.add_row(t=grid.times[k], mean=col.mean(), std=col.std(),
                       min=col.min(), max=col.max())
    report.add_metric('exit fraction', X.exit_fraction, const.MAX_EXIT_FRACTION)
    if sign_law:
        atoms = nu.atoms
        if not (_unit_sigma(spec) and x0 == 0 and nu.is_atomic and len(atoms) == 1
                and atoms[0].location == 0):
            raise ConfigurationError("the sign law needs sigma = 1, one atom at 0 and x0 = 0")
        expected = engine.skew_sign_probability(atoms[0].weight)
        share = float(np.mean(X.final > 0))
        se = math.sqrt(expected * (1 - expected) / paths)
        report.add_metric('P(X_T > 0)', abs(share - expected),
                          const.SIGN_LAW_SE_FACTOR * se + math.sqrt(grid.dt),
                          estimate=share, expected=expected, stderr=se)
    return report


def localtime_experiment (spec, nu, x0, ladder=const.DEFAULT_LADDER, horizon=1.0,
                          paths=256, seed=0, level=0.0, estimator=const.TANAKA,
                          convention=const.RIGHT, factor=None, eps=None,
                          pair_offset=const.PAIR_OFFSET, oracle=False,
                          residual_rtol=const.RESIDUAL_RTOL, lattice_rtol=const.LATTICE_RTOL,
                          scheme=const.TRANSFORM, domain=const.DEFAULT_DOMAIN,
                          resolution=const.DEFAULT_RESOLUTION, threads=1, inputs=None):
    """
    Local time estimation under refinement, paths processed in chunks.

    For each number of steps in ladder (shared Brownian paths) records
    the occupation formula residual for g = 1 relative to the quadratic
    variation, and the lattice and min/max identities at level for the
    solutions from x0 and x0 + pair_offset, relative to the mean local
    time of their maximum.
    Passes if the residual does not increase under refinement and both
    the residual and the identities are within their tolerances at the
    finest level. With oracle (Brownian motion only) the mean occupation
    estimate at the finest level must be within ORACLE_SE_FACTOR standard
    errors of the closed form E L^level_T; the exact mean of the discrete
    estimator is reported next to it.
    """
    report = ExperimentReport('localtime', inputs or _inputs(
        spec, nu, x0=x0, ladder=list(ladder), horizon=horizon, paths=paths, seed=seed,
        level=level, estimator=estimator, convention=convention, factor=factor, eps=eps,
        pair_offset=pair_offset, oracle=oracle, scheme=scheme))
    if oracle and not (_unit_sigma(spec) and nu.is_zero):
        raise ConfigurationError("the occupation oracle needs a Brownian motion")
    ladder = sorted(ladder)
    fine_grid = engine.TimeGrid(horizon, ladder[-1])
    starts = [x0, x0 + pair_offset]
    transform = None
    if scheme == const.TRANSFORM:
        transform = _scheme_transform(spec, nu, starts, domain, resolution)
    chunk = max(1, const.MAX_ELEMENTS // (8 * (ladder[-1] + 1)))
    sums = {steps: collections.defaultdict(float) for steps in ladder}
    estimates = []
    bandwidth = {}
    ones = lambda a: np.ones_like(a)
    for fine in engine.iter_drivers(seed, paths, fine_grid, chunk):
        for steps in ladder:
            grid = fine_grid.coarsened(ladder[-1] // steps)
            driver = fine.coarsen(ladder[-1] // steps)
            e = localtime.default_bandwidth(grid) if eps is None else eps
            bandwidth[steps] = e
            X1, X2 = (engine.simulate(scheme, spec, nu, s, driver, grid, domain, resolution,
                                      transform=transform, threads=threads) for s in starts)
            acc = sums[steps]
            acc['residual'] += localtime.occupation_residual(X1, spec, ones, e).sum()
            acc['qv'] += float(np.sum(spec.sigma_at(X1.values[:, :-1]) ** 2) * grid.dt)
            opts = dict(eps=e, estimator=estimator, convention=convention, factor=factor)
            acc['lattice'] += localtime.lattice_identity_check(
                X1, X2, spec, level, **opts).sum()
            acc['minmax'] += localtime.minmax_additivity_check(
                X1, X2, spec, level, **opts).sum()
            acc['scale'] += localtime.local_time_increments(
                X1.combine(X2, 'max'), spec, level, **opts).sum()
            if steps == ladder[-1]:
                if oracle:
                    estimates.append(localtime.estimate_occupation(X1, spec, level, e))
                if 'field' not in report.artifacts:
                    report.artifacts['field'] = localtime.estimate_field(
                        X1, spec, eps=e, estimator=estimator, convention=convention,
                        factor=factor)
    rel = []
    for steps in ladder:
        acc = sums[steps]
        rel.append(acc['residual'] / acc['qv'] if acc['qv'] > 0 else 0.0)
        scale = acc['scale'] / paths
        report.add_row(steps=steps, dt=horizon / steps, eps=bandwidth[steps],
                       residual=rel[-1], lattice=acc['lattice'] / paths,
                       minmax=acc['minmax'] / paths, local_time=scale)
    rise = max([b - a for a, b in zip(rel, rel[1:])] + [0.0])
    report.add_metric('occupation residual non-increasing', rise, const.MONOTONE_SLACK)
    report.add_metric('occupation residual at finest level', rel[-1], residual_rtol)
    acc = sums[ladder[-1]]
    if acc['scale'] > 0:
        report.add_metric('lattice identity', acc['lattice'] / acc['scale'], lattice_rtol)
        report.add_metric('min/max additivity', acc['minmax'] / acc['scale'], lattice_rtol)
    else:
        report.note("no local time at level {!r}, identities not measured".format(level))
    if oracle:
        est = np.concatenate(estimates)
        e = bandwidth[ladder[-1]]
        expected = localtime.brownian_local_time_mean(horizon, level, x0)
        se = float(np.std(est, ddof=1) / math.sqrt(est.size)) if est.size > 1 else math.inf
        report.add_metric('mean occupation estimate', abs(est.mean() - expected),
                          const.ORACLE_SE_FACTOR * se, estimate=est.mean(),
                          expected=expected, stderr=se,
                          discrete_mean=localtime.brownian_occupation_mean(
                              fine_grid, e, level, x0))
    return report


def reflected_experiment (spec, x0, grid, paths=256, seed=0, n=1,
                          pair_offset=const.PAIR_OFFSET, support_delta=const.SUPPORT_DELTA,
                          oracle=False, identity_rtol=const.ODD_POWER_RTOL,
                          support_fraction=const.SUPPORT_FRACTION,
                          dump_paths=const.DUMP_PATHS, threads=1, inputs=None):
    """
    Reflected solutions from x0 and x0 + pair_offset on a shared driver:
    checks X >= 0 and K non-decreasing exactly, the odd power identity
    for n and the support of dL^0(X1 - X2) near 0 at support_delta.
    With oracle (sigma = 1, x0 = 0) E[X_T] must be within ORACLE_SE_FACTOR
    standard errors of sqrt(2T/pi) - REFLECTED_CORRECTION sqrt(dt).
    """
    report = ExperimentReport('reflected', inputs or _inputs(
        spec, None, x0=x0, horizon=grid.horizon, steps=grid.steps, paths=paths, seed=seed,
        n=n, pair_offset=pair_offset, support_delta=support_delta, oracle=oracle))
    if oracle and not (_unit_sigma(spec) and x0 == 0):
        raise ConfigurationError("the reflected oracle needs sigma = 1 and x0 = 0")
    driver = engine.sample_driver(seed, paths, grid)
    X1, K = engine.simulate_reflected(spec, x0, driver, grid, threads=threads)
    X2 = engine.simulate_reflected(spec, x0 + pair_offset, driver, grid, threads=threads)[0]
    report.artifacts['paths'] = _head(X1, dump_paths)
    report.add_metric('X >= 0', bool(np.all(X1.values >= 0) and np.all(X2.values >= 0)),
                      True, compare='eq')
    report.add_metric('K non-decreasing', bool(np.all(np.diff(K, axis=1) >= 0)), True,
                      compare='eq')
    if oracle:
        expected = math.sqrt(2 * grid.horizon / math.pi) \
            - const.REFLECTED_CORRECTION * math.sqrt(grid.dt)
        se = float(np.std(X1.final, ddof=1) / math.sqrt(paths)) if paths > 1 else math.inf
        report.add_metric('E[X_T]', abs(X1.final.mean() - expected),
                          const.ORACLE_SE_FACTOR * se, estimate=X1.final.mean(),
                          expected=expected, stderr=se)
    lhs, rhs, res = localtime.odd_power_identity_check(X1, X2, n)
    scale = float(np.mean(np.abs(lhs)))
    report.add_row(n=n, lhs=lhs.mean(), rhs=rhs.mean(), residual=res.mean())
    if scale > 0:
        report.add_metric('odd power identity', float(res.mean()) / scale, identity_rtol)
    else:
        report.note("no local time of X1^{0} - X2^{0} at 0".format(2 * n + 1))
    fraction, zero_mass = localtime.support_check(X1, X2, support_delta)
    if zero_mass:
        report.note("no local time of X1 - X2 at 0")
    report.add_metric('dL(X1 - X2) mass away from 0', fraction, support_fraction,
                      delta=support_delta)
    return report


###########
# CLASSES #
###########

class ModulusPair:
    """
    The (f, h, N_f) of (A3)/(A4): h is |a|^gamma or a callable.
    """
    def __init__ (self, f, gamma=None, h=None, zero_set=None):
        if (gamma is None) == (h is None):
            raise InputError("give exactly one of gamma and h")
        if gamma is not None and not gamma > 0:
            raise InputError("gamma must be positive, got <{}>".format(gamma))
        self.f = f
        self.gamma = None if gamma is None else float(gamma)
        self._h = h
        self.zero_set = zero_set if zero_set is not None else ZeroSet()

    def h (self, a):
        a = np.abs(np.asarray(a, dtype=float))
        if self.gamma is not None:
            return a ** self.gamma
        return np.broadcast_to(np.asarray(self._h(a), dtype=float), a.shape)

    def f_at (self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.f(x), dtype=float), x.shape)

    def describe (self):
        return {'f': describe_function(self.f), 'gamma': self.gamma,
                'h': None if self._h is None else describe_function(self._h),
                'zero_set': self.zero_set.describe()}


class ExperimentReport:
    """Metrics, refinement table and verdict of one experiment."""
    def __init__ (self, name, inputs=None):
        self.name = name
        self.inputs = inputs or {}
        self.metrics = []
        self.refinement_table = []
        self.notes = []
        self.artifacts = {}

    @property
    def verdict (self):
        return all(m.passed for m in self.metrics)

    def add_metric (self, label, value, tolerance, compare='le', **details):
        """
        Adds a metric, passed when value <= tolerance ('le'),
        value == tolerance ('eq') or lo <= value <= hi ('in').
        Extra keyword details are kept in the refinement table.
        """
        if compare == 'le':
            passed = bool(value <= tolerance)
        elif compare == 'eq':
            passed = bool(value == tolerance)
        elif compare == 'in':
            passed = bool(tolerance[0] <= value <= tolerance[1])
        else:
            raise InputError("unknown comparison <{}>".format(compare))
        self.metrics.append(Metric(label, value, tolerance, passed))
        if details:
            self.add_row(metric=label, **details)
        log.debug("%s: %s = %r (tolerance %r) %s", self.name, label, value, tolerance,
                  'pass' if passed else 'FAIL')
        return passed

    def add_row (self, **row):
        self.refinement_table.append(row)

    def note (self, text):
        log.info("%s: %s", self.name, text)
        self.notes.append(text)

    def as_dict (self):
        return _jsonable({'name': self.name, 'config': self.inputs,
                          'metrics': [m._asdict() for m in self.metrics],
                          'refinement_table': self.refinement_table,
                          'notes': self.notes, 'verdict': self.verdict})

    def dump_json (self, path):
        with open(path, 'w') as f:
            json.dump(self.as_dict(), f, indent=2, sort_keys=True)
            f.write('\n')

    def dump_csv (self, path):
        """Writes the refinement table (union of the row keys as columns)."""
        header = []
        for row in self.refinement_table:
            header.extend(k for k in row if k not in header)
        rows = ([_csv_cell(row.get(k, '')) for k in header] for row in self.refinement_table)
        write_csv(path, header, rows)

    def __repr__ (self):
        return "ExperimentReport({!r}, verdict={})".format(self.name, self.verdict)


def _csv_cell (value):
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(_jsonable(value))
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    return value
