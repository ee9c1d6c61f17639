# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.

"""
Coefficient functions outside the built-in families, loadable from a
run configuration as {"kind": "plugin", "module": "coefficients", ...}.
"""

# external imports
import numpy as np


MODULE_PLUGINS = ['oscillating_sigma', 'sqrt_sigma', 'log_modulus', 'smooth_indicator']


def _described (func, name, params):
    func.description = {'kind': 'plugin', 'module': 'coefficients',
                        'name': name, 'params': params}
    return func


def oscillating_sigma (scale=1.0):
    """1 + scale |sin(1/x)|, with value 1 at 0: bounded below, not of
    bounded variation near 0."""
    def sigma (x):
        x = np.asarray(x, dtype=float)
        safe = np.where(x == 0, 1.0, x)
        return np.where(x == 0, 1.0, 1.0 + scale * np.abs(np.sin(1.0 / safe)))
    return _described(sigma, 'oscillating_sigma', {'scale': scale})


def sqrt_sigma (center=0.0, cap=1.0):
    """min(|x - center|^(1/2), cap), vanishing at center only."""
    def sigma (x):
        return np.minimum(np.sqrt(np.abs(np.asarray(x, dtype=float) - center)), cap)
    return _described(sigma, 'sqrt_sigma', {'center': center, 'cap': cap})


def log_modulus (scale=1.0):
    """h(a) = scale |a| log(1/|a|) on |a| < 1/e, scale/e elsewhere."""
    bound = np.exp(-1.0)
    def h (a):
        a = np.abs(np.asarray(a, dtype=float))
        safe = np.clip(a, np.finfo(float).tiny, bound)
        return np.where(a < bound, scale * safe * np.log(1.0 / safe), scale * bound)
    return _described(h, 'log_modulus', {'scale': scale})


def smooth_indicator (lo=0.0, hi=np.inf, width=0.1):
    """Logistic smoothing of the indicator of [lo, hi)."""
    def f (x):
        x = np.asarray(x, dtype=float)
        up = 0.5 * (1.0 + np.tanh((x - lo) / (2 * width)))
        if np.isinf(hi):
            return up
        return up * 0.5 * (1.0 + np.tanh((hi - x) / (2 * width)))
    return _described(f, 'smooth_indicator', {'lo': lo, 'hi': hi, 'width': width})
