# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.


"""
Run configurations: the published JSON schema, overrides and the
builders of functions, zero sets, measures and diffusion specs from
their json descriptions.

A function description is {"kind": ..., ...}:
  const       value
  linear      slope, intercept
  abs_power   offset + scale * min(|x - center|^power, cap)
  indicator   value on [lo, hi), other elsewhere
  step        values[i] on [points[i-1], points[i]) (right-continuous)
  tanh        offset + scale * tanh(rate * (x - center))
  sin         offset + amplitude * sin(frequency * x + phase)
  table       linear interpolation of (xs, ys), constant outside
  plugin      module, name, paths, params (see skewsim.plugins)
Every built function carries its description in the .description
attribute, which is what the reports record.
"""


# std imports
import copy
import json
import logging
import math
# local imports
from skewsim import const
from skewsim import plugins
from skewsim.measure import (DensityPiece, SignedMeasure, check_measure_conditions,
                             restrict)
from skewsim.simUtils import ConfigurationError, InputError, ZeroSet
from skewsim.transform import DiffusionSpec
# external imports
import jsonschema
import numpy as np


log = logging.getLogger(__name__)

_NUMBER = {'type': 'number'}
_PAIR = {'type': 'array', 'items': _NUMBER, 'minItems': 2, 'maxItems': 2}
_POSITIVE_INT = {'type': 'integer', 'minimum': 1}
_LADDER = {'type': 'array', 'items': _POSITIVE_INT, 'minItems': 2}

FUNCTION_KINDS = {
    'const': ({'value': _NUMBER}, ('value',)),
    'linear': ({'slope': _NUMBER, 'intercept': _NUMBER}, ()),
    'abs_power': ({'power': _NUMBER, 'scale': _NUMBER, 'center': _NUMBER,
                   'offset': _NUMBER, 'cap': _NUMBER}, ('power',)),
    'indicator': ({'lo': _NUMBER, 'hi': _NUMBER, 'value': _NUMBER, 'other': _NUMBER}, ()),
    'step': ({'points': {'type': 'array', 'items': _NUMBER},
              'values': {'type': 'array', 'items': _NUMBER, 'minItems': 1}},
             ('points', 'values')),
    'tanh': ({'scale': _NUMBER, 'rate': _NUMBER, 'center': _NUMBER, 'offset': _NUMBER}, ()),
    'sin': ({'amplitude': _NUMBER, 'frequency': _NUMBER, 'phase': _NUMBER,
             'offset': _NUMBER}, ()),
    'table': ({'xs': {'type': 'array', 'items': _NUMBER, 'minItems': 2},
               'ys': {'type': 'array', 'items': _NUMBER, 'minItems': 2}}, ('xs', 'ys')),
    'plugin': ({'module': {'type': 'string'}, 'name': {'type': 'string'},
                'paths': {'type': 'array', 'items': {'type': 'string'}},
                'params': {'type': 'object'}}, ('module', 'name')),
}

FUNCTION_SCHEMA = {'oneOf': [
    {'type': 'object',
     'properties': dict(props, kind={'const': kind}),
     'required': ['kind'] + list(required),
     'additionalProperties': False}
    for kind, (props, required) in FUNCTION_KINDS.items()]}

ZERO_SET_SCHEMA = {
    'type': 'object',
    'properties': {'points': {'type': 'array', 'items': _NUMBER},
                   'intervals': {'type': 'array', 'items': _PAIR}},
    'additionalProperties': False}

MEASURE_SCHEMA = {
    'type': 'object',
    'properties': {
        'atoms': {'type': 'array', 'items': {
            'type': 'object', 'properties': {'a': _NUMBER, 'alpha': _NUMBER},
            'required': ['a', 'alpha'], 'additionalProperties': False}},
        'density': {'type': 'array', 'items': {
            'type': 'object',
            'properties': {'lo': _NUMBER, 'hi': _NUMBER,
                           'kind': {'enum': ['const', 'poly', 'table', 'function']},
                           'data': {}},
            'required': ['lo', 'hi', 'kind', 'data'], 'additionalProperties': False}}},
    'additionalProperties': False}

SPEC_SCHEMA = {
    'type': 'object',
    'properties': {'name': {'type': 'string'},
                   'sigma': FUNCTION_SCHEMA,
                   'zero_set': ZERO_SET_SCHEMA,
                   'drift': {'oneOf': [{'type': 'null'}, FUNCTION_SCHEMA]},
                   'drift_zero_set': ZERO_SET_SCHEMA,
                   'growth_bound': {'oneOf': [{'type': 'null'}, _PAIR]}},
    'required': ['sigma'],
    'additionalProperties': False}

GRID_SCHEMA = {
    'type': 'object',
    'properties': {'horizon': {'type': 'number', 'exclusiveMinimum': 0},
                   'steps': _POSITIVE_INT},
    'additionalProperties': False}

_SCHEME = {'enum': list(const.SCHEMES)}
_COMPACTS = {'type': 'array', 'items': _PAIR, 'minItems': 1}

SECTION_SCHEMAS = {
    'simulate': {'x0': _NUMBER, 'scheme': _SCHEME, 'sign_law': {'type': 'boolean'},
                 'dump_paths': _POSITIVE_INT},
    'localtime': {'x0': _NUMBER, 'ladder': _LADDER, 'level': _NUMBER,
                  'estimator': {'enum': list(const.ESTIMATORS)},
                  'convention': {'enum': list(const.CONVENTIONS)},
                  'factor': {'type': 'number', 'exclusiveMinimum': 0},
                  'eps': {'type': 'number', 'exclusiveMinimum': 0},
                  'pair_offset': _NUMBER, 'oracle': {'type': 'boolean'}, 'scheme': _SCHEME},
    'uniqueness': {'x0': _NUMBER, 'ladder': _LADDER,
                   'deltas': {'type': 'array', 'items': _NUMBER},
                   'schemes': {'type': 'array', 'items': _SCHEME,
                               'minItems': 2, 'maxItems': 2}},
    'conditions': {'modulus': {
                       'type': 'object',
                       'properties': {'f': FUNCTION_SCHEMA,
                                      'gamma': {'type': 'number', 'exclusiveMinimum': 0},
                                      'h': FUNCTION_SCHEMA, 'zero_set': ZERO_SET_SCHEMA},
                       'required': ['f'], 'additionalProperties': False},
                   'domain': _PAIR, 'compacts': _COMPACTS, 'samples': _POSITIVE_INT,
                   'support_n': _POSITIVE_INT, 'support_domain': _PAIR},
    'reflected': {'x0': {'type': 'number', 'minimum': 0}, 'n': _POSITIVE_INT,
                  'pair_offset': {'type': 'number', 'minimum': 0},
                  'support_delta': {'type': 'number', 'exclusiveMinimum': 0},
                  'oracle': {'type': 'boolean'}, 'dump_paths': _POSITIVE_INT},
    'fk': {'payoff': {
               'type': 'object',
               'properties': {'f': FUNCTION_SCHEMA,
                              'g': {'oneOf': [{'type': 'null'}, FUNCTION_SCHEMA]},
                              'f_max': _NUMBER, 'g_max': _NUMBER},
               'required': ['f'], 'additionalProperties': False},
           'probes': {'type': 'array', 'items': _PAIR, 'minItems': 1},
           'cells': {'type': 'array', 'items': {'type': 'integer', 'minimum': 2},
                     'minItems': 2, 'maxItems': 2}},
    'continuity': {'x0': _NUMBER, 'offsets': {'type': 'array', 'items': _NUMBER,
                                              'minItems': 1},
                   'alpha': {'type': 'number', 'exclusiveMinimum': 0, 'maximum': 0.5},
                   'eps_level': {'type': 'number', 'exclusiveMinimum': 0}},
    'regularity': {'x0': _NUMBER, 'scheme': _SCHEME},
    'sobolev': {'domain': _PAIR, 'resolution': _POSITIVE_INT, 'samples': _POSITIVE_INT,
                'modulus_constant': {'type': 'number', 'exclusiveMinimum': 0}},
    'nakao': {'eps_floor': {'type': 'number', 'exclusiveMinimum': 0},
              'compacts': _COMPACTS,
              'cells': {'type': 'array', 'items': _POSITIVE_INT, 'minItems': 3}},
}

# required keys of each experiment section
SECTION_REQUIRED = {
    'fk': ('payoff', 'probes'),
    'continuity': ('offsets', 'alpha', 'eps_level'),
    'nakao': ('eps_floor', 'compacts'),
}

TOLERANCES = {
    'uniqueness_threshold': const.UNIQUENESS_THRESHOLD,
    'continuity_floor': const.CONTINUITY_FLOOR,
    'support_cap': const.SUPPORT_CONSTANT_CAP,
    'regularity_slope_band': list(const.REGULARITY_SLOPE_BAND),
    'residual_rtol': const.RESIDUAL_RTOL,
    'lattice_rtol': const.LATTICE_RTOL,
    'odd_power_rtol': const.ODD_POWER_RTOL,
    'support_fraction': const.SUPPORT_FRACTION,
}

CONFIG_SCHEMA = {
    '$schema': 'http://json-schema.org/draft-07/schema#',
    'title': 'skewsim run configuration',
    'type': 'object',
    'properties': dict({
        'experiment': {'enum': list(const.EXPERIMENTS)},
        'spec': SPEC_SCHEMA,
        'measure': MEASURE_SCHEMA,
        'grid': GRID_SCHEMA,
        'paths': _POSITIVE_INT,
        'seed': {'type': 'integer', 'minimum': 0},
        'threads': _POSITIVE_INT,
        'domain': _PAIR,
        'resolution': {'type': 'integer', 'minimum': 2},
        'output': {'type': 'string'},
        'tolerances': {
            'type': 'object',
            'properties': {k: (_PAIR if isinstance(v, list) else _NUMBER)
                           for k, v in TOLERANCES.items()},
            'additionalProperties': False},
    }, **{name: {'type': 'object', 'properties': props,
                 'required': list(SECTION_REQUIRED.get(name, ())),
                 'additionalProperties': False}
          for name, props in SECTION_SCHEMAS.items()}),
    'required': ['experiment', 'spec'],
    'additionalProperties': False,
}

DEFAULTS = {'measure': {}, 'grid': {'horizon': 1.0, 'steps': 1024}, 'paths': 256,
            'seed': 0, 'threads': 1, 'domain': list(const.DEFAULT_DOMAIN),
            'resolution': const.DEFAULT_RESOLUTION, 'output': 'skewsim-out',
            'tolerances': {}}


#############
# FUNCTIONS #
#############

def validate_config (config):
    """
    Returns config with the defaults filled in.
    Raise ConfigurationError if config does not match CONFIG_SCHEMA.
    """
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        where = '.'.join(map(str, err.absolute_path)) or '<root>'
        raise ConfigurationError("invalid config at {}: {}".format(where, err.message))
    full = copy.deepcopy(DEFAULTS)
    full.update(copy.deepcopy(config))
    full['grid'] = dict(DEFAULTS['grid'], **full['grid'])
    full['tolerances'] = dict(TOLERANCES, **full['tolerances'])
    section = full.setdefault(full['experiment'], {})
    missing = [k for k in SECTION_REQUIRED.get(full['experiment'], ()) if k not in section]
    if missing:
        raise ConfigurationError("section <{}> needs {}".format(
            full['experiment'], ', '.join(missing)))
    return full


def load_config (path):
    """Reads the json config at path. Raise ConfigurationError if unreadable."""
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, ValueError) as err:
        raise ConfigurationError("cannot read config <{}>: {}".format(path, err))


def parse_override (text):
    """
    Returns (keys, value) from 'dotted.key=value', value parsed as json
    (plain text if it is not json).
    """
    key, sep, raw = text.partition('=')
    if not sep or not key.strip():
        raise ConfigurationError("malformed override <{}>, expected key=value".format(text))
    try:
        value = json.loads(raw)
    except ValueError:
        value = raw
    return key.strip().split('.'), value


def apply_overrides (config, overrides):
    """Returns a copy of config with the 'dotted.key=value' overrides set."""
    config = copy.deepcopy(config)
    for text in overrides:
        keys, value = parse_override(text)
        node = config
        for key in keys[:-1]:
            child = node.setdefault(key, {})
            if not isinstance(child, dict):
                raise ConfigurationError("override <{}>: <{}> is not a section".format(
                    text, key))
            node = child
        node[keys[-1]] = value
    return config


def _described (func, desc):
    func.description = desc
    return func


def build_function (desc):
    """Returns the vectorized function of the description desc."""
    kind = desc.get('kind')
    if kind == 'const':
        value = float(desc['value'])
        func = lambda x: np.full(np.shape(x), value)
    elif kind == 'linear':
        slope, intercept = float(desc.get('slope', 1.0)), float(desc.get('intercept', 0.0))
        func = lambda x: slope * np.asarray(x, dtype=float) + intercept
    elif kind == 'abs_power':
        power = float(desc['power'])
        scale, center = float(desc.get('scale', 1.0)), float(desc.get('center', 0.0))
        offset, cap = float(desc.get('offset', 0.0)), float(desc.get('cap', math.inf))
        if power < 0:
            raise ConfigurationError("abs_power needs power >= 0, got <{}>".format(power))
        func = lambda x: offset + scale * np.minimum(
            np.abs(np.asarray(x, dtype=float) - center) ** power, cap)
    elif kind == 'indicator':
        lo, hi = float(desc.get('lo', -math.inf)), float(desc.get('hi', math.inf))
        value, other = float(desc.get('value', 1.0)), float(desc.get('other', 0.0))
        func = lambda x: np.where((np.asarray(x) >= lo) & (np.asarray(x) < hi), value, other)
    elif kind == 'step':
        points = np.asarray(desc['points'], dtype=float)
        values = np.asarray(desc['values'], dtype=float)
        if values.size != points.size + 1 or np.any(np.diff(points) <= 0):
            raise ConfigurationError("step needs increasing points and one more value")
        func = lambda x: values[np.searchsorted(points, x, side='right')]
    elif kind == 'tanh':
        scale, rate = float(desc.get('scale', 1.0)), float(desc.get('rate', 1.0))
        center, offset = float(desc.get('center', 0.0)), float(desc.get('offset', 0.0))
        func = lambda x: offset + scale * np.tanh(rate * (np.asarray(x, dtype=float) - center))
    elif kind == 'sin':
        amp, freq = float(desc.get('amplitude', 1.0)), float(desc.get('frequency', 1.0))
        phase, offset = float(desc.get('phase', 0.0)), float(desc.get('offset', 0.0))
        func = lambda x: offset + amp * np.sin(freq * np.asarray(x, dtype=float) + phase)
    elif kind == 'table':
        xs, ys = np.asarray(desc['xs'], dtype=float), np.asarray(desc['ys'], dtype=float)
        if xs.shape != ys.shape or np.any(np.diff(xs) <= 0):
            raise ConfigurationError("table needs increasing xs and as many ys")
        func = lambda x: np.interp(x, xs, ys)
    elif kind == 'plugin':
        try:
            factory = plugins.load_plugin(desc['name'], desc['module'], desc.get('paths'))
        except plugins.LoadPluginError as err:
            raise ConfigurationError("cannot load plugin <{}>: {}".format(desc['name'], err))
        try:
            func = factory(**desc.get('params', {}))
        except TypeError as err:
            raise ConfigurationError("bad plugin params for <{}>: {}".format(desc['name'], err))
        if not callable(func):
            raise ConfigurationError("plugin <{}> did not return a function".format(
                desc['name']))
    else:
        raise ConfigurationError("unknown function kind <{}>".format(kind))
    return _described(func, copy.deepcopy(desc))


def build_zero_set (desc):
    desc = desc or {}
    try:
        return ZeroSet(desc.get('points', ()), desc.get('intervals', ()))
    except InputError as err:
        raise ConfigurationError(str(err))


def build_measure (desc):
    """Returns the SignedMeasure of the description (SignedMeasure.describe format)."""
    desc = desc or {}
    try:
        atoms = [(a['a'], a['alpha']) for a in desc.get('atoms', ())]
        pieces = []
        for p in desc.get('density', ()):
            data = build_function(p['data']) if p['kind'] == 'function' else p['data']
            pieces.append(DensityPiece(p['lo'], p['hi'], p['kind'], data))
        return SignedMeasure(atoms, pieces)
    except (InputError, KeyError, TypeError) as err:
        raise ConfigurationError("invalid measure: {}".format(err))


def build_spec (desc):
    """Returns the DiffusionSpec of the description (DiffusionSpec.describe format)."""
    drift = desc.get('drift')
    try:
        return DiffusionSpec(build_function(desc['sigma']),
                             zero_set=build_zero_set(desc.get('zero_set')),
                             drift=None if drift is None else build_function(drift),
                             drift_zero_set=build_zero_set(desc.get('drift_zero_set')),
                             growth_bound=desc.get('growth_bound'),
                             name=desc.get('name', 'spec'))
    except InputError as err:
        raise ConfigurationError("invalid spec: {}".format(err))


def check_run_measure (nu, zero_set):
    """
    Raise ConfigurationError citing the first violated condition if nu
    fails the weakened pair relative to zero_set, or if its restriction
    to the complement of zero_set fails the strong pair (A1), (A2).
    """
    weak = check_measure_conditions(nu, zero_set)
    strong = check_measure_conditions(restrict(nu, zero_set), zero_set)
    for report, cond, name in ((weak, 'A1-weak', 'A1'), (weak, 'A2-weak', 'A2'),
                               (strong, 'A1', 'A1'), (strong, 'A2', 'A2')):
        if not report.holds(cond):
            raise ConfigurationError("measure violates ({}) at <{}>".format(
                name, report.witnesses(cond)))
