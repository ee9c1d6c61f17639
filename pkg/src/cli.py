# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.


"""
skewsim command line: run a configured experiment, list the experiments,
print the config schema.

  skewsim run --config run.json [--seed N] [--out DIR] [--threads P]
              [--set key=value ...]
  skewsim list [NAME] [--json]
  skewsim schema

Exit status: 0 verdict passed, 2 verdict failed, 1 configuration or
input error.
"""


# std imports
import argparse
import collections
import difflib
import importlib.metadata
import json
import logging
import os
import platform
import sys
# local imports
from skewsim import const
from skewsim import engine
from skewsim import fk
from skewsim import runconfig
from skewsim import verify
from skewsim.simUtils import ConfigurationError, SkewSimError, file_hash, stable_hash


log = logging.getLogger(__name__)

Experiment = collections.namedtuple('Experiment', 'name sections exercises runner')


#############
# FUNCTIONS #
#############

def _grid (cfg):
    return engine.TimeGrid(cfg['grid']['horizon'], cfg['grid']['steps'])


def _common (cfg):
    return dict(domain=tuple(cfg['domain']), resolution=cfg['resolution'],
                threads=cfg['threads'])


def run_simulate (cfg, spec, nu):
    sec = cfg['simulate']
    return verify.simulation_experiment(
        spec, nu, sec.get('x0', 0.0), _grid(cfg), cfg['paths'], cfg['seed'],
        sec.get('scheme', const.TRANSFORM), sec.get('sign_law', False),
        sec.get('dump_paths', const.DUMP_PATHS), **_common(cfg))


def run_localtime (cfg, spec, nu):
    sec, tol = cfg['localtime'], cfg['tolerances']
    return verify.localtime_experiment(
        spec, nu, sec.get('x0', 0.0), sec.get('ladder', const.DEFAULT_LADDER),
        cfg['grid']['horizon'], cfg['paths'], cfg['seed'], sec.get('level', 0.0),
        sec.get('estimator', const.TANAKA), sec.get('convention', const.RIGHT),
        sec.get('factor'), sec.get('eps'), sec.get('pair_offset', const.PAIR_OFFSET),
        sec.get('oracle', False), tol['residual_rtol'], tol['lattice_rtol'],
        sec.get('scheme', const.TRANSFORM), **_common(cfg))


def run_uniqueness (cfg, spec, nu):
    sec = cfg['uniqueness']
    return verify.uniqueness_experiment(
        spec, nu, sec.get('x0', 0.0), sec.get('deltas', const.UNIQUENESS_DELTAS),
        sec.get('ladder', const.DEFAULT_LADDER), cfg['grid']['horizon'], cfg['paths'],
        cfg['seed'], tuple(sec.get('schemes', (const.TRANSFORM, const.ATOM))),
        cfg['tolerances']['uniqueness_threshold'], **_common(cfg))


def run_conditions (cfg, spec, nu):
    sec = cfg['conditions']
    pair = None
    if 'modulus' in sec:
        mod = sec['modulus']
        h = runconfig.build_function(mod['h']) if 'h' in mod else None
        try:
            pair = verify.ModulusPair(runconfig.build_function(mod['f']), mod.get('gamma'),
                                      h, runconfig.build_zero_set(mod.get('zero_set')))
        except SkewSimError as err:
            raise ConfigurationError("invalid modulus: {}".format(err))
    domain = tuple(sec.get('domain', const.SPEC_CHECK_DOMAIN))
    report = verify.conditions_experiment(
        spec, nu, pair, domain, [tuple(c) for c in sec.get('compacts', [domain])],
        sec.get('samples', const.MODULUS_SAMPLES), cfg['seed'],
        modulus_constant=sec.get('modulus_constant', const.SOBOLEV_MODULUS_CONSTANT))
    if 'support_n' in sec:
        sub = verify.check_support_condition(
            spec, sec['support_n'], tuple(sec.get('support_domain', (0.0, 5.0))),
            seed=cfg['seed'], cap=cfg['tolerances']['support_cap'])
        report.metrics.extend(sub.metrics)
    return report


def run_reflected (cfg, spec, nu):
    sec, tol = cfg['reflected'], cfg['tolerances']
    if not nu.is_zero:
        log.warning("reflected: the measure section is ignored")
    return verify.reflected_experiment(
        spec, sec.get('x0', 0.0), _grid(cfg), cfg['paths'], cfg['seed'], sec.get('n', 1),
        sec.get('pair_offset', const.PAIR_OFFSET),
        sec.get('support_delta', const.SUPPORT_DELTA), sec.get('oracle', False),
        tol['odd_power_rtol'], tol['support_fraction'],
        sec.get('dump_paths', const.DUMP_PATHS), threads=cfg['threads'])


def run_fk (cfg, spec, nu):
    sec = cfg['fk']
    desc = sec['payoff']
    g = None
    if desc.get('g') is not None:
        running = runconfig.build_function(desc['g'])
        g = lambda t, x: running(x)
        g.description = running.description
    try:
        payoff = fk.TerminalPayoff(runconfig.build_function(desc['f']), g,
                                   cfg['grid']['horizon'], desc.get('f_max'),
                                   desc.get('g_max'))
    except SkewSimError as err:
        raise ConfigurationError("invalid payoff: {}".format(err))
    return fk.fk_compare(spec, nu, payoff, [tuple(p) for p in sec['probes']], cfg['paths'],
                         cfg['grid']['steps'], tuple(sec.get('cells', (100, 200))),
                         cfg['seed'], **_common(cfg))


def run_continuity (cfg, spec, nu):
    sec = cfg['continuity']
    return verify.continuity_experiment(
        spec, nu, sec.get('x0', 0.0), sec['offsets'], sec['alpha'], sec['eps_level'],
        _grid(cfg), cfg['paths'], cfg['seed'], cfg['tolerances']['continuity_floor'],
        **_common(cfg))


def run_regularity (cfg, spec, nu):
    sec = cfg['regularity']
    return verify.time_regularity_experiment(
        spec, nu, sec.get('x0', 0.0), _grid(cfg), cfg['paths'], cfg['seed'],
        sec.get('scheme', const.TRANSFORM), slope_band=tuple(
            cfg['tolerances']['regularity_slope_band']), **_common(cfg))


def run_sobolev (cfg, spec, nu):
    sec = cfg['sobolev']
    return verify.check_sobolev_condition(
        spec, tuple(sec.get('domain', const.SPEC_CHECK_DOMAIN)),
        sec.get('resolution', const.SOBOLEV_RESOLUTION),
        sec.get('samples', const.MODULUS_SAMPLES), cfg['seed'],
        modulus_constant=sec.get('modulus_constant', const.SOBOLEV_MODULUS_CONSTANT))


def run_nakao (cfg, spec, nu):
    sec = cfg['nakao']
    return verify.nakao_check(spec, sec['eps_floor'], [tuple(c) for c in sec['compacts']],
                              tuple(sec.get('cells', const.NAKAO_CELLS)))


_REGISTRY = {e.name: e for e in (
    Experiment('simulate', ('spec', 'measure', 'grid'),
               'transform, atom, reflected and classical schemes', run_simulate),
    Experiment('localtime', ('spec', 'measure', 'grid', 'localtime'),
               'local time estimators, occupation formula, lattice identities',
               run_localtime),
    Experiment('uniqueness', ('spec', 'measure', 'grid', 'uniqueness'),
               'pathwise uniqueness under shared drivers', run_uniqueness),
    Experiment('conditions', ('spec', 'measure', 'conditions'),
               'existence and uniqueness hypotheses', run_conditions),
    Experiment('reflected', ('spec', 'grid', 'reflected'),
               'reflected equation, odd power identity, support of dL', run_reflected),
    Experiment('fk', ('spec', 'measure', 'grid', 'fk'),
               'Feynman-Kac value against the transformed PDE', run_fk),
    Experiment('continuity', ('spec', 'measure', 'grid', 'continuity'),
               'continuity in the initial condition', run_continuity),
    Experiment('regularity', ('spec', 'measure', 'grid', 'regularity'),
               'time regularity of the increments', run_regularity),
    Experiment('sobolev', ('spec', 'sobolev'),
               'Sobolev-type uniqueness criterion', run_sobolev),
    Experiment('nakao', ('spec', 'nakao'),
               'bounded variation criterion for 1/sigma', run_nakao),
)}

# listing order, a missing runner is a KeyError at import
EXPERIMENTS = collections.OrderedDict((name, _REGISTRY[name]) for name in const.EXPERIMENTS)

# experiments simulating the measure: their runs need the restricted strong pair
_SIMULATING = ('simulate', 'localtime', 'uniqueness', 'fk', 'continuity', 'regularity')


def list_experiments (as_json=False, name=None):
    """
    Returns the experiments table as text (or a json array).
    Raise KeyError if name is given and unknown.
    """
    rows = list(EXPERIMENTS.values())
    if name is not None:
        rows = [EXPERIMENTS[name]]
    if as_json:
        return json.dumps([{'name': e.name, 'sections': list(e.sections),
                            'exercises': e.exercises} for e in rows], indent=2)
    width = max(len(e.name) for e in rows)
    swidth = max(len(', '.join(e.sections)) for e in rows)
    return '\n'.join('{:<{}}  {:<{}}  {}'.format(e.name, width, ', '.join(e.sections),
                                                 swidth, e.exercises) for e in rows)


def _versions ():
    versions = {'python': platform.python_version(), const.PACKAGE_NAME: const.PACKAGE_VERSION}
    for pkg in ('numpy', 'scipy', 'jsonschema'):
        try:
            versions[pkg] = importlib.metadata.version(pkg)
        except importlib.metadata.PackageNotFoundError:
            versions[pkg] = 'unknown'
    return versions


def _snapshot (cfg):
    """The hashed config: everything but the execution knobs."""
    return {k: v for k, v in cfg.items() if k not in ('threads', 'output')}


def prepare_config (path, overrides=(), seed=None, out=None, threads=None, environ=None):
    """
    Returns the validated config of the file at path with the environment
    (SKEWSIM_SEED, SKEWSIM_OUT), the flags and the overrides applied, in
    this order of precedence (last wins).
    Raise ConfigurationError if something is wrong.
    """
    environ = os.environ if environ is None else environ
    if path is None:
        raise ConfigurationError("no config given, use --config PATH")
    config = runconfig.load_config(path)
    if not isinstance(config, dict):
        raise ConfigurationError("config <{}> is not a json object".format(path))
    if environ.get(const.ENV_SEED):
        try:
            config['seed'] = int(environ[const.ENV_SEED])
        except ValueError:
            raise ConfigurationError("{} is not an integer: <{}>".format(
                const.ENV_SEED, environ[const.ENV_SEED]))
    if environ.get(const.ENV_OUT):
        config['output'] = environ[const.ENV_OUT]
    for key, value in (('seed', seed), ('output', out), ('threads', threads)):
        if value is not None:
            config[key] = value
    config = runconfig.apply_overrides(config, overrides)
    return runconfig.validate_config(config)


def run (path, overrides=(), seed=None, out=None, threads=None, environ=None):
    """
    Runs the configured experiment and writes its artifacts.
    Returns the exit status (EXIT_OK, EXIT_VERDICT or EXIT_INPUT).
    """
    try:
        cfg = prepare_config(path, overrides, seed, out, threads, environ)
        spec = runconfig.build_spec(cfg['spec'])
        nu = runconfig.build_measure(cfg['measure'])
        name = cfg['experiment']
        if name in _SIMULATING:
            runconfig.check_run_measure(nu, spec.zero_set)
        log.info("running %s (seed %d, %d threads)", name, cfg['seed'], cfg['threads'])
        report = EXPERIMENTS[name].runner(cfg, spec, nu)
        write_artifacts(report, cfg)
    except SkewSimError as err:
        log.debug("run failed", exc_info=True)
        sys.stderr.write("skewsim: error: {}\n".format(err))
        return const.EXIT_INPUT
    log.info("%s verdict: %s", name, 'pass' if report.verdict else 'FAIL')
    return const.EXIT_OK if report.verdict else const.EXIT_VERDICT


def write_artifacts (report, cfg):
    """
    Writes report.json, the refinement table, the experiment artifacts
    and the manifest in the output directory of cfg.
    """
    out = cfg['output']
    os.makedirs(out, exist_ok=True)
    files = []
    report_data = report.as_dict()
    report_data['config'] = _snapshot(cfg)
    path = os.path.join(out, const.REPORT_FILE)
    with open(path, 'w') as f:
        json.dump(report_data, f, indent=2, sort_keys=True)
        f.write('\n')
    files.append(const.REPORT_FILE)
    name = '{}_refinement.csv'.format(report.name)
    report.dump_csv(os.path.join(out, name))
    files.append(name)
    for key in sorted(report.artifacts):
        name = '{}_{}.csv'.format(report.name, key)
        report.artifacts[key].dump_csv(os.path.join(out, name))
        files.append(name)
    manifest = {'config_hash': stable_hash(_snapshot(cfg)), 'seed': cfg['seed'],
                'experiment': report.name, 'verdict': report.verdict,
                'versions': _versions(),
                'artifacts': {f: file_hash(os.path.join(out, f)) for f in files}}
    with open(os.path.join(out, const.MANIFEST_FILE), 'w') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write('\n')
    for f in files:
        log.info("written %s", os.path.join(out, f))
    return manifest


def build_parser ():
    parser = argparse.ArgumentParser(
        prog=const.PACKAGE_NAME,
        description="Numerical lab for one-dimensional SDEs with local time.")
    parser.add_argument('--version', action='version',
                        version='%(prog)s {}'.format(const.PACKAGE_VERSION))
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='warnings only')
    sub = parser.add_subparsers(dest='command', required=True)
    prun = sub.add_parser('run', help='run a configured experiment')
    prun.add_argument('--config', metavar='PATH', help='json run configuration')
    prun.add_argument('--seed', type=int, help='master seed (overrides {})'.format(
        const.ENV_SEED))
    prun.add_argument('--out', metavar='DIR', help='output directory (overrides {})'.format(
        const.ENV_OUT))
    prun.add_argument('--threads', type=int, help='worker threads')
    prun.add_argument('--set', dest='overrides', action='append', default=[],
                      metavar='KEY=VALUE', help='dotted config key, json value (repeatable)')
    plist = sub.add_parser('list', help='list the experiments')
    plist.add_argument('name', nargs='?', help='show only this experiment')
    plist.add_argument('--json', action='store_true', help='machine-readable output')
    sub.add_parser('schema', help='print the json schema of run configurations')
    return parser


def main (argv=None):
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(stream=sys.stderr, level=level,
                        format='%(levelname)s %(name)s: %(message)s')
    if args.command == 'run':
        return run(args.config, args.overrides, args.seed, args.out, args.threads)
    if args.command == 'list':
        if args.name is not None and args.name not in EXPERIMENTS:
            close = difflib.get_close_matches(args.name, list(EXPERIMENTS), n=3, cutoff=0.4)
            sys.stderr.write("skewsim: unknown experiment <{}>{}\n".format(
                args.name, "; did you mean: {}".format(', '.join(close)) if close else ''))
            return const.EXIT_INPUT
        print(list_experiments(args.json, args.name))
        return const.EXIT_OK
    print(json.dumps(runconfig.CONFIG_SCHEMA, indent=2, sort_keys=True))
    return const.EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
