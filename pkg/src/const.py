# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.


"""
skewsim constants.
"""

PACKAGE_NAME = 'skewsim'
PACKAGE_VERSION = '0.1.0'

# integration and divergence guards
INTEGRAL_ATOL = 1e-10
DIVERGENCE_GUARD = 1e12
I_SIGMA_GUARD = 1e10
I_SIGMA_RADII = (2.0 ** -4, 2.0 ** -6, 2.0 ** -8)
I_SIGMA_CELLS = 4096
A3_LOWER_LIMITS = (1e-2, 1e-4, 1e-6)
ZERO_FLOOR = 1e-8
IMAG_RTOL = 1e-8

# transform
DEFAULT_DOMAIN = (-10.0, 10.0)
DEFAULT_RESOLUTION = 4096
SPEC_CHECK_DOMAIN = (-5.0, 5.0)
SPEC_CHECK_SAMPLES = 1001

# engine
MAX_ELEMENTS = 2 ** 26
BLOCK_PATHS = 512
INFLUENCE_SIGMAS = 6.0
MAX_EXIT_FRACTION = 1e-3

# schemes
TRANSFORM = 'transform'
ATOM = 'atom'
REFLECTED = 'reflected'
CLASSICAL = 'classical'
SCHEMES = (TRANSFORM, ATOM, REFLECTED, CLASSICAL)

# local time
OCCUPATION = 'occupation'
TANAKA = 'tanaka'
ESTIMATORS = (OCCUPATION, TANAKA)
RIGHT = 'right'
SYMMETRIC = 'symmetric'
CONVENTIONS = (RIGHT, SYMMETRIC)
TANAKA_FACTORS = {RIGHT: 2.0, SYMMETRIC: 1.0}
BANDWIDTH_EXPONENT = 0.4
LEVEL_QUANTILES = 65
LEVEL_SPACING = 0.25 # fraction of the bandwidth

# experiments, in listing order
EXPERIMENTS = ('simulate', 'localtime', 'uniqueness', 'conditions', 'reflected',
               'fk', 'continuity', 'regularity', 'sobolev', 'nakao')

# verify
MONOTONE_SLACK = 1e-12
UNIQUENESS_DELTAS = (1e-2, 1e-3, 1e-4)
UNIQUENESS_THRESHOLD = 5e-2
MODULUS_SAMPLES = 10 ** 5
SOBOLEV_MODULUS_CONSTANT = 10.0
REGULARITY_SE_FACTOR = 4.0
SUPPORT_CONSTANT_CAP = 1e6
NAKAO_TV_RTOL = 0.01
REGULARITY_C_FACTOR = 1.1
REGULARITY_SLOPE_BAND = (0.9, 1.1)
CONTINUITY_FLOOR = 0.05
L2_CELLS = (2 ** 12, 2 ** 16, 2 ** 20)
NAKAO_CELLS = (2 ** 12, 2 ** 14, 2 ** 16)
SOBOLEV_RESOLUTION = 2 ** 12
REGULARITY_STARTS = 16
SUPPORT_SAMPLES = 10 ** 4
DEFAULT_LADDER = (2 ** 10, 2 ** 12, 2 ** 14)
DUMP_PATHS = 16
PAIR_OFFSET = 0.5
ORACLE_SE_FACTOR = 3.0
SIGN_LAW_SE_FACTOR = 4.0
RESIDUAL_RTOL = 0.05
LATTICE_RTOL = 0.10
ODD_POWER_RTOL = 0.10
SUPPORT_DELTA = 0.05
SUPPORT_FRACTION = 0.1
REFLECTED_CORRECTION = 0.5826 # -zeta(1/2)/sqrt(2 pi), overshoot of the projected walk

# fk
FK_INTERIOR_CELLS = 10
FK_ABS_FLOOR = 1e-9
FK_SE_FACTOR = 3.0
PDE_MARGIN_SIGMAS = 6.0
CFL_SAFETY = 0.9

# cli
EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VERDICT = 2
ENV_SEED = 'SKEWSIM_SEED'
ENV_OUT = 'SKEWSIM_OUT'
REPORT_FILE = 'report.json'
MANIFEST_FILE = 'manifest.json'
