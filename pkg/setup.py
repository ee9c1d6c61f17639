# -*- coding: utf-8 -*-
# Setup file for skewsim.
# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2011  Marco Chieppa (aka crap0101)
# See the file COPYING.txt in the root directory of this package.

import os
import os.path as op_
from setuptools import setup


MODULE_NAME = 'skewsim'
MODULE_VERSION = '0.1.0'

if __name__ == '__main__':
    os.chdir(op_.dirname(op_.realpath(__file__)))
    setup(
        name=MODULE_NAME,
        version=MODULE_VERSION,
        description="numerical lab for one-dimensional SDEs with local time",
        author='Marco Chieppa (aka crap0101)',
        author_email='crap0101@riseup.net',
        maintainer='Marco Chieppa (aka crap0101)',
        maintainer_email='crap0101@riseup.net',
        license='MIT-like License',
        platforms=['platform independent'],
        python_requires='>=3.8',
        install_requires=['numpy>=1.22', 'scipy>=1.6', 'jsonschema>=3.2'],
        package_dir={'skewsim': 'src'},
        packages=['skewsim', 'skewsim.plugins'],
        entry_points={'console_scripts': ['skewsim = skewsim.cli:main']},
        )
