# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.

"""
skewsim: numerical lab for one-dimensional SDEs with local time terms.
"""
