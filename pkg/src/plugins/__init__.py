# -*- coding: utf-8 -*-

# This file is part of skewsim and is released under a MIT-like license
# Copyright (c) 2010-2024  Marco Chieppa (aka crap0101)
# See the file COPYING in the root directory of this package.

"""
Load coefficient plugins in skewsim.

Each plugin module can have a module-level variable called "MODULE_PLUGINS"
as a sequence of plugin's object names, each one a factory: called with
the keyword parameters of a config description it returns the
coefficient function (a callable on numpy arrays).
"""

# std imports
import fnmatch
import glob
import importlib
import importlib.util
import os
import sys


class LoadPluginError (Exception):
    pass


def get_module (module, paths=None):
    """Returns the module found in paths or None.

    module => module name to get.
    paths  => a sequence of paths in which search the module.
              If omitted or None, search in the default plugins
              location, then in sys.path.
    """
    if paths is None:
        found = get_module(module, [os.path.dirname(__file__)])
        if found is not None:
            return found
        return importlib.import_module(module)
    for path in paths:
        for p in find_plugins(path):
            if os.path.splitext(os.path.basename(p))[0] != module.rpartition('.')[2]:
                continue
            spec = importlib.util.spec_from_file_location(module, p)
            if spec is not None:
                mod = importlib.util.module_from_spec(spec)
                sys.modules[module] = mod
                spec.loader.exec_module(mod)
                return mod
    return None


def find_plugins (path=None):
    """Returns the plugin files (*.py but __init__.py) in path."""
    if path is None:
        path = os.path.dirname(__file__)
    modules = [p for p in glob.glob(os.path.join(path, '*.py'))
               if not fnmatch.fnmatch(os.path.basename(p), '__init__.py')]
    return tuple(sorted(modules))


def find_plugin_modules (path=None):
    """Returns a list of plugin modules found in path.

    path => path to a directory containing plugin modules.
            If not provided or None, search in the default
            location.
    """
    modules = [os.path.splitext(os.path.basename(f))[0]
               for f in find_plugins(path)]
    return tuple(modules)


def load_plugin (name, module, paths=None):
    """Returns the plugin's object name from module in paths.
    Raise a LoadPluginError exception if something goes wrong.

    name   => plugin's object name, listed in the module's MODULE_PLUGINS.
    module => plugin's module
    paths  => a sequence of path in which search for the plugin. If omitted
              or None, default to the plugins package then sys.path.
    """
    try:
        mod = get_module(module, paths)
    except Exception as err:
        raise LoadPluginError(err)
    if mod is None:
        raise LoadPluginError("plugin module <{}> not found in <{}>".format(module, paths))
    exported = getattr(mod, 'MODULE_PLUGINS', None)
    if exported is not None and name not in exported:
        raise LoadPluginError("<{}> is not listed in {}.MODULE_PLUGINS".format(name, module))
    try:
        return getattr(mod, name)
    except AttributeError as err:
        raise LoadPluginError(err)
