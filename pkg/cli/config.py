"""Configuration files merged under explicit command line flags.

A config file is either YAML (.yaml / .yml) or TSV (`key\\tvalue` per line,
`#` comments). YAML files may be a flat mapping or a mapping keyed by
subcommand ('pca fit', 'eval holidays', ...) whose values are flat mappings;
a flat top level applies to every subcommand. Keys are flag destinations
(`tau_pos`, `sample_cap`, ...).
"""

import argparse
import logging
from pathlib import Path

import yaml

from utils.errors import IoFailureError, ParseError, UsageError
from utils.io import read_key_values


def load_config(path):
    """Read a config file into a dict."""
    path = Path(path)
    if path.suffix in ('.yaml', '.yml'):
        try:
            with open(path, 'r') as f:
                config = yaml.safe_load(f)
        except OSError as e:
            raise IoFailureError('Could not read %s: %s' % (path, e)) from e
        except yaml.YAMLError as e:
            raise ParseError(path, '-', str(e)) from e
        if config is None:
            return {}
        if not isinstance(config, dict):
            raise ParseError(path, '-', 'top level must be a mapping')
        return config
    return read_key_values(path)


def section_for(config, command):
    """Flat settings for one subcommand.

    Args:
        config (dict): As returned by load_config.
        command (str): Space-separated subcommand, e.g. 'pca fit'.
    """
    settings = {
        key: value
        for key, value in config.items() if not isinstance(value, dict)
    }
    for key in (command, command.replace(' ', '_')):
        if isinstance(config.get(key), dict):
            settings.update(config[key])
    return settings


def _default_value(action, value):
    if value is None:
        return None
    if action.nargs == 0:
        # store_true / store_false flags
        if isinstance(value, bool):
            return value
        if str(value) in ('True', 'False'):
            return str(value) == 'True'
        raise UsageError('Config value for %s must be True or False, got %r' %
                         (action.dest, value))
    # Strings go through the action's type conversion when the flag is
    # absent, so validation matches explicit flags.
    return str(value)


def apply_config(parser, command, config):
    """Set parser defaults from a config; explicit flags still win.

    Args:
        parser (argparse.ArgumentParser): Leaf parser of `command`.
        command (str)
        config (dict)
    """
    settings = section_for(config, command)
    actions = {
        action.dest: action
        for action in parser._actions
        if not isinstance(action, argparse._HelpAction)
    }
    defaults = {}
    for key, value in sorted(settings.items()):
        key = key.replace('-', '_')
        if key == 'config':
            continue
        if key not in actions:
            logging.debug('Config key %s is not used by %s', key, command)
            continue
        action = actions[key]
        defaults[key] = _default_value(action, value)
        action.required = False
    parser.set_defaults(**defaults)
    return defaults
