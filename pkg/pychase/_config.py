# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import yaml


class ConfigError(ValueError):
    pass


def normalize_key(key):
    return str(key).strip().lstrip('-').replace('-', '_')


def load_config(path, allowed=None):
    """Read a YAML mapping of option names to values.

    Keys may be written as flag names (``deg-max``) or as identifiers
    (``deg_max``) and are returned in identifier form. When `allowed` is
    given, any other key is an error.
    """
    try:
        with open(str(path)) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        raise ConfigError('%s is not valid YAML: %s' % (path, e)) from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError('%s must hold a mapping of options, got %s.'
                          % (path, type(data).__name__))

    config = {normalize_key(k): v for k, v in data.items()}
    if allowed is not None:
        unknown = sorted(set(config) - set(allowed))
        if unknown:
            raise ConfigError('Unknown option(s) in %s: %s.'
                              % (path, ', '.join(unknown)))
    return config
