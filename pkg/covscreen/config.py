# -*- coding:utf-8 -*-

"""
Flat key-value run configuration for the command line. A JSON file supplies
values whose keys mirror the long flag names; explicit flags win over the
file, the file wins over schema defaults.
"""

import json
import os

from .errors import ConfigError


class Option(object):

    def __init__(self, name, kind, default=None, required=False, check=None, choices=None):
        self.name = name
        self.kind = kind
        self.default = default
        self.required = required
        self.check = check
        self.choices = choices

    def convert(self, value):
        if value is None:
            return None
        try:
            if self.kind is bool:
                if isinstance(value, str):
                    lowered = value.strip().lower()
                    if lowered not in ('true', 'false', '1', '0', 'yes', 'no'):
                        raise ValueError(value)
                    return lowered in ('true', '1', 'yes')
                return bool(value)
            if self.kind is list:
                if isinstance(value, str):
                    return [item.strip() for item in value.split(',') if item.strip()]
                return [str(item) for item in value]
            if self.kind is int and isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return self.kind(value)
        except (TypeError, ValueError):
            raise ConfigError('%s expects a %s, got %r' % (self.name, self.kind.__name__, value), keys=[self.name])

    def validate(self, value):
        if value is None:
            return
        if self.choices is not None and value not in self.choices:
            raise ConfigError('%s must be one of %s, got %r' % (self.name, ', '.join(map(str, self.choices)), value),
                              keys=[self.name])
        if self.check is not None:
            message = self.check(value)
            if message:
                raise ConfigError('%s %s, got %r' % (self.name, message, value), keys=[self.name])


def _positive(value):
    return None if value > 0 else 'must be positive'


def _at_least_one(value):
    return None if value >= 1 else 'must be at least 1'


def _non_negative(value):
    return None if value >= 0 else 'must be non-negative'


def _open_unit(value):
    return None if 0 < value < 1 else 'must lie in (0, 1)'


def _frequency(value):
    return None if 0 < value <= 1 else 'must lie in (0, 1]'


def _correlation(value):
    return None if -1 < value < 1 else 'must lie in (-1, 1)'


COMMON_OPTIONS = [
    Option('seed', int, 0, check=_non_negative),
    Option('threads', int, None, check=_at_least_one),
    Option('out_dir', str, '.'),
    Option('log_level', str, 'INFO', choices=('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')),
    Option('timings', bool, False),
]

PARTITION_OPTIONS = [
    Option('delta', float, None, check=_positive),
    Option('delta_multiplier', float, 5.0, check=_positive),
    Option('cap', int, None, check=_at_least_one),
]

SCHEMAS = {
    'simulate': [
        Option('model', str, None, required=True, choices=('A', 'B', 'C', 'D', 'E')),
        Option('n', int, None, check=_at_least_one),
        Option('p', int, None, check=_at_least_one),
        Option('m', int, None, check=_at_least_one),
        Option('rho', float, None, check=_correlation),
        Option('beta_mag', float, 1.0, check=_positive),
        Option('kappa', float, 0.975, check=_positive),
        Option('pi', float, 0.2),
        Option('theta', float, 0.35, check=_positive),
        Option('sigma', float, 1.0, check=_non_negative),
    ],
    'screen': [
        Option('input', str, None, required=True),
        Option('response', str, 'y'),
        Option('method', str, 'CIS', choices=('CIS', 'SIS', 'HOLP')),
        Option('top_k', int, None, check=_at_least_one),
        Option('threshold', float, None, check=_positive),
    ] + PARTITION_OPTIONS,
    'icis': [
        Option('input', str, None, required=True),
        Option('response', str, 'y'),
        Option('B', int, 50, check=_at_least_one),
        Option('q', float, 0.1, check=_open_unit),
        Option('n_perm', int, 20, check=_at_least_one),
        Option('null_B', int, None, check=_at_least_one),
        Option('max_iter', int, 5, check=_at_least_one),
        Option('screen_k', int, None, check=_at_least_one),
        Option('screener', str, 'CIS', choices=('CIS', 'SIS', 'HOLP')),
        Option('freeze_partition', bool, False),
        Option('criterion', str, 'bic', choices=('bic', 'cv')),
        Option('gamma', float, 1.0, check=_positive),
        Option('ebic_gamma', float, 1.0, check=_non_negative),
    ] + PARTITION_OPTIONS,
    'bench': [
        Option('preset', str, None, required=True),
        Option('methods', list, None),
        Option('reps', int, None, check=_non_negative),
        Option('B', int, None, check=_at_least_one),
        Option('q', float, None, check=_open_unit),
        Option('psi', float, None, check=_frequency),
        Option('n_perm', int, None, check=_at_least_one),
        Option('cap', int, None, check=_at_least_one),
    ],
}

# keys the simulate command needs per model, beyond 'model' itself
MODEL_REQUIRED = {
    'A': ('n', 'p', 'm', 'rho'),
    'B': ('n', 'p', 'm', 'rho'),
    'C': ('n', 'p', 'rho'),
    'D': ('n', 'p', 'm'),
    'E': ('p',),
}

UPPERCASE_VALUES = ('model', 'method', 'screener', 'log_level')


def _normalize_key(key):
    return str(key).strip().lstrip('-').replace('-', '_')


def load_config_file(path: str):
    if not os.path.isfile(path):
        raise ConfigError('config file not found: %s' % path, keys=['config'])
    with open(path) as fp:
        try:
            values = json.load(fp)
        except ValueError as e:
            raise ConfigError('config file %s is not valid JSON: %s' % (path, e), keys=['config'])
    if not isinstance(values, dict):
        raise ConfigError('config file %s must hold a JSON object' % path, keys=['config'])
    return {_normalize_key(k): v for k, v in values.items()}


class RunConfig(object):

    def __init__(self, command: str, values: dict):
        self.command = command
        self.values = values

    def __getattr__(self, name):
        values = self.__dict__.get('values', {})
        if name in values:
            return values[name]
        raise AttributeError(name)

    def get(self, name, default=None):
        return self.values.get(name, default)

    def to_dict(self):
        return dict(self.values, command=self.command)

    def __str__(self):
        return 'RunConfig(%s)' % ', '.join('%s=%s' % (k, v) for k, v in sorted(self.to_dict().items()))


def build_run_config(command: str, flags: dict = None, file_values: dict = None) -> RunConfig:
    """
    merge schema defaults, config file values and explicit flags (None means
    not given), then validate every key
    """
    if command not in SCHEMAS:
        raise ConfigError('unknown command %s' % command, keys=[command])
    options = {option.name: option for option in COMMON_OPTIONS + SCHEMAS[command]}
    file_values = file_values or {}
    flags = {_normalize_key(k): v for k, v in (flags or {}).items()}

    unknown = sorted(k for k in list(file_values) + list(flags) if k not in options)
    if unknown:
        raise ConfigError('unknown %s keys: %s' % (command, ', '.join(unknown)), keys=unknown)

    values = {}
    for name, option in options.items():
        value = flags.get(name)
        if value is None:
            value = file_values.get(name)
        value = option.convert(value)
        if value is None:
            value = option.default
        if isinstance(value, str) and name in UPPERCASE_VALUES:
            value = value.upper()
        option.validate(value)
        values[name] = value

    missing = sorted(name for name, option in options.items() if option.required and values[name] is None)
    if command == 'simulate' and values.get('model'):
        missing += [k for k in MODEL_REQUIRED[values['model']] if values[k] is None]
    if missing:
        raise ConfigError('missing required %s keys: %s' % (command, ', '.join(missing)), keys=missing)
    return RunConfig(command, values)
