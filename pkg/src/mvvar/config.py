"""
Run configurations.

A :class:`RunConfig` is assembled from, in increasing order of precedence,

- built-in defaults,
- an INI file,
- environment variables `MVVAR_<OPTION>` (e.g. `MVVAR_EPSILON=0.05`, list values separated
  by commas),
- command line flags.

.. code-block:: ini

    [data]
    path = dowjones.csv
    period = weekly

    [model]
    epsilon = 0.01
    betas =
        0
        1/3
        2/3
        1

    [solver]
    workers = 4
"""
import os
import typing
import pathlib
import collections

import attr
import tabulate

from mvvar.attrlib import valid_range, valid_unit_interval_list
from mvvar.errors import DomainError
from mvvar.data import PeriodKind
from mvvar.risk import ConfidenceLevel
from mvvar.miqp import SolverOptions
from mvvar.frontier import DEFAULT_ALPHAS, DEFAULT_BETAS
from mvvar.inifile import INI
from mvvar.misc import parse_fraction, fraction_label

__all__ = ['RunConfig', 'ENV_PREFIX', 'OPTIONS']

ENV_PREFIX = 'MVVAR_'


def _fractions(s):
    if isinstance(s, str):
        s = [item for item in s.replace(',', '\n').splitlines() if item.strip()]
    return tuple(parse_fraction(item) for item in s)


def _optional(type_):
    def convert(s):
        if s is None or (isinstance(s, str) and not s.strip()):
            return None
        return type_(s)
    return convert


def _grid_item(value: float) -> str:
    """
    Grid coordinates are written as fractions when this is exact, e.g. `1/3`.
    """
    label = fraction_label(value)
    return label if parse_fraction(label) == value else repr(value)


def _path(s):
    return None if s is None else pathlib.Path(s)


@attr.s(frozen=True)
class _Option:
    name = attr.ib()
    section = attr.ib()
    key = attr.ib()
    parse = attr.ib()
    is_list = attr.ib(default=False)

    @property
    def env(self) -> str:
        return ENV_PREFIX + self.name.upper()


OPTIONS = [
    _Option('data', 'data', 'path', _path),
    _Option('period_kind', 'data', 'period', PeriodKind),
    _Option('seed', 'data', 'seed', int),
    _Option('epsilon', 'model', 'epsilon', parse_fraction),
    _Option('eta', 'model', 'eta', _optional(parse_fraction)),
    _Option('z', 'model', 'z', _optional(parse_fraction)),
    _Option('alphas', 'model', 'alphas', _fractions, is_list=True),
    _Option('betas', 'model', 'betas', _fractions, is_list=True),
    _Option('in_sample', 'backtest', 'in_sample', _optional(int)),
    _Option('holding', 'backtest', 'holding', _optional(int)),
    _Option('tol_gap', 'solver', 'tol_gap', float),
    _Option('node_limit', 'solver', 'node_limit', _optional(int)),
    _Option('time_limit', 'solver', 'time_limit', _optional(float)),
    _Option('workers', 'solver', 'workers', int),
    _Option('out', 'output', 'out', _path),
    _Option('format', 'output', 'format', str),
]


def _existing_path(instance, attribute, value):
    if value is not None and not value.exists():
        raise DomainError('{0} {1} does not exist'.format(attribute.name, value))


def _epsilon(instance, attribute, value):
    ConfidenceLevel(value)


def _optional_range(min_):
    return valid_range(min_, None, nullable=True)


@attr.s(frozen=True)
class RunConfig:
    """
    The fully resolved configuration of a run.
    """
    data = attr.ib(default=None, converter=_path, validator=_existing_path)
    period_kind = attr.ib(default=PeriodKind.weekly, converter=PeriodKind)
    epsilon = attr.ib(default=0.01, converter=float, validator=_epsilon)
    eta = attr.ib(default=None)
    z = attr.ib(default=None)
    alphas = attr.ib(
        default=DEFAULT_ALPHAS, converter=_fractions, validator=valid_unit_interval_list)
    betas = attr.ib(
        default=DEFAULT_BETAS, converter=_fractions, validator=valid_unit_interval_list)
    in_sample = attr.ib(default=None, validator=_optional_range(2))
    holding = attr.ib(default=None, validator=_optional_range(1))
    tol_gap = attr.ib(default=1e-8, converter=float, validator=valid_range(0, None))
    node_limit = attr.ib(default=None, validator=_optional_range(1))
    time_limit = attr.ib(
        default=None, validator=valid_range(0, None, nullable=True, open_min=True))
    workers = attr.ib(default=1, converter=int, validator=valid_range(1, None))
    out = attr.ib(default=pathlib.Path('.'), converter=_path)
    seed = attr.ib(default=0, converter=int)
    format = attr.ib(default='pipe', validator=attr.validators.in_(tabulate.tabulate_formats))

    @property
    def in_sample_len(self) -> int:
        return self.period_kind.default_in_sample if self.in_sample is None else self.in_sample

    @property
    def holding_len(self) -> int:
        return self.period_kind.month if self.holding is None else self.holding

    @property
    def confidence(self) -> ConfidenceLevel:
        return ConfidenceLevel(self.epsilon)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            tol_gap=self.tol_gap,
            node_limit=self.node_limit,
            time_limit=self.time_limit,
            workers=self.workers)

    @classmethod
    def from_sources(
            cls,
            flags: typing.Optional[typing.Mapping[str, typing.Any]] = None,
            ini: typing.Optional[typing.Union[str, pathlib.Path, INI]] = None,
            env: typing.Optional[typing.Mapping[str, str]] = None) -> 'RunConfig':
        """
        Merge configuration sources; flags win over environment, environment over INI.

        :param flags: Option values keyed by :class:`RunConfig` field name; `None` values \
        are ignored.
        :param env: Defaults to `os.environ`.
        :raises DomainError: If a value is invalid.
        """
        values = collections.OrderedDict()
        if ini is not None:
            values.update(cls._from_ini(ini if isinstance(ini, INI) else INI.from_file(ini)))
        env = os.environ if env is None else env
        for opt in OPTIONS:
            if env.get(opt.env):
                values[opt.name] = cls._parse(opt, env[opt.env])
        for name, value in (flags or {}).items():
            if value is not None and name in attr.fields_dict(cls):
                values[name] = value
        try:
            return cls(**values)
        except DomainError:
            raise
        except (ValueError, TypeError) as e:
            raise DomainError('invalid configuration: {0}'.format(e))

    @staticmethod
    def _parse(opt, value):
        try:
            return opt.parse(value)
        except (ValueError, TypeError):
            raise DomainError('invalid value for {0}: {1!r}'.format(opt.name, value))

    @classmethod
    def _from_ini(cls, ini: INI) -> dict:
        res = {}
        for opt in OPTIONS:
            if ini.has_option(opt.section, opt.key):
                if opt.is_list:
                    res[opt.name] = tuple(ini.getfractions(opt.section, opt.key))
                else:
                    res[opt.name] = cls._parse(opt, ini.get(opt.section, opt.key))
        return res

    def to_ini(self) -> INI:
        ini = INI()
        for opt in OPTIONS:
            value = getattr(self, opt.name)
            if isinstance(value, PeriodKind):
                value = value.value
            elif isinstance(value, pathlib.Path):
                value = value.as_posix()
            ini.set(
                opt.section, opt.key, [_grid_item(v) for v in value] if opt.is_list else value)
        return ini

    def as_dict(self) -> collections.OrderedDict:
        res = collections.OrderedDict()
        for opt in OPTIONS:
            value = getattr(self, opt.name)
            if isinstance(value, PeriodKind):
                value = value.value
            elif isinstance(value, pathlib.Path):
                value = value.as_posix()
            elif opt.is_list:
                value = [_grid_item(v) for v in value]
            res[opt.name] = value
        return res

    @classmethod
    def from_dict(cls, d: typing.Mapping[str, typing.Any]) -> 'RunConfig':
        values = {}
        for opt in OPTIONS:
            if d.get(opt.name) is not None:
                value = d[opt.name]
                values[opt.name] = cls._parse(opt, value)
        return cls(**values)
