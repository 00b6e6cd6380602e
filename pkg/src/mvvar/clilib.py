"""
Command line plumbing of `mvvar`.

The `mvvar` entry point (see :mod:`mvvar.__main__`) builds its parser with
:func:`get_parser_and_subparsers` and discovers subcommands with :func:`register_subcommands`.
Each module in :mod:`mvvar.commands` is one subcommand; it must have a docstring, which
becomes the command's help, and a `run(args)` function. An optional `register(parser)`
adds the command's options, usually via :func:`add_run_options`.

`run` returns an :class:`ExitCode` or `None` for success. Options of the run-producing
commands are merged with INI file and environment into a
:class:`mvvar.config.RunConfig` by :func:`get_config`.
"""
import io
import re
import csv
import sys
import enum
import typing
import logging
import pkgutil
import pathlib
import argparse
import warnings
import importlib
import collections

import tabulate

from mvvar.loglib import get_colorlog
from mvvar.data import PeriodKind, ScenarioMatrix, load_returns
from mvvar.misc import parse_fraction
from mvvar.config import RunConfig
from mvvar.errors import DomainError

__all__ = [
    'ParserError', 'ExitCode', 'get_parser_and_subparsers', 'register_subcommands',
    'PathType', 'add_format', 'add_run_options', 'get_config', 'load_dataset', 'prepare_out',
    'Table']


class ParserError(Exception):
    pass


class ExitCode(enum.IntEnum):
    ok = 0
    error = 1
    bad_input = 2
    infeasible = 3
    limit = 4


class Formatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """
    An `ArgumentParser` which signals bad input with :class:`ParserError` instead of exiting,
    so that it can be mapped to :attr:`ExitCode.bad_input`.
    """
    def error(self, message):
        raise ParserError('{0}: error: {1}'.format(self.prog, message))


def get_parser_and_subparsers(prog: str, with_log: bool = True) \
        -> typing.Tuple[argparse.ArgumentParser, typing.Any]:
    """
    The main parser, with hidden `--log` and a `--log-level` option, and its subparsers.
    """
    parser = ArgumentParser(prog=prog, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    if with_log:
        parser.add_argument(
            '--log',
            default=get_colorlog(prog, sys.stderr),
            help=argparse.SUPPRESS)
        parser.add_argument(
            '--log-level',
            default=logging.INFO,
            help='log level [ERROR|WARN|INFO|DEBUG]',
            type=lambda x: getattr(logging, x))

    subparsers = parser.add_subparsers(
        title="available commands",
        dest="_command",
        description='Run "COMMAND -h" to get help for a specific command.',
        metavar="COMMAND",
        parser_class=ArgumentParser)
    return parser, subparsers


def iter_modules(pkg):
    """
    Import the non-package modules of `pkg`, yielding `(name, module)` pairs.
    """
    if hasattr(pkg, '__path__'):
        for _, name, ispkg in pkgutil.iter_modules(pkg.__path__):
            if not ispkg:
                modname = ".".join([pkg.__name__, name])
                try:
                    yield name, importlib.import_module(modname)
                except Exception as e:  # pragma: no cover
                    warnings.warn('{0} {1}'.format(e, modname))


def register_subcommands(
        subparsers,
        pkg,
        formatter_class=Formatter,
        skip_invalid: bool = False) -> 'collections.OrderedDict[str, typing.Any]':
    """
    Add one subparser per command module of `pkg`, e.g. :mod:`mvvar.commands`.

    :param skip_invalid: Skip modules without docstring or `run` instead of raising \
    `ValueError`.
    :return: The command modules by name.
    """
    valid = collections.OrderedDict()
    for name, mod in iter_modules(pkg):
        if not mod.__doc__ or not getattr(mod, 'run', None):
            if skip_invalid:
                continue
            raise ValueError('Command \"{0}\" is missing a docstring or run function.'.format(
                name))
        valid[name] = mod
        subparser = subparsers.add_parser(
            name,
            help=mod.__doc__.strip().splitlines()[0] if mod.__doc__.strip() else '',
            description=mod.__doc__,
            formatter_class=formatter_class)
        if hasattr(mod, 'register'):
            mod.register(subparser)
        subparser.set_defaults(main=mod.run)
    return valid


class PathType(object):
    """
    Argument type for dataset, config and output paths.

    :param type: `"file"` or `"dir"` to check an existing path's kind.
    """
    def __init__(self, must_exist: bool = True, type: typing.Optional[str] = None):
        assert type in (None, 'dir', 'file')
        self._must_exist = must_exist
        self._type = type

    def __call__(self, string):
        p = pathlib.Path(string)
        if self._must_exist and not p.exists():
            raise argparse.ArgumentTypeError('no such path: {0}'.format(string))
        if p.exists() and self._type and not getattr(p, 'is_' + self._type)():
            raise argparse.ArgumentTypeError('{0} is not a {1}'.format(string, self._type))
        return p


def _fraction(s):
    try:
        return parse_fraction(s)
    except DomainError as e:
        raise argparse.ArgumentTypeError(str(e))


def _fraction_list(s):
    items = [item for item in s.split(',') if item.strip()]
    if not items:
        raise argparse.ArgumentTypeError('empty list')
    return tuple(_fraction(item) for item in items)


def add_format(parser, default: str = 'pipe'):
    """
    Add a `format` option, to be used with :class:`Table`.
    """
    parser.add_argument(
        "--format",
        default=None,
        choices=tabulate.tabulate_formats,
        help="Format of tabular output (default: {0}).".format(default))


def add_run_options(parser, model=True, backtest=False, solve=False):
    """
    Add the options shared by the run-producing commands. Defaults are `None` throughout, so
    that :func:`get_config` can tell given flags from omitted ones.
    """
    parser.add_argument(
        '--config',
        type=PathType(type='file'),
        help='INI file with configuration values; flags override it.',
        default=None)
    parser.add_argument(
        '--data',
        type=PathType(type='file'),
        help='CSV file of linear returns, one column per asset.',
        default=None)
    parser.add_argument(
        '--period',
        dest='period_kind',
        choices=[k.value for k in PeriodKind],
        default=None)
    parser.add_argument('--out', type=PathType(must_exist=False), default=None)
    parser.add_argument('--seed', type=int, default=None)
    add_format(parser)
    if model:
        parser.add_argument('--epsilon', type=_fraction, default=None, help='VaR tail (0, 0.5]')
        parser.add_argument(
            '--alphas', type=_fraction_list, default=None,
            help='Comma-separated target return grid coordinates, e.g. "0,1/4,1/2,3/4".')
        parser.add_argument(
            '--betas', type=_fraction_list, default=None,
            help='Comma-separated VaR cap grid coordinates, e.g. "0,1/3,2/3,1".')
        parser.add_argument('--tol-gap', dest='tol_gap', type=float, default=None)
        parser.add_argument('--node-limit', dest='node_limit', type=int, default=None)
        parser.add_argument(
            '--time-limit', dest='time_limit', type=float, default=None, help='seconds')
        parser.add_argument(
            '--workers', type=int, default=None,
            help='Threads for the independent solves of a sweep. Branch-and-bound is mostly pure '
                 'Python, so extra threads add little speed.')
    if solve:
        parser.add_argument('--eta', type=_fraction, default=None, help='target return')
        parser.add_argument(
            '--z', type=_fraction, default=None, help='VaR cap; "inf" drops the cap')
    if backtest:
        parser.add_argument(
            '--in-sample', dest='in_sample', type=int, default=None,
            help='In-sample window length; defaults to 104 weekly or 200 daily periods.')
        parser.add_argument(
            '--holding', type=int, default=None,
            help='Holding period length; defaults to 4 weekly or 20 daily periods.')


def get_config(args: argparse.Namespace, env=None) -> RunConfig:
    """
    Resolve the :class:`RunConfig` of a command from `--config`, environment and flags.
    """
    flags = {k: v for k, v in vars(args).items() if not k.startswith('_')}
    return RunConfig.from_sources(flags=flags, ini=getattr(args, 'config', None), env=env)


class Table(list):
    """
    Terminal summary of a command, rendered with `tabulate` when the `with` block exits:

    .. code-block:: python

        with Table(args, 'asset', 'weight') as t:
            for name, w in zip(s.asset_names, sol.x):
                t.append([name, w])

    The `tsv` format is written with the `csv` module, floats are shown with 6 significant
    digits otherwise.
    """
    def __init__(self, args: argparse.Namespace, *cols: str, **kw):
        self.columns = list(cols)
        super(Table, self).__init__(kw.pop('rows', []))
        self._file = kw.pop('file', sys.stdout)
        kw.setdefault('tablefmt', getattr(args, 'format', None) or 'pipe')
        self._kw = kw

    def render(self, condensed=True, **kw) -> str:
        tab_kw = dict(headers=self.columns, floatfmt='.6g')
        tab_kw.update(self._kw)
        tab_kw.update(kw)
        if tab_kw['tablefmt'] == 'tsv':
            res = io.StringIO()
            w = csv.writer(res, delimiter='\t', lineterminator='\n')
            w.writerow(self.columns)
            w.writerows(self)
            return res.getvalue().rstrip('\n')
        res = tabulate.tabulate(self, **tab_kw)
        if tab_kw['tablefmt'] == 'pipe' and condensed:
            # no padding inside cells
            res = re.sub(r'\|[ ]+', '| ', res)
            res = re.sub(r'[ ]+\|', ' |', res)
        return res

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is None:
            print(self.render(), file=self._file)


def load_dataset(cfg: RunConfig, log: typing.Optional[logging.Logger] = None) -> ScenarioMatrix:
    if cfg.data is None:
        raise ParserError('no dataset given, use --data or the "path" option of [data]')
    return load_returns(cfg.data, cfg.period_kind, log=log)


def prepare_out(cfg: RunConfig) -> pathlib.Path:
    """
    Create the output directory and write the resolved configuration to `config.ini`.
    """
    cfg.out.mkdir(parents=True, exist_ok=True)
    cfg.to_ini().write(cfg.out / 'config.ini')
    return cfg.out
