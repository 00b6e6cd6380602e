import types
import argparse
import pathlib

import pytest

from mvvar import commands
from mvvar.clilib import *
from mvvar.config import RunConfig


def _parse(*args, **kw):
    parser, _ = get_parser_and_subparsers('mvvar')
    add_run_options(parser, **kw)
    return parser.parse_args(list(args))


def test_get_parser_and_subparser():
    assert get_parser_and_subparsers('a')


def test_register_subcommands():
    _, sp = get_parser_and_subparsers('a')
    cmds = register_subcommands(sp, commands)
    assert set(cmds) == {'backtest', 'frontier', 'metrics', 'solve', 'synth'}


def test_register_subcommands_error(mocker):
    invalid = types.ModuleType('invalid')
    mocker.patch('mvvar.clilib.iter_modules', mocker.Mock(return_value=[('invalid', invalid)]))
    _, sp = get_parser_and_subparsers('a')
    with pytest.raises(ValueError):
        register_subcommands(sp, commands)
    assert register_subcommands(sp, commands, skip_invalid=True) == {}


def test_ArgumentParser():
    with pytest.raises(ParserError):
        _parse('--epsilon', 'x')
    with pytest.raises(ParserError):
        _parse('--alphas', ',')
    with pytest.raises(ParserError):
        _parse('--period', 'monthly')
    with pytest.raises(ParserError):
        _parse('--data', 'nonexistent.csv')


def test_add_run_options(fixtures_dir):
    args = _parse(
        '--data', str(fixtures_dir / 'returns.csv'),
        '--alphas', '0,1/2',
        '--epsilon', '1/20',
        '--in-sample', '8',
        backtest=True)
    assert args.alphas == (0, 0.5)
    assert args.epsilon == 0.05
    assert args.in_sample == 8
    assert args.betas is None
    assert isinstance(args.data, pathlib.Path)
    assert not hasattr(args, 'eta')

    args = _parse('--eta', '0.001', '--z', 'inf', solve=True)
    assert args.z == float('inf')


def test_get_config(fixtures_dir, tmp_path):
    ini = tmp_path / 'c.ini'
    ini.write_text('[model]\nepsilon = 0.1\n[solver]\nworkers = 3\n', encoding='utf-8')
    args = _parse(
        '--config', str(ini), '--epsilon', '0.05', '--data', str(fixtures_dir / 'returns.csv'))
    cfg = get_config(args, env={'MVVAR_WORKERS': '2'})
    assert isinstance(cfg, RunConfig)
    assert (cfg.epsilon, cfg.workers) == (0.05, 2)


def test_load_dataset(fixtures_dir, tmp_path):
    with pytest.raises(ParserError):
        load_dataset(RunConfig())
    cfg = RunConfig(data=fixtures_dir / 'returns.csv', out=tmp_path / 'out')
    assert load_dataset(cfg).n == 3
    assert prepare_out(cfg).joinpath('config.ini').exists()


def test_Table(capsys):
    with Table(argparse.Namespace(format='simple'), 'a') as t:
        t.append(['x'])
    out, _ = capsys.readouterr()
    assert out == 'a\n---\nx\n'

    with Table(argparse.Namespace(format=None), 'a', 'b') as t:
        t.append(['x', 0.123456789])
    out, _ = capsys.readouterr()
    assert out.splitlines()[2] == '| x | 0.123457 |'

    with Table(argparse.Namespace(), 'a', 'b', tablefmt='tsv', rows=[['x', 1]]):
        pass
    out, _ = capsys.readouterr()
    assert out == 'a\tb\nx\t1\n'


def test_add_format():
    parser, _ = get_parser_and_subparsers('c')
    add_format(parser)
    assert parser.parse_args(['--format', 'simple']).format == 'simple'


def test_PathType(tmp_path):
    parser = argparse.ArgumentParser()
    parser.add_argument('a', type=PathType(type='file'))
    args = parser.parse_args([__file__])
    assert isinstance(args.a, pathlib.Path)

    with pytest.raises(SystemExit):
        parser.parse_args(['x'])

    with pytest.raises(SystemExit):
        parser.parse_args([str(tmp_path)])
