"""
Write a reproducible synthetic dataset of linear returns.

The dataset has one common factor plus idiosyncratic noise and can be used to try out the
other commands, e.g.

    mvvar synth returns.csv --n 5 --T 160 --seed 1
    mvvar frontier --data returns.csv
"""
from mvvar.clilib import PathType
from mvvar.data import PeriodKind, synthetic_returns, write_returns


def register(parser):
    parser.add_argument('output', type=PathType(must_exist=False), help='CSV file to write')
    parser.add_argument('--n', type=int, default=5, help='number of assets')
    parser.add_argument('--T', type=int, default=160, help='number of periods')
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument(
        '--period',
        dest='period_kind',
        choices=[k.value for k in PeriodKind],
        default=PeriodKind.weekly.value)


def run(args):
    s = synthetic_returns(args.n, args.T, seed=args.seed, period_kind=args.period_kind)
    write_returns(s, args.output)
    args.log.info('wrote {0} {1} periods of {2} assets to {3}'.format(
        s.T, s.period_kind.value, s.n, args.output))
