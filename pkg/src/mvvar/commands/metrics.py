"""
Compute and rank performance measures of existing out-of-sample return series.

Reads a `returns.csv` as written by `mvvar backtest`; turnover requires the matching
`weights.csv` and is undefined otherwise.
"""
import math
import collections

from mvvar.clilib import PathType, add_format, Table
from mvvar.backtest import EW
from mvvar.errors import DomainError
from mvvar.metrics import (
    METRICS, MetricsReport, compute_metrics, rank_report, compare_to_benchmark,
    mean_variance_benchmark, write_reports, write_ranks, read_series, read_weights,
)


def register(parser):
    parser.add_argument('returns', type=PathType(type='file'), help='returns.csv')
    parser.add_argument('--weights', type=PathType(type='file'), default=None)
    parser.add_argument('--out', type=PathType(must_exist=False), default=None)
    add_format(parser)


def _report(sid, r, weights, log):
    history = weights.get(sid) if weights is not None else [None]
    try:
        rep = compute_metrics(r, history or [])
    except DomainError as e:
        log.warning('no metrics for {0}: {1}'.format(sid, e))
        return MetricsReport(**{name: math.nan for name in METRICS})
    if weights is None:
        rep.turnover = math.nan
    return rep


def run(args):
    _, series = read_series(args.returns)
    weights = read_weights(args.weights) if args.weights else None
    reports = collections.OrderedDict(
        (sid, _report(sid, r, weights, args.log)) for sid, r in series.items())

    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        for fmt in ['csv', 'json']:
            write_reports(reports, args.out / 'metrics.{0}'.format(fmt), fmt=fmt)
        if len(reports) > 1:
            write_ranks(rank_report(reports), args.out / 'ranks.csv')
        if EW in reports:
            write_ranks(compare_to_benchmark(reports, EW), args.out / 'vs_ew.csv')
        write_ranks(
            compare_to_benchmark(reports, mean_variance_benchmark), args.out / 'vs_mv.csv')
        args.log.info('wrote metrics of {0} series to {1}'.format(len(reports), args.out))

    with Table(args, 'strategy', *METRICS) as t:
        for sid, rep in reports.items():
            t.append([sid] + [getattr(rep, name) for name in METRICS])
