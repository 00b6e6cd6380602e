"""
Out-of-sample performance measures of return series, and ranked comparisons of strategies.

All measures are per period, not annualized. Risk-free rate and Sortino target are 0.
Measures which are undefined for a series, e.g. the Sharpe ratio of a constant series, are
`nan`.
"""
import csv
import math
import typing
import logging
import pathlib
import collections

import attr
import numpy as np

from mvvar.attrlib import asdict
from mvvar.errors import DomainError, ParseError
from mvvar.misc import fmt_float
from mvvar import jsonlib

__all__ = [
    'MetricsReport', 'METRICS', 'compute_metrics', 'rank_report', 'compare_to_benchmark',
    'mean_variance_benchmark', 'write_reports', 'write_ranks', 'read_series', 'read_weights']

# Metric name and whether larger values are better. For max_drawdown (<= 0) larger means
# closer to 0.
METRICS = collections.OrderedDict([
    ('mean', True),
    ('std_dev', False),
    ('sharpe', True),
    ('max_drawdown', True),
    ('ulcer', False),
    ('turnover', False),
    ('sortino', True),
    ('rachev_5', True),
    ('rachev_10', True),
])


@attr.s
class MetricsReport:
    mean = attr.ib()
    std_dev = attr.ib()
    sharpe = attr.ib()
    max_drawdown = attr.ib()
    ulcer = attr.ib()
    turnover = attr.ib()
    sortino = attr.ib()
    rachev_5 = attr.ib()
    rachev_10 = attr.ib()

    def undefined(self) -> typing.List[str]:
        return [name for name in METRICS if math.isnan(getattr(self, name))]


def _ratio(num, den):
    return num / den if den > 0 else math.nan


def _rachev(r, alpha):
    k = max(int(math.ceil(alpha * r.size - 1e-9)), 1)
    ordered = np.sort(r)
    return _ratio(float(ordered[-k:].mean()), abs(float(ordered[:k].mean())))


def drawdowns(r) -> np.ndarray:
    """
    Drawdowns `D_t = W_t / max_{s<=t} W_s - 1` of the wealth path with `W_0 = 1`.
    """
    wealth = np.cumprod(1 + np.asarray(r, dtype=float))
    peaks = np.maximum.accumulate(np.concatenate([[1.0], wealth]))[1:]
    return wealth / peaks - 1


def turnover(weight_history: typing.Sequence) -> float:
    """
    Average one-norm change of target weights between consecutive rebalances.
    """
    if len(weight_history) < 2:
        return 0.0
    w = np.array([np.asarray(x, dtype=float) for x in weight_history])
    return float(np.abs(np.diff(w, axis=0)).sum() / (len(weight_history) - 1))


def compute_metrics(
        oos,
        weight_history: typing.Sequence,
        eps_list: typing.Tuple[float, float] = (0.05, 0.10),
        log: typing.Optional[logging.Logger] = None) -> MetricsReport:
    """
    Compute the performance measures of an out-of-sample return series.

    Periods with `nan` returns (windows whose solve failed) are left out.

    :param eps_list: Tail probabilities of the two Rachev ratios.
    :raises DomainError: For fewer than 2 returns or an empty weight history.
    """
    r = np.asarray(oos, dtype=float)
    r = r[~np.isnan(r)]
    if r.size < 2:
        raise DomainError('at least 2 returns are required, got {0}'.format(r.size))
    if len(weight_history) < 1:
        raise DomainError('weight history must not be empty')
    if len(eps_list) != 2:
        raise DomainError('two Rachev tail probabilities are required')
    mean = float(r.mean())
    std_dev = 0.0 if np.all(r == r[0]) else float(r.std())
    dd = drawdowns(r)
    res = MetricsReport(
        mean=mean,
        std_dev=std_dev,
        sharpe=_ratio(mean, std_dev),
        max_drawdown=float(min(dd.min(), 0.0)),
        ulcer=float(np.sqrt(np.mean(dd ** 2))),
        turnover=turnover(weight_history),
        sortino=_ratio(mean, float(np.sqrt(np.mean(np.minimum(r, 0) ** 2)))),
        rachev_5=_rachev(r, eps_list[0]),
        rachev_10=_rachev(r, eps_list[1]))
    if log:
        for name in res.undefined():
            log.warning('{0} is undefined for this series'.format(name))
    return res


def _better(name, a, b) -> bool:
    return a > b if METRICS[name] else a < b


def rank_report(
        reports: typing.Mapping[str, MetricsReport],
) -> 'collections.OrderedDict[str, collections.OrderedDict[str, int]]':
    """
    Rank strategies per metric, best first. Ties share a rank (1, 1, 3, ...), undefined
    values rank last.

    .. code-block:: python

        >>> ranks = rank_report({'a': report_a, 'b': report_b})
        >>> ranks['sharpe']['a']
        1

    :raises DomainError: For fewer than 2 strategies.
    """
    if len(reports) < 2:
        raise DomainError('ranking requires at least 2 strategies')
    res = collections.OrderedDict()
    for name in METRICS:
        values = {sid: getattr(rep, name) for sid, rep in reports.items()}
        defined = [v for v in values.values() if not math.isnan(v)]
        res[name] = collections.OrderedDict()
        for sid, v in values.items():
            if math.isnan(v):
                res[name][sid] = len(defined) + 1
            else:
                res[name][sid] = 1 + sum(1 for w in defined if _better(name, w, v))
    return res


def mean_variance_benchmark(sid: str) -> typing.Optional[str]:
    """
    The Mean-Variance portfolio at the same target return as a grid strategy.

    .. code-block:: python

        >>> mean_variance_benchmark('eta_1/4:z_0')
        'eta_1/4:z_1'
    """
    if not sid.startswith('eta_') or ':z_' not in sid:
        return None
    return '{0}:z_1'.format(sid.split(':')[0])


def compare_to_benchmark(
        reports: typing.Mapping[str, MetricsReport],
        benchmark: typing.Union[str, typing.Callable[[str], typing.Optional[str]]],
) -> 'collections.OrderedDict[str, collections.OrderedDict[str, bool]]':
    """
    Per metric and strategy, whether the strategy is at least as good as its benchmark.

    :param benchmark: A strategy id, or a function mapping strategy ids to benchmark ids \
    (`None` to skip a strategy), e.g. :func:`mean_variance_benchmark`.
    """
    if isinstance(benchmark, str):
        if benchmark not in reports:
            raise DomainError('unknown benchmark {0}'.format(benchmark))
        bench_id = benchmark

        def benchmark(sid):
            return bench_id

    res = collections.OrderedDict()
    for name in METRICS:
        res[name] = collections.OrderedDict()
        for sid, rep in reports.items():
            bid = benchmark(sid)
            if bid is None or bid == sid or bid not in reports:
                continue
            v, b = getattr(rep, name), getattr(reports[bid], name)
            if math.isnan(v):
                res[name][sid] = False
            elif math.isnan(b):
                res[name][sid] = True
            else:
                res[name][sid] = v == b or _better(name, v, b)
    return res


def _write_table(table, path, fmt, cell):
    path = pathlib.Path(path)
    if fmt == 'json':
        jsonlib.dump(table, path)
        return path
    ids = []
    for row in table.values():
        ids.extend(sid for sid in row if sid not in ids)
    with path.open('w', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp)
        writer.writerow(['metric'] + ids)
        for name, row in table.items():
            writer.writerow([name] + [cell(row[sid]) if sid in row else '' for sid in ids])
    return path


def write_reports(
        reports: typing.Mapping[str, MetricsReport],
        path: typing.Union[str, pathlib.Path],
        fmt: str = 'csv') -> pathlib.Path:
    """
    Write reports as table with one row per metric and one column per strategy.
    """
    table = collections.OrderedDict(
        (name, collections.OrderedDict(
            (sid, asdict(rep)[name]) for sid, rep in reports.items()))
        for name in METRICS)
    return _write_table(table, path, fmt, fmt_float)


def write_ranks(
        ranks: typing.Mapping[str, typing.Mapping[str, typing.Union[int, bool]]],
        path: typing.Union[str, pathlib.Path],
        fmt: str = 'csv') -> pathlib.Path:
    """
    Write the output of :func:`rank_report` or :func:`compare_to_benchmark`.
    """
    return _write_table(ranks, path, fmt, lambda v: str(v).lower() if isinstance(v, bool) else v)


def _float(cell, row, column):
    try:
        return float(cell)
    except ValueError:
        raise ParseError('not a number: {0!r}'.format(cell), row=row, column=column)


def read_series(
        path: typing.Union[str, pathlib.Path],
) -> typing.Tuple[np.ndarray, 'collections.OrderedDict[str, np.ndarray]']:
    """
    Read a `returns.csv` as written by :func:`mvvar.backtest.write_results`.

    :return: `(periods, series)`, where series maps strategy ids to return arrays.
    """
    with pathlib.Path(path).open(encoding='utf-8', newline='') as fp:
        rows = list(csv.reader(fp))
    if len(rows) < 2 or len(rows[0]) < 2 or rows[0][0] != 'period':
        raise ParseError('expected a header "period,<strategy>,..." and data rows', row=1)
    ids = rows[0][1:]
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(ids) + 1:
            raise ParseError(
                'expected {0} cells, got {1}'.format(len(ids) + 1, len(row)), row=lineno)
        data.append([_float(cell, lineno, col) for col, cell in enumerate(row, start=1)])
    data = np.array(data)
    return data[:, 0].astype(int), collections.OrderedDict(
        (sid, data[:, i + 1]) for i, sid in enumerate(ids))


def read_weights(
        path: typing.Union[str, pathlib.Path],
) -> 'collections.OrderedDict[str, typing.List[np.ndarray]]':
    """
    Read a `weights.csv` as written by :func:`mvvar.backtest.write_results`.
    """
    res = collections.OrderedDict()
    with pathlib.Path(path).open(encoding='utf-8', newline='') as fp:
        reader = csv.reader(fp)
        header = next(reader, None)
        if not header or header[:3] != ['strategy', 'window', 'row']:
            raise ParseError('expected a header "strategy,window,row,<asset>,..."', row=1)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(
                    'expected {0} cells, got {1}'.format(len(header), len(row)), row=lineno)
            res.setdefault(row[0], []).append(np.array(
                [_float(cell, lineno, col) for col, cell in enumerate(row[3:], start=4)]))
    return res
