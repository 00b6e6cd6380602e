"""
Rolling time window evaluation of portfolio strategies.

At every rebalance date the statistics are re-estimated on the trailing in-sample window,
the (α, β) grid of efficient portfolios is recomputed, and each portfolio's target weights
are held for the following holding period. Within a holding period the weights are fixed,
i.e. the portfolio is rebalanced to its target weights every period.
"""
import csv
import typing
import logging
import pathlib

import attr
import numpy as np

from mvvar.attrlib import cmp_off, valid_range
from mvvar.errors import DomainError, MvvarError
from mvvar.data import ScenarioMatrix, compute_stats
from mvvar.risk import ConfidenceLevel
from mvvar.miqp import SolverOptions
from mvvar.frontier import sweep_surface, strategy_id, DEFAULT_ALPHAS, DEFAULT_BETAS
from mvvar.misc import fmt_float
from mvvar import jsonlib

__all__ = [
    'Window', 'WindowSchedule', 'BacktestResult', 'make_schedule', 'run_backtest',
    'cumulative_returns', 'write_results', 'EW']

EW = 'EW'


@attr.s(frozen=True)
class Window:
    """
    Half-open row ranges of one rebalance.
    """
    in_start = attr.ib()
    in_end = attr.ib()
    out_start = attr.ib()
    out_end = attr.ib()

    @property
    def holding(self) -> int:
        return self.out_end - self.out_start


@attr.s(frozen=True)
class WindowSchedule:
    in_sample_len = attr.ib(validator=valid_range(1, None))
    holding_len = attr.ib(validator=valid_range(1, None))
    windows = attr.ib(converter=tuple)

    @property
    def out_of_sample_len(self) -> int:
        return sum(w.holding for w in self.windows)


def make_schedule(total_T: int, in_sample_len: int, holding_len: int) -> WindowSchedule:
    """
    Windows advancing by `holding_len` rows until the data is exhausted; the last holding
    period may be truncated.

    .. code-block:: python

        >>> [w.out_end for w in make_schedule(112, 104, 4).windows]
        [108, 112]

    :raises DomainError: If there is no out-of-sample data.
    """
    if in_sample_len < 2:
        raise DomainError('in-sample windows need at least 2 periods')
    if holding_len < 1:
        raise DomainError('holding period must be at least 1 period')
    if total_T <= in_sample_len:
        raise DomainError('{0} periods leave no out-of-sample data after {1} in-sample'.format(
            total_T, in_sample_len))
    windows = []
    start = 0
    while start + in_sample_len < total_T:
        in_end = start + in_sample_len
        windows.append(Window(start, in_end, in_end, min(in_end + holding_len, total_T)))
        start += holding_len
    return WindowSchedule(in_sample_len, holding_len, windows)


@attr.s(**cmp_off)
class BacktestResult:
    """
    :ivar oos_returns: Concatenated out-of-sample returns; `nan` for windows whose solve \
    failed.
    :ivar periods: Row indices of the out-of-sample returns in the dataset.
    :ivar weight_history: Target weights of the windows which were solved.
    :ivar rebalances: Index of the window of each item of `weight_history`.
    :ivar rebalance_rows: Dataset row of the first holding period of each rebalance.
    :ivar diagnostics: One dict per window with `window`, `status` and `gap`.
    """
    strategy_id = attr.ib()
    oos_returns = attr.ib()
    periods = attr.ib()
    weight_history = attr.ib(default=attr.Factory(list))
    rebalances = attr.ib(default=attr.Factory(list))
    rebalance_rows = attr.ib(default=attr.Factory(list))
    diagnostics = attr.ib(default=attr.Factory(list))

    @property
    def complete(self) -> bool:
        return all(d['status'] != 'failed' for d in self.diagnostics)


class _Strategy(object):
    def __init__(self, id_):
        self.id = id_
        self.returns = []
        self.weights = []
        self.rebalances = []
        self.rebalance_rows = []
        self.diagnostics = []

    def hold(self, index, window, out_rows, x, status='optimal', gap=0.0):
        self.returns.append(out_rows @ x)
        self.weights.append(np.asarray(x, dtype=float))
        self.rebalances.append(index)
        self.rebalance_rows.append(window.out_start)
        self.diagnostics.append(dict(window=index, status=status, gap=gap))

    def fail(self, index, window, message):
        self.returns.append(np.full(window.holding, np.nan))
        self.diagnostics.append(dict(window=index, status='failed', gap=np.inf, message=message))

    def result(self, periods) -> BacktestResult:
        return BacktestResult(
            strategy_id=self.id,
            oos_returns=np.concatenate(self.returns),
            periods=periods,
            weight_history=self.weights,
            rebalances=self.rebalances,
            rebalance_rows=self.rebalance_rows,
            diagnostics=self.diagnostics)


def run_backtest(
        s: ScenarioMatrix,
        eps: typing.Union[ConfidenceLevel, float],
        alphas: typing.Sequence[float] = DEFAULT_ALPHAS,
        betas: typing.Sequence[float] = DEFAULT_BETAS,
        in_sample_len: typing.Optional[int] = None,
        holding_len: typing.Optional[int] = None,
        opts: typing.Optional[SolverOptions] = None,
        log: typing.Optional[logging.Logger] = None) -> typing.List[BacktestResult]:
    """
    Evaluate the equally weighted portfolio and the efficient portfolios of the (α, β) grid.

    :param in_sample_len: Defaults to the period kind's default in-sample length.
    :param holding_len: Defaults to one financial month of the period kind.
    :return: Results for `EW` followed by the grid strategies in (α, β) order.
    """
    eps = ConfidenceLevel.from_value(eps)
    schedule = make_schedule(
        s.T,
        s.period_kind.default_in_sample if in_sample_len is None else in_sample_len,
        s.period_kind.month if holding_len is None else holding_len)
    ids = [strategy_id(a, b) for a in alphas for b in betas]
    if len(set(ids)) != len(ids):
        raise DomainError('grid coordinates must be unique')
    ew = _Strategy(EW)
    grid = [_Strategy(id_) for id_ in ids]
    x_ew = np.full(s.n, 1 / s.n)

    for index, window in enumerate(schedule.windows):
        out_rows = s.returns[window.out_start:window.out_end]
        ew.hold(index, window, out_rows, x_ew)
        in_sample = s.window(window.in_start, window.in_end)
        try:
            points = sweep_surface(
                compute_stats(in_sample), in_sample, eps, alphas, betas,
                opts=opts, accept_incumbent=True)
        except MvvarError as e:
            if log:
                log.warning('window {0} (rows {1}-{2}) failed: {3}'.format(
                    index, window.in_start, window.in_end, e))
            for strategy in grid:
                strategy.fail(index, window, str(e))
            continue
        for strategy, point in zip(grid, points):
            strategy.hold(
                index, window, out_rows, point.weights, status=point.status, gap=point.gap)
            if point.status != 'optimal' and log:
                log.warning('window {0}: {1} degraded to incumbent with gap {2:.3g}'.format(
                    index, strategy.id, point.gap))
        if log:
            log.info('window {0}/{1}: in-sample rows {2}-{3}, holding rows {4}-{5}'.format(
                index + 1, len(schedule.windows),
                window.in_start, window.in_end, window.out_start, window.out_end))

    periods = np.concatenate([
        np.arange(w.out_start, w.out_end) for w in schedule.windows])
    results = [ew.result(periods)] + [strategy.result(periods) for strategy in grid]
    for res in results:
        if not res.complete and log:
            log.warning('strategy {0} is incomplete'.format(res.strategy_id))
    return results


def cumulative_returns(result: BacktestResult) -> np.ndarray:
    """
    The wealth path `W_t = prod_{s<=t} (1 + r_s)` with initial wealth 1.
    """
    return np.cumprod(1 + np.asarray(result.oos_returns, dtype=float))


def _write_series(results, path, values):
    with path.open('w', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp)
        writer.writerow(['period'] + [r.strategy_id for r in results])
        columns = [values(r) for r in results]
        for i, period in enumerate(results[0].periods):
            writer.writerow([int(period)] + [fmt_float(float(col[i])) for col in columns])


def write_results(
        results: typing.Sequence[BacktestResult],
        outdir: typing.Union[str, pathlib.Path],
        asset_names: typing.Sequence[str]) -> typing.List[pathlib.Path]:
    """
    Write `returns.csv`, `wealth.csv`, `weights.csv` and `diagnostics.json` to `outdir`.
    """
    outdir = pathlib.Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = [outdir / name for name in [
        'returns.csv', 'wealth.csv', 'weights.csv', 'diagnostics.json']]
    _write_series(results, paths[0], lambda r: r.oos_returns)
    _write_series(results, paths[1], cumulative_returns)
    with paths[2].open('w', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp)
        writer.writerow(['strategy', 'window', 'row'] + list(asset_names))
        for res in results:
            for window, row, x in zip(res.rebalances, res.rebalance_rows, res.weight_history):
                writer.writerow([res.strategy_id, window, row] + [fmt_float(float(v)) for v in x])
    jsonlib.dump(
        {res.strategy_id: dict(complete=res.complete, windows=res.diagnostics)
         for res in results},
        paths[3])
    return paths
