"""
Rolling time window backtest of the equally weighted portfolio and the efficient portfolios
of the (α, β) grid.

Writes to the output directory:

- `manifest.json` and `config.ini`, before solving,
- `returns.csv`, `wealth.csv`, `weights.csv` and `diagnostics.json`,
- `metrics.csv`, `metrics.json`, `ranks.csv`, `vs_ew.csv` and `vs_mv.csv`.

Exit status is 4 if a window could not be solved for some strategy.
"""
import math
import collections

from mvvar.clilib import (
    add_run_options, get_config, load_dataset, prepare_out, ExitCode, Table,
)
from mvvar.backtest import make_schedule, run_backtest, write_results, EW
from mvvar.errors import DomainError
from mvvar.manifest import RunManifest
from mvvar.metrics import (
    METRICS, MetricsReport, compute_metrics, rank_report, compare_to_benchmark,
    mean_variance_benchmark, write_reports, write_ranks,
)


def register(parser):
    add_run_options(parser, backtest=True)


def _report(res, log):
    try:
        return compute_metrics(res.oos_returns, res.weight_history)
    except DomainError as e:
        log.warning('no metrics for {0}: {1}'.format(res.strategy_id, e))
        return MetricsReport(**{name: math.nan for name in METRICS})


def run(args):
    cfg = get_config(args)
    s = load_dataset(cfg, log=args.log)
    schedule = make_schedule(s.T, cfg.in_sample_len, cfg.holding_len)
    outdir = prepare_out(cfg)
    RunManifest.from_config(
        'backtest',
        cfg,
        schedule=dict(
            in_sample_len=schedule.in_sample_len,
            holding_len=schedule.holding_len,
            windows=len(schedule.windows),
            out_of_sample_len=schedule.out_of_sample_len),
    ).write(outdir / 'manifest.json')

    results = run_backtest(
        s, cfg.confidence, cfg.alphas, cfg.betas,
        in_sample_len=cfg.in_sample_len,
        holding_len=cfg.holding_len,
        opts=cfg.solver_options(),
        log=args.log)
    write_results(results, outdir, s.asset_names)

    reports = collections.OrderedDict((res.strategy_id, _report(res, args.log)) for res in results)
    for fmt in ['csv', 'json']:
        write_reports(reports, outdir / 'metrics.{0}'.format(fmt), fmt=fmt)
    write_ranks(rank_report(reports), outdir / 'ranks.csv')
    write_ranks(compare_to_benchmark(reports, EW), outdir / 'vs_ew.csv')
    write_ranks(compare_to_benchmark(reports, mean_variance_benchmark), outdir / 'vs_mv.csv')
    args.log.info('wrote results of {0} strategies over {1} windows to {2}'.format(
        len(results), len(schedule.windows), outdir))

    with Table(args, 'strategy', *METRICS, tablefmt=cfg.format) as t:
        for sid, rep in reports.items():
            t.append([sid] + [getattr(rep, name) for name in METRICS])
    return ExitCode.ok if all(res.complete for res in results) else ExitCode.limit
