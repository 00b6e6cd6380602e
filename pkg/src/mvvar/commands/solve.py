"""
Solve the Mean-Variance-VaR MIQP for one target return and VaR cap.

Writes `solution.json` and `config.ini` to the output directory. Exit status is 3 if the
problem is infeasible and 4 if a node or time limit stopped the search, in which case the
best incumbent is written.

    mvvar solve --data returns.csv --epsilon 0.05 --eta 0.001 --z 0.02
"""
from mvvar.clilib import (
    add_run_options, get_config, load_dataset, prepare_out, ExitCode, Table,
)
from mvvar.data import compute_stats
from mvvar.errors import ResourceError
from mvvar.miqp import ObjectiveKind, build_model, solve_miqp
from mvvar.attrlib import asdict
from mvvar import jsonlib


def register(parser):
    add_run_options(parser, solve=True)
    parser.add_argument(
        '--objective',
        choices=[k.value for k in ObjectiveKind],
        default=ObjectiveKind.min_variance.value,
        help='min_var_risk ignores --z')


def _artifact(cfg, s, stats, model, sol):
    res = dict(
        status=sol.status.value,
        objective_kind=model.objective_kind.value,
        eta=model.eta,
        z=model.z_cap,
        epsilon=cfg.epsilon,
        gap=sol.gap,
        tree_stats=asdict(sol.tree_stats))
    if sol.x is not None:
        res.update(
            weights=dict(zip(s.asset_names, sol.x.tolist())),
            r_eps=sol.r_eps,
            var_risk=sol.var_risk,
            objective=sol.objective,
            variance=stats.variance(sol.x),
            exp_return=stats.expected_return(sol.x))
    return res


def run(args):
    cfg = get_config(args)
    s = load_dataset(cfg, log=args.log)
    stats = compute_stats(s)
    model = build_model(stats, s, cfg.eta, cfg.z, cfg.epsilon, args.objective)
    outdir = prepare_out(cfg)
    status = ExitCode.ok
    try:
        sol = solve_miqp(model, opts=cfg.solver_options(), log=args.log)
    except ResourceError as e:
        if e.incumbent is None:
            raise
        args.log.warning('{0}; writing the incumbent with gap {1:.3g}'.format(e, e.gap))
        sol, status = e.incumbent, ExitCode.limit

    jsonlib.dump(_artifact(cfg, s, stats, model, sol), outdir / 'solution.json')
    args.log.info('wrote {0}'.format(outdir / 'solution.json'))
    if not sol.optimal and status == ExitCode.ok:
        args.log.error('the problem is infeasible')
        return ExitCode.infeasible

    with Table(args, 'asset', 'weight', tablefmt=cfg.format) as t:
        for name, w in zip(s.asset_names, sol.x):
            if w > 0:
                t.append([name, w])
    return status
