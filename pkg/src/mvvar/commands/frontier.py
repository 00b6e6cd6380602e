"""
Compute the Mean-Variance-VaR efficient surface on a grid of target returns and VaR caps.

Writes `surface.csv`, `surface.json` and `config.ini` to the output directory and prints
one field of the grid portfolios as table with one row per VaR cap and one column per
target return.

    mvvar frontier --data returns.csv --epsilon 0.05 --alphas 0,1/2 --betas 0,1
"""
from mvvar.clilib import add_run_options, get_config, load_dataset, prepare_out, Table
from mvvar.data import compute_stats
from mvvar.frontier import sweep_surface, write_surface, frontier_matrix

FIELDS = ['n_assets', 'variance', 'var_risk', 'exp_return', 'z', 'eta', 'gap']


def register(parser):
    add_run_options(parser)
    parser.add_argument('--field', choices=FIELDS, default='n_assets')


def run(args):
    cfg = get_config(args)
    s = load_dataset(cfg, log=args.log)
    points = sweep_surface(
        compute_stats(s), s, cfg.confidence, cfg.alphas, cfg.betas,
        opts=cfg.solver_options(),
        log=args.log)
    outdir = prepare_out(cfg)
    for fmt in ['csv', 'json']:
        write_surface(points, outdir / 'surface.{0}'.format(fmt), fmt=fmt)
    args.log.info('wrote {0} grid portfolios to {1}'.format(len(points), outdir))

    header, rows = frontier_matrix(points, field=args.field)
    with Table(args, *header, rows=rows, tablefmt=cfg.format):
        pass
