"""
The Mean-Variance-VaR efficient surface.

For a target return η the VaR caps worth considering lie in `[z_min(η), z_max(η)]`, where
`z_min` is the VaR of the minimum-VaR portfolio and `z_max` the VaR of the minimum-variance
portfolio with return at least η. Target returns lie in `[η_min, η_max]`. The surface is
sampled on the grid

.. code-block::

    η_α = η_min + α (η_max - η_min)
    z_β = z_min(η_α) + β (z_max(η_α) - z_min(η_α))

so that `β = 1` recovers the Mean-Variance frontier and `β = 0` the Mean-VaR frontier.
"""
import csv
import json
import typing
import logging
import pathlib
import concurrent.futures

import attr
import numpy as np

from mvvar.attrlib import cmp_off, asdict
from mvvar.errors import DomainError, InfeasibleError, ResourceError
from mvvar.data import ScenarioMatrix, AssetStats
from mvvar.risk import ConfidenceLevel, portfolio_var
from mvvar.qp import solve_markowitz
from mvvar.miqp import (
    SolverOptions, ObjectiveKind, MiqpStatus, build_model, solve_miqp, solve_min_var_risk,
    clean_weights,
)
from mvvar.misc import fraction_label, fmt_float, log_or_raise
from mvvar import jsonlib

__all__ = [
    'EtaRange', 'FrontierPoint', 'eta_range', 'z_range', 'sweep_surface', 'write_surface',
    'frontier_matrix', 'strategy_id', 'DEFAULT_ALPHAS', 'DEFAULT_BETAS']

DEFAULT_ALPHAS = (0.0, 0.25, 0.5, 0.75)
DEFAULT_BETAS = (0.0, 1 / 3, 2 / 3, 1.0)
N_ASSETS_TOL = 1e-6
SURFACE_COLUMNS = [
    'alpha', 'beta', 'eta', 'z', 'variance', 'var_risk', 'exp_return', 'n_assets', 'weights',
    'status', 'gap']


def strategy_id(alpha: float, beta: float) -> str:
    """
    .. code-block:: python

        >>> strategy_id(0.25, 1 / 3)
        'eta_1/4:z_1/3'
    """
    return 'eta_{0}:z_{1}'.format(fraction_label(alpha), fraction_label(beta))


@attr.s(frozen=True)
class EtaRange:
    eta_min = attr.ib()
    eta_max = attr.ib()
    eta_minV = attr.ib()
    eta_minVaR = attr.ib()

    @classmethod
    def from_candidates(cls, eta_minV, eta_minVaR, eta_max) -> 'EtaRange':
        return cls(
            eta_min=min(max(eta_minV, eta_minVaR), eta_max),
            eta_max=eta_max,
            eta_minV=eta_minV,
            eta_minVaR=eta_minVaR)

    @property
    def degenerate(self) -> bool:
        return self.eta_min >= self.eta_max

    def eta(self, alpha: float) -> float:
        if self.degenerate:
            return self.eta_max
        return self.eta_min + alpha * (self.eta_max - self.eta_min)

    def __contains__(self, eta) -> bool:
        tol = 1e-12 * max(1.0, abs(self.eta_max))
        return self.eta_min - tol <= eta <= self.eta_max + tol


@attr.s(**cmp_off)
class FrontierPoint:
    alpha = attr.ib()
    beta = attr.ib()
    eta = attr.ib()
    z = attr.ib()
    weights = attr.ib()
    variance = attr.ib()
    var_risk = attr.ib()
    exp_return = attr.ib()
    n_assets = attr.ib()
    status = attr.ib(default='optimal', validator=attr.validators.in_(['optimal', 'limit']))
    gap = attr.ib(default=0.0)

    @property
    def id(self) -> str:
        return strategy_id(self.alpha, self.beta)

    @classmethod
    def from_weights(cls, x, stats, scenarios, eps, **kw) -> 'FrontierPoint':
        x = clean_weights(x)
        return cls(
            weights=x,
            variance=stats.variance(x),
            var_risk=portfolio_var(scenarios, x, eps),
            exp_return=stats.expected_return(x),
            n_assets=int(np.count_nonzero(x > N_ASSETS_TOL)),
            **kw)

    def asdict(self):
        res = asdict(self)
        res['id'] = self.id
        return res


def eta_range(
        stats: AssetStats,
        scenarios: ScenarioMatrix,
        eps: typing.Union[ConfidenceLevel, float],
        opts: typing.Optional[SolverOptions] = None,
        log: typing.Optional[logging.Logger] = None) -> EtaRange:
    """
    The interval of target returns of efficient portfolios.
    """
    gmv = solve_markowitz(stats, None)
    x_min_var_risk, _ = solve_min_var_risk(stats, scenarios, None, eps, opts=opts)
    res = EtaRange.from_candidates(
        eta_minV=stats.expected_return(clean_weights(gmv.x)),
        eta_minVaR=stats.expected_return(x_min_var_risk),
        eta_max=float(stats.mu.max()))
    if log:
        log.debug('eta range [{0:.6g}, {1:.6g}]'.format(res.eta_min, res.eta_max))
    return res


def z_range(
        eta: float,
        stats: AssetStats,
        scenarios: ScenarioMatrix,
        eps: typing.Union[ConfidenceLevel, float],
        bounds: typing.Optional[EtaRange] = None,
        opts: typing.Optional[SolverOptions] = None,
        log: typing.Optional[logging.Logger] = None) -> typing.Tuple[float, float]:
    """
    The interval `(z_min, z_max)` of VaR caps for target return `eta`.

    The minimal VaR is only known up to the solver's optimality gap, so a `z_min` exceeding
    `z_max` within that gap is clamped to `z_max`.

    :param bounds: The precomputed :func:`eta_range`.
    :raises DomainError: If `eta` lies outside the range of efficient target returns.
    :raises InfeasibleError: If `z_min` exceeds `z_max` by more than the gap and no `log` is \
    passed; with a `log` the excess is reported as warning and `z_min` is clamped.
    """
    opts = opts or SolverOptions()
    bounds = bounds or eta_range(stats, scenarios, eps, opts=opts)
    if eta not in bounds:
        raise DomainError('target return {0} outside [{1}, {2}]'.format(
            eta, bounds.eta_min, bounds.eta_max))
    _, z_min = solve_min_var_risk(stats, scenarios, eta, eps, opts=opts)
    mv = solve_markowitz(stats, eta)
    if not mv.optimal:
        raise InfeasibleError('no portfolio attains target return {0}'.format(eta))
    z_max = portfolio_var(scenarios, clean_weights(mv.x), eps)
    if z_min - z_max > opts.prune_tolerance(z_max) + 1e-9:
        log_or_raise(
            'minimal VaR {0:.10g} exceeds Markowitz VaR {1:.10g} at target return {2}'.format(
                z_min, z_max, eta),
            log=log,
            exception_cls=InfeasibleError)
    return min(z_min, z_max), z_max


def _solve_point(task):
    stats, scenarios, eps, opts, accept_incumbent, alpha, beta, eta, z = task
    meta = dict(alpha=alpha, beta=beta, eta=eta, z=z)
    try:
        sol = solve_miqp(
            build_model(stats, scenarios, eta, z, eps, ObjectiveKind.min_variance), opts=opts)
    except ResourceError as e:
        if accept_incumbent and e.incumbent is not None:
            return FrontierPoint.from_weights(
                e.incumbent.x, stats, scenarios, eps, status='limit', gap=e.gap, **meta)
        raise
    if sol.status == MiqpStatus.infeasible:
        raise InfeasibleError('grid point eta={0}, z={1} is infeasible'.format(eta, z))
    return FrontierPoint.from_weights(sol.x, stats, scenarios, eps, gap=sol.gap, **meta)


def _valid_grid(name, values):
    values = [float(v) for v in values]
    if not values:
        raise DomainError('{0} must not be empty'.format(name))
    if any(not 0 <= v <= 1 for v in values):
        raise DomainError('{0} must lie in [0, 1]'.format(name))
    return values


def sweep_surface(
        stats: AssetStats,
        scenarios: ScenarioMatrix,
        eps: typing.Union[ConfidenceLevel, float],
        alphas: typing.Sequence[float] = DEFAULT_ALPHAS,
        betas: typing.Sequence[float] = DEFAULT_BETAS,
        opts: typing.Optional[SolverOptions] = None,
        accept_incumbent: bool = False,
        log: typing.Optional[logging.Logger] = None) -> typing.List[FrontierPoint]:
    """
    Compute the efficient portfolios of the (α, β) grid, ordered by α, then β.

    Grid points are solved by a thread pool of `opts.workers` threads. Branch-and-bound is mostly
    pure Python and holds the GIL, so additional workers add little speed.

    :param accept_incumbent: If `True`, a grid point whose solve hit a node or time limit is \
    reported with its incumbent and status `limit`; otherwise the limit error propagates.
    :raises InfeasibleError: If a grid point turns out infeasible.
    """
    alphas, betas = _valid_grid('alphas', alphas), _valid_grid('betas', betas)
    eps = ConfidenceLevel.from_value(eps)
    opts = opts or SolverOptions()
    bounds = eta_range(stats, scenarios, eps, opts=opts, log=log)
    solved_alphas = alphas[:1] if bounds.degenerate else alphas

    with concurrent.futures.ThreadPoolExecutor(max_workers=opts.workers) as executor:
        etas = [bounds.eta(alpha) for alpha in solved_alphas]
        zs = list(executor.map(
            lambda eta: z_range(eta, stats, scenarios, eps, bounds=bounds, opts=opts, log=log),
            etas))
        tasks = []
        for alpha, eta, (z_min, z_max) in zip(solved_alphas, etas, zs):
            for beta in betas:
                z = z_max if beta == 1 else z_min + beta * (z_max - z_min)
                tasks.append(
                    (stats, scenarios, eps, opts, accept_incumbent, alpha, beta, eta, z))
        points = list(executor.map(_solve_point, tasks))

    if bounds.degenerate:
        points = [attr.evolve(p, alpha=alpha) for alpha in alphas for p in points]
    if log:
        log.debug('swept {0} grid points'.format(len(points)))
    return points


def write_surface(
        points: typing.Sequence[FrontierPoint],
        path: typing.Union[str, pathlib.Path],
        fmt: str = 'csv') -> pathlib.Path:
    """
    Write grid points as CSV (weights as JSON array) or as JSON list of objects.
    """
    path = pathlib.Path(path)
    if fmt == 'json':
        jsonlib.dump([p.asdict() for p in points], path)
        return path
    if fmt != 'csv':
        raise ValueError(fmt)
    with path.open('w', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp)
        writer.writerow(SURFACE_COLUMNS)
        for p in points:
            writer.writerow([
                fmt_float(p.alpha),
                fmt_float(p.beta),
                fmt_float(p.eta),
                fmt_float(p.z),
                fmt_float(p.variance),
                fmt_float(p.var_risk),
                fmt_float(p.exp_return),
                p.n_assets,
                json.dumps(jsonlib.format(p.weights)),
                p.status,
                fmt_float(p.gap)])
    return path


def frontier_matrix(
        points: typing.Sequence[FrontierPoint],
        field: str = 'n_assets') -> typing.Tuple[typing.List[str], typing.List[list]]:
    """
    Arrange a field of the grid points as table with one row per β and one column per α.

    :return: `(header, rows)`, suitable for :class:`mvvar.clilib.Table`.
    """
    alphas = sorted({p.alpha for p in points})
    betas = sorted({p.beta for p in points})
    values = {(p.alpha, p.beta): getattr(p, field) for p in points}
    header = ['z \\ eta'] + ['eta_{0}'.format(fraction_label(a)) for a in alphas]
    rows = [
        ['z_{0}'.format(fraction_label(b))] + [values.get((a, b)) for a in alphas]
        for b in betas]
    return header, rows
