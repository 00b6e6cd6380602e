"""
The Mean-Variance-VaR model as mixed-integer quadratic program and its branch-and-bound
solver.

The variables of the model are the portfolio weights `x` (n), the quantile variable `r`
(the negative VaR) and one indicator `y_t` per scenario (T):

.. code-block::

    minimize    x'Σx                      (min_variance)   or   -r   (min_var_risk)
    subject to  sum(x) = 1,  x >= 0
                mu'x >= eta
                -r <= z                   (min_variance only)
                r <= R_t(x) + M_t (1 - y_t)     for all t
                sum(y) >= T - floor(εT),  y_t in {0, 1}

Each node of the search tree solves the continuous relaxation `0 <= y_t <= 1` with some
indicators fixed, using :func:`mvvar.qp.solve_qp`.
"""
import enum
import time
import heapq
import typing
import logging

import attr
import numpy as np

from mvvar.attrlib import cmp_off, frozen_array, valid_range
from mvvar.errors import (
    ModelError, ResourceError, NodeLimitError, QpIterationLimit, InfeasibleError,
)
from mvvar.data import ScenarioMatrix, AssetStats
from mvvar.risk import ConfidenceLevel, empirical_var
from mvvar.qp import QpProblem, QpStatus, solve_qp, solve_markowitz, FEASIBILITY_TOL
from mvvar.loglib import ProgressLog

__all__ = [
    'ObjectiveKind', 'MiqpStatus', 'SolverOptions', 'TreeStats', 'MiqpModel', 'MiqpSolution',
    'compute_big_m', 'build_model', 'solve_miqp', 'solve_min_var_risk', 'clean_weights']


class ObjectiveKind(enum.Enum):
    min_variance = 'min_variance'
    min_var_risk = 'min_var_risk'


class MiqpStatus(enum.Enum):
    optimal = 'optimal'
    infeasible = 'infeasible'
    # Best incumbent when a node or time limit stopped the search.
    limit = 'limit'


def _optional_positive(instance, attribute, value):
    if value is not None and value <= 0:
        raise ValueError('{0} is not a valid {1}'.format(value, attribute.name))


@attr.s(frozen=True)
class SolverOptions:
    """
    :ivar tol_gap: Absolute optimality gap.
    :ivar rel_gap: Relative optimality gap, w.r.t. the incumbent objective.
    :ivar node_limit: Maximal number of nodes to explore, or `None`.
    :ivar time_limit: Maximal wall-clock seconds per solve, or `None`.
    :ivar integrality: Indicators within this distance of 0 or 1 count as integral.
    :ivar workers: Number of threads for sweeps over independent solves. Branch-and-bound is
        mostly pure Python and holds the GIL, so extra threads add little speed.
    :ivar log_every: Emit a progress message every so many nodes.
    """
    tol_gap = attr.ib(default=1e-8, converter=float, validator=valid_range(0, None))
    rel_gap = attr.ib(default=1e-6, converter=float, validator=valid_range(0, None))
    node_limit = attr.ib(default=None, validator=_optional_positive)
    time_limit = attr.ib(default=None, validator=_optional_positive)
    integrality = attr.ib(default=1e-6, converter=float, validator=valid_range(0, 0.5))
    workers = attr.ib(default=1, converter=int, validator=valid_range(1, None))
    log_every = attr.ib(default=1000, converter=int, validator=valid_range(1, None))

    def prune_tolerance(self, incumbent: float) -> float:
        return max(self.tol_gap, self.rel_gap * abs(incumbent))


@attr.s
class TreeStats:
    nodes = attr.ib(default=0)
    pruned = attr.ib(default=0)
    incumbent_updates = attr.ib(default=0)
    root_bound = attr.ib(default=np.nan)
    gap = attr.ib(default=np.inf)
    qp_iterations = attr.ib(default=0)
    max_open = attr.ib(default=0)
    seconds = attr.ib(default=0.0)


def compute_big_m(s: ScenarioMatrix) -> np.ndarray:
    """
    Per-scenario big-M constants `M_t = max(r) - min_k r_kt`.

    .. code-block:: python

        >>> compute_big_m(ScenarioMatrix([[0.01], [-0.02]]))
        array([0.  , 0.03])
    """
    return s.returns.max() - s.returns.min(axis=1)


def _eta(value):
    if value is None:
        return -np.inf
    value = float(value)
    if np.isnan(value) or value == np.inf:
        raise ModelError('invalid target return {0}'.format(value))
    return value


def _z_cap(value):
    if value is None:
        return np.inf
    value = float(value)
    if np.isnan(value) or value == -np.inf:
        raise ModelError('invalid VaR cap {0}'.format(value))
    return value


@attr.s(frozen=True, **cmp_off)
class MiqpModel:
    """
    An instance of the Mean-Variance-VaR MIQP.

    :ivar eta: Target return; `-inf` drops the return constraint.
    :ivar z_cap: VaR cap; `inf` makes the cap vacuous. Ignored for `min_var_risk`.
    """
    stats = attr.ib(validator=attr.validators.instance_of(AssetStats))
    scenarios = attr.ib(validator=attr.validators.instance_of(ScenarioMatrix))
    eta = attr.ib(converter=_eta)
    z_cap = attr.ib(converter=_z_cap)
    epsilon = attr.ib(converter=ConfidenceLevel.from_value)
    big_m = attr.ib(converter=frozen_array)
    objective_kind = attr.ib(converter=ObjectiveKind, default=ObjectiveKind.min_variance)

    def __attrs_post_init__(self):
        if self.stats.n != self.scenarios.n:
            raise ModelError('statistics of {0} assets for scenarios of {1} assets'.format(
                self.stats.n, self.scenarios.n))
        if self.big_m.shape != (self.T,):
            raise ModelError('big-M vector of shape {0} for {1} scenarios'.format(
                self.big_m.shape, self.T))
        if np.any(self.big_m < compute_big_m(self.scenarios) - 1e-12):
            raise ModelError('big-M constants too small for a valid relaxation')

    @property
    def n(self) -> int:
        return self.scenarios.n

    @property
    def T(self) -> int:
        return self.scenarios.T

    @property
    def K(self) -> int:
        return self.epsilon.max_exceedances(self.T)

    @property
    def r_max(self) -> float:
        return float(self.scenarios.returns.max())

    @property
    def has_cap(self) -> bool:
        return self.objective_kind == ObjectiveKind.min_variance and np.isfinite(self.z_cap)

    def prefixed(self) -> np.ndarray:
        """
        Indicators which can be fixed to 1 up front: scenarios with `M_t = 0`, and all
        scenarios if no exceedance is allowed.
        """
        if self.K == 0:
            return np.ones(self.T, dtype=bool)
        return self.big_m <= 0

    def relaxation(self, y_lb, y_ub) -> QpProblem:
        """
        The continuous relaxation with indicator bounds `y_lb <= y <= y_ub`.
        """
        n, T = self.n, self.T
        N = n + 1 + T
        Q = np.zeros((N, N))
        c = np.zeros(N)
        if self.objective_kind == ObjectiveKind.min_variance:
            Q[:n, :n] = self.stats.sigma
        else:
            c[n] = -1.0
        A_eq = np.zeros((1, N))
        A_eq[0, :n] = 1
        rows, rhs = [], []
        if np.isfinite(self.eta):
            row = np.zeros(N)
            row[:n] = -self.stats.mu
            rows.append(row)
            rhs.append(-self.eta)
        big = np.zeros((T, N))
        big[:, :n] = -self.scenarios.returns
        big[:, n] = 1
        big[np.arange(T), n + 1 + np.arange(T)] = self.big_m
        rows.extend(big)
        rhs.extend(self.big_m)
        count = np.zeros(N)
        count[n + 1:] = -1
        rows.append(count)
        rhs.append(-self.epsilon.min_covered(T))
        lb = np.concatenate([
            np.zeros(n), [-self.z_cap if self.has_cap else -np.inf], y_lb])
        ub = np.concatenate([np.full(n, np.inf), [self.r_max], y_ub])
        return QpProblem(
            Q=Q, c=c, A_eq=A_eq, b_eq=[1.0], A_in=np.array(rows), b_in=rhs, lb=lb, ub=ub)

    def objective(self, x) -> float:
        if self.objective_kind == ObjectiveKind.min_variance:
            return self.stats.variance(x)
        return empirical_var(self.scenarios.returns @ x, self.epsilon)

    def feasible_weights(self, x) -> bool:
        """
        Whether the weight vector `x` can be completed to a feasible point of the model.
        """
        if self.has_cap and empirical_var(self.scenarios.returns @ x, self.epsilon) \
                > self.z_cap + 1e-9:
            return False
        return self.stats.expected_return(x) >= self.eta - FEASIBILITY_TOL


@attr.s(**cmp_off)
class MiqpSolution:
    """
    :ivar x: Portfolio weights.
    :ivar r_eps: The quantile variable, i.e. the negative VaR of `x`.
    :ivar y: Boolean indicators, `False` for the scenarios below the quantile.
    :ivar objective: Variance of `x` (min_variance) or VaR of `x` (min_var_risk).
    """
    x = attr.ib()
    r_eps = attr.ib()
    y = attr.ib()
    objective = attr.ib()
    status = attr.ib(converter=MiqpStatus)
    tree_stats = attr.ib(default=attr.Factory(TreeStats))
    gap = attr.ib(default=0.0)

    @property
    def var_risk(self) -> float:
        return -self.r_eps

    @property
    def optimal(self) -> bool:
        return self.status == MiqpStatus.optimal


def build_model(
        stats: AssetStats,
        scenarios: ScenarioMatrix,
        eta: typing.Optional[float],
        z_cap: typing.Optional[float],
        eps: typing.Union[ConfidenceLevel, float],
        objective_kind: typing.Union[str, ObjectiveKind] = ObjectiveKind.min_variance,
        big_m=None) -> MiqpModel:
    """
    :param big_m: Override the big-M constants; they must not be smaller than \
    :func:`compute_big_m`.
    :raises ModelError: On dimension mismatch.
    """
    return MiqpModel(
        stats=stats,
        scenarios=scenarios,
        eta=eta,
        z_cap=z_cap,
        epsilon=eps,
        big_m=compute_big_m(scenarios) if big_m is None else big_m,
        objective_kind=objective_kind)


def clean_weights(x) -> np.ndarray:
    """
    Project solver output onto the simplex: clip round-off negatives and renormalize.
    """
    x = np.maximum(np.asarray(x, dtype=float), 0)
    return x / x.sum()


def _solution(model: MiqpModel, x, status, stats: TreeStats, gap=0.0) -> MiqpSolution:
    """
    Complete weights `x` to a point of the model: the K lowest scenarios are the exceedances
    and `r_eps` is the exact quantile of the portfolio returns.
    """
    x = clean_weights(x)
    returns = model.scenarios.returns @ x
    order = np.argsort(returns, kind='stable')
    y = np.ones(model.T, dtype=bool)
    y[order[:model.K]] = False
    r_eps = float(returns[order[model.K]])
    return MiqpSolution(
        x=x,
        r_eps=r_eps,
        y=y,
        objective=model.objective(x),
        status=status,
        tree_stats=stats,
        gap=gap)


@attr.s(order=True)
class _Node:
    bound = attr.ib()
    id = attr.ib()
    y_lb = attr.ib(order=False)
    y_ub = attr.ib(order=False)


class _Search(object):
    """
    Best-bound branch-and-bound over the scenario indicators.
    """
    def __init__(self, model: MiqpModel, opts: SolverOptions, log=None):
        self.model = model
        self.opts = opts
        self.log = log
        self.stats = TreeStats()
        self.incumbent = None
        self.incumbent_value = np.inf
        self.open = []
        self.ids = 0
        self.progress = ProgressLog(log, every=opts.log_every)
        self.started = time.monotonic()

    def offer(self, x, source):
        x = clean_weights(x)
        if not self.model.feasible_weights(x):
            return
        value = self.model.objective(x)
        if value < self.incumbent_value:
            self.incumbent, self.incumbent_value = x, value
            self.stats.incumbent_updates += 1
            if self.log:
                self.log.debug('new incumbent {0:.12g} from {1}'.format(value, source))

    def push(self, bound, y_lb, y_ub):
        self.ids += 1
        heapq.heappush(self.open, _Node(bound, self.ids, y_lb, y_ub))
        self.stats.max_open = max(self.stats.max_open, len(self.open))

    def relax(self, y_lb, y_ub):
        try:
            sol = solve_qp(self.model.relaxation(y_lb, y_ub))
        except QpIterationLimit as e:
            raise QpIterationLimit(str(e), incumbent=self.current(), gap=self.gap())
        self.stats.qp_iterations += sol.iterations
        if sol.status == QpStatus.unbounded:
            raise ModelError('unbounded node relaxation')
        return sol

    def lower_bound(self):
        return self.open[0].bound if self.open else self.incumbent_value

    def gap(self):
        if self.incumbent is None:
            return np.inf
        return max(self.incumbent_value - self.lower_bound(), 0.0)

    def current(self):
        if self.incumbent is None:
            return None
        self.stats.gap = self.gap()
        return _solution(
            self.model, self.incumbent, MiqpStatus.limit, self.stats, gap=self.stats.gap)

    def check_limits(self):
        if self.opts.node_limit is not None and self.stats.nodes >= self.opts.node_limit:
            raise NodeLimitError(
                'node limit of {0} reached'.format(self.opts.node_limit),
                incumbent=self.current(),
                gap=self.gap())
        if self.opts.time_limit is not None \
                and time.monotonic() - self.started > self.opts.time_limit:
            raise ResourceError(
                'time limit of {0}s reached'.format(self.opts.time_limit),
                incumbent=self.current(),
                gap=self.gap())

    def branch_index(self, y, y_lb, y_ub, threshold):
        free = y_lb < y_ub
        frac = np.where(free, np.minimum(y, 1 - y), -1.0)
        t = int(np.argmax(frac))
        return t if frac[t] > threshold else None

    def process(self, node: _Node):
        m, n = self.model, self.model.n
        sol = self.relax(node.y_lb, node.y_ub)
        if sol.status == QpStatus.infeasible:
            self.stats.pruned += 1
            return
        bound = sol.objective
        if self.stats.nodes == 1:
            self.stats.root_bound = bound
        self.offer(sol.x[:n], 'relaxation')
        if bound >= self.incumbent_value - self.opts.prune_tolerance(self.incumbent_value):
            self.stats.pruned += 1
            return

        y = sol.x[n + 1:]
        t = self.branch_index(y, node.y_lb, node.y_ub, self.opts.integrality)
        if t is None:
            # Integral within tolerance: fix the rounded indicators and re-solve.
            fixed = np.round(y)
            polished = self.relax(fixed, fixed)
            if polished.status == QpStatus.optimal:
                self.offer(polished.x[:n], 'polished leaf')
                if polished.objective <= bound + self.opts.prune_tolerance(bound):
                    return
            t = self.branch_index(y, node.y_lb, node.y_ub, 0.0)
            if t is None:
                self.stats.pruned += 1
                return

        zero_lb, zero_ub = node.y_lb.copy(), node.y_ub.copy()
        zero_ub[t] = 0
        if np.count_nonzero(zero_ub == 0) <= m.K:
            self.push(bound, zero_lb, zero_ub)
        one_lb, one_ub = node.y_lb.copy(), node.y_ub.copy()
        one_lb[t] = 1
        self.push(bound, one_lb, one_ub)

    def run(self):
        m = self.model
        y_lb = np.where(m.prefixed(), 1.0, 0.0)
        self.push(-np.inf, y_lb, np.ones(m.T))
        while self.open:
            if self.open[0].bound >= \
                    self.incumbent_value - self.opts.prune_tolerance(self.incumbent_value):
                self.stats.pruned += len(self.open)
                self.open = []
                break
            self.check_limits()
            node = heapq.heappop(self.open)
            self.stats.nodes += 1
            self.process(node)
            self.progress.tick(
                'nodes {0}, open {1}, incumbent {2:.10g}, bound {3:.10g}, gap {4:.3g}',
                self.stats.nodes, len(self.open), self.incumbent_value, self.lower_bound(),
                self.gap())
        self.stats.gap = self.gap() if self.incumbent is not None else np.inf
        self.stats.seconds = time.monotonic() - self.started


def solve_miqp(
        m: MiqpModel,
        opts: typing.Optional[SolverOptions] = None,
        log: typing.Optional[logging.Logger] = None) -> MiqpSolution:
    """
    Solve the model to global optimality.

    Nodes are explored best-bound first (ties by creation order), branching on the most
    fractional indicator (ties by smallest scenario index). The Markowitz portfolio seeds the
    incumbent when it satisfies the VaR cap, and every node relaxation whose weights satisfy
    the cap is offered as incumbent.

    :return: A solution with status `optimal` or `infeasible`.
    :raises NodeLimitError: If the node limit is reached before optimality is proven.
    :raises ResourceError: If the time limit is reached before optimality is proven.
    """
    opts = opts or SolverOptions()
    search = _Search(m, opts, log=log)
    if m.objective_kind == ObjectiveKind.min_variance:
        seed = solve_markowitz(m.stats, m.eta)
        search.stats.qp_iterations += seed.iterations
        if seed.status == QpStatus.infeasible:
            search.stats.gap = np.inf
            return MiqpSolution(
                x=None, r_eps=np.nan, y=None, objective=np.inf,
                status=MiqpStatus.infeasible, tree_stats=search.stats, gap=np.inf)
        search.offer(seed.x, 'Markowitz portfolio')
    search.run()
    if log:
        log.debug('{0} nodes, {1} pruned, {2} incumbent updates, gap {3:.3g}'.format(
            search.stats.nodes, search.stats.pruned, search.stats.incumbent_updates,
            search.stats.gap))
    if search.incumbent is None:
        return MiqpSolution(
            x=None, r_eps=np.nan, y=None, objective=np.inf,
            status=MiqpStatus.infeasible, tree_stats=search.stats, gap=np.inf)
    return _solution(m, search.incumbent, MiqpStatus.optimal, search.stats, search.stats.gap)


def solve_min_var_risk(
        stats: AssetStats,
        scenarios: ScenarioMatrix,
        eta: typing.Optional[float],
        eps: typing.Union[ConfidenceLevel, float],
        opts: typing.Optional[SolverOptions] = None,
        log: typing.Optional[logging.Logger] = None) -> typing.Tuple[np.ndarray, float]:
    """
    The minimum-VaR portfolio with expected return at least `eta`.

    :return: `(weights, VaR)`, where VaR is the empirical VaR of the weights.
    :raises InfeasibleError: If `eta` is not attainable.
    """
    sol = solve_miqp(
        build_model(stats, scenarios, eta, None, eps, ObjectiveKind.min_var_risk),
        opts=opts,
        log=log)
    if not sol.optimal:
        raise InfeasibleError('target return {0} is not attainable'.format(eta))
    return sol.x, sol.var_risk
