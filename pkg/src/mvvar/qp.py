"""
Convex quadratic programming.

Problems are stated as

.. code-block::

    minimize    x'Qx + c'x
    subject to  A_eq x = b_eq,  A_in x <= b_in,  lb <= x <= ub

with a symmetric positive semidefinite `Q`. :func:`solve_qp` finds a feasible point with an
elastic phase-one LP (`scipy.optimize.linprog` with HiGHS) and then runs a primal active-set
method in the null space of the working constraints. Singular reduced Hessians are handled
without regularization: if the reduced gradient has a component along a direction of zero
curvature, the method follows that direction as a ray until a constraint blocks it.

Multipliers follow the sign convention of the Lagrangian

.. code-block::

    2Qx + c + A_eq'y_eq + A_in'y_in - z_lb + z_ub = 0,   y_in, z_lb, z_ub >= 0
"""
import enum
import typing
import logging

import attr
import numpy as np
from scipy import linalg
from scipy.optimize import linprog

from mvvar.attrlib import cmp_off, frozen_array
from mvvar.errors import ModelError, QpIterationLimit
from mvvar.data import AssetStats

__all__ = [
    'QpStatus', 'QpProblem', 'QpSolution', 'InfeasibilityCertificate', 'KktResiduals',
    'solve_qp', 'solve_markowitz', 'kkt_residuals',
    'FEASIBILITY_TOL', 'STATIONARITY_TOL']

FEASIBILITY_TOL = 1e-8
STATIONARITY_TOL = 1e-6
# Elastic phase-one values above this mean the constraints cannot be satisfied.
INFEASIBILITY_TOL = 1e-9
ACTIVE_TOL = 1e-9
STEP_TOL = 1e-11
EIGEN_TOL = 1e-11
RAY_TOL = 1e-12
DUAL_TOL = 1e-10


class QpStatus(enum.Enum):
    optimal = 'optimal'
    infeasible = 'infeasible'
    unbounded = 'unbounded'


def _matrix(value):
    return None if value is None else frozen_array(value)


@attr.s(**cmp_off)
class QpProblem:
    """
    A convex QP. Omitted constraint blocks are empty, omitted bounds are infinite.
    """
    Q = attr.ib(converter=frozen_array)
    c = attr.ib(default=None, converter=_matrix)
    A_eq = attr.ib(default=None, converter=_matrix)
    b_eq = attr.ib(default=None, converter=_matrix)
    A_in = attr.ib(default=None, converter=_matrix)
    b_in = attr.ib(default=None, converter=_matrix)
    lb = attr.ib(default=None, converter=_matrix)
    ub = attr.ib(default=None, converter=_matrix)

    def __attrs_post_init__(self):
        if self.Q.ndim != 2 or self.Q.shape[0] != self.Q.shape[1]:
            raise ModelError('Q must be a square matrix, got shape {0}'.format(self.Q.shape))
        n = self.n
        if self.c is None:
            self.c = frozen_array(np.zeros(n))
        for name in ['eq', 'in']:
            A, b = getattr(self, 'A_' + name), getattr(self, 'b_' + name)
            if A is None or A.size == 0:
                A = np.zeros((0, n))
            A = frozen_array(np.atleast_2d(A))
            if A.ndim != 2 or A.shape[1] != n:
                raise ModelError('A_{0} must have {1} columns, got shape {2}'.format(
                    name, n, A.shape))
            b = frozen_array(np.zeros(0) if b is None else np.atleast_1d(b))
            if A.shape[0] != b.shape[0]:
                raise ModelError('A_{0} has {1} rows, b_{0} has {2} entries'.format(
                    name, A.shape[0], b.shape[0]))
            setattr(self, 'A_' + name, A)
            setattr(self, 'b_' + name, b)
        self.lb = frozen_array(np.full(n, -np.inf) if self.lb is None else self.lb)
        self.ub = frozen_array(np.full(n, np.inf) if self.ub is None else self.ub)
        for name in ['c', 'lb', 'ub']:
            if getattr(self, name).shape != (n,):
                raise ModelError('{0} must have length {1}, got shape {2}'.format(
                    name, n, getattr(self, name).shape))
        if not (np.all(np.isfinite(self.Q)) and np.all(np.isfinite(self.c))
                and np.all(np.isfinite(self.A_eq)) and np.all(np.isfinite(self.b_eq))
                and np.all(np.isfinite(self.A_in)) and np.all(np.isfinite(self.b_in))):
            raise ModelError('QP data must be finite')
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)):
            raise ModelError('bounds must not be NaN')
        if np.max(np.abs(self.Q - self.Q.T), initial=0) > 1e-12:
            raise ModelError('Q is not symmetric')
        if n and np.linalg.eigvalsh(self.Q).min() < -1e-9 * max(np.trace(self.Q), 0.0):
            raise ModelError('Q is not positive semidefinite')

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q @ x + self.c @ x)


@attr.s(**cmp_off)
class InfeasibilityCertificate:
    """
    Evidence for an empty feasible set: the minimal total constraint violation found by the
    elastic phase-one LP, the rows still violated at its optimum, and the LP's multipliers,
    which form a Farkas-type dual ray for the violated subsystem.
    """
    violation = attr.ib()
    violated_rows = attr.ib(default=attr.Factory(list))
    y_in = attr.ib(default=None)
    y_eq = attr.ib(default=None)

    def __str__(self):
        return 'total violation {0:.3g} of rows {1}'.format(
            self.violation, ', '.join(self.violated_rows) or '-')


@attr.s(**cmp_off)
class QpSolution:
    """
    :ivar working_set: Indices of the inequality rows active at the solution, in the order \
    `A_in` rows, finite lower bounds, finite upper bounds. May be passed as `hint` to \
    :func:`solve_qp` for a related problem.
    """
    x = attr.ib()
    objective = attr.ib()
    status = attr.ib(validator=attr.validators.instance_of(QpStatus))
    y_eq = attr.ib(default=None)
    y_in = attr.ib(default=None)
    z_lb = attr.ib(default=None)
    z_ub = attr.ib(default=None)
    iterations = attr.ib(default=0)
    certificate = attr.ib(default=None)
    working_set = attr.ib(default=attr.Factory(list))

    @property
    def optimal(self) -> bool:
        return self.status == QpStatus.optimal


@attr.s(**cmp_off)
class KktResiduals:
    primal = attr.ib()
    stationarity = attr.ib()
    complementarity = attr.ib()
    dual_feasibility = attr.ib()

    def ok(self, feasibility=FEASIBILITY_TOL, stationarity=STATIONARITY_TOL) -> bool:
        return self.primal <= feasibility \
            and self.stationarity <= stationarity \
            and self.complementarity <= feasibility \
            and self.dual_feasibility <= feasibility


def kkt_residuals(p: QpProblem, sol: QpSolution) -> KktResiduals:
    """
    Evaluate the KKT conditions of `p` at `sol` directly from the problem data.
    """
    x = np.asarray(sol.x, dtype=float)
    y_eq = np.zeros(p.A_eq.shape[0]) if sol.y_eq is None else np.asarray(sol.y_eq)
    y_in = np.zeros(p.A_in.shape[0]) if sol.y_in is None else np.asarray(sol.y_in)
    z_lb = np.zeros(p.n) if sol.z_lb is None else np.asarray(sol.z_lb)
    z_ub = np.zeros(p.n) if sol.z_ub is None else np.asarray(sol.z_ub)
    has_lb, has_ub = np.isfinite(p.lb), np.isfinite(p.ub)

    slack_in = p.b_in - p.A_in @ x
    slack_lb = np.where(has_lb, x - np.where(has_lb, p.lb, 0), np.inf)
    slack_ub = np.where(has_ub, np.where(has_ub, p.ub, 0) - x, np.inf)
    primal = max(
        np.max(np.abs(p.A_eq @ x - p.b_eq), initial=0),
        np.max(-slack_in, initial=0),
        np.max(-slack_lb, initial=0),
        np.max(-slack_ub, initial=0))

    grad = 2 * p.Q @ x + p.c + p.A_eq.T @ y_eq + p.A_in.T @ y_in - z_lb + z_ub
    stationarity = np.max(np.abs(grad), initial=0)

    complementarity = max(
        np.max(np.abs(y_in * slack_in), initial=0),
        np.max(np.abs(np.where(has_lb, z_lb * np.where(has_lb, slack_lb, 0), z_lb)), initial=0),
        np.max(np.abs(np.where(has_ub, z_ub * np.where(has_ub, slack_ub, 0), z_ub)), initial=0))
    dual_feasibility = max(
        0.0, -np.min(y_in, initial=0), -np.min(z_lb, initial=0), -np.min(z_ub, initial=0))
    return KktResiduals(
        primal=float(primal),
        stationarity=float(stationarity),
        complementarity=float(complementarity),
        dual_feasibility=float(dual_feasibility))


@attr.s
class _Rows:
    """
    The constraints of a QP in the form used by the active-set iteration: equality rows
    (`A_eq` plus fixed variables) and inequality rows `a_i x <= b_i`.
    """
    E = attr.ib()
    e = attr.ib()
    A = attr.ib()
    b = attr.ib()
    labels = attr.ib()
    fixed = attr.ib()

    @classmethod
    def from_problem(cls, p: QpProblem) -> '_Rows':
        n = p.n
        fixed = [j for j in range(n) if np.isfinite(p.lb[j]) and p.lb[j] == p.ub[j]]
        E = [p.A_eq] + [np.eye(n)[[j]] for j in fixed]
        e = [p.b_eq] + [np.array([p.lb[j]]) for j in fixed]
        A, b, labels = [p.A_in], [p.b_in], [('in', i) for i in range(p.A_in.shape[0])]
        for j in range(n):
            if j not in fixed and np.isfinite(p.lb[j]):
                A.append(-np.eye(n)[[j]])
                b.append(np.array([-p.lb[j]]))
                labels.append(('lb', j))
        for j in range(n):
            if j not in fixed and np.isfinite(p.ub[j]):
                A.append(np.eye(n)[[j]])
                b.append(np.array([p.ub[j]]))
                labels.append(('ub', j))
        return cls(
            E=np.vstack(E), e=np.concatenate(e), A=np.vstack(A), b=np.concatenate(b),
            labels=labels, fixed=fixed)


def _phase_one(p: QpProblem):
    """
    Minimize the total violation of the general constraints subject to the bounds.

    :return: `(x, certificate)`, where exactly one item is not `None`.
    """
    n, mi, me = p.n, p.A_in.shape[0], p.A_eq.shape[0]
    if np.any(p.lb > p.ub):
        bad = [j for j in range(n) if p.lb[j] > p.ub[j]]
        return None, InfeasibilityCertificate(
            violation=float(np.max(p.lb - p.ub)),
            violated_rows=['bounds:{0}'.format(j) for j in bad])
    if mi + me == 0:
        return np.clip(np.zeros(n), p.lb, p.ub), None

    cost = np.concatenate([np.zeros(n), np.ones(mi + 2 * me)])
    A_ub = np.hstack([p.A_in, -np.eye(mi), np.zeros((mi, 2 * me))]) if mi else None
    A_eq = np.hstack([p.A_eq, np.zeros((me, mi)), np.eye(me), -np.eye(me)]) if me else None
    bounds = [
        (None if np.isinf(lo) else lo, None if np.isinf(hi) else hi)
        for lo, hi in zip(p.lb, p.ub)] + [(0, None)] * (mi + 2 * me)
    res = linprog(
        cost,
        A_ub=A_ub,
        b_ub=p.b_in if mi else None,
        A_eq=A_eq,
        b_eq=p.b_eq if me else None,
        bounds=bounds,
        method='highs',
        options=dict(primal_feasibility_tolerance=1e-10, dual_feasibility_tolerance=1e-10))
    if res.status != 0:
        raise ModelError('phase one LP failed: {0}'.format(res.message))
    if res.fun > INFEASIBILITY_TOL:
        slack = res.x[n:]
        violated = ['in:{0}'.format(i) for i in range(mi) if slack[i] > INFEASIBILITY_TOL]
        violated.extend(
            'eq:{0}'.format(i) for i in range(me)
            if slack[mi + i] + slack[mi + me + i] > INFEASIBILITY_TOL)
        return None, InfeasibilityCertificate(
            violation=float(res.fun),
            violated_rows=violated,
            y_in=-np.asarray(res.ineqlin.marginals) if mi else np.zeros(0),
            y_eq=-np.asarray(res.eqlin.marginals) if me else np.zeros(0))
    return np.array(res.x[:n]), None


def _independent(M, a) -> bool:
    if M.shape[0] == 0:
        return bool(np.linalg.norm(a) > 0)
    return np.linalg.matrix_rank(np.vstack([M, a]), tol=1e-10 * max(1.0, np.abs(M).max())) \
        > np.linalg.matrix_rank(M, tol=1e-10 * max(1.0, np.abs(M).max()))


def _initial_working_set(rows: _Rows, x, hint):
    residual = rows.A @ x - rows.b
    tol = ACTIVE_TOL * np.maximum(1.0, np.abs(rows.b))
    active = [i for i in range(len(rows.labels)) if residual[i] >= -tol[i]]
    order = [i for i in (hint or []) if i in active]
    order.extend(i for i in active if i not in order)
    W = []
    for i in order:
        if _independent(np.vstack([rows.E, rows.A[W]]), rows.A[i]):
            W.append(i)
    M = np.vstack([rows.E, rows.A[W]])
    if M.shape[0]:
        rhs = np.concatenate([rows.e, rows.b[W]])
        x = x - np.linalg.lstsq(M, M @ x - rhs, rcond=None)[0]
    return W, x


def _direction(G, g, Z):
    """
    Search direction in the null space spanned by `Z`.

    :return: `(p, is_ray)`.
    """
    if Z.shape[1] == 0:
        return np.zeros(G.shape[0]), False
    gz = Z.T @ g
    H = Z.T @ G @ Z
    w, V = np.linalg.eigh((H + H.T) / 2)
    positive = w > EIGEN_TOL * max(1.0, np.abs(w).max(initial=0))
    null = V[:, ~positive]
    r_null = null @ (null.T @ gz)
    if np.linalg.norm(r_null) > RAY_TOL * max(1.0, np.linalg.norm(g)):
        d = -Z @ r_null
        return d / np.linalg.norm(d), True
    Vp = V[:, positive]
    return -Z @ (Vp @ ((Vp.T @ gz) / w[positive])), False


def _multipliers(rows: _Rows, W, g):
    M = np.vstack([rows.E, rows.A[W]])
    if M.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    lam = np.linalg.lstsq(M.T, -g, rcond=None)[0]
    return lam[:rows.E.shape[0]], lam[rows.E.shape[0]:]


def solve_qp(
        p: QpProblem,
        hint: typing.Optional[typing.Sequence[int]] = None,
        max_iterations: typing.Optional[int] = None,
        log: typing.Optional[logging.Logger] = None) -> QpSolution:
    """
    Solve a convex QP.

    :param hint: Inequality row indices to prefer when choosing the initial working set, e.g. \
    the `working_set` of the solution of a related problem.
    :raises ModelError: If the problem is ill-posed.
    :raises QpIterationLimit: If the active-set iteration does not converge.
    """
    x, certificate = _phase_one(p)
    if certificate is not None:
        if log:
            log.debug('QP infeasible: {0}'.format(certificate))
        return QpSolution(
            x=None, objective=np.inf, status=QpStatus.infeasible, certificate=certificate)

    rows = _Rows.from_problem(p)
    G, c = 2 * np.asarray(p.Q), np.asarray(p.c)
    W, x = _initial_working_set(rows, x, hint)
    norms = np.linalg.norm(rows.A, axis=1)
    m = len(rows.labels) + rows.E.shape[0]
    max_iterations = max_iterations or max(200, 10 * (p.n + m))
    degenerate, iteration = False, 0

    while True:
        iteration += 1
        if iteration > max_iterations:
            raise QpIterationLimit(
                'QP active-set iteration limit of {0} reached'.format(max_iterations),
                incumbent=x)
        g = G @ x + c
        M = np.vstack([rows.E, rows.A[W]])
        Z = linalg.null_space(M) if M.shape[0] else np.eye(p.n)
        d, is_ray = _direction(G, g, Z)

        if np.max(np.abs(d), initial=0) <= STEP_TOL * max(1.0, np.max(np.abs(x))):
            lam_eq, lam_in = _multipliers(rows, W, g)
            dual_tol = DUAL_TOL * max(1.0, np.linalg.norm(g))
            negative = [(lam, i) for lam, i in zip(lam_in, W) if lam < -dual_tol]
            if not negative:
                break
            if degenerate:
                drop = min(i for _, i in negative)
            else:
                drop = min(negative)[1]
            W = [i for i in W if i != drop]
            continue

        cap = 1.0
        if is_ray:
            curvature = float(d @ G @ d)
            slope = float(g @ d)
            cap = -slope / curvature if curvature > EIGEN_TOL else np.inf
        step, blocking = cap, None
        Ad = rows.A @ d
        dnorm = np.linalg.norm(d)
        for i in range(len(rows.labels)):
            if i in W or Ad[i] <= RAY_TOL * norms[i] * dnorm:
                continue
            alpha = max((rows.b[i] - rows.A[i] @ x) / Ad[i], 0.0)
            if alpha < step:
                step, blocking = alpha, i
        if np.isinf(step):
            if log:
                log.debug('QP unbounded along a zero-curvature ray')
            return QpSolution(
                x=x, objective=-np.inf, status=QpStatus.unbounded, iterations=iteration)
        x = x + step * d
        degenerate = step == 0
        if blocking is not None:
            W.append(blocking)

    return _solution(p, rows, x, W, lam_eq, lam_in, iteration)


def _solution(p, rows, x, W, lam_eq, lam_in, iterations) -> QpSolution:
    me = p.A_eq.shape[0]
    y_eq = np.array(lam_eq[:me])
    y_in, z_lb, z_ub = np.zeros(p.A_in.shape[0]), np.zeros(p.n), np.zeros(p.n)
    for k, j in enumerate(rows.fixed):
        mult = lam_eq[me + k]
        if mult > 0:
            z_ub[j] = mult
        else:
            z_lb[j] = -mult
    for lam, i in zip(lam_in, W):
        kind, index = rows.labels[i]
        lam = max(lam, 0.0)
        if kind == 'in':
            y_in[index] = lam
        elif kind == 'lb':
            z_lb[index] = lam
        else:
            z_ub[index] = lam
    return QpSolution(
        x=x,
        objective=p.objective(x),
        status=QpStatus.optimal,
        y_eq=y_eq,
        y_in=y_in,
        z_lb=z_lb,
        z_ub=z_ub,
        iterations=iterations,
        working_set=sorted(W))


def markowitz_problem(stats: AssetStats, eta: typing.Optional[float] = None) -> QpProblem:
    """
    The long-only minimum-variance problem with budget constraint and, if `eta` is finite,
    the return constraint `mu'x >= eta`.
    """
    n = stats.n
    kw = {}
    if eta is not None and np.isfinite(eta):
        kw.update(A_in=-stats.mu.reshape(1, n), b_in=[-eta])
    return QpProblem(
        Q=stats.sigma,
        c=np.zeros(n),
        A_eq=np.ones((1, n)),
        b_eq=[1.0],
        lb=np.zeros(n),
        **kw)


def solve_markowitz(
        stats: AssetStats,
        eta: typing.Optional[float] = None,
        log: typing.Optional[logging.Logger] = None) -> QpSolution:
    """
    Minimum-variance portfolio with expected return at least `eta`.

    :param eta: The target return. `None` or `-inf` drop the return constraint, giving the \
    global minimum-variance portfolio.
    """
    if eta is not None and np.isnan(eta):
        raise ModelError('target return must not be NaN')
    return solve_qp(markowitz_problem(stats, eta), log=log)
