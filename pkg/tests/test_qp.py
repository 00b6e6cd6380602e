import numpy as np
import pytest

from mvvar.data import AssetStats, compute_stats
from mvvar.errors import ModelError, QpIterationLimit
from mvvar.qp import *
from mvvar.qp import markowitz_problem

from conftest import random_scenarios


def test_unconstrained():
    p = QpProblem(Q=np.eye(2), c=[-2, -4])
    sol = solve_qp(p)
    assert sol.optimal
    assert sol.x == pytest.approx([1, 2])
    assert sol.objective == pytest.approx(-5)
    assert kkt_residuals(p, sol).ok()


def test_box_bounds():
    p = QpProblem(Q=np.eye(2), c=[-2, -4], lb=[0, 0], ub=[1, 1])
    sol = solve_qp(p)
    assert sol.x == pytest.approx([1, 1])
    assert sol.z_ub == pytest.approx([0, 2])
    assert kkt_residuals(p, sol).ok()


def test_fixed_variable():
    p = QpProblem(Q=np.eye(2), c=[-2, -4], lb=[0, 0.5], ub=[1, 0.5])
    sol = solve_qp(p)
    assert sol.x == pytest.approx([1, 0.5])
    assert sol.z_ub[1] == pytest.approx(3)
    assert kkt_residuals(p, sol).ok()


def test_equality():
    p = QpProblem(Q=np.eye(2), A_eq=[[1, 1]], b_eq=[1])
    sol = solve_qp(p)
    assert sol.x == pytest.approx([0.5, 0.5])
    assert kkt_residuals(p, sol).ok()


def test_infeasible():
    p = QpProblem(Q=np.eye(2), A_eq=[[1, 1]], b_eq=[1], A_in=[[1, 1]], b_in=[0.5], lb=[0, 0])
    sol = solve_qp(p)
    assert sol.status == QpStatus.infeasible
    assert sol.certificate.violation == pytest.approx(0.5, abs=1e-9)
    assert sol.certificate.violated_rows
    assert 'violation' in str(sol.certificate)

    sol = solve_qp(QpProblem(Q=np.eye(1), lb=[1], ub=[0]))
    assert sol.status == QpStatus.infeasible
    assert sol.certificate.violated_rows == ['bounds:0']


def test_unbounded():
    sol = solve_qp(QpProblem(Q=np.zeros((1, 1)), c=[-1]))
    assert sol.status == QpStatus.unbounded
    assert sol.objective == -np.inf


def test_linear_objective():
    p = QpProblem(Q=np.zeros((2, 2)), c=[1, 2], A_eq=[[1, 1]], b_eq=[1], lb=[0, 0])
    sol = solve_qp(p)
    assert sol.x == pytest.approx([1, 0])
    assert sol.objective == pytest.approx(1)
    assert kkt_residuals(p, sol).ok()


def test_singular_hessian():
    p = QpProblem(Q=[[1, 1], [1, 1]], c=[0, -1], A_in=[[1, 1]], b_in=[1], lb=[0, 0])
    sol = solve_qp(p)
    assert sol.x == pytest.approx([0, 0.5], abs=1e-9)
    assert sol.objective == pytest.approx(-0.25)
    assert kkt_residuals(p, sol).ok()


@pytest.mark.parametrize('seed', range(10))
def test_random_kkt(seed):
    rng = np.random.default_rng(seed)
    n = 5
    B = rng.normal(size=(3, n))
    A_in = rng.normal(size=(2, n))
    x0 = rng.dirichlet(np.ones(n))
    p = QpProblem(
        Q=B.T @ B,
        c=rng.normal(size=n),
        A_eq=np.ones((1, n)),
        b_eq=[1],
        A_in=A_in,
        b_in=A_in @ x0 + 0.1,
        lb=np.zeros(n))
    sol = solve_qp(p)
    assert sol.optimal
    assert kkt_residuals(p, sol).ok()

    again = solve_qp(p, hint=sol.working_set)
    assert again.objective == pytest.approx(sol.objective, abs=1e-9)


def test_iteration_limit():
    with pytest.raises(QpIterationLimit):
        solve_qp(QpProblem(Q=np.eye(2), c=[-2, -4], lb=[0, 0], ub=[1, 1]), max_iterations=1)


@pytest.mark.parametrize(
    'kw',
    [
        dict(Q=[[1, 0], [0, -1]]),
        dict(Q=[[1, 0.5], [0, 1]]),
        dict(Q=[[1, 0, 0], [0, 1, 0]]),
        dict(Q=np.eye(2), c=[1, 2, 3]),
        dict(Q=np.eye(2), A_eq=[[1, 1, 1]], b_eq=[1]),
        dict(Q=np.eye(2), A_in=[[1, 1]], b_in=[1, 2]),
        dict(Q=np.eye(2), c=[np.nan, 0]),
        dict(Q=np.eye(2), lb=[np.nan, 0]),
    ]
)
def test_QpProblem_invalid(kw):
    with pytest.raises(ModelError):
        QpProblem(**kw)


def test_solve_markowitz():
    stats = AssetStats(mu=[0.01, 0.02], sigma=[[1e-4, 0], [0, 4e-4]])
    gmv = solve_markowitz(stats)
    assert gmv.x == pytest.approx([0.8, 0.2])
    assert gmv.objective == pytest.approx(8e-5)
    assert solve_markowitz(stats, -np.inf).x == pytest.approx(gmv.x)

    sol = solve_markowitz(stats, 0.015)
    assert sol.x == pytest.approx([0.5, 0.5])
    assert sol.objective == pytest.approx(1.25e-4)
    assert sol.y_in[0] > 0
    assert kkt_residuals(markowitz_problem(stats, 0.015), sol).ok()

    assert solve_markowitz(stats, 0.03).status == QpStatus.infeasible
    with pytest.raises(ModelError):
        solve_markowitz(stats, np.nan)


def test_solve_markowitz_duplicate_assets():
    stats = AssetStats(
        mu=[0.01, 0.02, 0.01],
        sigma=[[1e-4, 0, 1e-4], [0, 4e-4, 0], [1e-4, 0, 1e-4]])
    sol = solve_markowitz(stats)
    assert sol.objective == pytest.approx(8e-5)
    assert sol.x[0] + sol.x[2] == pytest.approx(0.8)
    assert kkt_residuals(markowitz_problem(stats), sol).ok()


@pytest.mark.parametrize('seed', range(5))
def test_markowitz_variance_increases_with_target(seed):
    stats = compute_stats(random_scenarios(5, 30, seed))
    gmv = solve_markowitz(stats)
    etas = np.linspace(stats.expected_return(gmv.x), stats.mu.max(), 12)[:-1]
    variances = [solve_markowitz(stats, eta).objective for eta in etas]
    assert variances[0] == pytest.approx(gmv.objective, abs=1e-12)
    assert all(v1 <= v2 + 1e-12 for v1, v2 in zip(variances, variances[1:]))


@pytest.mark.parametrize('lam', [0.5, 3.0, 100.0])
def test_markowitz_scale_equivariance(lam):
    stats = compute_stats(random_scenarios(4, 20, 11))
    eta = stats.mu.min() + 0.5 * np.ptp(stats.mu)
    base = solve_markowitz(stats, eta)
    scaled = solve_markowitz(AssetStats(mu=stats.mu, sigma=stats.sigma * lam), eta)
    assert scaled.objective == pytest.approx(lam * base.objective, rel=1e-9)
    assert scaled.x == pytest.approx(base.x, abs=1e-7)


@pytest.mark.parametrize('eta', [None, 0.012, 0.015, 0.018])
def test_markowitz_grid_search(eta):
    stats = AssetStats(
        mu=[0.01, 0.02, 0.015],
        sigma=[[4e-4, 1e-4, 0], [1e-4, 9e-4, 2e-4], [0, 2e-4, 6e-4]])
    m = 1000
    a, b = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing='ij')
    mask = a + b <= m
    W = np.column_stack([a[mask], b[mask], m - a[mask] - b[mask]]) / m
    if eta is not None:
        W = W[W @ stats.mu >= eta]
    grid_min = np.einsum('ij,jk,ik->i', W, stats.sigma, W).min()

    sol = solve_markowitz(stats, eta)
    assert sol.optimal
    assert sol.objective <= grid_min + 1e-12
    assert grid_min - sol.objective <= 1e-5
