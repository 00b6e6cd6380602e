import csv
import json

import numpy as np
import pytest

from mvvar.data import ScenarioMatrix, compute_stats
from mvvar.errors import DomainError, InfeasibleError, ResourceError
from mvvar.risk import portfolio_var
from mvvar.qp import solve_markowitz
from mvvar.miqp import SolverOptions, MiqpStatus
from mvvar.jsonlib import load
from mvvar.frontier import *

from conftest import random_scenarios

EXACT = SolverOptions(tol_gap=1e-12, rel_gap=0)


def test_strategy_id():
    assert strategy_id(0.25, 1 / 3) == 'eta_1/4:z_1/3'
    assert strategy_id(0, 1) == 'eta_0:z_1'


def test_EtaRange():
    r = EtaRange.from_candidates(0.001, 0.002, 0.01)
    assert r.eta_min == 0.002
    assert not r.degenerate
    assert r.eta(0.5) == pytest.approx(0.006)
    assert 0.01 in r
    assert 0.011 not in r

    r = EtaRange.from_candidates(0.001, 0.02, 0.01)
    assert r.eta_min == r.eta_max == 0.01
    assert r.degenerate
    assert r.eta(0.75) == 0.01


@pytest.mark.parametrize('seed', range(4))
def test_endpoints(seed):
    s = random_scenarios(3, 10, seed)
    stats, eps = compute_stats(s), 0.1
    points = sweep_surface(stats, s, eps, alphas=(0, 0.5), betas=(0, 1), opts=EXACT)
    assert [p.id for p in points] == ['eta_0:z_0', 'eta_0:z_1', 'eta_1/2:z_0', 'eta_1/2:z_1']
    bounds = eta_range(stats, s, eps, opts=EXACT)
    for p in points:
        assert p.eta == bounds.eta(p.alpha)
        z_min, z_max = z_range(p.eta, stats, s, eps, bounds=bounds, opts=EXACT)
        if p.beta == 1:
            assert p.z == z_max
            assert p.variance == pytest.approx(solve_markowitz(stats, p.eta).objective, abs=1e-7)
        else:
            assert p.z == z_min
            assert p.var_risk == pytest.approx(z_min, abs=1e-8)
        assert p.var_risk <= p.z + 1e-9
        assert p.status == 'optimal'


def test_default_grid(instance):
    s, stats = instance(n=3, T=12, seed=7)
    points = sweep_surface(stats, s, 0.1)
    assert len(points) == 16
    assert points[0].id == 'eta_0:z_0'
    assert points[-1].id == 'eta_3/4:z_1'
    for p in points:
        assert p.weights.sum() == pytest.approx(1)
        assert p.n_assets >= 1
        assert p.var_risk == pytest.approx(portfolio_var(s, p.weights, 0.1))


def test_minimum_variance_point(instance):
    s, stats = instance(n=3, T=12, seed=8)
    points = sweep_surface(stats, s, 0.1, alphas=(0,), betas=(1,))
    assert len(points) == 1
    bounds = eta_range(stats, s, 0.1)
    assert points[0].variance == pytest.approx(
        solve_markowitz(stats, bounds.eta_min).objective, abs=1e-10)
    assert points[0].variance >= solve_markowitz(stats).objective - 1e-12


def test_degenerate_range():
    s = ScenarioMatrix([[0.01], [-0.02], [0.03], [0.0]])
    points = sweep_surface(compute_stats(s), s, 0.25, alphas=(0, 0.5), betas=(0, 1))
    assert [p.id for p in points] == ['eta_0:z_0', 'eta_0:z_1', 'eta_1/2:z_0', 'eta_1/2:z_1']
    assert all(p.weights == pytest.approx([1]) for p in points)


def test_workers(instance):
    s, stats = instance(n=3, T=10, seed=2)
    p1 = sweep_surface(stats, s, 0.1, alphas=(0, 0.5), betas=(0, 1 / 3, 1))
    p2 = sweep_surface(
        stats, s, 0.1, alphas=(0, 0.5), betas=(0, 1 / 3, 1), opts=SolverOptions(workers=3))
    assert [p.asdict() for p in p1] == [p.asdict() for p in p2]


@pytest.mark.parametrize('alphas,betas', [((), (0,)), ((0,), ()), ((1.5,), (0,)), ((0,), (-1,))])
def test_invalid_grid(instance, alphas, betas):
    s, stats = instance()
    with pytest.raises(DomainError):
        sweep_surface(stats, s, 0.1, alphas=alphas, betas=betas)


def test_z_range_outside(instance):
    s, stats = instance()
    with pytest.raises(DomainError):
        z_range(stats.mu.max() + 0.01, stats, s, 0.1)


def test_accept_incumbent(instance, mocker):
    s, stats = instance()
    incumbent = mocker.Mock(x=np.array([0.2, 0.3, 0.5]))
    mocker.patch(
        'mvvar.frontier.solve_miqp',
        mocker.Mock(side_effect=ResourceError('limit', incumbent=incumbent, gap=0.1)))
    with pytest.raises(ResourceError):
        sweep_surface(stats, s, 0.1, alphas=(0,), betas=(1,))
    points = sweep_surface(stats, s, 0.1, alphas=(0,), betas=(1,), accept_incumbent=True)
    assert points[0].status == 'limit'
    assert points[0].gap == 0.1
    assert points[0].weights == pytest.approx([0.2, 0.3, 0.5])


def test_infeasible_grid_point(instance, mocker):
    s, stats = instance()
    mocker.patch(
        'mvvar.frontier.solve_miqp',
        mocker.Mock(return_value=mocker.Mock(status=MiqpStatus.infeasible)))
    with pytest.raises(InfeasibleError):
        sweep_surface(stats, s, 0.1, alphas=(0,), betas=(0,))


def test_write_surface(instance, tmp_path):
    s, stats = instance(n=3, T=10, seed=1)
    points = sweep_surface(stats, s, 0.1, alphas=(0, 0.5), betas=(0, 1))

    with write_surface(points, tmp_path / 'surface.csv').open(encoding='utf-8') as fp:
        rows = list(csv.DictReader(fp))
    assert len(rows) == 4
    assert rows[0]['status'] == 'optimal'
    assert sum(json.loads(rows[0]['weights'])) == pytest.approx(1)

    obj = load(write_surface(points, tmp_path / 'surface.json', fmt='json'))
    assert obj[3]['id'] == 'eta_1/2:z_1'

    with pytest.raises(ValueError):
        write_surface(points, tmp_path / 'surface.xml', fmt='xml')


def test_frontier_matrix(instance):
    s, stats = instance(n=3, T=10, seed=1)
    points = sweep_surface(stats, s, 0.1, alphas=(0, 0.5), betas=(0, 1))
    header, rows = frontier_matrix(points)
    assert header == ['z \\ eta', 'eta_0', 'eta_1/2']
    assert [row[0] for row in rows] == ['z_0', 'z_1']
    assert rows[1][1] == points[1].n_assets


@pytest.mark.parametrize('seed', range(3))
def test_surface_consistency(seed):
    s = random_scenarios(4, 12, seed)
    stats, eps = compute_stats(s), 0.1
    bounds = eta_range(stats, s, eps, opts=EXACT)
    points = sweep_surface(
        stats, s, eps, alphas=(0, 1 / 3, 2 / 3), betas=(0, 1 / 3, 2 / 3, 1), opts=EXACT)
    for p in points:
        z_min, z_max = z_range(p.eta, stats, s, eps, bounds=bounds, opts=EXACT)
        assert z_min - 1e-9 <= p.z <= z_max + 1e-9
        assert p.var_risk <= p.z + 1e-9
        assert p.exp_return >= p.eta - 1e-8
    for a in points:
        for b in points:
            # a is feasible for the model of b, so cannot have smaller variance.
            if a.eta >= b.eta and a.var_risk <= b.z - 1e-10:
                assert a.variance >= b.variance - 1e-8

    markowitz = [p.variance for p in points if p.beta == 1]
    assert all(v1 <= v2 + 1e-10 for v1, v2 in zip(markowitz, markowitz[1:]))


def test_sweep_repeatable(instance):
    s, stats = instance(n=4, T=12, seed=5)
    p1 = sweep_surface(stats, s, 0.1, alphas=(0, 0.5), betas=(0, 0.5, 1))
    p2 = sweep_surface(stats, s, 0.1, alphas=(0, 0.5), betas=(0, 0.5, 1))
    assert all(np.array_equal(a.weights, b.weights) for a, b in zip(p1, p2))


def test_z_range_inconsistent(instance, mocker):
    s, stats = instance(n=3, T=10, seed=4)
    bounds = eta_range(stats, s, 0.1)
    eta = bounds.eta(0.5)
    _, z_max = z_range(eta, stats, s, 0.1, bounds=bounds)

    mocker.patch(
        'mvvar.frontier.solve_min_var_risk', mocker.Mock(return_value=(None, z_max + 1e-12)))
    assert z_range(eta, stats, s, 0.1, bounds=bounds) == (z_max, z_max)

    mocker.patch(
        'mvvar.frontier.solve_min_var_risk', mocker.Mock(return_value=(None, z_max + 1.0)))
    with pytest.raises(InfeasibleError):
        z_range(eta, stats, s, 0.1, bounds=bounds)
    log = mocker.Mock()
    assert z_range(eta, stats, s, 0.1, bounds=bounds, log=log) == (z_max, z_max)
    assert log.warning.called
