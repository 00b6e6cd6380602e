import pathlib
import itertools

import pytest
import numpy as np
from scipy.optimize import linprog

from mvvar.data import ScenarioMatrix, compute_stats
from mvvar.risk import ConfidenceLevel
from mvvar.qp import QpProblem, solve_qp, markowitz_problem


@pytest.fixture
def fixtures_dir():
    return pathlib.Path(__file__).parent / 'fixtures'


def random_scenarios(n, T, seed):
    rng = np.random.default_rng(seed)
    returns = rng.normal(0.002, 0.03, size=(T, n)) + rng.uniform(-0.002, 0.004, size=n)
    return ScenarioMatrix(np.clip(np.round(returns, 6), -0.9, None))


def epsilon_for(T, K):
    """
    A confidence level with floor(εT) == K.
    """
    return ConfidenceLevel(min((K + 0.5) / T, 0.5) if K else 0.5 / T)


@pytest.fixture
def instance():
    def make(n=3, T=10, seed=0):
        s = random_scenarios(n, T, seed)
        return s, compute_stats(s)
    return make


def _excluded(T, K):
    return itertools.combinations(range(T), K)


def oracle_min_variance(stats, s, eta, z, eps):
    """
    Minimum variance over all sets of at most K scenarios allowed to violate the VaR cap.
    """
    K, best = ConfidenceLevel.from_value(eps).max_exceedances(s.T), np.inf
    base = markowitz_problem(stats, eta)
    for excluded in _excluded(s.T, K):
        rows = [t for t in range(s.T) if t not in excluded]
        p = QpProblem(
            Q=base.Q,
            A_eq=base.A_eq,
            b_eq=base.b_eq,
            A_in=np.vstack([base.A_in, -s.returns[rows]]),
            b_in=np.concatenate([base.b_in, np.full(len(rows), z)]),
            lb=base.lb)
        sol = solve_qp(p)
        if sol.optimal:
            best = min(best, sol.objective)
    return best


def oracle_min_var_risk(stats, s, eta, eps):
    """
    Minimum VaR over all sets of K scenarios allowed below the quantile, by linear programming.
    """
    K, best = ConfidenceLevel.from_value(eps).max_exceedances(s.T), np.inf
    n = s.n
    for excluded in _excluded(s.T, K):
        rows = [t for t in range(s.T) if t not in excluded]
        # variables (x, r), maximize r
        A_ub = np.hstack([-s.returns[rows], np.ones((len(rows), 1))])
        b_ub = np.zeros(len(rows))
        if eta is not None:
            A_ub = np.vstack([A_ub, np.concatenate([-stats.mu, [0]])])
            b_ub = np.concatenate([b_ub, [-eta]])
        res = linprog(
            np.concatenate([np.zeros(n), [-1.0]]),
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=np.concatenate([np.ones(n), [0]]).reshape(1, -1),
            b_eq=[1.0],
            bounds=[(0, None)] * n + [(None, None)],
            method='highs')
        if res.status == 0:
            best = min(best, res.fun)
    return best
