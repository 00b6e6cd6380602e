import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mvvar.data import ScenarioMatrix
from mvvar.risk import *
from mvvar.errors import DomainError

returns = st.lists(
    st.floats(min_value=-0.5, max_value=0.5, allow_nan=False), min_size=1, max_size=40)
epsilons = st.sampled_from([0.01, 0.05, 0.1, 0.25, 0.5])


def test_ConfidenceLevel():
    assert ConfidenceLevel(0.05).max_exceedances(10) == 0
    assert ConfidenceLevel(0.1).max_exceedances(10) == 1
    assert ConfidenceLevel(0.29).max_exceedances(100) == 29
    assert ConfidenceLevel(0.5).min_covered(7) == 4
    assert float(ConfidenceLevel(0.25)) == 0.25
    assert ConfidenceLevel.from_value(0.1) == ConfidenceLevel(0.1)

    for invalid in [0, -0.1, 0.51, 'x', None]:
        with pytest.raises(DomainError):
            ConfidenceLevel(invalid)


@pytest.mark.parametrize(
    'r,eps,expected',
    [
        ([-0.05, -0.03, 0.0, 0.01, 0.02, 0.02, 0.03, 0.04, 0.05, 0.06], 0.1, 0.03),
        ([-0.05, -0.03, 0.0, 0.01, 0.02, 0.02, 0.03, 0.04, 0.05, 0.06], 0.05, 0.05),
        ([0.02, -0.01, 0.03, 0.0], 0.5, -0.02),
        ([0.01], 0.5, -0.01),
        ([0.03, 0.01, 0.02, 0.01, 0.05], 0.2, -0.01),
    ]
)
def test_empirical_var(r, eps, expected):
    assert empirical_var(r, eps) == pytest.approx(expected, abs=1e-15)


def test_empirical_var_empty():
    with pytest.raises(DomainError):
        empirical_var([], 0.1)


def test_portfolio_var():
    s = ScenarioMatrix([[0.01, -0.02], [0.03, 0.01], [-0.04, 0.02], [0.0, 0.0]])
    assert portfolio_returns(s, [0.5, 0.5]) == pytest.approx([-0.005, 0.02, -0.01, 0.0])
    assert portfolio_var(s, [0.5, 0.5], 0.25) == pytest.approx(0.005)
    assert portfolio_var(s, [1, 0], 0.25) == pytest.approx(0.0)


@pytest.mark.parametrize(
    'x',
    [
        [0.5, 0.4],
        [1.2, -0.2],
        [0.5, 0.5, 0.0],
        [np.nan, 1.0],
    ]
)
def test_check_weights(x):
    with pytest.raises(DomainError):
        check_weights(x, 2)


def test_check_weights_tolerance():
    assert check_weights([1 - 1e-10, 1e-10 - 1e-13], 2)[0] == 1 - 1e-10


@settings(max_examples=50, deadline=None)
@given(returns, epsilons, st.floats(min_value=-0.1, max_value=0.1))
def test_var_translation(r, eps, c):
    assert empirical_var(np.array(r) + c, eps) == pytest.approx(empirical_var(r, eps) - c)


@settings(max_examples=50, deadline=None)
@given(returns, epsilons, st.floats(min_value=0.01, max_value=10))
def test_var_homogeneity(r, eps, lam):
    assert empirical_var(lam * np.array(r), eps) == pytest.approx(lam * empirical_var(r, eps))


@settings(max_examples=50, deadline=None)
@given(returns, epsilons)
def test_var_is_order_statistic(r, eps):
    var = empirical_var(r, eps)
    K = ConfidenceLevel(eps).max_exceedances(len(r))
    assert sum(1 for v in r if v < -var) <= K
    assert sum(1 for v in r if v <= -var) >= K + 1


@settings(max_examples=50, deadline=None)
@given(returns, epsilons, epsilons)
def test_var_decreases_with_epsilon(r, e1, e2):
    e1, e2 = sorted([e1, e2])
    assert empirical_var(r, e1) >= empirical_var(r, e2)
