"""
Empirical Value-at-Risk of a discrete distribution of equally likely scenarios.

The quantile convention is the one the scenario counting constraint of the MIQP certifies:
with K = floor(εT) scenarios allowed to fall below the quantile, the VaR is the negative of
the (K+1)-th smallest return.

.. code-block:: python

    >>> from mvvar.risk import ConfidenceLevel, empirical_var
    >>> empirical_var([-0.05, -0.03, 0.0, 0.01, 0.02, 0.02, 0.03, 0.04, 0.05, 0.06],
    ...               ConfidenceLevel(0.1))
    0.03
"""
import math
import typing

import attr
import numpy as np

from mvvar.attrlib import valid_range
from mvvar.errors import DomainError
from mvvar.data import ScenarioMatrix

__all__ = [
    'ConfidenceLevel', 'portfolio_returns', 'empirical_var', 'portfolio_var', 'check_weights']

SIMPLEX_TOL = 1e-9
NONNEG_TOL = 1e-12


def _epsilon(value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise DomainError('invalid confidence level: {0!r}'.format(value))
    if not 0 < value <= 0.5:
        raise DomainError('confidence level must be in (0, 0.5], got {0}'.format(value))
    return value


@attr.s(frozen=True)
class ConfidenceLevel:
    """
    The probability ε of the left tail.

    :ivar epsilon: A probability in (0, 0.5].
    """
    epsilon = attr.ib(converter=_epsilon, validator=valid_range(0, 0.5, open_min=True))

    @classmethod
    def from_value(cls, value: typing.Union['ConfidenceLevel', float]) -> 'ConfidenceLevel':
        return value if isinstance(value, cls) else cls(value)

    def max_exceedances(self, T: int) -> int:
        """
        K = floor(εT), the number of scenarios allowed to fall below the quantile.

        .. code-block:: python

            >>> ConfidenceLevel(0.29).max_exceedances(100)
            29
        """
        # 0.29 * 100 == 28.999999999999996
        return int(math.floor(self.epsilon * T + 1e-9))

    def min_covered(self, T: int) -> int:
        """
        ceil((1 - ε)T), the number of scenarios which must lie above the quantile.
        """
        return T - self.max_exceedances(T)

    def __float__(self):
        return self.epsilon


def check_weights(x, n: int) -> np.ndarray:
    """
    Validate a weight vector against the simplex tolerances.

    :raises DomainError: If `x` has the wrong length or is not on the simplex.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != n:
        raise DomainError('weight vector of shape {0} for {1} assets'.format(x.shape, n))
    if not np.all(np.isfinite(x)):
        raise DomainError('weights must be finite')
    if abs(x.sum() - 1) > SIMPLEX_TOL:
        raise DomainError('weights sum to {0!r}, not 1'.format(float(x.sum())))
    if x.min() < -NONNEG_TOL:
        raise DomainError('negative weight {0!r}'.format(float(x.min())))
    return x


def portfolio_returns(s: ScenarioMatrix, x) -> np.ndarray:
    """
    The return of portfolio `x` under each scenario, i.e. `R_t(x) = sum_k x_k r_kt`.
    """
    return s.returns @ check_weights(x, s.n)


def empirical_var(r, eps: typing.Union[ConfidenceLevel, float]) -> float:
    """
    Negative of the (K+1)-th smallest element of `r`, with K = floor(εT).

    :raises DomainError: If `r` is empty.
    """
    eps = ConfidenceLevel.from_value(eps)
    r = np.asarray(r, dtype=float).ravel()
    if r.size == 0:
        raise DomainError('cannot compute VaR of an empty return vector')
    K = eps.max_exceedances(r.size)
    return -float(np.sort(r, kind='stable')[K])


def portfolio_var(s: ScenarioMatrix, x, eps: typing.Union[ConfidenceLevel, float]) -> float:
    return empirical_var(portfolio_returns(s, x), eps)
