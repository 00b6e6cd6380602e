"""
Return datasets: loading panels of historical linear returns from CSV, validating them and
computing the sample statistics all models consume.

The CSV format is UTF-8 (a byte order mark is ignored), comma-separated, with a header row of
asset names and one row per period, oldest first. A leading column named `date` is recognized
and dropped:

.. code-block::

    date,AAA,BBB
    2016-01-08,0.0123,-0.0040
    2016-01-15,-0.0051,0.0012
"""
import csv
import enum
import math
import io
import typing
import logging
import pathlib

import attr
import numpy as np

from mvvar.attrlib import cmp_off, frozen_array, valid_ndim
from mvvar.errors import ParseError, DomainError

__all__ = [
    'PeriodKind', 'ScenarioMatrix', 'AssetStats',
    'load_returns', 'write_returns', 'compute_stats', 'synthetic_returns']


class PeriodKind(enum.Enum):
    """
    Sampling frequency of a return panel, with the calibration of the rolling window
    evaluation: "one financial month" is 4 weekly or 20 daily periods.
    """
    weekly = 'weekly'
    daily = 'daily'

    @property
    def month(self) -> int:
        return {'weekly': 4, 'daily': 20}[self.value]

    @property
    def default_in_sample(self) -> int:
        return {'weekly': 104, 'daily': 200}[self.value]


def _valid_returns(instance, attribute, value):
    if value.shape[0] < 2:
        raise DomainError('at least 2 periods are required, got {0}'.format(value.shape[0]))
    if value.shape[1] < 1:
        raise DomainError('at least 1 asset is required')
    if not np.all(np.isfinite(value)):
        raise DomainError('returns must be finite')
    if np.any(value <= -1):
        t, k = [int(i) for i in np.argwhere(value <= -1)[0]]
        raise DomainError('linear return {0} of asset {1} in period {2} is <= -1'.format(
            value[t, k], k + 1, t + 1))


@attr.s(frozen=True, **cmp_off)
class ScenarioMatrix:
    """
    T equally likely scenarios of linear returns of n assets.

    :ivar returns: T×n array, `returns[t, k]` is the return of asset k in period t.
    :ivar asset_names: n unique labels.
    :ivar period_kind: The sampling frequency.
    """
    returns = attr.ib(converter=frozen_array, validator=[valid_ndim(2), _valid_returns])
    asset_names = attr.ib(converter=attr.converters.optional(tuple), default=None)
    period_kind = attr.ib(converter=PeriodKind, default=PeriodKind.weekly)

    def __attrs_post_init__(self):
        if not self.asset_names:
            object.__setattr__(
                self, 'asset_names', tuple('A{0}'.format(k + 1) for k in range(self.n)))
        if len(self.asset_names) != self.n:
            raise DomainError('{0} asset names for {1} columns'.format(
                len(self.asset_names), self.n))
        if len(set(self.asset_names)) != self.n:
            raise DomainError('asset names must be unique')

    @property
    def T(self) -> int:
        return self.returns.shape[0]

    @property
    def n(self) -> int:
        return self.returns.shape[1]

    def window(self, start: int, stop: int) -> 'ScenarioMatrix':
        """
        The scenarios of rows `[start, stop)`.
        """
        return attr.evolve(self, returns=self.returns[start:stop])

    def permuted(self, order: typing.Sequence[int]) -> 'ScenarioMatrix':
        """
        The same scenarios with asset columns in the given order.
        """
        order = list(order)
        return attr.evolve(
            self,
            returns=self.returns[:, order],
            asset_names=[self.asset_names[k] for k in order])


def _valid_sigma(instance, attribute, value):
    if value.shape != (instance.mu.shape[0], instance.mu.shape[0]):
        raise DomainError('covariance matrix shape {0} does not match {1} means'.format(
            value.shape, instance.mu.shape[0]))
    if np.max(np.abs(value - value.T), initial=0) > 1e-12:
        raise DomainError('covariance matrix is not symmetric')
    if np.linalg.eigvalsh(value).min() < -1e-9 * max(np.trace(value), 0.0):
        raise DomainError('covariance matrix is not positive semidefinite')


@attr.s(frozen=True, **cmp_off)
class AssetStats:
    """
    Expected returns and covariances of the assets of a scenario set.

    :ivar mu: length-n vector of per-period expected returns.
    :ivar sigma: n×n covariance matrix.
    """
    mu = attr.ib(converter=frozen_array, validator=valid_ndim(1))
    sigma = attr.ib(converter=frozen_array, validator=[valid_ndim(2), _valid_sigma])

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    def variance(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.sigma @ x)

    def expected_return(self, x) -> float:
        return float(self.mu @ np.asarray(x, dtype=float))


def compute_stats(s: ScenarioMatrix) -> AssetStats:
    """
    Sample means and covariances with divisor T.

    .. code-block:: python

        >>> compute_stats(ScenarioMatrix([[0.01], [0.03]])).mu
        array([0.02])
    """
    mu = s.returns.mean(axis=0)
    centered = s.returns - mu
    sigma = centered.T @ centered / s.T
    return AssetStats(mu=mu, sigma=(sigma + sigma.T) / 2)


def _decode(path: pathlib.Path) -> str:
    data = path.read_bytes()
    try:
        return data.decode('utf-8-sig')
    except UnicodeDecodeError as e:
        raise ParseError(
            'not valid UTF-8: {0}'.format(e.reason), row=data[:e.start].count(b'\n') + 1)


def load_returns(
        path: typing.Union[str, pathlib.Path],
        period_kind: typing.Union[str, PeriodKind] = PeriodKind.weekly,
        log: typing.Optional[logging.Logger] = None) -> ScenarioMatrix:
    """
    Read a return panel from CSV.

    :raises ParseError: If the file is not valid UTF-8, a row has the wrong number of cells
        or a cell is not a number.
    :raises DomainError: If a return is <= -1 or the file has fewer than 2 data rows.
    """
    path = pathlib.Path(path)
    with io.StringIO(_decode(path), newline='') as fp:
        reader = csv.reader(fp)
        try:
            header = [c.strip() for c in next(reader)]
        except StopIteration:
            raise ParseError('empty file {0}'.format(path))
        skip = 1 if header and header[0].lower() == 'date' else 0
        names = header[skip:]
        if not names or not all(names):
            raise ParseError('invalid header', row=1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    'expected {0} cells, got {1}'.format(len(header), len(row)), row=lineno)
            values = []
            for colno, cell in enumerate(row[skip:], start=skip + 1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError('not a number: {0!r}'.format(cell), row=lineno, column=colno)
                if not math.isfinite(v):
                    raise DomainError('row {0}, column {1}: non-finite return {2!r}'.format(
                        lineno, colno, cell))
                values.append(v)
            rows.append(values)
    if len(rows) < 2:
        raise DomainError('{0}: at least 2 data rows are required, got {1}'.format(
            path, len(rows)))
    res = ScenarioMatrix(np.array(rows), asset_names=names, period_kind=period_kind)
    if log:
        log.info('loaded {0}: n={1} assets, T={2} {3} periods'.format(
            path.name, res.n, res.T, res.period_kind.value))
    return res


def write_returns(s: ScenarioMatrix, path: typing.Union[str, pathlib.Path]) -> pathlib.Path:
    """
    Write a return panel as CSV. Floats are written with `repr`, so reading the file with
    :func:`load_returns` reproduces `s` exactly.
    """
    path = pathlib.Path(path)
    with path.open('w', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp)
        writer.writerow(s.asset_names)
        for row in s.returns:
            writer.writerow([repr(float(v)) for v in row])
    return path


def synthetic_returns(
        n: int,
        T: int,
        seed: int = 0,
        period_kind: typing.Union[str, PeriodKind] = PeriodKind.weekly) -> ScenarioMatrix:
    """
    A reproducible synthetic panel: one common factor plus idiosyncratic noise, with
    asset-specific drifts and volatilities of the order of weekly (or daily) stock returns.
    """
    period_kind = PeriodKind(period_kind)
    scale = 1.0 if period_kind == PeriodKind.weekly else 1 / np.sqrt(5)
    rng = np.random.default_rng(seed)
    drift = rng.uniform(-0.001, 0.004, size=n) * scale ** 2
    beta = rng.uniform(0.5, 1.5, size=n)
    vol = rng.uniform(0.01, 0.04, size=n) * scale
    factor = rng.standard_normal(T) * 0.02 * scale
    noise = rng.standard_normal((T, n)) * vol
    returns = np.clip(drift + np.outer(factor, beta) + noise, -0.95, None)
    return ScenarioMatrix(
        np.round(returns, 8),
        asset_names=['S{0:02d}'.format(k + 1) for k in range(n)],
        period_kind=period_kind)
