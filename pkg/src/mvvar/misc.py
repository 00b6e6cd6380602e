"""
This module provides miscellaneous utility functions: check procedures which either log or
raise, and formatting/parsing of grid coordinates written as fractions.
"""
import math
import typing
import fractions

from mvvar.errors import DomainError

__all__ = ['log_or_raise', 'parse_fraction', 'fraction_label', 'fmt_float']


def log_or_raise(msg: str, log=None, level='warning', exception_cls=DomainError):
    """
    Utility for check procedures. If `log` is `None`, this works like `pytest -x`, otherwise
    the issue is just logged with the appropriate level.

    .. code-block:: python

        >>> log_or_raise("z cap below z_min")
        Traceback (most recent call last):
        ...
        mvvar.errors.DomainError: z cap below z_min
    """
    if log:
        getattr(log, level)(msg)
    else:
        raise exception_cls(msg)


def parse_fraction(s: typing.Union[str, float, int]) -> float:
    """
    Parse a number which may be given as fraction, e.g. a grid coordinate `1/3`.

    .. code-block:: python

        >>> parse_fraction('1/4')
        0.25
        >>> parse_fraction(' 0.5 ')
        0.5
    """
    if isinstance(s, (int, float)):
        return float(s)
    s = s.strip()
    if s.lower() in ('inf', '+inf', 'infinity'):
        return math.inf
    if s.lower() in ('-inf', '-infinity'):
        return -math.inf
    try:
        return float(fractions.Fraction(s))
    except (ValueError, ZeroDivisionError):
        raise DomainError('invalid number: {0!r}'.format(s))


def fraction_label(value: float, max_denominator: int = 100) -> str:
    """
    Label a grid coordinate as reduced fraction.

    .. code-block:: python

        >>> fraction_label(0.25), fraction_label(2 / 3), fraction_label(1.0)
        ('1/4', '2/3', '1')
    """
    return str(fractions.Fraction(value).limit_denominator(max_denominator))


def fmt_float(value: float, digits: int = 12) -> str:
    """
    Format a float with `digits` significant digits, the precision of all numeric output.
    """
    if math.isnan(value):
        return 'nan'
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return '{0:.{1}g}'.format(value, digits)
