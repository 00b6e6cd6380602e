"""
The data objects of `mvvar` are `attrs` classes. This module collects the validators and
converters they share, so that clean-up of numerical input is defined close to the objects:

- matrices and vectors are converted to read-only `numpy` arrays of floats,
- shapes are validated on construction.
"""
import enum
import functools
import collections

import attr
import numpy as np

__all__ = [
    'asdict', 'valid_range', 'cmp_off', 'frozen_array', 'valid_ndim',
    'valid_unit_interval_list']

# numpy arrays do not support `==` as attrs' generated `__eq__` expects.
cmp_off = {"eq": False}


def frozen_array(value) -> np.ndarray:
    """
    Converter: a float64 copy of `value` with the writeable flag cleared.
    """
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, 'asdict'):
        return value.asdict()
    if attr.has(value.__class__):
        return asdict(value)
    return value


def asdict(obj, omit_private=True) -> collections.OrderedDict:
    """
    Variant of `attr.asdict` which returns plain Python values for `numpy` arrays and
    scalars, enum members and nested `attrs` objects, i.e. something `json` can serialize.

    :param omit_private: If `True`, values of private attributes (i.e. attributes with names \
    starting with `_`) will not be added.
    """
    res = collections.OrderedDict()
    for field in attr.fields(obj.__class__):
        if not (omit_private and field.name.startswith('_')):
            res[field.name] = _jsonable(getattr(obj, field.name))
    return res


def _valid_range(min_, max_, instance, attribute, value, nullable=False, open_min=False):
    if nullable and value is None:
        return
    if (min_ is not None and (value <= min_ if open_min else value < min_)) \
            or (max_ is not None and value > max_):
        raise ValueError('{0} is not a valid {1}'.format(value, attribute.name))


def valid_range(min_, max_, nullable=False, open_min=False):
    """
    A validator that raises a `ValueError` if the provided value is not in the range defined
    by `min_` and `max_`. With `open_min=True` the lower bound is excluded.
    """
    return functools.partial(_valid_range, min_, max_, nullable=nullable, open_min=open_min)


def _valid_ndim(ndim, instance, attribute, value):
    if value.ndim != ndim:
        raise ValueError('{0} must be {1}-dimensional, got shape {2}'.format(
            attribute.name, ndim, value.shape))


def valid_ndim(ndim):
    return functools.partial(_valid_ndim, ndim)


def valid_unit_interval_list(instance, attribute, value):
    if not value:
        raise ValueError('{0} must not be empty'.format(attribute.name))
    for v in value:
        if not 0 <= v <= 1:
            raise ValueError('{0} is not a valid {1} item'.format(v, attribute.name))
