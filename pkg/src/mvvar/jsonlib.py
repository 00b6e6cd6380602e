"""
This module provides small tools to make reading and writing JSON data simpler. The standard
library's `json` module does all the heavy lifting here, but numerical output needs some care:

- `numpy` arrays and scalars are not serializable,
- JSON has no representation for infinite values (an uncapped VaR bound is `inf`),
- all floating point output is written with 12 significant digits.

.. code-block:: python

    >>> import numpy as np
    >>> from mvvar.jsonlib import format
    >>> format({'weights': np.array([1 / 3, 2 / 3]), 'z': float('inf')})
    {'weights': [0.333333333333, 0.666666666667], 'z': 'inf'}
"""
import json
import math
import pathlib
import typing

import numpy as np

__all__ = ['format', 'dump', 'load']


def format(value, digits: int = 12):
    """
    Recursively convert `value` into JSON serializable data, rounding floats to `digits`
    significant digits and encoding non-finite floats as strings.
    """
    if isinstance(value, np.ndarray):
        return [format(v, digits=digits) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return float('{0:.{1}g}'.format(value, digits))
    if isinstance(value, dict):
        return {k: format(v, digits=digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [format(v, digits=digits) for v in value]
    return value


def dump(obj, path: typing.Union[typing.TextIO, str, pathlib.Path], **kw):
    """`json.dump` which understands filenames and `numpy` data.

    :param obj: The object to be dumped.
    :param path: The path of the JSON file to be written.
    :param kw: Keyword parameters are passed to json.dump
    """
    kw.setdefault('indent', 2)
    obj = format(obj)
    if isinstance(path, (str, pathlib.Path)):
        with pathlib.Path(path).open('w', encoding='utf-8') as fp:
            return json.dump(obj, fp, **kw)
    return json.dump(obj, path, **kw)


def load(path: typing.Union[typing.TextIO, str, pathlib.Path], **kw):
    """`json.load` which understands filenames.

    :param kw: Keyword parameters are passed to json.load
    :return: The python object read from path.
    """
    if isinstance(path, (str, pathlib.Path)):
        with pathlib.Path(path).open(encoding='utf-8') as fp:
            return json.load(fp, **kw)
    return json.load(path, **kw)
