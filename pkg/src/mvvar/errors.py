"""
The exception hierarchy of `mvvar`.

Outcomes which are part of an optimization contract - an infeasible model, an unbounded QP -
are reported as status values. Exceptions are reserved for bad input, ill-posed models,
exhausted resources and internal inconsistencies.
"""
import typing

__all__ = [
    'MvvarError', 'ParseError', 'DomainError', 'ModelError', 'InfeasibleError',
    'ResourceError', 'QpIterationLimit', 'NodeLimitError']


class MvvarError(Exception):
    pass


class ParseError(MvvarError, ValueError):
    """
    Malformed input file.

    :ivar row: 1-based line number in the input file (the header is line 1).
    :ivar column: 1-based column number, or `None` if the whole row is malformed.
    """
    def __init__(self, msg: str, row: typing.Optional[int] = None, column=None):
        self.row = row
        self.column = column
        if row is not None:
            loc = 'row {0}'.format(row)
            if column is not None:
                loc += ', column {0}'.format(column)
            msg = '{0}: {1}'.format(loc, msg)
        super().__init__(msg)


class DomainError(MvvarError, ValueError):
    pass


class ModelError(MvvarError, ValueError):
    pass


class InfeasibleError(MvvarError):
    pass


class ResourceError(MvvarError, RuntimeError):
    """
    A solver ran out of iterations, nodes or time.

    :ivar incumbent: The best feasible solution found so far, or `None`.
    :ivar gap: Absolute gap between the incumbent objective and the best bound.
    """
    def __init__(self, msg: str, incumbent=None, gap: float = float('inf')):
        super().__init__(msg)
        self.incumbent = incumbent
        self.gap = gap


class QpIterationLimit(ResourceError):
    pass


class NodeLimitError(ResourceError):
    pass
