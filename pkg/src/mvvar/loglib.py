"""
Logging for the `mvvar` command line. Library code only logs to a logger passed in as `log`;
the CLI creates it with :func:`get_colorlog` and sets the level of a run with
:class:`Logging`. Branch-and-bound progress goes through :class:`ProgressLog`.

.. code-block:: python

    >>> from mvvar.loglib import Logging, get_colorlog
    >>> log = get_colorlog('mvvar')
    >>> log.debug('node 1000')
    >>> with Logging(log, level=logging.DEBUG):
    ...     log.debug('node 2000')
    DEBUG   node 2000
"""
import typing
import logging

import colorlog

__all__ = ['get_colorlog', 'Logging', 'ProgressLog']


def get_colorlog(name, stream=None, level=logging.INFO) -> logging.Logger:
    """
    A non-propagating logger writing level-colored lines to `stream` (default `stderr`).

    Repeated calls for the same name reuse the existing handler.
    """
    log = logging.getLogger(name)
    log.setLevel(level)
    log.propagate = False
    if not log.handlers:
        handler = colorlog.StreamHandler(stream)
        handler.setFormatter(colorlog.ColoredFormatter(
            '%(log_color)s%(levelname)-7s%(reset)s %(message)s'))
        log.addHandler(handler)
    return log


class Logging(object):
    """
    Run a block with `logger` and its handlers at `level`; previous levels are restored.
    """
    def __init__(self, logger, level=logging.DEBUG):
        self.level = level
        self.logger = logger
        self.prev_level = self.logger.getEffectiveLevel()
        self.prev_handler_levels = [h.level for h in self.logger.handlers]

    def __enter__(self):
        self.logger.setLevel(self.level)
        for handler in self.logger.handlers:
            handler.setLevel(self.level)
        return self.logger

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.logger.setLevel(self.prev_level)
        for handler, level in zip(self.logger.handlers, self.prev_handler_levels):
            handler.setLevel(level)


class ProgressLog(object):
    """
    Emit a DEBUG message every `every` calls of :meth:`tick`.

    .. code-block:: python

        >>> progress = ProgressLog(log, every=100)
        >>> for node in range(250):
        ...     progress.tick('node {0}', node)
    """
    def __init__(self, log: typing.Optional[logging.Logger], every: int = 1000):
        self.log = log
        self.every = max(int(every), 1)
        self.count = 0

    def tick(self, msg: str, *args, **kw) -> bool:
        self.count += 1
        if self.log is not None and self.count % self.every == 0:
            self.log.debug(msg.format(*args, **kw))
            return True
        return False
