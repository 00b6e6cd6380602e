"""
Main command line interface of the `mvvar` package.

Exit status: 0 success, 1 unexpected error, 2 bad input, 3 infeasible problem, 4 node, time or
iteration limit hit.
"""
import sys

from mvvar import commands
from mvvar.clilib import get_parser_and_subparsers, register_subcommands, ParserError, ExitCode
from mvvar.errors import ParseError, DomainError, ModelError, InfeasibleError, ResourceError
from mvvar.loglib import Logging


def main(args=None, catch_all=False, parsed_args=None, log=None):
    parser, subparsers = get_parser_and_subparsers('mvvar')
    register_subcommands(subparsers, commands)

    try:
        args = parsed_args or parser.parse_args(args=args)
    except ParserError as e:
        print(e, file=sys.stderr)
        return ExitCode.bad_input

    if not args._command:
        parser.print_help()
        return ExitCode.bad_input

    if log:
        args.log = log

    with Logging(args.log, level=args.log_level):
        try:
            return int(args.main(args) or ExitCode.ok)
        except KeyboardInterrupt:  # pragma: no cover
            return ExitCode.error
        except (ParserError, ParseError, DomainError, ModelError) as e:
            args.log.error(e)
            return ExitCode.bad_input
        except InfeasibleError as e:
            args.log.error(e)
            return ExitCode.infeasible
        except ResourceError as e:
            args.log.error(e)
            return ExitCode.limit
        except Exception as e:  # pragma: no cover
            if catch_all:
                args.log.error(e)
                return ExitCode.error
            raise


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main() or 0)
