"""
Subcommands of the `mvvar` command line interface, one module per command.
"""
