"""
Lightweight CLI framework for qrobust.
Subcommands register through decorators; flags are parsed by argparse.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .errors import EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, QrobustError

LOG_LEVEL_ENV = "QROBUST_LOG_LEVEL"
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


@dataclass
class Command:
    """Represents a CLI subcommand."""

    name: str
    handler: Callable
    help: str
    arguments: List[Tuple[tuple, dict]] = field(default_factory=list)


def argument(*flags, **kwargs):
    """Decorator attaching one argparse argument to a command handler."""

    def decorator(func: Callable):
        pending = getattr(func, "_cli_arguments", [])
        func._cli_arguments = [(flags, kwargs)] + pending
        return func

    return decorator


def configure_logging(verbose: bool = False) -> None:
    """DEBUG with --verbose, otherwise QROBUST_LOG_LEVEL or WARNING."""
    level_name = "DEBUG" if verbose else os.environ.get(LOG_LEVEL_ENV, "WARNING").upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level, format=LOG_FORMAT, force=True)


class CLI:
    """Lightweight CLI framework for qrobust."""

    def __init__(self, name: str = "qrobust", description: str = "", version: str = ""):
        self.name = name
        self.description = description
        self.version = version
        self.commands: Dict[str, Command] = {}

    def command(self, name: str, help: str = ""):
        """Decorator to register a subcommand."""

        def decorator(func: Callable):
            self.commands[name] = Command(
                name=name,
                handler=func,
                help=help,
                arguments=list(getattr(func, "_cli_arguments", [])),
            )
            return func

        return decorator

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog=self.name, description=self.description)
        parser.add_argument("--version", action="version", version=f"{self.name} {self.version}")
        sub = parser.add_subparsers(dest="command", metavar="<command>")
        for name, cmd in self.commands.items():
            p = sub.add_parser(name, help=cmd.help, description=cmd.help)
            for flags, kwargs in cmd.arguments:
                p.add_argument(*flags, **kwargs)
            p.add_argument("--verbose", "-v", action="store_true", help="log at DEBUG level")
        return parser

    def main(self, argv: Optional[List[str]] = None) -> int:
        """Parse ``argv`` (without the program name), run the subcommand, return the exit code."""
        parser = self.build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return e.code if isinstance(e.code, int) else EXIT_USAGE

        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE

        configure_logging(args.verbose)
        cmd = self.commands[args.command]
        try:
            result = cmd.handler(args)
        except KeyboardInterrupt:
            return 130
        except QrobustError as e:
            print(f"Error: {e}", file=sys.stderr)
            return e.exit_code
        except Exception as e:
            logging.getLogger(__name__).debug("unhandled error", exc_info=True)
            print(f"Error: {e}", file=sys.stderr)
            return EXIT_INTERNAL

        if isinstance(result, bool):
            return EXIT_OK if result else EXIT_INTERNAL
        if isinstance(result, int):
            return result
        return EXIT_OK

    def run(self, argv: Optional[List[str]] = None):
        sys.exit(self.main(sys.argv[1:] if argv is None else argv))
