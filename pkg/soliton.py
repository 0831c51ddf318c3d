#!/usr/bin/env python
"""Command-line utility for solving and certifying quasilinear solitons."""
import sys


def main():
    """Run a certifier subcommand."""
    from certify.commands import main as run_command
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
