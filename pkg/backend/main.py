"""
Main entry point for the algcomm command-line workbench.
Sets up configuration and logging, then parses, executes and prints one command.
"""

import logging
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv

# Import custom modules
from command_executor import EXIT_USAGE, CommandExecutor
from command_parser import CommandParser
from config import RunConfig
from errors import AlgCommError
from run_monitor import RunMonitor

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

logger = logging.getLogger(__name__)


def configure_logging(level: str) -> None:
    """Send log records to stderr so stdout carries only the report."""
    logging.basicConfig(level=getattr(logging, level.upper(), logging.WARNING),
                        format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command.

    Args:
        argv: command-line arguments (default: sys.argv[1:])

    Returns:
        int: exit code (0 success, 1 violated check, 2 usage, parse or cap error)
    """
    # Load environment variables
    load_dotenv()
    argv = sys.argv[1:] if argv is None else list(argv)

    command_parser = CommandParser()
    parsed = command_parser.parse(argv)
    try:
        config = RunConfig.from_env()
        if parsed['type'] == 'command':
            config = config.override(**CommandParser.config_overrides(parsed['args']))
    except AlgCommError as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_USAGE
    configure_logging(config.log_level)

    monitor = RunMonitor()
    command_executor = CommandExecutor(config)
    result = command_executor.execute(parsed)
    if parsed['type'] == 'command':
        monitor.log_usage(parsed['command'])

    if result['output']:
        print(result['output'])
    if result['error']:
        print(f'error: {result["error"]}', file=sys.stderr)
    return result['exit_code']


if __name__ == '__main__':
    sys.exit(main())
