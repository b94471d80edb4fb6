import argparse
import logging
import sys

from commands import COMMANDS, load_command
from commands.common import EXIT_ERROR, EXIT_INCONCLUSIVE
from utils.logger import clear_old_logs, configure_log_dir, log_error, log_info
from utils.settings_manager import resolve_settings
from xorcount.errors import InconclusiveError, XorCountError


def build_parser():
    parser = argparse.ArgumentParser(
        prog='xorcount',
        description="Approximate model counting with sparse parity constraints.")
    parser.add_argument('-v', '--verbose', action='store_true', help="print debug messages")
    parser.add_argument('--log-dir', help="directory for the daily log file")
    subparsers = parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        module = load_command(name)
        sub = subparsers.add_parser(name, help=(module.__doc__ or '').strip().split('\n')[0] or None)
        module.add_arguments(sub)
        sub.set_defaults(handler=module.main)
    return parser


def run(argv=None):
    """Main application function."""
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = resolve_settings({'log_dir': args.log_dir})
    configure_log_dir(settings['log_dir'], console_level=logging.DEBUG if args.verbose else None)
    clear_old_logs(days=int(settings['log_retention_days']))
    log_info(f"xorcount {args.command}", context=' '.join(argv if argv is not None else sys.argv[1:]))

    try:
        return args.handler(args)
    except InconclusiveError as e:
        log_error(e, f"{args.command} inconclusive")
        print(f"inconclusive: {e}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (XorCountError, OSError) as e:
        log_error(e, f"{args.command} failed")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(run())
