"""Show, change or reset the persisted defaults in config/settings.json."""
import json

from commands.common import EXIT_ERROR, EXIT_OK
from utils.logger import log_info
from utils.settings_manager import SETTINGS_FILE, get_default_settings, load_settings, reset_settings, save_settings


def add_arguments(parser):
    parser.add_argument('action', choices=['show', 'set', 'reset'])
    parser.add_argument('pairs', nargs='*', metavar='KEY=VALUE',
                        help="for set: values are read as JSON, falling back to plain strings")


def _coerce(text):
    try:
        return json.loads(text)
    except ValueError:
        return text


def main(args):
    if args.action == 'reset':
        reset_settings()
        log_info("settings reset to defaults", context=str(SETTINGS_FILE))
        print(f"defaults written to {SETTINGS_FILE}")
        return EXIT_OK

    settings = load_settings()
    if args.action == 'set':
        for pair in args.pairs:
            key, sep, value = pair.partition('=')
            if not sep:
                print(f"error: expected KEY=VALUE with KEY one of {', '.join(sorted(get_default_settings()))}, "
                      f"got {pair!r}")
                return EXIT_ERROR
            settings[key] = _coerce(value)
        save_settings(settings)
        log_info(f"settings updated: {', '.join(args.pairs)}", context=str(SETTINGS_FILE))

    print(json.dumps(settings, indent=4, sort_keys=True))
    return EXIT_OK
