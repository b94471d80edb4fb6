import json
import os
from pathlib import Path

from utils.logger import log_warning
from xorcount.errors import ParameterError

SETTINGS_FILE = Path("config/settings.json")

# environment variable -> settings key
ENV_OVERRIDES = {
    'XORCOUNT_SOLVER': 'solver',
    'XORCOUNT_LOG_DIR': 'log_dir',
}


def load_settings():
    """Load settings from JSON file, filling gaps from the defaults."""
    settings = get_default_settings()
    if not SETTINGS_FILE.exists():
        return settings

    try:
        with open(SETTINGS_FILE, 'r') as f:
            stored = json.load(f)
        if not isinstance(stored, dict):
            raise ValueError("expected a JSON object")
    except (OSError, ValueError) as e:
        log_warning(f"cannot read {SETTINGS_FILE}, using defaults: {e}", context="settings")
        return settings
    unknown = sorted(set(stored) - set(settings))
    if unknown:
        log_warning(f"ignoring unknown settings: {', '.join(unknown)}", context=str(SETTINGS_FILE))
    settings.update((key, value) for key, value in stored.items() if key in settings)
    return settings


def save_settings(settings):
    """Validate against the defaults and write settings to the JSON file; returns the path written."""
    defaults = get_default_settings()
    unknown = sorted(set(settings) - set(defaults))
    if unknown:
        raise ParameterError(f"unknown settings: {', '.join(unknown)}")
    for key, value in settings.items():
        expected = type(defaults[key])
        if expected is bool and not isinstance(value, bool):
            raise ParameterError(f"setting {key} must be true or false, got {value!r}")
        if expected in (int, float) and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise ParameterError(f"setting {key} must be a number, got {value!r}")
        if expected is int and isinstance(value, float) and not value.is_integer():
            raise ParameterError(f"setting {key} must be a whole number, got {value!r}")
    SETTINGS_FILE.parent.mkdir(parents=True, exist_ok=True)

    # atomic replace
    tmp = SETTINGS_FILE.with_suffix('.json.tmp')
    with open(tmp, 'w') as f:
        json.dump(settings, f, indent=4, sort_keys=True)
    os.replace(tmp, SETTINGS_FILE)
    return SETTINGS_FILE


def reset_settings():
    """Write the defaults back and return them."""
    defaults = get_default_settings()
    save_settings(defaults)
    return defaults


def get_default_settings():
    """Get default settings."""
    return {
        'solver': '',
        'solver_profile': 'cryptominisat',
        'native_xor': True,
        'chunk': 6,
        'budget_s': 60.0,
        'jobs': 1,
        'seed': 0,
        'log_dir': 'logs',
        'exhaustive_max_vars': 26,
        'fstar_tolerance': 1e-5,
        'log_retention_days': 7
    }


def resolve_settings(cli_values=None, environ=None):
    """Merge sources: CLI flag > environment > settings file > default.

    ``cli_values`` maps settings keys to parsed flag values; None means the
    flag was not given.
    """
    settings = load_settings()
    environ = os.environ if environ is None else environ
    for var, key in ENV_OVERRIDES.items():
        if environ.get(var):
            settings[key] = environ[var]
    for key, value in (cli_values or {}).items():
        if value is not None:
            settings[key] = value
    return settings
