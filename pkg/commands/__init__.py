import importlib

COMMANDS = ['epsilon', 'fstar', 'bound', 'sweep', 'table', 'asymptotic', 'settings']


def load_command(command_name):
    """Import a command module by name. Import errors propagate."""
    if command_name not in COMMANDS:
        raise KeyError(f"unknown command: {command_name}")
    return importlib.import_module(f"commands.{command_name}")
