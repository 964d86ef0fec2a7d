"""
Settings - default configuration, user overrides and environment overrides
"""
import copy
import json
import logging
import os
try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from errors import ValidationError

logger = logging.getLogger(__name__)

SEED_ENVIRONMENT_VARIABLE = "FAIRBNI_SEED"
DEFAULT_SETTINGS_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                                     'config', 'settings.json')


def _read_file(path):
    """
    Parse a JSON or TOML settings file

    Args:
        path (str): File path

    Returns:
        dict: Parsed settings
    """
    try:
        if path.endswith('.toml'):
            with open(path, 'rb') as f:
                return tomllib.load(f)
        with open(path, 'r') as f:
            return json.load(f)
    except FileNotFoundError as error:
        raise ValidationError(f"Settings file not found: {path}") from error
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as error:
        raise ValidationError(f"Cannot parse settings file {path}: {error}") from error


def merge_settings(base, override):
    """
    Deep merge: nested dictionaries merge key by key, other values are replaced

    Args:
        base (dict): Defaults
        override (dict): Values taking precedence

    Returns:
        dict: New merged dictionary
    """
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_settings(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_settings(path=None, environ=None):
    """
    Load the default settings, merge a user file over them and apply the seed override

    Args:
        path (str or None): User settings file (.json or .toml)
        environ (dict or None): Environment; defaults to os.environ

    Returns:
        dict: Settings
    """
    settings = _read_file(DEFAULT_SETTINGS_PATH)
    if path:
        settings = merge_settings(settings, _read_file(path))
        logger.debug("Merged settings from %s", path)

    environ = os.environ if environ is None else environ
    seed = environ.get(SEED_ENVIRONMENT_VARIABLE)
    if seed:
        try:
            settings.setdefault('simulation', {})['seed'] = int(seed)
        except ValueError as error:
            raise ValidationError(f"{SEED_ENVIRONMENT_VARIABLE} must be an integer, got '{seed}'") from error
        logger.info("Seed overridden by %s: %s", SEED_ENVIRONMENT_VARIABLE, seed)
    return settings
