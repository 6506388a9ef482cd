"""Flat key = value config files with typed, field-naming validation."""

from pathlib import Path

import numpy as np

from .exceptions import ConfigError


def parse_kv_file(path):
    """Parse ``key = value`` lines; '#' starts a comment, blanks ignored."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


_MISSING = object()


class ConfigView:
    """Typed access with error messages that name the offending field."""

    def __init__(self, values, source="config"):
        self._values = dict(values)
        self._source = source

    def _raw(self, key, default=_MISSING):
        if key in self._values:
            return self._values[key]
        if default is _MISSING:
            raise ConfigError(f"{self._source}: missing required field '{key}'")
        return default

    def has(self, key):
        return key in self._values

    def keys(self):
        return self._values.keys()

    def get_str(self, key, default=None):
        v = self._raw(key, default)
        return v

    def require_str(self, key):
        return self._raw(key)

    def get_choice(self, key, choices, default=None):
        v = self._raw(key, default)
        if v is None:
            return None
        if v not in choices:
            raise ConfigError(
                f"{self._source}: field '{key}' must be one of {tuple(choices)}, got {v!r}"
            )
        return v

    def get_int(self, key, default=None):
        v = self._raw(key, default)
        if v is None or isinstance(v, int):
            return v
        try:
            return int(str(v), 10)
        except ValueError:
            raise ConfigError(
                f"{self._source}: field '{key}' must be an integer, got {v!r}"
            ) from None

    def get_float(self, key, default=None):
        v = self._raw(key, default)
        if v is None or isinstance(v, float):
            return v
        try:
            return float(v)
        except ValueError:
            raise ConfigError(
                f"{self._source}: field '{key}' must be a real number, got {v!r}"
            ) from None

    def get_int_list(self, key, default=None):
        v = self._raw(key, default)
        if v is None or isinstance(v, tuple):
            return v
        try:
            return tuple(int(part.strip()) for part in str(v).split(",") if part.strip())
        except ValueError:
            raise ConfigError(
                f"{self._source}: field '{key}' must be a comma-separated list of "
                f"integers, got {v!r}"
            ) from None

    def get_vector(self, key, default=None):
        v = self._raw(key, default)
        if v is None or isinstance(v, np.ndarray):
            return v
        try:
            return np.array(
                [float(part.strip()) for part in str(v).split(",") if part.strip()]
            )
        except ValueError:
            raise ConfigError(
                f"{self._source}: field '{key}' must be a comma-separated list of "
                f"real numbers, got {v!r}"
            ) from None

    def reject_unknown(self, known):
        unknown = sorted(set(self._values) - set(known))
        if unknown:
            raise ConfigError(
                f"{self._source}: unknown field(s) {', '.join(map(repr, unknown))}"
            )
