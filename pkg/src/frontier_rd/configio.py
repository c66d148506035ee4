"""Plain key-value config files.

The on-disk format is one ``key = value`` pair per line, ``#`` comments, and
blank lines.  No nesting, no quoting.  Values stay strings until a consumer
asks for a typed view.
"""

from __future__ import annotations

import os

from .errors import ConfigError


def read_kv(path: str | os.PathLike) -> dict[str, str]:
    """Read a key-value file into an ordered dict of strings."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.split("#", 1)[0].strip()
            if not key:
                raise ConfigError(f"{path}: line {lineno}: empty key")
            if key in out:
                raise ConfigError(f"{path}: line {lineno}: duplicate key {key!r}")
            out[key] = value
    return out


def write_kv(path: str | os.PathLike, pairs: dict[str, str], header: str | None = None) -> None:
    """Write pairs back in the same one-line-per-key format."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for key, value in pairs.items():
            fh.write(f"{key} = {value}\n")


def get_float(kv: dict[str, str], key: str, default: float | None = None) -> float:
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return default
    try:
        return float(kv[key])
    except ValueError:
        raise ConfigError(f"config key {key!r}: not a number: {kv[key]!r}") from None


def get_int(kv: dict[str, str], key: str, default: int | None = None) -> int:
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return default
    try:
        return int(kv[key])
    except ValueError:
        raise ConfigError(f"config key {key!r}: not an integer: {kv[key]!r}") from None


def get_bool(kv: dict[str, str], key: str, default: bool | None = None) -> bool:
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return default
    value = kv[key].lower()
    if value in ("true", "1", "yes", "on"):
        return True
    if value in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"config key {key!r}: not a boolean: {kv[key]!r}")


def get_str(kv: dict[str, str], key: str, default: str | None = None) -> str:
    if key not in kv:
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return default
    return kv[key]
