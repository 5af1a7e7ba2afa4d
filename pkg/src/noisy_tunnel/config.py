"""Plain-text run configuration: ``key = value`` lines with ``[section]``
headers and ``#`` comments.

Keys are flattened to ``section.key``. Comment lines whose content parses
as a directive are applied too, which is what lets a previously written
output file (whose manifest is a ``# ``-prefixed config block) be passed
straight back via ``--config`` to reproduce a run.
"""
from __future__ import annotations

import re

_KEY_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")


class ConfigError(ValueError):
    """Malformed configuration input."""


def _split_directive(text: str):
    """Return ('section', name) / ('pair', (key, value)) / None."""
    if text.startswith("[") and text.endswith("]"):
        name = text[1:-1].strip()
        if name:
            return "section", name
        return None
    if "=" in text:
        key, _, value = text.partition("=")
        key = key.strip()
        value = value.split(" #", 1)[0].strip()
        if _KEY_RE.match(key):
            return "pair", (key, value)
    return None


def parse_config_lines(lines) -> dict[str, str]:
    """Parse config text into a flat ``section.key -> value`` mapping."""
    out: dict[str, str] = {}
    section = ""
    from_manifest = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        commented = line.startswith("#")
        if commented:
            line = line.lstrip("#").strip()
            if not line:
                continue
        directive = _split_directive(line)
        if directive is None:
            if commented:
                continue  # prose comment
            if from_manifest:
                break  # reached the data section of a reused output file
            raise ConfigError(f"line {lineno}: not a 'key = value' assignment "
                              f"or '[section]' header: {raw.strip()!r}")
        kind, payload = directive
        if kind == "section":
            section = payload
        else:
            key, value = payload
            full = f"{section}.{key}" if section and "." not in key else key
            out[full] = value
        if commented:
            from_manifest = True
    return out


def load_config(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_lines(fh)


def parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def parse_float_list(value: str) -> tuple[float, ...]:
    items = [part.strip() for part in value.split(",") if part.strip()]
    if not items:
        raise ConfigError("empty list")
    return tuple(float(part) for part in items)


def parse_str_list(value: str) -> tuple[str, ...]:
    items = [part.strip() for part in value.split(",") if part.strip()]
    if not items:
        raise ConfigError("empty list")
    return tuple(items)
