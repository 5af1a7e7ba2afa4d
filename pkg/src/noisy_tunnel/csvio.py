"""CSV output with a reproducibility manifest header.

Format contract: comma delimiter, dot decimal separator, Unix newlines,
floats at 17 significant digits. The manifest is a ``# ``-prefixed config
block (sections and ``key = value`` lines) holding the full resolved run
settings, so feeding the file back through ``--config`` reproduces it
byte for byte.
"""
from __future__ import annotations

import os
import tempfile

import numpy as np


def fmt_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def manifest_lines(sections: dict[str, dict[str, object]]) -> list[str]:
    lines = []
    for section, entries in sections.items():
        lines.append(f"# [{section}]")
        for key, value in entries.items():
            lines.append(f"# {key} = {fmt_value(value)}")
    return lines


def write_csv(path, sections: dict[str, dict[str, object]],
              header: list[str], rows) -> None:
    """Write manifest + header + rows atomically (no partial files)."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            for line in manifest_lines(sections):
                fh.write(line + "\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt_value(v) for v in row) + "\n")
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise
