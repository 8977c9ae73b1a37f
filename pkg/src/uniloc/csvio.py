"""CSV tables with a JSON metadata header, lossless for doubles.

Format: `#`-prefixed lines holding one JSON document, then a header row,
then comma-separated rows with reals printed to 17 significant digits
(round-trip exact for IEEE doubles).
"""

from __future__ import annotations

import json

import numpy as np

__all__ = ["write_table", "read_table", "format_value"]


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (complex, np.complexfloating)):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    return f"{float(x):.17g}"


def write_table(path, metadata: dict, columns: dict) -> None:
    names = list(columns)
    arrays = [np.atleast_1d(np.asarray(columns[n])) for n in names]
    n_rows = arrays[0].shape[0]
    if any(a.shape[0] != n_rows for a in arrays):
        raise ValueError("columns must share a length")
    lines = []
    for meta_line in json.dumps(metadata, sort_keys=True).splitlines():
        lines.append(f"# {meta_line}")
    lines.append(",".join(names))
    for i in range(n_rows):
        lines.append(",".join(format_value(a[i]) for a in arrays))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path):
    """Returns (metadata dict, {column: float array}). Round-trips write_table."""
    meta_lines, header, rows = [], None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                meta_lines.append(line[1:].strip())
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append(line.split(","))
    metadata = json.loads("\n".join(meta_lines)) if meta_lines else {}
    if header is None:
        return metadata, {}
    cols = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        try:
            cols[name] = np.array([float(x) for x in raw])
        except ValueError:
            cols[name] = np.array([complex(x) for x in raw])
    return metadata, cols
