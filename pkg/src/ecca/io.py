"""CSV and JSON plumbing for the CLI artifacts.

Matrices travel as headerless comma-separated text, row-major, one row per
line, with floats printed by repr so values round-trip exactly and never
depend on the locale.
"""

import numpy as np

from .errors import InvalidInputError


def save_matrix_csv(m, path):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    lines = [",".join(repr(float(v)) for v in row) for row in m]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix_csv(path):
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise InvalidInputError(
                    f"ragged CSV: row {lineno} has {len(cells)} cells, "
                    f"expected {width}")
            try:
                rows.append([float(c) for c in cells])
            except ValueError as exc:
                raise InvalidInputError(f"bad number in row {lineno}: {exc}")
    if not rows:
        raise InvalidInputError(f"empty matrix file: {path}")
    return np.array(rows, dtype=float)
