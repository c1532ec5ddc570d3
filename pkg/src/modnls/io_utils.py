"""Deterministic CSV/JSON writers shared by the modules and the CLI.

Floats are rendered with repr (shortest round-trip form) so identical inputs
produce byte-identical files.
"""

import json
import os


def fmt(x):
    if hasattr(x, "item"):  # numpy scalar
        x = x.item()
    if isinstance(x, (float, complex)):
        return repr(x)
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) for x in row) + "\n")


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
