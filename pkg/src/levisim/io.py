"""CSV and JSON writers with provenance headers.

Every file starts with ``#`` comment lines carrying the package version,
the configuration hash and the seed so that outputs can be traced to the
run that produced them.  Numbers are written with a fixed format so that
re-running a configuration reproduces files byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from . import __version__

FLOAT_FMT = "{:.10g}"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return FLOAT_FMT.format(v)
    if isinstance(v, (np.integer,)):
        return str(int(v))
    if isinstance(v, complex):
        return f"{FLOAT_FMT.format(v.real)}{FLOAT_FMT.format(v.imag):+}j".replace("+-", "-")
    return str(v)


def header_lines(meta=None):
    meta = dict(meta or {})
    lines = [f"levisim {__version__}"]
    for k in sorted(meta):
        lines.append(f"{k}: {_fmt(meta[k])}")
    return lines


def write_csv(path, data, meta=None, header=()):
    """Write ``data`` (dict of equal-length columns or list of row dicts) to ``path``."""
    if isinstance(data, dict):
        names = list(data)
        cols = [np.asarray(data[n]) for n in names]
        rows = list(zip(*cols))
    else:
        data = list(data)
        names = []
        for row in data:
            for k in row:
                if k not in names:
                    names.append(k)
        rows = [[row.get(k, "") for k in names] for row in data]
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        for line in [*header_lines(meta), *header]:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path):
    """Read a file written by :func:`write_csv`; returns (header lines, columns)."""
    header = []
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            header.append(line[2:])
        else:
            body.append(line)
    reader = csv.reader(body)
    names = next(reader)
    cols = {n: [] for n in names}
    for row in reader:
        for n, v in zip(names, row):
            cols[n].append(v)
    out = {}
    for n, vals in cols.items():
        try:
            out[n] = np.array([float(v) for v in vals])
        except ValueError:
            out[n] = vals
    return header, out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, payload, meta=None):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    doc = {"provenance": dict(header_lines_dict(meta)), "data": _jsonable(payload)}
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def header_lines_dict(meta=None):
    out = {"levisim_version": __version__}
    out.update(_jsonable(dict(meta or {})))
    return out
