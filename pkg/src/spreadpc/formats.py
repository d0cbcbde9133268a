"""
Plain-text formats: kernel files, series and loop CSV, JSON results.

Every JSON object carries ``schema: 1``.  CSV column sets are fixed:

* series: ``n, r_n, method, d, L, rational``
* predictions: ``model, d, L, beta, correction_term, p_c_leading,
  error_scale, truncation_N, tail_valid, source``
* loops: ``n, all_loops_weight, saw_loops_weight``
* comparisons: ``L, beta, discrete, continuum, delta, ratio, valid``
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .kernels import TABLE, UNIFORM, KernelError, KernelSpec, make_explicit, make_uniform

SCHEMA = 1

SERIES_COLUMNS = ("n", "r_n", "method", "d", "L", "rational")
PREDICTION_COLUMNS = ("model", "d", "L", "beta", "correction_term", "p_c_leading",
                      "error_scale", "truncation_N", "tail_valid", "source")
LOOP_COLUMNS = ("n", "all_loops_weight", "saw_loops_weight")
DISCREPANCY_COLUMNS = ("L", "beta", "discrete", "continuum", "delta", "ratio", "valid")


# ---------------------------------------------------------------------------
# kernel files

def parse_kernel(text: str) -> KernelSpec:
    """Parse a kernel definition.

    The first non-comment line is ``d=<int> L=<int> profile=<uniform|table>``;
    table kernels follow with one ``x1 ... xd mass`` line per offset.
    """
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise KernelError("kernel file is empty")
    header = {}
    for tok in lines[0].split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise KernelError(f"bad header token {tok!r}; expected key=value")
        header[key.strip()] = val.strip()
    missing = {"d", "L", "profile"} - header.keys()
    if missing:
        raise KernelError(f"kernel header lacks {sorted(missing)}")
    try:
        d, L = int(header["d"]), int(header["L"])
    except ValueError as exc:
        raise KernelError(f"kernel header d/L must be integers: {exc}") from None
    profile = header["profile"]
    if profile == UNIFORM:
        if len(lines) > 1:
            raise KernelError("uniform kernels take no offset lines")
        return make_uniform(d, L)
    if profile != TABLE:
        raise KernelError(f"unknown profile {profile!r}")
    table = {}
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != d + 1:
            raise KernelError(f"line {i}: expected {d} coordinates and a mass")
        try:
            x = tuple(int(v) for v in parts[:d])
            mass = Fraction(parts[d])
        except ValueError as exc:
            raise KernelError(f"line {i}: {exc}") from None
        table[x] = table.get(x, 0) + mass
    return make_explicit(d, L, table)


def read_kernel(path) -> KernelSpec:
    return parse_kernel(Path(path).read_text())


def format_kernel(kernel: KernelSpec) -> str:
    out = [f"d={kernel.d} L={kernel.L} profile={kernel.profile}"]
    if not kernel.is_uniform:
        offsets, masses = kernel.support()
        for x, m in zip(offsets.tolist(), masses.tolist()):
            out.append(" ".join(str(v) for v in x) + f" {m!r}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# CSV

def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def series_csv(series) -> str:
    exact = series.exact
    rows = []
    for n, r in enumerate(series.values.tolist()):
        rat = f"{exact[n].numerator}/{exact[n].denominator}" if exact else ""
        rows.append((n, repr(float(r)), series.method, series.d, series.L, rat))
    return _csv(SERIES_COLUMNS, rows)


def read_series_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        row["n"] = int(row["n"])
        row["r_n"] = float(row["r_n"])
        row["d"], row["L"] = int(row["d"]), int(row["L"])
        row["rational"] = Fraction(row["rational"]) if row["rational"] else None
    return rows


def predictions_csv(predictions) -> str:
    return _csv(PREDICTION_COLUMNS,
                [[getattr(p, c) for c in PREDICTION_COLUMNS] for p in predictions])


def loops_csv(enum) -> str:
    return _csv(LOOP_COLUMNS, [(n, repr(a), repr(s)) for n, a, s in enum.rows()])


def discrepancy_csv(rows) -> str:
    return _csv(DISCREPANCY_COLUMNS,
                [[getattr(r, c) for c in DISCREPANCY_COLUMNS] for r in rows])


# ---------------------------------------------------------------------------
# JSON

def _plain(obj):
    """Recursively convert numpy scalars, tuples and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


def dumps(obj, meta: dict | None = None) -> str:
    """Deterministic JSON (sorted keys); ``meta`` is attached only if given."""
    data = dict(_plain(obj))
    data.setdefault("schema", SCHEMA)
    if meta:
        data["meta"] = _plain(meta)
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def loads(text: str) -> dict:
    data = json.loads(text)
    data.pop("meta", None)
    for key, val in list(data.items()):
        if val in ("inf", "-inf", "nan"):
            data[key] = float(val)
    return data
