"""Point-cloud readers and writers.

JSON: ``{"points": [[x1, ...], ...], "weights": [w, ...]}`` (weights optional,
uniform by default). CSV: one atom per row, ``w,x1,...,xd``; a non-numeric
first row is taken as a header. Non-finite numbers are rejected with the
line and column where they appear.
"""
import io as _io
import json
import math
import re

import numpy as np

from .exceptions import InputFormatError
from .measures import DiscreteMeasure

def _position(text, offset):
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def _token_position(text, token):
    # first occurrence of the token outside string literals
    in_string = False
    escaped = False
    k = 0
    while k < len(text):
        ch = text[k]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif text.startswith(token, k):
            before = text[k - 1] if k else " "
            if not (before.isalnum() or before in ".+-eE"):
                return _position(text, k)
        k += 1
    return None, None


def _parse_json(text):
    def bad_constant(name):
        line, column = _token_position(text, name)
        raise InputFormatError(f"non-finite number {name}", line, column)

    def parse_float(s):
        v = float(s)
        if not math.isfinite(v):
            line, column = _token_position(text, s)
            raise InputFormatError(f"number {s} overflows to infinity", line, column)
        return v

    def parse_int(s):
        v = int(s)
        if not math.isfinite(float(v)):
            line, column = _token_position(text, s)
            raise InputFormatError(f"number {s} overflows to infinity", line, column)
        return v

    try:
        return json.loads(text, parse_constant=bad_constant, parse_float=parse_float,
                          parse_int=parse_int)
    except json.JSONDecodeError as exc:
        raise InputFormatError(exc.msg, exc.lineno, exc.colno) from None


def _key_position(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if m is None:
        return 1, 1
    return _position(text, m.start())


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def measure_from_json_text(text):
    data = _parse_json(text)
    if not isinstance(data, dict) or "points" not in data:
        raise InputFormatError('expected an object with a "points" array', 1, 1)
    pts = data["points"]
    line, column = _key_position(text, "points")
    if not isinstance(pts, list) or not pts:
        raise InputFormatError('"points" must be a non-empty array', line, column)
    rows = []
    for k, row in enumerate(pts):
        if _is_number(row):
            row = [row]
        if not isinstance(row, list) or not row or not all(_is_number(v) for v in row):
            raise InputFormatError(f"point {k} is not an array of numbers", line, column)
        rows.append(row)
    dims = {len(r) for r in rows}
    if len(dims) != 1:
        raise InputFormatError("points have different dimensions", line, column)
    weights = data.get("weights")
    if weights is not None:
        wl, wc = _key_position(text, "weights")
        if (not isinstance(weights, list) or len(weights) != len(rows)
                or not all(_is_number(v) for v in weights)):
            raise InputFormatError('"weights" must be an array with one number per point',
                                   wl, wc)
        if any(v < 0 for v in weights):
            raise InputFormatError("weights must be non-negative", wl, wc)
        weights = np.asarray(weights, dtype=float)
    return DiscreteMeasure(np.asarray(rows, dtype=float), weights)


def measure_from_csv_text(text):
    rows = []
    weights = []
    dim = None
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        fields = raw.split(",")
        starts = [1]
        for f in fields[:-1]:
            starts.append(starts[-1] + len(f) + 1)
        values = []
        for f, col in zip(fields, starts):
            try:
                v = float(f)
            except ValueError:
                if not rows and not values and lineno == _first_content_line(lines):
                    values = None
                    break
                raise InputFormatError(f"not a number: {f.strip()!r}", lineno, col) from None
            if not math.isfinite(v):
                raise InputFormatError(f"non-finite number {f.strip()!r}", lineno, col)
            values.append(v)
        if values is None:
            continue  # header row
        if len(values) < 2:
            raise InputFormatError("expected a weight and at least one coordinate", lineno, 1)
        if dim is None:
            dim = len(values) - 1
        elif len(values) - 1 != dim:
            raise InputFormatError(f"expected {dim + 1} columns, got {len(values)}", lineno, 1)
        if values[0] < 0:
            raise InputFormatError("weights must be non-negative", lineno, starts[0])
        weights.append(values[0])
        rows.append(values[1:])
    if not rows:
        raise InputFormatError("no atoms found", 1, 1)
    return DiscreteMeasure(np.asarray(rows), np.asarray(weights))


def _first_content_line(lines):
    for k, raw in enumerate(lines, start=1):
        if raw.strip():
            return k
    return 0


def read_measure(path):
    """Read a measure from a ``.csv`` file or (anything else) a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        if str(path).lower().endswith(".csv"):
            return measure_from_csv_text(text)
        return measure_from_json_text(text)
    except InputFormatError as exc:
        raise exc.with_source(path) from None


def read_pairs(path):
    """Paired samples from JSON ``{"x": [[...], ...], "y": [[...], ...]}``."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return _pairs_from_text(text)
    except InputFormatError as exc:
        raise exc.with_source(path) from None


def _pairs_from_text(text):
    data = _parse_json(text)
    if not isinstance(data, dict) or "x" not in data or "y" not in data:
        raise InputFormatError('expected an object with "x" and "y" arrays', 1, 1)
    out = []
    for key in ("x", "y"):
        line, column = _key_position(text, key)
        arr = data[key]
        if not isinstance(arr, list) or not arr:
            raise InputFormatError(f'"{key}" must be a non-empty array', line, column)
        rows = [[r] if _is_number(r) else r for r in arr]
        if not all(isinstance(r, list) and r and all(_is_number(v) for v in r) for r in rows):
            raise InputFormatError(f'"{key}" must hold numbers or arrays of numbers',
                                   line, column)
        if len({len(r) for r in rows}) != 1:
            raise InputFormatError(f'rows of "{key}" have different lengths', line, column)
        out.append(np.asarray(rows, dtype=float))
    if out[0].shape[0] != out[1].shape[0]:
        raise InputFormatError('"x" and "y" have different lengths', 1, 1)
    return out[0], out[1]


def measure_to_json(measure):
    return json.dumps(measure.to_dict()) + "\n"


def write_measure(measure, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(measure_to_json(measure))


def format_number(x):
    """Shortest text that reads back to the same double."""
    return repr(float(x))


def sweep_csv(curve):
    buf = _io.StringIO()
    buf.write("tau,value_p,slope\n")
    n = len(curve.taus)
    for k in range(n):
        slope = format_number(curve.slopes[k]) if k < n - 1 else ""
        buf.write(f"{format_number(curve.taus[k])},{format_number(curve.values_p[k])},{slope}\n")
    return buf.getvalue()
