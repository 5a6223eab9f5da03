"""Dead-point CSV files, key=value summaries and run manifests."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core import RunTrace

__all__ = ["TraceParseError", "write_trace_csv", "read_trace_csv", "format_float",
           "write_summary", "read_summary", "SUMMARY_KEYS", "write_json", "read_json"]

SUMMARY_KEYS = ("log_z", "sigma_log_z", "h_nats", "ess", "n_like_calls", "insertion_p",
                "seed", "version")
_FIXED = ("order", "log_like", "birth_log_like", "n_active", "insertion_index")


class TraceParseError(ValueError):
    pass


def format_float(x: float) -> str:
    """Shortest text that reads back to the same double (17 significant digits)."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_trace_csv(trace: RunTrace, path) -> None:
    """Dead points in death order, then final live points marked ``n_active = 0``."""
    d = trace.ndim
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(_FIXED) + [f"theta_{j}" for j in range(d)])
        for i in range(len(trace)):
            w.writerow([i, format_float(trace.log_like[i]),
                        format_float(trace.birth_log_like[i]), int(trace.n_active[i]),
                        int(trace.insertion_index[i])]
                       + [format_float(v) for v in trace.theta[i]])
        for k in range(trace.n_final):
            w.writerow([len(trace) + k, format_float(trace.final_log_like[k]),
                        format_float(trace.final_birth_log_like[k]), 0,
                        int(trace.final_insertion_index[k])]
                       + [format_float(v) for v in trace.final_theta[k]])


def read_trace_csv(path, **attrs) -> RunTrace:
    """Parse a dead-point file; errors name the offending line."""
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceParseError(f"{path}: empty file (line 1)")
        if tuple(header[:5]) != _FIXED or any(h != f"theta_{j}"
                                              for j, h in enumerate(header[5:])):
            raise TraceParseError(f"{path}: line 1: unexpected header {header}")
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != width:
                raise TraceParseError(f"{path}: line {lineno}: expected {width} fields, "
                                      f"got {len(row)}")
            try:
                rows.append((int(row[0]), float(row[1]), float(row[2]), int(row[3]),
                             int(row[4]), [float(v) for v in row[5:]]))
            except ValueError as err:
                raise TraceParseError(f"{path}: line {lineno}: {err}") from None
            if rows[-1][0] != lineno - 2:
                raise TraceParseError(f"{path}: line {lineno}: order out of sequence")
    if not rows:
        raise TraceParseError(f"{path}: no dead points")
    d = width - 5
    dead = [r for r in rows if r[3] > 0]
    final = [r for r in rows if r[3] == 0]
    if final and dead and rows.index(final[0]) < len(dead):
        raise TraceParseError(f"{path}: final live rows must follow the dead points")

    def cols(rs):
        return (np.array([r[1] for r in rs]), np.array([r[2] for r in rs]),
                np.array([r[3] for r in rs], dtype=np.int64),
                np.array([r[4] for r in rs], dtype=np.int64),
                np.array([r[5] for r in rs]).reshape(len(rs), d))
    ll, birth, n, ins, theta = cols(dead)
    fll, fbirth, _, fins, ftheta = cols(final)
    return RunTrace(ll, birth, n, ins, theta, None, fll, fbirth, fins, ftheta, **attrs)


def write_summary(values: dict, path) -> None:
    missing = [k for k in SUMMARY_KEYS if k not in values]
    if missing:
        raise KeyError(f"summary is missing {missing}")
    with open(path, "w", encoding="utf-8") as fh:
        for k in SUMMARY_KEYS:
            v = values[k]
            fh.write(f"{k}={format_float(v) if isinstance(v, float) else v}\n")


def read_summary(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if "=" not in line:
                raise TraceParseError(f"{path}: line {lineno}: expected key=value")
            k, v = line.split("=", 1)
            out[k] = v
    return out


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")
