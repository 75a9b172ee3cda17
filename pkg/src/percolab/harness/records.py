"""Replication records and their CSV / JSON serializations."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, fields
from typing import Iterable, Optional

from .. import __version__

CSV_HEADER = ("rep_id", "stream_index", "point_count", "N", "second_size", "global_unique",
              "N_prime", "mismatch_count", "e0_count", "e1_count", "e2_count", "e3_count", "wall_ms")


@dataclass(frozen=True)
class ReplicationRecord:
    rep_id: int
    stream_index: int
    point_count: int
    N: int
    second_size: int
    global_unique: bool
    N_prime: Optional[int] = None
    mismatch_count: Optional[int] = None
    e0_count: Optional[int] = None
    e1_count: Optional[int] = None
    e2_count: Optional[int] = None
    e3_count: Optional[int] = None
    wall_ms: float = 0.0

    def without_timing(self) -> "ReplicationRecord":
        return ReplicationRecord(**{f.name: getattr(self, f.name) for f in fields(self) if f.name != "wall_ms"})


def _cell(name, v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(records: Iterable[ReplicationRecord], timing: bool = True) -> bytes:
    """Records as CSV bytes; with ``timing=False`` the wall_ms cells are left empty."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        w.writerow([_cell(k, getattr(rec, k)) if (timing or k != "wall_ms") else "" for k in CSV_HEADER])
    return buf.getvalue().encode("utf-8")


def _parse(name, text):
    if text == "":
        return 0.0 if name == "wall_ms" else None
    if name == "global_unique":
        if text not in ("true", "false"):
            raise ValueError(f"global_unique must be true/false, got {text!r}")
        return text == "true"
    if name == "wall_ms":
        return float(text)
    return int(text)


def parse_csv(data) -> list[ReplicationRecord]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.reader(io.StringIO(data))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty records file (no header)") from None
    if tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    out = []
    for lineno, row in enumerate(reader, 2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        out.append(ReplicationRecord(**{k: _parse(k, v) for k, v in zip(CSV_HEADER, row)}))
    return out


def write_csv(path, records, timing: bool = True) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(emit_csv(records, timing))
    except OSError as exc:
        raise OSError(f"could not write records to {path}: {exc}") from exc


def read_csv(path) -> list[ReplicationRecord]:
    try:
        with open(path, "rb") as fh:
            return parse_csv(fh.read())
    except OSError as exc:
        raise OSError(f"could not read records from {path}: {exc}") from exc


def _json_text(obj) -> str:
    # json.dumps cannot format floats itself; this emits them with 17
    # significant digits so every value round-trips exactly
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        text = format(obj, ".17g")
        if all(c not in text for c in ".en"):
            text += ".0"
        return text
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_text(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json_text(v) for v in obj) + "]"
    if hasattr(obj, "item"):
        return _json_text(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def summary_payload(summaries, ratefit=None, config=None, extra=None) -> dict:
    if not isinstance(summaries, (list, tuple)):
        summaries = [summaries]
    payload = {
        "artifact": "percolab",
        "version": __version__,
        "config": config.echo() if config is not None else None,
        "summaries": [s.as_dict() for s in summaries],
    }
    if ratefit is not None:
        payload["rate_fit"] = {k: (v.__dict__ if v is not None and hasattr(v, "__dict__") else v)
                               for k, v in ratefit.items()} if isinstance(ratefit, dict) else ratefit.__dict__
    if extra:
        payload.update(extra)
    return payload


def emit_summary_json(summaries, ratefit=None, config=None, extra=None) -> bytes:
    return (_json_text(summary_payload(summaries, ratefit, config, extra)) + "\n").encode("utf-8")
