"""
GTable persistence as JSON lines.

Line 1 is a header {"kind": "gtable", "rows": {D: dmax_D}, "sha256": ...};
every following line is one entry {"D": "...", "d": "...", "B": "..."} with
decimal strings. The hash covers the canonical rows map and all entry lines,
so a truncated or edited file is refused on load.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Dict, List

from smtrace_core.errors import CacheIntegrityError
from smtrace_core.zagier_basis import GTable

log = logging.getLogger(__name__)


def _entry_line(D: int, d: int, B: int) -> str:
    return json.dumps({"D": str(D), "d": str(d), "B": str(B)}, sort_keys=True)


def _digest(rows: Dict[str, str], lines: List[str]) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(rows, sort_keys=True).encode("utf-8"))
    for line in lines:
        h.update(b"\n")
        h.update(line.encode("utf-8"))
    return h.hexdigest()


def dumps_table(table: GTable) -> str:
    rows = {str(D): str(table.windows[D]) for D in sorted(table.windows)}
    lines = [_entry_line(D, d, B) for D, d, B in table.entries()]
    header = json.dumps({"kind": "gtable", "rows": rows, "sha256": _digest(rows, lines)}, sort_keys=True)
    return "\n".join([header] + lines) + "\n"


def loads_table(text: str) -> GTable:
    raw = text.splitlines()
    if not raw:
        raise CacheIntegrityError("line 1: empty cache file")
    try:
        header = json.loads(raw[0])
        rows = {str(k): str(v) for k, v in header["rows"].items()}
        expected = header["sha256"]
    except (ValueError, KeyError, AttributeError) as exc:
        raise CacheIntegrityError(f"line 1: malformed header ({exc})") from exc

    table = GTable()
    for D, dmax in rows.items():
        table.rows[int(D)] = {}
        table.windows[int(D)] = int(dmax)

    lines: List[str] = []
    for lineno, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            D, d, B = int(rec["D"]), int(rec["d"]), int(rec["B"])
        except (ValueError, KeyError, TypeError) as exc:
            raise CacheIntegrityError(f"line {lineno}: malformed entry ({exc})") from exc
        if D not in table.rows or d > table.windows[D]:
            raise CacheIntegrityError(f"line {lineno}: entry B({D},{d}) outside the declared window")
        table.rows[D][d] = B
        lines.append(_entry_line(D, d, B))

    if _digest(rows, lines) != expected:
        raise CacheIntegrityError("content hash mismatch; refusing to use this cache")
    return table


def load_table(path: Path) -> GTable:
    path = Path(path)
    table = loads_table(path.read_text(encoding="utf-8"))
    log.info("loaded GTable from %s (%d rows)", path, len(table.rows))
    return table


def store_table(table: GTable, path: Path, merge: bool = True) -> GTable:
    """Write atomically (temp file in the same directory, then rename); merges with an existing file."""
    path = Path(path)
    if merge and path.exists():
        table = load_table(path).merge(table)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(dumps_table(table))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    log.info("stored GTable to %s (%d rows)", path, len(table.rows))
    return table
