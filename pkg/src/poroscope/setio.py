"""Set files: canonical JSON text and the compact ``DCS1`` binary layout.

Text form::

    {"format_version": 1, "n": 2, "depth": 9, "cell_count": 3,
     "cells": [[0, 1], [0, 5], [3, 2]]}

Binary form: magic ``DCS1``, u8 n, u8 depth, u64 count, then ``count * n``
little-endian u32 coordinates in lexicographic row order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ParseError
from .sets import DyadicCubeSet

FORMAT_VERSION = 1
MAGIC = b"DCS1"
_HEADER = struct.Struct("<4sBBQ")


def dumps_set(S: DyadicCubeSet) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "n": S.n,
        "depth": S.depth,
        "cell_count": len(S),
        "cells": S.cells.tolist(),
    }
    # one cell per line keeps diffs and error offsets readable
    head = json.dumps({k: v for k, v in doc.items() if k != "cells"})[:-1]
    rows = ",\n  ".join(json.dumps(c) for c in doc["cells"])
    return f'{head}, "cells": [\n  {rows}\n]}}\n' if rows else f'{head}, "cells": []}}\n'


def loads_set(text: str) -> DyadicCubeSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed set file at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("set file must hold a JSON object")
    expected = {"format_version", "n", "depth", "cell_count", "cells"}
    if set(doc) != expected:
        raise ParseError(f"set file fields must be exactly {sorted(expected)}, got {sorted(doc)}")
    if doc["format_version"] != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {doc['format_version']!r} (expected {FORMAT_VERSION})")
    n, depth, count = doc["n"], doc["depth"], doc["cell_count"]
    if not all(isinstance(v, int) and v >= 0 for v in (n, depth, count)) or n < 1:
        raise ParseError("n, depth and cell_count must be non-negative integers (n >= 1)")
    cells = doc["cells"]
    if len(cells) != count:
        raise ParseError(f"cell_count {count} does not match {len(cells)} listed cells")
    for i, c in enumerate(cells):
        if not (isinstance(c, list) and len(c) == n and all(isinstance(v, int) for v in c)):
            raise ParseError(f"cell #{i} is not a list of {n} integers")
        if any(v < 0 or v >= 1 << depth for v in c):
            raise ParseError(f"cell #{i} is out of range for depth {depth}")
    arr = np.array(cells, dtype=np.int64).reshape(-1, n)
    S = DyadicCubeSet(n, depth, arr)
    if len(S) != count:
        raise ParseError("duplicate cells in set file")
    return S


def dump_binary(S: DyadicCubeSet) -> bytes:
    body = np.ascontiguousarray(S.cells, dtype="<u4").tobytes()
    return _HEADER.pack(MAGIC, S.n, S.depth, len(S)) + body


def load_binary(data: bytes) -> DyadicCubeSet:
    if len(data) < _HEADER.size:
        raise ParseError(f"binary set truncated at offset {len(data)} (header needs {_HEADER.size} bytes)")
    magic, n, depth, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r} at offset 0")
    need = _HEADER.size + 4 * n * count
    if len(data) != need:
        raise ParseError(f"binary set has {len(data)} bytes, expected {need} (offset {min(len(data), need)})")
    arr = np.frombuffer(data, dtype="<u4", offset=_HEADER.size).astype(np.int64).reshape(count, n)
    if count and arr.max() >= 1 << depth:
        raise ParseError("cell coordinate out of range for depth")
    return DyadicCubeSet(n, depth, arr)


def save_set(S: DyadicCubeSet, path) -> Path:
    path = Path(path)
    if path.suffix == ".dcs":
        path.write_bytes(dump_binary(S))
    else:
        path.write_text(dumps_set(S))
    return path


def load_set(path) -> DyadicCubeSet:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == MAGIC:
        return load_binary(data)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"set file is neither DCS1 binary nor UTF-8 text (offset {exc.start})") from exc
    return loads_set(text)
