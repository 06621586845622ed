"""Binary checkpoint format.

Layout: one UTF-8 JSON header line, then a little-endian raw value block::

    {"format": "cascadesum-checkpoint", "version": 1, "dtype": "<f8",
     "params": [{"name": ..., "shape": [...], "offset": <bytes>}, ...],
     "meta": {...}}\\n
    <concatenated parameter values, C order>

Offsets are relative to the start of the value block. ``meta`` carries
hyperparameters and the vocabulary so a checkpoint is self-describing.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import DataError

FORMAT = "cascadesum-checkpoint"
VERSION = 1


def save_checkpoint(path, state: dict[str, np.ndarray], meta: dict | None = None) -> None:
    # ascontiguousarray would promote 0-d arrays to 1-d
    arrays = {name: np.asarray(a).copy(order="C") for name, a in state.items()}
    dtypes = {a.dtype for a in arrays.values()}
    if len(dtypes) > 1:
        raise ValueError(f"mixed parameter dtypes: {dtypes}")
    dtype = np.dtype(dtypes.pop() if dtypes else np.float64).newbyteorder("<")
    entries, offset = [], 0
    for name, a in arrays.items():
        entries.append({"name": name, "shape": list(a.shape), "offset": offset})
        offset += a.size * dtype.itemsize
    header = {
        "format": FORMAT,
        "version": VERSION,
        "dtype": dtype.str,
        "params": entries,
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for a in arrays.values():
            fh.write(a.astype(dtype, copy=False).tobytes(order="C"))


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        blob = fh.read()
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: unreadable checkpoint header ({exc.msg})") from None
    if header.get("format") != FORMAT:
        raise DataError(f"{path}: not a {FORMAT} file")
    if header.get("version") != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {header.get('version')!r}")
    dtype = np.dtype(header["dtype"])
    state = {}
    for entry in header["params"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        start = entry["offset"]
        stop = start + count * dtype.itemsize
        if stop > len(blob):
            raise DataError(f"{path}: truncated value block for {entry['name']}")
        values = np.frombuffer(blob[start:stop], dtype=dtype).reshape(entry["shape"])
        state[entry["name"]] = values.astype(dtype.newbyteorder("="))
    return state, header["meta"]
