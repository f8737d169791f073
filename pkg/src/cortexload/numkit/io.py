"""Binary tensor dumps.

Layout (little-endian): u32 rank, u64 dims[rank], f64 data[] in row-major
order. Each ``<stem>.bin`` is accompanied by a ``<stem>.hdr`` text file
naming the tensor and repeating its shape.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ParseError


def _paths(path):
    path = Path(path)
    if path.suffix in (".bin", ".hdr"):
        path = path.with_suffix("")
    # stems may contain dots (parameter names)
    return path.with_name(path.name + ".bin"), path.with_name(path.name + ".hdr")


def save_tensor(path, array, name=None):
    array = np.ascontiguousarray(array, dtype="<f8")
    bin_path, hdr_path = _paths(path)
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    with open(bin_path, "wb") as fh:
        fh.write(np.array([array.ndim], dtype="<u4").tobytes())
        fh.write(np.array(array.shape, dtype="<u8").tobytes())
        fh.write(array.tobytes())
    name = name if name is not None else bin_path.name[:-4]
    shape = " ".join(str(d) for d in array.shape)
    hdr_path.write_text(f"name = {name}\nrank = {array.ndim}\nshape = {shape}\ndtype = f64le\n")
    return bin_path


def load_tensor(path):
    bin_path, _ = _paths(path)
    raw = bin_path.read_bytes()
    if len(raw) < 4:
        raise ParseError("truncated tensor dump", path=bin_path)
    rank = int(np.frombuffer(raw, dtype="<u4", count=1)[0])
    offset = 4 + 8 * rank
    if len(raw) < offset:
        raise ParseError("truncated tensor header", path=bin_path)
    dims = tuple(int(d) for d in np.frombuffer(raw, dtype="<u8", count=rank, offset=4))
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    if len(raw) != offset + 8 * count:
        raise ParseError(f"payload holds {(len(raw) - offset) // 8} values, "
                         f"shape {dims} needs {count}", path=bin_path)
    data = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
    return data.astype(np.float64).reshape(dims)


def read_header(path):
    _, hdr_path = _paths(path)
    fields = {}
    for line in hdr_path.read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            fields[key.strip()] = value.strip()
    return fields
