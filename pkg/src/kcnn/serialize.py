"""Deterministic binary container for numpy arrays plus a JSON header.

Used for embedding files, model checkpoints and Gram dumps. Unlike ``np.savez``
the output bytes depend only on the content (no zip timestamps), which the CLI
relies on for byte-identical artifacts.
"""

import json

import numpy as np

MAGIC = b"KCNNBIN1"

_ALLOWED_DTYPES = ("<i8", "<i4", "<f8", "<f4", "|u1")


def save_arrays(path, arrays: dict, meta: dict) -> None:
    """Write named arrays and a JSON-serializable meta dict to ``path``."""
    entries = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        dtype = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype
        arr = arr.astype(dtype, copy=False)
        descr = np.lib.format.dtype_to_descr(arr.dtype)
        if descr not in _ALLOWED_DTYPES:
            raise ValueError(f"unsupported dtype {descr} for array {name!r}")
        raw = arr.tobytes()
        entries.append(
            {"name": name, "dtype": descr, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)}
        )
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"meta": meta, "arrays": entries}, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for raw in blobs:
            fh.write(raw)


def load_arrays(path):
    """Read a container written by :func:`save_arrays`; returns (arrays, meta)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a kcnn binary container")
        header_len = int.from_bytes(fh.read(8), "little")
        header = json.loads(fh.read(header_len))
        payload = fh.read()
    arrays = {}
    for entry in header["arrays"]:
        raw = payload[entry["offset"] : entry["offset"] + entry["nbytes"]]
        arr = np.frombuffer(raw, dtype=np.dtype(entry["dtype"])).reshape(entry["shape"])
        arrays[entry["name"]] = arr.copy()
    return arrays, header["meta"]
