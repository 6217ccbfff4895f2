"""Versioned binary container for built indexes.

Layout (all integers little-endian)::

    b"LVLSF1" | u16 version | u32 header length | header (UTF-8 JSON, sorted keys)
    u32 array count | per array, by name:
        u16 name length | name | u8 dtype length | dtype | u8 ndim | u64 * ndim shape | raw C-order bytes

Object arrays of Python ints (filter ids wider than 63 bits) are stored with
the dtype tag ``wide128`` as (n, 2) uint64 high/low words.  The header holds
every scalar field of the index tree, including parameter blocks and rounding
traces; arrays are referenced from it by name.  Writing the same index twice
gives identical bytes.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import fields, is_dataclass
from pathlib import Path

import numpy as np

from .core import Seed, SetPoint
from .dimred import PartitionReduction, XorReduction
from .errors import FormatError
from .hamming_filters import InnerCode, TensoredCode
from .index import (
    BucketTable,
    HammingIndex,
    HammingParams,
    SimilarityIndex,
    SimilarityParams,
    WeightGroup,
)
from .splitter import SplitterFamily
from .turan import PerfectHashFamily, TuranSystem

__all__ = ["MAGIC", "VERSION", "encode_container", "decode_container", "save_index", "load_index", "index_bytes"]

MAGIC = b"LVLSF1"
VERSION = 1
WIDE = "wide128"

_TYPES = {
    cls.__name__: cls
    for cls in (
        Seed, InnerCode, TensoredCode, SplitterFamily, XorReduction, PartitionReduction,
        BucketTable, HammingIndex, HammingParams, SimilarityIndex, SimilarityParams,
        WeightGroup, TuranSystem, PerfectHashFamily,
    )
}


# --- container ----------------------------------------------------------------


def _wide_to_words(arr: np.ndarray) -> np.ndarray:
    vals = [int(v) for v in arr.ravel()]
    out = np.zeros((len(vals), 2), dtype="<u8")
    for i, v in enumerate(vals):
        out[i, 0], out[i, 1] = v >> 64, v & (2**64 - 1)
    return out


def _words_to_wide(words: np.ndarray) -> np.ndarray:
    out = np.empty(len(words), dtype=object)
    for i, (hi, lo) in enumerate(words.tolist()):
        out[i] = (hi << 64) | lo
    return out


def encode_container(header: dict, arrays: dict[str, np.ndarray]) -> bytes:
    buf = io.BytesIO()
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    buf.write(MAGIC + struct.pack("<HI", VERSION, len(head)) + head)
    buf.write(struct.pack("<I", len(arrays)))
    for name in sorted(arrays):
        arr = arrays[name]
        if arr.dtype == object:
            shape, tag = arr.shape, WIDE
            raw = _wide_to_words(arr).tobytes()
        else:
            arr = np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<"))
            shape, tag, raw = arr.shape, arr.dtype.str, arr.tobytes()
        key, tag_b = name.encode(), tag.encode()
        buf.write(struct.pack("<H", len(key)) + key + struct.pack("<B", len(tag_b)) + tag_b)
        buf.write(struct.pack("<B", len(shape)) + struct.pack(f"<{len(shape)}Q", *shape))
        buf.write(raw)
    return buf.getvalue()


def decode_container(data: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    view = memoryview(data)
    pos = 0

    def take(n: int) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise FormatError("truncated container")
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    if bytes(take(len(MAGIC))) != MAGIC:
        raise FormatError("not an LVLSF1 container")
    version, hlen = struct.unpack("<HI", take(6))
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    try:
        header = json.loads(bytes(take(hlen)).decode())
    except ValueError as exc:
        raise FormatError(f"bad header: {exc}") from exc
    (count,) = struct.unpack("<I", take(4))
    arrays = {}
    for _ in range(count):
        (klen,) = struct.unpack("<H", take(2))
        name = bytes(take(klen)).decode()
        (tlen,) = struct.unpack("<B", take(1))
        tag = bytes(take(tlen)).decode()
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}Q", take(8 * ndim))
        size = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        if tag == WIDE:
            words = np.frombuffer(take(16 * size), dtype="<u8").reshape(size, 2)
            arrays[name] = _words_to_wide(words).reshape(shape)
        else:
            dt = np.dtype(tag)
            arrays[name] = np.frombuffer(take(dt.itemsize * size), dtype=dt).reshape(shape).copy()
    if pos != len(view):
        raise FormatError("trailing bytes after last array")
    return header, arrays


# --- object tree <-> (header, arrays) ------------------------------------------


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def _encode(obj, prefix: str, arrays: dict):
    if isinstance(obj, np.ndarray):
        arrays[prefix] = obj
        return {"__array__": prefix}
    if isinstance(obj, (list, tuple)) and obj and all(isinstance(p, SetPoint) for p in obj):
        lens = np.array([len(p) for p in obj], dtype=np.int64)
        arrays[prefix + ".offsets"] = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)
        arrays[prefix + ".elements"] = np.array([e for p in obj for e in p.elements], dtype=np.int64)
        return {"__sets__": prefix, "universe": obj[0].universe}
    if is_dataclass(obj):
        node = {"__type__": type(obj).__name__}
        for f in fields(obj):
            if not f.name.startswith("_"):
                node[f.name] = _encode(getattr(obj, f.name), f"{prefix}.{f.name}", arrays)
        return node
    if isinstance(obj, (list, tuple)):
        return [_encode(v, f"{prefix}.{i}", arrays) for i, v in enumerate(obj)]
    if isinstance(obj, dict):
        return {str(k): _encode(v, f"{prefix}.{k}", arrays) for k, v in obj.items()}
    return _plain(obj)


def _decode(node, arrays: dict):
    if isinstance(node, list):
        return [_decode(v, arrays) for v in node]
    if not isinstance(node, dict):
        return node
    if "__array__" in node:
        return arrays[node["__array__"]]
    if "__sets__" in node:
        off, el = arrays[node["__sets__"] + ".offsets"], arrays[node["__sets__"] + ".elements"].tolist()
        u = node["universe"]
        return [SetPoint(tuple(el[off[i] : off[i + 1]]), u) for i in range(len(off) - 1)]
    if "__type__" in node:
        cls = _TYPES.get(node["__type__"])
        if cls is None:
            raise FormatError(f"unknown record type {node['__type__']!r}")
        kwargs = {k: _decode(v, arrays) for k, v in node.items() if k != "__type__"}
        if cls is Seed:
            kwargs["path"] = tuple(kwargs["path"])
        return cls(**kwargs)
    return {k: _decode(v, arrays) for k, v in node.items()}


def index_bytes(index: HammingIndex | SimilarityIndex) -> bytes:
    arrays: dict[str, np.ndarray] = {}
    tree = _encode(index, "index", arrays)
    kind = "hamming" if isinstance(index, HammingIndex) else "similarity"
    return encode_container({"kind": kind, "index": tree}, arrays)


def save_index(index: HammingIndex | SimilarityIndex, path: str | Path) -> None:
    Path(path).write_bytes(index_bytes(index))


def load_index(path: str | Path) -> HammingIndex | SimilarityIndex:
    header, arrays = decode_container(Path(path).read_bytes())
    if header.get("kind") not in ("hamming", "similarity"):
        raise FormatError(f"unknown index kind {header.get('kind')!r}")
    return _decode(header["index"], arrays)
