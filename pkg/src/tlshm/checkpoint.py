"""Checkpoint serialization: magic "TLCK", versioned JSON header, raw arrays.

Layout: magic (4 bytes) | u32 version | u32 header length | header JSON
(utf-8) | parameter arrays, little-endian, in header index order. Round
trips are bitwise on every array.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArtifactError
from .nn.network import Network
from .nn.spec import NetworkSpec

CHECKPOINT_MAGIC = b"TLCK"
CHECKPOINT_VERSION = 1

_DTYPES = {"float32": "<f4", "float64": "<f8", "int64": "<i8"}


@dataclass
class Checkpoint:
    spec: NetworkSpec
    arrays: dict = field(default_factory=dict)
    optimizer: dict | None = None
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_network(cls, network: Network, metadata=None, optimizer=None) -> "Checkpoint":
        arrays = {k: v.copy() for k, v in network.state_arrays().items()}
        opt = None
        if optimizer is not None:
            opt = {k: v.copy() for k, v in optimizer.state_arrays().items()}
        return cls(spec=network.spec, arrays=arrays, optimizer=opt, metadata=dict(metadata or {}))

    def build_network(self, dtype=None, rng=None) -> Network:
        """Instantiate a Network carrying this checkpoint's parameters."""
        dtype = dtype or next(iter(self.arrays.values())).dtype
        net = Network(self.spec, rng=rng or np.random.default_rng(0), dtype=dtype)
        net.load_state_arrays(self.arrays)
        return net


def _array_index(arrays):
    index = []
    for name, arr in arrays.items():
        dtype = str(arr.dtype)
        if dtype not in _DTYPES:
            raise ArtifactError(f"unsupported checkpoint dtype {dtype} for {name!r}")
        index.append({"name": name, "dtype": dtype, "shape": list(arr.shape)})
    return index


def save_checkpoint(ckpt: Checkpoint, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "spec": ckpt.spec.to_dict(),
        "metadata": ckpt.metadata,
        "arrays": _array_index(ckpt.arrays),
        "optimizer": _array_index(ckpt.optimizer) if ckpt.optimizer else None,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        f.write(blob)
        for entry in header["arrays"]:
            f.write(np.ascontiguousarray(ckpt.arrays[entry["name"]]).astype(_DTYPES[entry["dtype"]]).tobytes())
        if ckpt.optimizer:
            for entry in header["optimizer"]:
                f.write(np.ascontiguousarray(ckpt.optimizer[entry["name"]]).astype(_DTYPES[entry["dtype"]]).tobytes())
    return path


def _read_arrays(f, index, path):
    arrays = {}
    for entry in index:
        dtype = np.dtype(_DTYPES[entry["dtype"]])
        count = int(np.prod(entry["shape"], dtype=np.int64)) if entry["shape"] else 1
        raw = f.read(count * dtype.itemsize)
        if len(raw) != count * dtype.itemsize:
            raise ArtifactError(f"corrupt checkpoint {path}: truncated while reading {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(raw, dtype=dtype).reshape(entry["shape"]).copy()
    return arrays


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"checkpoint {path} does not exist")
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ArtifactError(f"corrupt checkpoint {path}: bad magic {magic!r}")
        head = f.read(8)
        if len(head) != 8:
            raise ArtifactError(f"corrupt checkpoint {path}: truncated header")
        version, header_len = struct.unpack("<II", head)
        if version != CHECKPOINT_VERSION:
            raise ArtifactError(f"checkpoint {path} has version {version}, expected {CHECKPOINT_VERSION}")
        blob = f.read(header_len)
        if len(blob) != header_len:
            raise ArtifactError(f"corrupt checkpoint {path}: truncated header JSON")
        try:
            header = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ArtifactError(f"corrupt checkpoint {path}: unreadable header ({exc})") from exc
        arrays = _read_arrays(f, header["arrays"], path)
        optimizer = _read_arrays(f, header["optimizer"], path) if header.get("optimizer") else None
    return Checkpoint(
        spec=NetworkSpec.from_dict(header["spec"]),
        arrays=arrays,
        optimizer=optimizer,
        metadata=header.get("metadata", {}),
    )
