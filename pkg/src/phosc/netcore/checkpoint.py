"""Single-file checkpoint format for one or more named networks.

Layout: 6-byte magic "PHOSC1", uint32 little-endian header length, a
canonical JSON header (sorted keys, no whitespace), then the raw tensor
payload: float32 little-endian C-order bytes concatenated in header
order. Tensor names are "<net>:<layer>.<param>" and sorted, so identical
contents always produce identical bytes; save(load(f)) reproduces f
exactly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .layers import Network, spec_from_dict, spec_to_dict

MAGIC = b"PHOSC1"
_FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    # net name -> (layer specs, input shape, init seed)
    nets: dict[str, tuple[tuple, tuple[int, ...], int]]
    params: dict[str, np.ndarray]  # "<net>:<layer>.<param>" -> float64 array
    alphabet: str | None = None
    extra: dict = field(default_factory=dict)


def save_checkpoint(
    path: str | Path,
    nets: dict[str, Network],
    alphabet: str | None = None,
    extra: dict | None = None,
) -> None:
    if not nets:
        raise ValueError("no networks to save")
    tensors: dict[str, np.ndarray] = {}
    net_meta = {}
    for net_name, net in sorted(nets.items()):
        if ":" in net_name or not net_name:
            raise ValueError(f"bad network name {net_name!r}")
        net_meta[net_name] = {
            "layers": [spec_to_dict(s) for s in net.specs],
            "input_shape": list(net.input_shape),
            "seed": net.seed,
        }
        for pname, arr in net.params.items():
            tensors[f"{net_name}:{pname}"] = arr
    names = sorted(tensors)
    header = {
        "version": _FORMAT_VERSION,
        "nets": net_meta,
        "alphabet": alphabet,
        "extra": extra or {},
        "tensors": [
            {"name": n, "shape": list(tensors[n].shape), "dtype": "float32"} for n in names
        ],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with Path(path).open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for n in names:
            f.write(np.ascontiguousarray(tensors[n], dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < len(MAGIC) + 4 or raw[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: not a checkpoint (bad magic)")
    (hlen,) = struct.unpack_from("<I", raw, len(MAGIC))
    start = len(MAGIC) + 4
    if len(raw) < start + hlen:
        raise FormatError(f"{path}: truncated header")
    try:
        header = json.loads(raw[start : start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: corrupt header ({e})") from None
    if header.get("version") != _FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {header.get('version')!r}")

    nets = {}
    for net_name, meta in header["nets"].items():
        specs = tuple(spec_from_dict(d) for d in meta["layers"])
        nets[net_name] = (specs, tuple(meta["input_shape"]), int(meta["seed"]))

    params: dict[str, np.ndarray] = {}
    offset = start + hlen
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        if entry.get("dtype") != "float32":
            raise FormatError(f"{path}: unsupported tensor dtype {entry.get('dtype')!r}")
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 4
        if offset + nbytes > len(raw):
            raise FormatError(f"{path}: truncated tensor payload for {entry['name']!r}")
        arr = np.frombuffer(raw, dtype="<f4", count=count, offset=offset).reshape(shape)
        params[entry["name"]] = arr.astype(np.float64)
        offset += nbytes
    if offset != len(raw):
        raise FormatError(f"{path}: {len(raw) - offset} trailing bytes")

    return Checkpoint(
        nets=nets,
        params=params,
        alphabet=header.get("alphabet"),
        extra=header.get("extra") or {},
    )


def networks_from_checkpoint(ckpt: Checkpoint) -> dict[str, Network]:
    """Rebuild every stored network and load its tensors."""
    out = {}
    for net_name, (specs, input_shape, seed) in ckpt.nets.items():
        net = Network(specs, input_shape, seed=seed)
        prefix = f"{net_name}:"
        net.set_params(
            {k[len(prefix) :]: v for k, v in ckpt.params.items() if k.startswith(prefix)}
        )
        out[net_name] = net
    return out
