"""Checkpoint persistence.

Layout: 8-byte magic, little-endian uint32 header length, UTF-8 JSON header,
then the payload of raw little-endian float32 tensors concatenated in
tensor-table order. The header records {format_version, configs, tensor
table [{name, shape, dtype, byte_offset, byte_len}], checksum}, where the
checksum is CRC32 of the whole payload. Round-trips are bit-exact.
"""

import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ChecksumMismatch, IoFailure, VersionMismatch
from .model import AutoencoderConfig, ClassifierConfig, NanetParams
from .tensor import Tensor

MAGIC = b"NANETCK1"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    configs: dict  # mode, image_size, ae_config (or None), cls_config, extras
    tensors: dict  # name -> float32 ndarray, insertion order = payload order

    def to_params(self) -> NanetParams:
        ae = self.configs.get("ae_config")
        ae_cfg = AutoencoderConfig.from_dict(ae) if ae is not None else None
        cls_cfg = ClassifierConfig.from_dict(self.configs["cls_config"])
        params = NanetParams(ae_cfg, cls_cfg)
        for name, arr in self.tensors.items():
            params.tensors[name] = Tensor(arr.copy(), requires_grad=True)
        return params


def save_checkpoint(params, configs: dict, path):
    """Write tensors ({name: Tensor or ndarray}) plus configs to `path`."""
    payload = bytearray()
    table = []
    for name, t in params.items():
        arr = t.data if isinstance(t, Tensor) else np.asarray(t)
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        table.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "dtype": "f32",
                "byte_offset": len(payload),
                "byte_len": len(raw),
            }
        )
        payload.extend(raw)
    header = {
        "format_version": FORMAT_VERSION,
        "configs": configs,
        "tensors": table,
        "checksum": zlib.crc32(bytes(payload)),
    }
    hbytes = json.dumps(header).encode("utf-8")
    try:
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(len(hbytes).to_bytes(4, "little"))
            f.write(hbytes)
            f.write(payload)
    except OSError as e:
        raise IoFailure(f"cannot write checkpoint {path}: {e}") from e


def load_checkpoint(path) -> Checkpoint:
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read checkpoint {path}: {e}") from e
    if len(blob) < len(MAGIC) + 4 or blob[: len(MAGIC)] != MAGIC:
        raise VersionMismatch(f"{path}: not a recognized checkpoint file")
    hlen = int.from_bytes(blob[len(MAGIC) : len(MAGIC) + 4], "little")
    hstart = len(MAGIC) + 4
    try:
        header = json.loads(blob[hstart : hstart + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ChecksumMismatch(f"{path}: corrupt header: {e}") from e
    if header.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(
            f"{path}: format_version {header.get('format_version')}, expected {FORMAT_VERSION}"
        )
    payload = blob[hstart + hlen :]
    if zlib.crc32(payload) != header["checksum"]:
        raise ChecksumMismatch(f"{path}: payload CRC32 does not match header")
    tensors = {}
    for row in header["tensors"]:
        a, n = row["byte_offset"], row["byte_len"]
        arr = np.frombuffer(payload[a : a + n], dtype="<f4").reshape(row["shape"])
        tensors[row["name"]] = arr.astype(np.float32, copy=True)
    return Checkpoint(header["configs"], tensors)
