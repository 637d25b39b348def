"""Bit-exact reader/writer for the IDX binary format used by MNIST.

Only the two unsigned-byte layouts that MNIST ships are accepted:

    magic 0x00000801 -> 1-D label vector
    magic 0x00000803 -> 3-D image stack (count x rows x cols)

All integers are big-endian 32-bit. Anything else is rejected with the
byte offset at which parsing failed. Callers decompress gzip themselves.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from math import prod

import numpy as np

MAGIC_LABELS = 0x00000801
MAGIC_IMAGES = 0x00000803

# Refuse dimension sizes that would imply a payload over ~4 GiB; real MNIST
# files are a few dozen MB and anything bigger is a corrupt header.
_MAX_ELEMENTS = 2**32


class IdxFormatError(ValueError):
    """Malformed IDX byte stream. Carries the offending byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class IdxTensor:
    """Unsigned-byte tensor as stored in an IDX file.

    dims: sizes, length 1 (labels) or 3 (images).
    data: row-major uint8 payload, exactly prod(dims) bytes.
    """

    dims: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        if len(self.dims) not in (1, 3):
            raise ValueError(f"dims must have length 1 or 3, got {len(self.dims)}")
        if any(d < 0 for d in self.dims):
            raise ValueError(f"negative dimension in {self.dims}")
        data = np.ascontiguousarray(self.data, dtype=np.uint8).ravel()
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if prod(self.dims) != data.size:
            raise ValueError(
                f"dims {self.dims} imply {prod(self.dims)} bytes, got {data.size}"
            )

    @property
    def magic(self) -> int:
        return MAGIC_LABELS if len(self.dims) == 1 else MAGIC_IMAGES

    def as_array(self) -> np.ndarray:
        """Payload reshaped to dims."""
        return self.data.reshape(self.dims)


def parse_idx(stream: bytes) -> IdxTensor:
    """Parse a complete IDX byte stream into an IdxTensor.

    Raises IdxFormatError (with byte offset) on unknown magic, truncated
    header or payload, trailing bytes, or oversized dimensions.
    """
    if len(stream) < 4:
        raise IdxFormatError("truncated magic number", 0)
    (magic,) = struct.unpack_from(">I", stream, 0)
    if magic == MAGIC_LABELS:
        ndim = 1
    elif magic == MAGIC_IMAGES:
        ndim = 3
    else:
        raise IdxFormatError(f"unknown magic number 0x{magic:08x}", 0)

    header_len = 4 + 4 * ndim
    if len(stream) < header_len:
        raise IdxFormatError(
            f"truncated header: need {header_len} bytes for {ndim} dims", len(stream)
        )
    dims = struct.unpack_from(f">{ndim}I", stream, 4)
    n_elements = prod(dims)
    if n_elements > _MAX_ELEMENTS:
        raise IdxFormatError(f"dimension sizes {dims} overflow sane payload", 4)

    payload = stream[header_len:]
    if len(payload) < n_elements:
        raise IdxFormatError(
            f"truncated payload: expected {n_elements} bytes, got {len(payload)}",
            header_len + len(payload),
        )
    if len(payload) > n_elements:
        raise IdxFormatError(
            f"trailing bytes: expected {n_elements} payload bytes, got {len(payload)}",
            header_len + n_elements,
        )
    data = np.frombuffer(payload, dtype=np.uint8)
    return IdxTensor(dims=dims, data=data)


def serialize_idx(tensor: IdxTensor) -> bytes:
    """Inverse of parse_idx: emit the exact IDX byte stream for a tensor."""
    ndim = len(tensor.dims)
    header = struct.pack(f">I{ndim}I", tensor.magic, *tensor.dims)
    return header + tensor.data.tobytes()


def load_idx_file(path) -> IdxTensor:
    with open(path, "rb") as fh:
        return parse_idx(fh.read())
