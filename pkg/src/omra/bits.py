"""MSB-first bit I/O and order-0 exponential-Golomb codes.

The writer accumulates vectorized codeword batches and packs them once, so
rate accounting is exact: the bit count is the sum of codeword lengths and
the final partial byte is padded with zero bits.
"""
from __future__ import annotations

import numpy as np

from .errors import BitstreamError

UE_MAX = 2 ** 32 - 2
SE_MAX = 2 ** 31 - 1


def ue_code(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Codeword integers and bit lengths for unsigned exp-Golomb symbols.

    ue(v) is bitlen(v+1)-1 zeros followed by v+1 in binary, so the codeword
    read as an MSB-first integer of its full length is simply v+1.
    """
    v = np.asarray(values, np.int64)
    if v.size and (v.min() < 0 or v.max() > UE_MAX):
        raise BitstreamError("ue symbol out of range")
    _, exp = np.frexp((v + 1).astype(np.float64))
    lengths = 2 * exp.astype(np.int64) - 1
    return (v + 1).astype(np.uint64), lengths


def se_code(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Signed exp-Golomb: v>0 maps to 2v-1, v<=0 maps to -2v, then ue."""
    v = np.asarray(values, np.int64)
    if v.size and np.abs(v).max() > SE_MAX:
        raise BitstreamError("se symbol out of range")
    return ue_code(np.where(v > 0, 2 * v - 1, -2 * v))


class BitWriter:
    """Collects codewords and packs them MSB-first into bytes."""

    def __init__(self) -> None:
        self._codes: list[np.ndarray] = []
        self._lengths: list[np.ndarray] = []

    def write_ue(self, value: int) -> None:
        self.write_ue_array(np.array([value]))

    def write_se(self, value: int) -> None:
        self.write_se_array(np.array([value]))

    def write_ue_array(self, values: np.ndarray) -> None:
        codes, lengths = ue_code(values)
        self._codes.append(codes)
        self._lengths.append(lengths)

    def write_se_array(self, values: np.ndarray) -> None:
        codes, lengths = se_code(values)
        self._codes.append(codes)
        self._lengths.append(lengths)

    def write_codes(self, codes: np.ndarray, lengths: np.ndarray) -> None:
        """Append pre-computed (codeword, bit length) batches in order."""
        self._codes.append(codes.astype(np.uint64))
        self._lengths.append(lengths.astype(np.int64))

    @property
    def bit_count(self) -> int:
        return int(sum(int(l.sum()) for l in self._lengths))

    def getvalue(self) -> bytes:
        if not self._codes:
            return b""
        codes = np.concatenate(self._codes)
        lengths = np.concatenate(self._lengths)
        maxlen = int(lengths.max())
        shifts = lengths[:, None] - 1 - np.arange(maxlen)[None, :]
        bits = (codes[:, None] >> np.clip(shifts, 0, 63).astype(np.uint64)) & 1
        flat = bits[shifts >= 0].astype(np.uint8)
        return np.packbits(flat).tobytes()


class BitReader:
    """Reads exp-Golomb symbols from a byte buffer, tracking consumed bits."""

    def __init__(self, data: bytes) -> None:
        self._bits = np.unpackbits(np.frombuffer(data, np.uint8))
        self.pos = 0

    def read_ue(self) -> int:
        bits = self._bits
        n = bits.size
        pos = self.pos
        if pos >= n:
            raise BitstreamError("bitstream exhausted")
        window = bits[pos:min(pos + 64, n)]
        ones = np.flatnonzero(window)
        if ones.size == 0:
            raise BitstreamError("bitstream exhausted")
        z = int(ones[0])
        end = pos + 2 * z + 1
        if end > n:
            raise BitstreamError("bitstream exhausted")
        v = 0
        for b in bits[pos + z:end]:
            v = (v << 1) | int(b)
        self.pos = end
        return v - 1

    def read_se(self) -> int:
        m = self.read_ue()
        return (m + 1) // 2 if m % 2 else -(m // 2)

    def read_se_array(self, count: int) -> np.ndarray:
        return np.array([self.read_se() for _ in range(count)], np.int64)


def leb128_encode(value: int) -> bytes:
    """Unsigned LEB128 varint."""
    out = bytearray()
    while True:
        b = value & 0x7F
        value >>= 7
        out.append(b | (0x80 if value else 0))
        if not value:
            return bytes(out)


def leb128_decode(data: bytes, offset: int) -> tuple[int, int]:
    """Decode an unsigned LEB128 varint; returns (value, new offset)."""
    value = shift = 0
    while True:
        if offset >= len(data):
            raise BitstreamError("truncated varint")
        b = data[offset]
        offset += 1
        value |= (b & 0x7F) << shift
        shift += 7
        if not b & 0x80:
            return value, offset
