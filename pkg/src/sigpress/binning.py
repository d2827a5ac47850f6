"""Disk-backed signature binning.

Stage one of the pipeline: every read is routed to the bin named by its
signature, stored in the orientation the signature was found in. Bins
accumulate in memory and flush as chunks to a single data file
(<prefix>.bdna); a catalog (<prefix>.bmeta) records where each bin's
chunks live so stage two can fetch one bin at a time.

Record wire format (little endian): length u16, signature position u16,
flag byte (bit0 = reversed), then the sequence packed 3 bits per symbol
(LSB first) padded to a byte boundary. Within a bin, records keep input
order, so the implicit record ordinal doubles as the original index for
tie-breaking downstream.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .alphabet import decode_seq
from .errors import CorruptArchiveError
from .fastq import InputBlock
from .signature import SignatureParams, scan_block

CATALOG_MAGIC = b"ORBN"
CATALOG_VERSION = 1
FLUSH_THRESHOLD_DEFAULT = 8_000_000
LENGTH_WIDTH = 2

_HEADER = struct.Struct("<4sHBBBxQQI")
_BIN_ROW = struct.Struct("<QI")
_CHUNK_ROW = struct.Struct("<QQQ")


@dataclass(frozen=True)
class BinRecord:
    """One stored read: sequence text, signature position, orientation."""

    seq: str
    pos: int
    rev: bool
    orig_index: int = -1


@dataclass
class BinBatch:
    """Records of one bin in array form (flat codes + offsets)."""

    codes: np.ndarray
    offsets: np.ndarray
    pos: np.ndarray
    rev: np.ndarray

    @property
    def n(self) -> int:
        return self.offsets.size - 1

    @property
    def symbols(self) -> int:
        return int(self.offsets[-1])

    def records(self, start_index: int = 0) -> list[BinRecord]:
        return [BinRecord(decode_seq(self.codes[self.offsets[i]:self.offsets[i + 1]]),
                          int(self.pos[i]), bool(self.rev[i]), start_index + i)
                for i in range(self.n)]


@dataclass(frozen=True)
class ChunkRef:
    offset: int
    length: int
    count: int


@dataclass
class BinCatalog:
    """Where every bin's chunks live inside the data file."""

    params: SignatureParams
    total_reads: int = 0
    total_bases: int = 0
    chunks: dict[int, list[ChunkRef]] = field(default_factory=dict)

    def bins(self) -> list[int]:
        return sorted(self.chunks)

    def records_in(self, code: int) -> int:
        return sum(c.count for c in self.chunks.get(code, ()))

    def save(self, path: str | Path) -> None:
        out = bytearray()
        out += _HEADER.pack(CATALOG_MAGIC, CATALOG_VERSION, self.params.length,
                            self.params.zone, LENGTH_WIDTH, self.total_reads,
                            self.total_bases, len(self.chunks))
        for code in self.bins():
            refs = self.chunks[code]
            out += _BIN_ROW.pack(code, len(refs))
            for ref in refs:
                out += _CHUNK_ROW.pack(ref.offset, ref.length, ref.count)
        Path(path).write_bytes(bytes(out))

    @classmethod
    def load(cls, path: str | Path) -> "BinCatalog":
        data = Path(path).read_bytes()
        if len(data) < _HEADER.size:
            raise CorruptArchiveError(f"{path}: truncated catalog")
        magic, version, p, z, width, reads, bases, n_bins = \
            _HEADER.unpack_from(data, 0)
        if magic != CATALOG_MAGIC:
            raise CorruptArchiveError(f"{path}: not a bin catalog")
        if version != CATALOG_VERSION:
            raise CorruptArchiveError(f"{path}: unsupported version {version}")
        if width != LENGTH_WIDTH:
            raise CorruptArchiveError(f"{path}: unsupported length width {width}")
        cat = cls(SignatureParams(p, z), reads, bases)
        at = _HEADER.size
        try:
            for _ in range(n_bins):
                code, n_chunks = _BIN_ROW.unpack_from(data, at)
                at += _BIN_ROW.size
                refs = []
                for _ in range(n_chunks):
                    refs.append(ChunkRef(*_CHUNK_ROW.unpack_from(data, at)))
                    at += _CHUNK_ROW.size
                cat.chunks[code] = refs
        except struct.error as exc:
            raise CorruptArchiveError(f"{path}: truncated catalog") from exc
        if at != len(data):
            raise CorruptArchiveError(f"{path}: trailing bytes in catalog")
        return cat


@njit(cache=True, nogil=True)
def _permute_reads(codes, offsets, order):  # pragma: no cover - jit
    out = np.empty(codes.size, np.uint8)
    new_offsets = np.zeros(order.size + 1, np.int64)
    k = 0
    for i in range(order.size):
        r = order[i]
        for j in range(offsets[r], offsets[r + 1]):
            out[k] = codes[j]
            k += 1
        new_offsets[i + 1] = k
    return out, new_offsets


@njit(cache=True, nogil=True)
def _pack_records(codes, offsets, pos, rev):  # pragma: no cover - jit
    n = offsets.size - 1
    size = 0
    for i in range(n):
        size += 5 + (3 * (offsets[i + 1] - offsets[i]) + 7) // 8
    out = np.empty(size, np.uint8)
    k = 0
    for i in range(n):
        length = offsets[i + 1] - offsets[i]
        out[k] = length & 0xFF
        out[k + 1] = (length >> 8) & 0xFF
        out[k + 2] = pos[i] & 0xFF
        out[k + 3] = (pos[i] >> 8) & 0xFF
        out[k + 4] = rev[i] & 1
        k += 5
        acc = np.int64(0)
        nbits = 0
        for j in range(offsets[i], offsets[i + 1]):
            acc |= np.int64(codes[j]) << nbits
            nbits += 3
            if nbits >= 8:
                out[k] = acc & 0xFF
                k += 1
                acc >>= 8
                nbits -= 8
        if nbits:
            out[k] = acc & 0xFF
            k += 1
    return out


@njit(cache=True, nogil=True)
def _unpack_records(buf, count):  # pragma: no cover - jit
    # first pass sizes and validates framing; second pass fills
    k = 0
    total = np.int64(0)
    for _ in range(count):
        if k + 5 > buf.size:
            return (np.zeros(0, np.uint8), np.zeros(1, np.int64),
                    np.zeros(0, np.int32), np.zeros(0, np.uint8), 1)
        length = np.int64(buf[k]) | (np.int64(buf[k + 1]) << 8)
        total += length
        k += 5 + (3 * length + 7) // 8
        if k > buf.size:
            return (np.zeros(0, np.uint8), np.zeros(1, np.int64),
                    np.zeros(0, np.int32), np.zeros(0, np.uint8), 1)
    if k != buf.size:
        return (np.zeros(0, np.uint8), np.zeros(1, np.int64),
                np.zeros(0, np.int32), np.zeros(0, np.uint8), 1)
    codes = np.empty(total, np.uint8)
    offsets = np.zeros(count + 1, np.int64)
    pos = np.empty(count, np.int32)
    rev = np.empty(count, np.uint8)
    k = 0
    at = np.int64(0)
    for i in range(count):
        length = np.int64(buf[k]) | (np.int64(buf[k + 1]) << 8)
        pos[i] = np.int32(buf[k + 2]) | (np.int32(buf[k + 3]) << 8)
        rev[i] = buf[k + 4] & 1
        k += 5
        acc = np.int64(0)
        nbits = 0
        for _ in range(length):
            if nbits < 3:
                acc |= np.int64(buf[k]) << nbits
                k += 1
                nbits += 8
            c = acc & 7
            if c > 4:
                return (np.zeros(0, np.uint8), np.zeros(1, np.int64),
                        np.zeros(0, np.int32), np.zeros(0, np.uint8), 2)
            codes[at] = c
            acc >>= 3
            nbits -= 3
            at += 1
        offsets[i + 1] = at
    return codes, offsets, pos, rev, 0


def dispatch_block(block: InputBlock, params: SignatureParams) -> dict[int, BinBatch]:
    """Split a block into per-bin record batches.

    Records keep input order within each batch; reads whose signature
    was found on the reverse strand are stored reverse complemented.
    """
    sig, pos, rev = scan_block(block.codes, block.offsets, params)
    order = np.argsort(sig, kind="stable").astype(np.int64)
    sorted_sig = sig[order]
    pcodes, poffsets = _permute_reads(block.codes, block.offsets, order)
    ppos = pos[order]
    prev = rev[order]
    _flip_reversed(pcodes, poffsets, prev)
    out: dict[int, BinBatch] = {}
    bounds = np.flatnonzero(np.diff(sorted_sig)) + 1
    starts = np.concatenate(([0], bounds))
    stops = np.concatenate((bounds, [order.size])) if order.size else bounds
    for a, b in zip(starts, stops):
        code = int(sorted_sig[a])
        lo, hi = poffsets[a], poffsets[b]
        out[code] = BinBatch(pcodes[lo:hi], poffsets[a:b + 1] - lo,
                             ppos[a:b], prev[a:b])
    return out


@njit(cache=True, nogil=True)
def _flip_reversed(codes, offsets, rev):  # pragma: no cover - jit
    for i in range(rev.size):
        if rev[i]:
            lo, hi = offsets[i], offsets[i + 1]
            a, b = lo, hi - 1
            while a < b:
                ca = codes[a]
                cb = codes[b]
                codes[a] = cb if cb == 4 else 3 - cb
                codes[b] = ca if ca == 4 else 3 - ca
                a += 1
                b -= 1
            if a == b:
                c = codes[a]
                codes[a] = c if c == 4 else 3 - c


class BinWriter:
    """Buffers per-bin records and appends them as chunks to the data file.

    A bin flushes when its buffered bytes exceed the threshold, and
    everything flushes at close. close() writes the catalog next to the
    data file and returns it.
    """

    def __init__(self, prefix: str | Path, params: SignatureParams, *,
                 flush_threshold: int = FLUSH_THRESHOLD_DEFAULT):
        self.prefix = Path(prefix)
        self.data_path = self.prefix.with_name(self.prefix.name + ".bdna")
        self.catalog_path = self.prefix.with_name(self.prefix.name + ".bmeta")
        self.params = params
        self.flush_threshold = flush_threshold
        self._fh = open(self.data_path, "wb")
        self._offset = 0
        self._buf: dict[int, bytearray] = {}
        self._buf_counts: dict[int, int] = {}
        self._catalog = BinCatalog(params)

    def add_block(self, batches: dict[int, BinBatch]) -> None:
        for code in sorted(batches):
            batch = batches[code]
            packed = _pack_records(batch.codes,
                                   np.asarray(batch.offsets, np.int64),
                                   batch.pos, batch.rev)
            buf = self._buf.setdefault(code, bytearray())
            buf += packed.tobytes()
            self._buf_counts[code] = self._buf_counts.get(code, 0) + batch.n
            self._catalog.total_reads += batch.n
            self._catalog.total_bases += batch.symbols
            if len(buf) > self.flush_threshold:
                self._flush(code)

    def _flush(self, code: int) -> None:
        buf = self._buf.pop(code, None)
        if not buf:
            return
        count = self._buf_counts.pop(code)
        self._fh.write(buf)
        self._catalog.chunks.setdefault(code, []).append(
            ChunkRef(self._offset, len(buf), count))
        self._offset += len(buf)

    def close(self) -> BinCatalog:
        for code in sorted(self._buf):
            self._flush(code)
        self._fh.close()
        self._catalog.save(self.catalog_path)
        return self._catalog

    def abort(self) -> None:
        """Drop partial output after a failed run."""
        self._fh.close()
        for path in (self.data_path, self.catalog_path):
            if path.exists():
                path.unlink()


def fetch_bin_arrays(data_path: str | Path, catalog: BinCatalog,
                     code: int) -> BinBatch:
    """Load one bin's records (chunks concatenated in append order)."""
    refs = catalog.chunks.get(code, [])
    parts = []
    with open(data_path, "rb") as fh:
        fd = fh.fileno()
        for ref in refs:
            raw = os.pread(fd, ref.length, ref.offset)
            if len(raw) != ref.length:
                raise CorruptArchiveError(
                    f"{data_path}: chunk at {ref.offset} truncated")
            buf = np.frombuffer(raw, dtype=np.uint8)
            codes, offsets, pos, rev, err = _unpack_records(buf, ref.count)
            if err:
                raise CorruptArchiveError(
                    f"{data_path}: damaged chunk at offset {ref.offset}")
            parts.append((codes, offsets, pos, rev))
    if not parts:
        return BinBatch(np.zeros(0, np.uint8), np.zeros(1, np.int64),
                        np.zeros(0, np.int32), np.zeros(0, np.uint8))
    if len(parts) == 1:
        return BinBatch(*parts[0])
    codes = np.concatenate([p[0] for p in parts])
    counts = [p[1].size - 1 for p in parts]
    offsets = np.zeros(sum(counts) + 1, dtype=np.int64)
    at = 0
    base = 0
    for (_, off, _, _), k in zip(parts, counts):
        offsets[at + 1:at + k + 1] = off[1:] + base
        base += int(off[-1])
        at += k
    pos = np.concatenate([p[2] for p in parts])
    rev = np.concatenate([p[3] for p in parts])
    return BinBatch(codes, offsets, pos, rev)


def fetch_bin(data_path: str | Path, catalog: BinCatalog,
              code: int) -> list[BinRecord]:
    """String-level view of fetch_bin_arrays (record order preserved)."""
    return fetch_bin_arrays(data_path, catalog, code).records()
