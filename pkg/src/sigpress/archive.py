"""Archive container and entropy backend dispatch.

`<prefix>.cdna` holds, for every nonempty bin in ascending code order,
the twelve entropy-coded streams concatenated in STREAM_NAMES order.
`<prefix>.cmeta` holds a fixed header (signature and match parameters,
totals) followed by a varint directory: per bin the code delta, record
count, and a (coded length, raw length) pair per stream. All integers
little-endian; the format doc has the bit-level layout.

Backend assignment is fixed per stream: flags, rev and the four
letters streams go through the symbol range coder (alphabet sizes 5,
2 and 4); lengths, prev, shift, matches, letters_n and hreads through
the byte context model.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .contextmodel import CmScratch, cm_decode, cm_encode
from .errors import CorruptArchiveError
from .rangecoder import rc_decode, rc_encode
from .refcoder import FLAG_COUNT, MatchParams, STREAM_NAMES, StreamSet
from .signature import SignatureParams

ARCHIVE_MAGIC = b"SGPK"
ARCHIVE_VERSION = 1
LENGTH_WIDTH = 2

# magic, version, p, length width, zone, mismatch cost, insert cost,
# window, max_dist, bin count, total reads, total bases, directory bytes
_HEADER = struct.Struct("<4sHBBHHHIIIQQQ")

_N_STREAMS = len(STREAM_NAMES)
_ROW_WIDTH = 2 + 2 * _N_STREAMS

RC_ALPHABET = {"flags": FLAG_COUNT, "rev": 2, "letters_a": 4,
               "letters_c": 4, "letters_g": 4, "letters_t": 4}


def encode_stream(name: str, raw: bytes,
                  scratch: CmScratch | None = None) -> bytes:
    alpha = RC_ALPHABET.get(name)
    if alpha is None:
        return cm_encode(raw, scratch)
    return rc_encode(raw, alpha)


def decode_stream(name: str, coded: bytes, raw_len: int,
                  scratch: CmScratch | None = None) -> bytes:
    alpha = RC_ALPHABET.get(name)
    if alpha is None:
        return cm_decode(coded, raw_len, scratch)
    return rc_decode(coded, raw_len, alpha)


@njit(cache=True, nogil=True)
def _write_dir(vals):  # pragma: no cover - jit
    out = np.empty(vals.size * 10 + 16, np.uint8)
    pos = 0
    prev = np.int64(-1)
    for i in range(vals.shape[0]):
        for k in range(vals.shape[1]):
            v = vals[i, k] - prev if k == 0 else vals[i, k]
            if k == 0:
                prev = vals[i, 0]
            while v >= 0x80:
                out[pos] = (v & 0x7F) | 0x80
                pos += 1
                v >>= 7
            out[pos] = v
            pos += 1
    return out[:pos]


@njit(cache=True, nogil=True)
def _parse_dir(buf, n_bins, row_width):  # pragma: no cover - jit
    vals = np.zeros((n_bins, row_width), np.int64)
    pos = 0
    prev = np.int64(-1)
    for i in range(n_bins):
        for k in range(row_width):
            v = np.int64(0)
            sh = 0
            while True:
                if pos >= buf.size:
                    return vals, 1
                b = buf[pos]
                pos += 1
                v |= np.int64(b & 0x7F) << sh
                sh += 7
                if b < 0x80:
                    break
                if sh > 63:
                    return vals, 1
            vals[i, k] = v
        if vals[i, 0] < 1:
            return vals, 1
        vals[i, 0] += prev
        prev = vals[i, 0]
    if pos != buf.size:
        return vals, 1
    return vals, 0


class ArchiveWriter:
    """Streams coded bins to <prefix>.cdna, then seals <prefix>.cmeta.

    Bins must arrive in strictly ascending code order; the directory
    row records every stream's coded and raw length so decoding can
    size each inverse transform.
    """

    def __init__(self, prefix: str | Path, sig_params: SignatureParams,
                 match_params: MatchParams):
        if not (0 <= match_params.mismatch_cost < 1 << 16
                and 0 <= match_params.insert_cost < 1 << 16):
            raise ValueError("costs exceed the header field width")
        self.data_path = Path(str(prefix) + ".cdna")
        self.meta_path = Path(str(prefix) + ".cmeta")
        self._sig = sig_params
        self._match = match_params
        self._rows: list[list[int]] = []
        self._fh = open(self.data_path, "wb")
        self._last_code = -1
        self.data_bytes = 0

    def add_bin(self, code: int, n_records: int, coded, raw_lens) -> None:
        if len(coded) != _N_STREAMS or len(raw_lens) != _N_STREAMS:
            raise ValueError("expected one entry per stream")
        if code <= self._last_code:
            raise ValueError("bins must arrive in ascending code order")
        if n_records < 1:
            raise ValueError("empty bins are not stored")
        self._last_code = code
        row = [code, n_records]
        for blob, raw_len in zip(coded, raw_lens):
            self._fh.write(blob)
            self.data_bytes += len(blob)
            row.append(len(blob))
            row.append(int(raw_len))
        self._rows.append(row)

    def close(self, total_reads: int, total_bases: int) -> dict:
        self._fh.close()
        if self._rows:
            vals = np.array(self._rows, dtype=np.int64)
            directory = _write_dir(vals).tobytes()
        else:
            directory = b""
        header = _HEADER.pack(
            ARCHIVE_MAGIC, ARCHIVE_VERSION, self._sig.length, LENGTH_WIDTH,
            self._sig.zone, self._match.mismatch_cost,
            self._match.insert_cost, self._match.window,
            self._match.max_dist, len(self._rows), total_reads,
            total_bases, len(directory))
        with open(self.meta_path, "wb") as fh:
            fh.write(header)
            fh.write(directory)
        return {"data_bytes": self.data_bytes,
                "meta_bytes": _HEADER.size + len(directory),
                "n_bins": len(self._rows)}

    def abort(self) -> None:
        self._fh.close()
        for path in (self.data_path, self.meta_path):
            if path.exists():
                path.unlink()


@dataclass(frozen=True)
class BinEntry:
    code: int
    n_records: int
    offset: int  # into .cdna
    coded_lens: tuple
    raw_lens: tuple


class ArchiveReader:
    """Directory-driven access to a packed archive."""

    def __init__(self, prefix: str | Path):
        self.data_path = Path(str(prefix) + ".cdna")
        self.meta_path = Path(str(prefix) + ".cmeta")
        try:
            blob = self.meta_path.read_bytes()
        except OSError as exc:
            raise CorruptArchiveError(f"cannot read {self.meta_path}: "
                                      f"{exc.strerror}") from exc
        if len(blob) < _HEADER.size:
            raise CorruptArchiveError(f"{self.meta_path}: header truncated")
        (magic, version, p, width, zone, c_m, c_i, window, max_dist,
         n_bins, total_reads, total_bases, dir_len) = \
            _HEADER.unpack_from(blob)
        if magic != ARCHIVE_MAGIC:
            raise CorruptArchiveError(f"{self.meta_path}: bad magic")
        if version != ARCHIVE_VERSION:
            raise CorruptArchiveError(
                f"{self.meta_path}: unsupported version {version}")
        if width != LENGTH_WIDTH:
            raise CorruptArchiveError(
                f"{self.meta_path}: unsupported length width {width}")
        if not 1 <= p <= 16:
            raise CorruptArchiveError(f"{self.meta_path}: bad parameters")
        if len(blob) - _HEADER.size != dir_len:
            raise CorruptArchiveError(f"{self.meta_path}: directory size "
                                      "disagrees with header")
        self.sig_params = SignatureParams(p, zone)
        self.match_params = MatchParams(c_m, c_i, max_dist, max(1, window))
        self.total_reads = total_reads
        self.total_bases = total_bases
        directory = np.frombuffer(blob, dtype=np.uint8,
                                  offset=_HEADER.size)
        vals, err = _parse_dir(directory, n_bins, _ROW_WIDTH)
        if err:
            raise CorruptArchiveError(f"{self.meta_path}: damaged directory")
        if vals.size and (int(vals[-1, 0]) > self.sig_params.n_bin
                          or int(vals[:, 1].min()) < 1
                          or int(vals[:, 2:].min()) < 0):
            raise CorruptArchiveError(f"{self.meta_path}: directory entries "
                                      "out of range")
        self._vals = vals
        coded = vals[:, 2::2].sum(axis=1) if vals.size else \
            np.zeros(0, np.int64)
        self._offsets = np.concatenate(([0], np.cumsum(coded)))
        try:
            actual = os.path.getsize(self.data_path)
        except OSError as exc:
            raise CorruptArchiveError(f"cannot read {self.data_path}: "
                                      f"{exc.strerror}") from exc
        if actual != int(self._offsets[-1]):
            raise CorruptArchiveError(
                f"{self.data_path}: payload size disagrees with directory")

    @property
    def n_bins(self) -> int:
        return self._vals.shape[0]

    def entry(self, index: int) -> BinEntry:
        row = self._vals[index]
        return BinEntry(int(row[0]), int(row[1]), int(self._offsets[index]),
                        tuple(int(v) for v in row[2::2]),
                        tuple(int(v) for v in row[3::2]))

    def entries(self):
        return [self.entry(i) for i in range(self.n_bins)]

    def read_coded(self, entry: BinEntry, fh) -> list[bytes]:
        """The bin's coded streams, in archive order."""
        raw = os.pread(fh.fileno(), sum(entry.coded_lens), entry.offset)
        if len(raw) != sum(entry.coded_lens):
            raise CorruptArchiveError(
                f"{self.data_path}: bin payload truncated")
        pieces = []
        at = 0
        for ln in entry.coded_lens:
            pieces.append(raw[at:at + ln])
            at += ln
        return pieces

    def decode_streams(self, entry: BinEntry, fh,
                       scratch: CmScratch | None = None) -> StreamSet:
        coded = self.read_coded(entry, fh)
        raw = [decode_stream(name, blob, raw_len, scratch)
               for name, blob, raw_len
               in zip(STREAM_NAMES, coded, entry.raw_lens)]
        return StreamSet.from_tuple(raw)


def bits_per_base(data_bytes: int, meta_bytes: int, total_bases: int) -> float:
    if total_bases <= 0:
        return 0.0
    return 8.0 * (data_bytes + meta_bytes) / total_bases
