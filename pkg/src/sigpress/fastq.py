"""FASTQ input and plain DNA-line output.

Only the sequence line of each 4-line FASTQ record is kept; titles and
quality strings are discarded. Input is consumed as blocks of
consecutive reads bounded by a symbol-byte budget, so arbitrarily large
files (optionally gzipped, and more than one of them) stream through a
fixed memory footprint. A block can span file boundaries.

Args conventions: paths may be str or Path; `gzipped` forces gzip
decoding, otherwise a .gz suffix enables it per file.
"""
from __future__ import annotations

import gzip
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
from numba import njit

from .alphabet import BAD, DECODE_LUT, ENCODE_LUT
from .errors import FastqParseError

BLOCK_BYTES_DEFAULT = 256_000_000  # symbol bytes per block
MAX_READ_LEN = 65535
_IO_CHUNK = 32 << 20


@dataclass(frozen=True)
class ReadRecord:
    """One read: its sequence text and position in the input ordering."""

    seq: str
    orig_index: int


class InputBlock:
    """A slab of consecutive reads held as flat code arrays.

    codes holds every read back to back (uint8, A=0..N=4) and
    offsets[i]:offsets[i+1] delimits read i. start_index is the input
    ordinal of the first read.
    """

    def __init__(self, codes: np.ndarray, offsets: np.ndarray,
                 start_index: int = 0, ordinal: int = 0):
        self.codes = codes
        self.offsets = offsets
        self.start_index = start_index
        self.ordinal = ordinal

    @property
    def n(self) -> int:
        return self.offsets.size - 1

    @property
    def symbol_bytes(self) -> int:
        return int(self.offsets[-1])

    @property
    def reads(self) -> list[ReadRecord]:
        text = DECODE_LUT[self.codes].tobytes().decode("ascii")
        return [ReadRecord(text[self.offsets[i]:self.offsets[i + 1]],
                           self.start_index + i)
                for i in range(self.n)]


@njit(cache=True, nogil=True)
def _gather(raw, starts, lens, out):  # pragma: no cover - jit
    k = 0
    for i in range(starts.size):
        s = starts[i]
        for j in range(lens[i]):
            out[k] = raw[s + j]
            k += 1


@njit(cache=True, nogil=True)
def _fill_lines(codes, offsets, lut, out):  # pragma: no cover - jit
    k = 0
    for i in range(offsets.size - 1):
        for j in range(offsets[i], offsets[i + 1]):
            out[k] = lut[codes[j]]
            k += 1
        out[k] = 10
        k += 1


def parse_fastq_block(data: bytes, *, start_index: int = 0, ordinal: int = 0,
                      source: str = "<bytes>", first_line: int = 1) -> InputBlock:
    """Parse a buffer of complete FASTQ records into an InputBlock.

    The buffer must contain whole 4-line groups; a missing trailing
    newline is tolerated. `source` and `first_line` only shape error
    messages.

    Raises:
        FastqParseError: on a line count not divisible by four, a
            missing '+' separator, an illegal sequence symbol, or a
            sequence length outside 1..65535.
    """
    if data and not data.endswith(b"\n"):
        data = data + b"\n"
    raw = np.frombuffer(data, dtype=np.uint8)
    nl = np.flatnonzero(raw == 10)
    n_lines = int(nl.size)
    if n_lines % 4:
        raise FastqParseError(
            f"{source}: {n_lines} lines from line {first_line}; "
            f"FASTQ records need 4 lines each")
    starts = np.empty(n_lines, dtype=np.int64)
    if n_lines:
        starts[0] = 0
        starts[1:] = nl[:-1] + 1
    ends = nl.astype(np.int64)
    has_cr = ends > starts
    has_cr[has_cr] = raw[ends[has_cr] - 1] == 13
    ends = ends - has_cr

    plus = starts[2::4]
    plus_ok = (ends[2::4] > plus) & (raw[np.minimum(plus, raw.size - 1)] == ord("+")) \
        if n_lines else np.zeros(0, bool)
    if n_lines and not plus_ok.all():
        k = int(np.flatnonzero(~plus_ok)[0])
        raise FastqParseError(
            f"{source}:{first_line + 4 * k + 2}: expected '+' separator line")

    seq_starts = starts[1::4]
    lens = ends[1::4] - seq_starts
    n = lens.size
    bad_len = (lens < 1) | (lens > MAX_READ_LEN)
    if bad_len.any():
        k = int(np.flatnonzero(bad_len)[0])
        raise FastqParseError(
            f"{source}:{first_line + 4 * k + 1}: sequence length {int(lens[k])} "
            f"outside 1..{MAX_READ_LEN}")

    total = int(lens.sum())
    flat = np.empty(total, dtype=np.uint8)
    _gather(raw, seq_starts, lens, flat)
    codes = ENCODE_LUT[flat]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lens, out=offsets[1:])
    if codes.size and codes.max() == BAD:
        at = int(np.flatnonzero(codes == BAD)[0])
        k = int(np.searchsorted(offsets, at, side="right") - 1)
        raise FastqParseError(
            f"{source}:{first_line + 4 * k + 1}: illegal symbol "
            f"{chr(flat[at])!r} in sequence")
    return InputBlock(codes, offsets, start_index, ordinal)


def _file_pieces(path: Path, gzipped: bool) -> Iterator[tuple[bytes, int]]:
    """Yield (complete-record byte span, first line number) per file."""
    open_fn = gzip.open if gzipped or path.name.endswith(".gz") else open
    with open_fn(path, "rb") as fh:
        carry = b""
        line_base = 1
        while True:
            chunk = fh.read(_IO_CHUNK)
            if not chunk:
                break
            data = carry + chunk
            n_nl = data.count(b"\n")
            keep = n_nl - n_nl % 4
            if keep == 0:
                carry = data
                continue
            arr = np.frombuffer(data, dtype=np.uint8)
            cut = int(np.flatnonzero(arr == 10)[keep - 1]) + 1
            yield data[:cut], line_base
            carry = data[cut:]
            line_base += keep
        if carry:
            yield carry, line_base


def open_input(paths: Sequence[str | Path], *, gzipped: bool = False,
               block_size: int = BLOCK_BYTES_DEFAULT) -> Iterator[InputBlock]:
    """Stream FASTQ files as InputBlocks of at most block_size symbol bytes.

    Files are concatenated into one read stream, so a block may span
    file boundaries. Every block except possibly the last is filled to
    the budget; a single read never splits (block_size below the longest
    read would yield one-read blocks).
    """
    if block_size < MAX_READ_LEN + 1:
        raise ValueError("block size must exceed the longest possible read")
    pend_codes: list[np.ndarray] = []
    pend_offsets: list[np.ndarray] = []
    pend_symbols = 0
    pend_reads = 0
    start_index = 0
    ordinal = 0

    def _emit() -> InputBlock:
        nonlocal pend_codes, pend_offsets, pend_symbols, pend_reads
        nonlocal start_index, ordinal
        codes = np.concatenate(pend_codes) if pend_codes else \
            np.zeros(0, np.uint8)
        offsets = np.zeros(pend_reads + 1, dtype=np.int64)
        at = 0
        base = 0
        for off in pend_offsets:
            k = off.size - 1
            offsets[at + 1:at + k + 1] = off[1:] + base
            base += off[-1]
            at += k
        block = InputBlock(codes, offsets, start_index, ordinal)
        start_index += pend_reads
        ordinal += 1
        pend_codes, pend_offsets = [], []
        pend_symbols = pend_reads = 0
        return block

    for path in paths:
        for data, line_base in _file_pieces(Path(path), gzipped):
            piece = parse_fastq_block(data, source=str(path),
                                      first_line=line_base)
            taken = 0
            while taken < piece.n:
                room = block_size - pend_symbols
                cum = piece.offsets[taken + 1:] - piece.offsets[taken]
                fit = int(np.searchsorted(cum, room, side="right"))
                if fit == 0:
                    if pend_reads:
                        yield _emit()
                        continue
                    fit = 1  # oversized single read gets its own block
                lo, hi = piece.offsets[taken], piece.offsets[taken + fit]
                pend_codes.append(piece.codes[lo:hi])
                pend_offsets.append(piece.offsets[taken:taken + fit + 1] - lo)
                pend_symbols += int(hi - lo)
                pend_reads += fit
                taken += fit
                if pend_symbols >= block_size:
                    yield _emit()
    if pend_reads:
        yield _emit()


def write_dna_file(path: str | Path, seqs: Iterable[str]) -> int:
    """Write reads one per line; returns the number of lines written."""
    n = 0
    with open(path, "w") as fh:
        for seq in seqs:
            fh.write(seq)
            fh.write("\n")
            n += 1
    return n


def write_dna_arrays(fh, codes: np.ndarray, offsets: np.ndarray) -> None:
    """Append one line per read to a binary file object."""
    n = offsets.size - 1
    out = np.empty(int(offsets[-1]) + n, dtype=np.uint8)
    _fill_lines(codes, np.asarray(offsets, dtype=np.int64), DECODE_LUT, out)
    fh.write(out.tobytes())
