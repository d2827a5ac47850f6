"""Synthetic read simulator.

Reads are sampled uniformly over every reference window that is free
of N, alternating orientation: even output indices keep the forward
strand, odd ones are reverse-complemented. Substitution errors flip a
base to one of the three other bases uniformly; N is never touched.
All randomness flows from numpy Generators seeded explicitly, so a
given (reference, count, read_len, error_rate, seed) tuple always
produces the identical FASTQ file.
"""
from __future__ import annotations

import numpy as np

from .alphabet import CODE_N, COMPLEMENT, DECODE_LUT, encode_seq

# Reads are produced in fixed-size batches so the RNG draw layout (and
# therefore the output) does not depend on memory-sizing choices.
_BATCH_READS = 1 << 16

_QUAL = ord("I")


def random_reference(length: int, seed) -> str:
    """Uniform ACGT reference of the given length."""
    if length <= 0:
        raise ValueError("reference length must be positive")
    rng = np.random.default_rng(seed)
    codes = rng.integers(0, 4, size=length, dtype=np.uint8)
    return DECODE_LUT[codes].tobytes().decode("ascii")


def load_reference(path) -> str:
    """Read a reference sequence from FASTA or raw text.

    FASTA contigs are joined with a single N so no sampled window can
    straddle two of them.
    """
    contigs, current = [], []
    with open(path, "rb") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith(b">"):
                if current:
                    contigs.append(b"".join(current))
                    current = []
                continue
            current.append(line)
    if current:
        contigs.append(b"".join(current))
    if not contigs:
        raise ValueError(f"{path}: no sequence data")
    seq = b"N".join(contigs).decode("ascii")
    encode_seq(seq)  # reject anything outside ACGTN early
    return seq


def _valid_starts(codes: np.ndarray, read_len: int) -> np.ndarray:
    """Start offsets of every window of read_len with no N."""
    if read_len > codes.size:
        raise ValueError("reads longer than the reference")
    ncum = np.zeros(codes.size + 1, dtype=np.int64)
    np.cumsum(codes == CODE_N, out=ncum[1:])
    n_in_window = ncum[read_len:] - ncum[:codes.size - read_len + 1]
    starts = np.flatnonzero(n_in_window == 0)
    if starts.size == 0:
        raise ValueError("reference has no N-free window of read length")
    return starts


def _sample_batch(codes, starts, read_len, first_index, count, rng):
    """count reads as a (count, read_len) code matrix."""
    picks = starts[rng.integers(0, starts.size, size=count)]
    rows = codes[picks[:, None] + np.arange(read_len)[None, :]]
    odd = (first_index + np.arange(count)) % 2 == 1
    rows[odd] = COMPLEMENT[rows[odd][:, ::-1]]
    return rows


def _corrupt(rows: np.ndarray, error_rate: float, rng) -> np.ndarray:
    """Apply substitution errors in place; N positions stay N."""
    if error_rate <= 0.0:
        return rows
    flat = rows.reshape(-1)
    hit = rng.random(flat.size) < error_rate
    hit &= flat != CODE_N
    idx = np.flatnonzero(hit)
    if idx.size:
        step = rng.integers(1, 4, size=idx.size, dtype=np.uint8)
        flat[idx] = (flat[idx] + step) % 4
    return rows


def generate_reads(reference: str, count: int, read_len: int,
                   seed) -> list:
    """Sample count error-free reads of read_len from the reference."""
    if count <= 0 or read_len <= 0:
        raise ValueError("read count and length must be positive")
    codes = encode_seq(reference)
    starts = _valid_starts(codes, read_len)
    rng = np.random.default_rng(seed)
    out = []
    for base in range(0, count, _BATCH_READS):
        k = min(_BATCH_READS, count - base)
        rows = _sample_batch(codes, starts, read_len, base, k, rng)
        text = DECODE_LUT[rows]
        out.extend(text[i].tobytes().decode("ascii") for i in range(k))
    return out


def inject_errors(reads, error_rate: float, seed) -> list:
    """Substitute bases independently with the given probability."""
    if not 0.0 <= error_rate <= 1.0:
        raise ValueError("error rate must be within [0, 1]")
    rng = np.random.default_rng(seed)
    out = []
    for base in range(0, len(reads), _BATCH_READS):
        chunk = reads[base:base + _BATCH_READS]
        lens = [len(r) for r in chunk]
        flat = encode_seq("".join(chunk))
        _corrupt(flat.reshape(1, -1), error_rate, rng)
        text = DECODE_LUT[flat].tobytes().decode("ascii")
        pos = 0
        for n in lens:
            out.append(text[pos:pos + n])
            pos += n
    return out


def _fastq_block(rows: np.ndarray, first_index: int) -> bytes:
    text = DECODE_LUT[rows]
    qual = b"I" * rows.shape[1]
    parts = []
    for i in range(rows.shape[0]):
        parts.append(b"@sim_%d\n" % (first_index + i))
        parts.append(text[i].tobytes())
        parts.append(b"\n+\n")
        parts.append(qual)
        parts.append(b"\n")
    return b"".join(parts)


def emit_fastq(reads, path) -> int:
    """Write reads as FASTQ with synthetic titles and flat qualities."""
    n = 0
    with open(path, "wb") as fh:
        for i, read in enumerate(reads):
            fh.write(b"@sim_%d\n%s\n+\n%s\n"
                     % (i, read.encode("ascii"), b"I" * len(read)))
            n += 1
    return n


def simulate_fastq(reference: str, count: int, read_len: int,
                   error_rate: float, seed, path) -> dict:
    """Sample, corrupt and write reads in one streaming pass.

    Output is identical to emit_fastq(inject_errors(generate_reads(
    reference, count, read_len, s1), error_rate, s2), path) with
    (s1, s2) spawned from seed, without holding the reads in memory.
    """
    if count <= 0 or read_len <= 0:
        raise ValueError("read count and length must be positive")
    if not 0.0 <= error_rate <= 1.0:
        raise ValueError("error rate must be within [0, 1]")
    codes = encode_seq(reference)
    starts = _valid_starts(codes, read_len)
    gen_seed, err_seed = np.random.SeedSequence(seed).spawn(2)
    gen_rng = np.random.default_rng(gen_seed)
    err_rng = np.random.default_rng(err_seed)
    with open(path, "wb") as fh:
        for base in range(0, count, _BATCH_READS):
            k = min(_BATCH_READS, count - base)
            rows = _sample_batch(codes, starts, read_len, base, k, gen_rng)
            _corrupt(rows, error_rate, err_rng)
            fh.write(_fastq_block(rows, base))
    return {"reads": count, "bases": count * read_len,
            "read_len": read_len, "error_rate": error_rate,
            "coverage": count * read_len / len(reference)}
