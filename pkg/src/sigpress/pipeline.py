"""Stage drivers tying I/O, binning, coding and the archive together.

Each driver returns a summary dict (counts, byte sizes, elapsed time)
for the CLI to print. Work is fanned out over a thread pool but
results are always consumed in submission order, so output bytes are
identical for any worker count.
"""
from __future__ import annotations

import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .archive import (ArchiveReader, ArchiveWriter, bits_per_base,
                      encode_stream)
from .binning import (FLUSH_THRESHOLD_DEFAULT, BinCatalog, BinWriter,
                      _flip_reversed, dispatch_block, fetch_bin_arrays)
from .errors import CorruptArchiveError
from .fastq import BLOCK_BYTES_DEFAULT, open_input, write_dna_arrays
from .refcoder import (DEFAULT_PARAMS, FLAG_COUNT, STREAM_NAMES, MatchParams,
                       decode_bin_arrays, encode_bin_arrays, flag_counts,
                       sort_batch)
from .signature import SignatureParams, signature_of_bin

FLAG_LABELS = ("copy", "diss", "ex", "mis", "oth")


def _ordered_map(fn, iterable, threads: int):
    """Map with a worker pool, yielding strictly in input order."""
    if threads <= 1:
        for item in iterable:
            yield fn(item)
        return
    limit = 2 * threads + 2
    with ThreadPoolExecutor(max_workers=threads) as pool:
        pending = deque()
        for item in iterable:
            pending.append(pool.submit(fn, item))
            if len(pending) >= limit:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


def bin_paths(prefix: str | Path) -> tuple[Path, Path]:
    p = Path(prefix)
    return (p.with_name(p.name + ".bdna"), p.with_name(p.name + ".bmeta"))


def bin_encode(inputs, out_prefix, params: SignatureParams | None = None, *,
               gzipped: bool = False, block_bytes: int = BLOCK_BYTES_DEFAULT,
               flush_threshold: int = FLUSH_THRESHOLD_DEFAULT,
               threads: int = 1) -> dict:
    """Stage 1: FASTQ input to <prefix>.bdna + <prefix>.bmeta."""
    params = params if params is not None else SignatureParams()
    start = time.monotonic()
    writer = BinWriter(out_prefix, params, flush_threshold=flush_threshold)
    try:
        blocks = open_input(inputs, gzipped=gzipped, block_size=block_bytes)
        for batches in _ordered_map(
                lambda block: dispatch_block(block, params), blocks, threads):
            writer.add_block(batches)
        catalog = writer.close()
    except BaseException:
        writer.abort()
        raise
    return {"reads": catalog.total_reads, "bases": catalog.total_bases,
            "bins": len(catalog.chunks),
            "data_bytes": writer.data_path.stat().st_size,
            "meta_bytes": writer.catalog_path.stat().st_size,
            "elapsed": time.monotonic() - start}


def bin_decode(in_prefix, out_path, *, threads: int = 1) -> dict:
    """Inverse of bin_encode: reads restored to original orientation,
    grouped by bin, one per line."""
    start = time.monotonic()
    data_path, meta_path = bin_paths(in_prefix)
    catalog = BinCatalog.load(meta_path)
    reads = bases = 0

    def job(code):
        batch = fetch_bin_arrays(data_path, catalog, code)
        _flip_reversed(batch.codes, batch.offsets, batch.rev)
        return batch

    with open(out_path, "wb") as out:
        for batch in _ordered_map(job, catalog.bins(), threads):
            write_dna_arrays(out, batch.codes, batch.offsets)
            reads += batch.n
            bases += batch.symbols
    if reads != catalog.total_reads or bases != catalog.total_bases:
        raise CorruptArchiveError(f"{meta_path}: record totals disagree "
                                  "with catalog")
    return {"reads": reads, "bases": bases, "bins": len(catalog.chunks),
            "elapsed": time.monotonic() - start}


def pack_encode(in_prefix, out_prefix,
                match: MatchParams | None = None, *,
                threads: int = 1) -> dict:
    """Stage 2: bins to <prefix>.cdna + <prefix>.cmeta."""
    match = match if match is not None else DEFAULT_PARAMS
    start = time.monotonic()
    data_path, meta_path = bin_paths(in_prefix)
    catalog = BinCatalog.load(meta_path)
    sig_params = catalog.params
    writer = ArchiveWriter(out_prefix, sig_params, match)
    totals = np.zeros(FLAG_COUNT, np.int64)

    def job(code):
        batch = sort_batch(fetch_bin_arrays(data_path, catalog, code))
        sig = signature_of_bin(code, sig_params)
        streams = encode_bin_arrays(batch, len(sig), match)
        raw = streams.as_tuple()
        coded = tuple(encode_stream(name, blob)
                      for name, blob in zip(STREAM_NAMES, raw))
        return (code, batch.n, coded, tuple(len(b) for b in raw),
                flag_counts(streams.flags))

    try:
        for code, n, coded, raw_lens, counts in _ordered_map(
                job, catalog.bins(), threads):
            writer.add_bin(code, n, coded, raw_lens)
            totals += counts
        info = writer.close(catalog.total_reads, catalog.total_bases)
    except BaseException:
        writer.abort()
        raise
    return {"reads": catalog.total_reads, "bases": catalog.total_bases,
            "bins": info["n_bins"], "data_bytes": info["data_bytes"],
            "meta_bytes": info["meta_bytes"],
            "bpb": bits_per_base(info["data_bytes"], info["meta_bytes"],
                                 catalog.total_bases),
            "flags": dict(zip(FLAG_LABELS, (int(v) for v in totals))),
            "elapsed": time.monotonic() - start}


def pack_decode(in_prefix, out_path, *, threads: int = 1) -> dict:
    """Full inverse of pack_encode: reads one per line, bin-grouped."""
    start = time.monotonic()
    reader = ArchiveReader(in_prefix)
    sig_params = reader.sig_params
    match = reader.match_params
    reads = bases = 0
    with open(reader.data_path, "rb") as data_fh, \
            open(out_path, "wb") as out:

        def job(entry):
            streams = reader.decode_streams(entry, data_fh)
            sig = signature_of_bin(entry.code, sig_params)
            batch = decode_bin_arrays(streams, entry.n_records, sig, match)
            _flip_reversed(batch.codes, batch.offsets, batch.rev)
            return batch

        for batch in _ordered_map(job, reader.entries(), threads):
            write_dna_arrays(out, batch.codes, batch.offsets)
            reads += batch.n
            bases += batch.symbols
    if reads != reader.total_reads or bases != reader.total_bases:
        raise CorruptArchiveError(f"{reader.meta_path}: decoded totals "
                                  "disagree with header")
    return {"reads": reads, "bases": bases, "bins": reader.n_bins,
            "elapsed": time.monotonic() - start}
