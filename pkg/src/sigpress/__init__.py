"""sigpress: reference-free compressor for DNA sequencing reads.

Reads are grouped on disk by a canonical minimizer signature, each
group is reordered so overlapping reads sit next to each other, and
every read is coded against a recent neighbour. The resulting streams
go through order-4 adaptive entropy coders. See FORMAT.md for the
exact bit layout and README.md for the pipeline walkthrough.
"""
from .alphabet import decode_seq, encode_seq, reverse_complement
from .binning import BinCatalog, BinWriter, fetch_bin_arrays
from .bounds import (BoundSpec, clean_lower_bound, log2_binomial_bits,
                     noisy_lower_bound)
from .contextmodel import cm_decode, cm_encode
from .errors import CorruptArchiveError, FastqParseError, SigpressError
from .pipeline import bin_decode, bin_encode, pack_decode, pack_encode
from .rangecoder import rc_decode, rc_encode
from .refcoder import (DEFAULT_PARAMS, MatchParams, StreamSet, decode_bin,
                       encode_bin)
from .signature import SignatureParams, bin_of, find_signature
from .simulate import emit_fastq, generate_reads, inject_errors

__version__ = "0.1.0"

__all__ = [
    "BinCatalog", "BinWriter", "BoundSpec", "CorruptArchiveError",
    "DEFAULT_PARAMS", "FastqParseError", "MatchParams", "SigpressError",
    "SignatureParams", "StreamSet", "bin_decode", "bin_encode", "bin_of",
    "clean_lower_bound", "cm_decode", "cm_encode", "decode_bin",
    "decode_seq", "emit_fastq", "encode_bin", "encode_seq",
    "fetch_bin_arrays", "find_signature", "generate_reads",
    "inject_errors", "log2_binomial_bits", "noisy_lower_bound",
    "pack_decode", "pack_encode", "rc_decode", "rc_encode",
    "reverse_complement",
]
