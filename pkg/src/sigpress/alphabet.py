"""Shared symbol tables.

Reads travel through the hot paths as flat numpy uint8 code arrays
(A=0, C=1, G=2, T=3, N=4); strings only appear at the I/O boundary and
in the small reference implementations. Code order doubles as the
lexicographic symbol order used for signatures and in-bin sorting.
"""
from __future__ import annotations

import numpy as np

SYMBOLS = "ACGTN"
CODE_A, CODE_C, CODE_G, CODE_T, CODE_N = range(5)

BAD = 255

# input byte -> code, case folded; anything else is BAD
ENCODE_LUT = np.full(256, BAD, dtype=np.uint8)
for _i, _ch in enumerate(SYMBOLS):
    ENCODE_LUT[ord(_ch)] = _i
    ENCODE_LUT[ord(_ch.lower())] = _i

DECODE_LUT = np.frombuffer(SYMBOLS.encode("ascii"), dtype=np.uint8).copy()

# complement in code space; N stays N
COMPLEMENT = np.array([CODE_T, CODE_G, CODE_C, CODE_A, CODE_N], dtype=np.uint8)

_RC_TABLE = str.maketrans("ACGTNacgtn", "TGCANtgcan")


def encode_seq(seq: str) -> np.ndarray:
    """Map a read string to its uint8 code array.

    Raises:
        ValueError: if the string contains a symbol outside ACGTN
            (case insensitive).
    """
    raw = np.frombuffer(seq.encode("ascii"), dtype=np.uint8)
    codes = ENCODE_LUT[raw]
    if codes.size and codes.max() == BAD:
        bad = int(np.flatnonzero(codes == BAD)[0])
        raise ValueError(f"illegal symbol {seq[bad]!r} at position {bad}")
    return codes


def decode_seq(codes: np.ndarray) -> str:
    return DECODE_LUT[np.asarray(codes, dtype=np.uint8)].tobytes().decode("ascii")


def reverse_complement(seq: str) -> str:
    """Reverse complement of a read; N maps to itself."""
    return seq.translate(_RC_TABLE)[::-1]
