"""Canonical signature selection.

A read's signature is the lexicographically smallest allowed p-mer
(A < C < G < T) drawn from positions 0 .. r-z-p of the read and of its
reverse complement, where z is a skip zone at the end of the read that
signatures may never intrude into. A p-mer is allowed when it contains
no N and no run of three identical symbols. Reads that yield no allowed
p-mer fall into a dedicated overflow bin.

Ties prefer the forward orientation, then the leftmost position, which
makes the choice deterministic and keeps reads from opposite strands of
the same locus together.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .alphabet import decode_seq, encode_seq


@dataclass(frozen=True)
class SignatureParams:
    """Signature length p and end-of-read skip zone z."""

    length: int = 8
    zone: int = 12

    def __post_init__(self):
        if not 0 < self.length <= 16:
            raise ValueError("signature length must be in 1..16")
        if self.zone < 0:
            raise ValueError("skip zone must be >= 0")

    @property
    def n_bin(self) -> int:
        """Bin code reserved for reads without a signature."""
        return 4 ** self.length


@dataclass(frozen=True)
class SignatureHit:
    """A chosen signature: the p-mer, its start, and the orientation."""

    sig: str
    pos: int
    rev: bool


@njit(cache=True, nogil=True)
def _scan_reads(codes, offsets, p, zone):  # pragma: no cover - jit
    n = offsets.size - 1
    none_code = np.int64(1) << (2 * p)
    mask = none_code - 1
    out_sig = np.empty(n, np.int64)
    out_pos = np.zeros(n, np.int32)
    out_rev = np.zeros(n, np.uint8)
    for r in range(n):
        lo = offsets[r]
        length = np.int64(offsets[r + 1] - lo)
        best = none_code
        best_pos = np.int32(0)
        best_rev = np.uint8(0)
        if length >= p:
            zeff = zone if length - p >= zone else length - p
            scan_end = length - zeff  # symbols 0 .. scan_end-1 feed windows
            for orient in range(2):
                val = np.int64(0)
                last_n = np.int64(-1)
                last_triple = np.int64(-1)
                run = np.int64(0)
                prev = np.int64(-1)
                for i in range(scan_end):
                    if orient == 0:
                        c = np.int64(codes[lo + i])
                    else:
                        c0 = np.int64(codes[lo + length - 1 - i])
                        c = np.int64(4) if c0 == 4 else np.int64(3) - c0
                    if c == 4:
                        last_n = i
                        val = (val << 2) & mask
                    else:
                        val = ((val << 2) | c) & mask
                    if c == prev:
                        run += 1
                        if run >= 3:
                            last_triple = i
                    else:
                        run = 1
                        prev = c
                    s = i - p + 1
                    # window [s, s+p) is allowed when it holds no N and
                    # no triple ends inside it (at index >= s+2)
                    if s >= 0 and last_n < s and last_triple < s + 2:
                        if val < best:
                            best = val
                            best_pos = np.int32(s)
                            best_rev = np.uint8(orient)
        out_sig[r] = best
        out_pos[r] = best_pos
        out_rev[r] = best_rev
    return out_sig, out_pos, out_rev


def scan_block(codes: np.ndarray, offsets: np.ndarray, params: SignatureParams):
    """Signature-scan a flat block of reads.

    Returns:
        (bin_codes, positions, reversed) arrays; bin code 4**p marks
        reads without a signature.
    """
    return _scan_reads(codes, np.asarray(offsets, dtype=np.int64),
                       params.length, params.zone)


def is_allowed_signature(pmer: str) -> bool:
    """True when the p-mer contains no N and no run of three symbols."""
    if "N" in pmer:
        return False
    return not any(pmer[i] == pmer[i + 1] == pmer[i + 2]
                   for i in range(len(pmer) - 2))


def find_signature(seq: str, params: SignatureParams) -> SignatureHit | None:
    """Pick the read's canonical signature, or None if it has none.

    Reads shorter than p + z shrink the effective zone to len - p so any
    read of length >= p can still be binned.
    """
    codes = encode_seq(seq)
    offsets = np.array([0, codes.size], dtype=np.int64)
    sig, pos, rev = _scan_reads(codes, offsets, params.length, params.zone)
    code = int(sig[0])
    if code == params.n_bin:
        return None
    return SignatureHit(sig=signature_of_bin(code, params),
                        pos=int(pos[0]), rev=bool(rev[0]))


def bin_of(hit: SignatureHit | None, params: SignatureParams) -> int:
    """Bin code of a signature hit: its base-4 value, A=0 C=1 G=2 T=3.

    Reads without a signature share the single overflow code 4**p.
    """
    if hit is None:
        return params.n_bin
    return int(encode_seq(hit.sig) @ (4 ** np.arange(params.length - 1, -1, -1,
                                                     dtype=np.int64)))


def signature_of_bin(code: int, params: SignatureParams) -> str:
    """Inverse of bin_of; the overflow bin maps to an empty string."""
    if code == params.n_bin:
        return ""
    if not 0 <= code < params.n_bin:
        raise ValueError(f"bin code {code} out of range for p={params.length}")
    digits = np.empty(params.length, dtype=np.uint8)
    for i in range(params.length - 1, -1, -1):
        digits[i] = code & 3
        code >>= 2
    return decode_seq(digits)
