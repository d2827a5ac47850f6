"""Per-bin reordering and referential encoding.

Records of one bin are sorted by the rotated-read key, then each read
is coded against the best of the previous `window` reads: the read
whose signature-anchored ungapped alignment minimizes

    distance = mismatch_cost * mismatches + insert_cost * overhang

where the overhang is every current-read symbol outside the overlap.
The result is the stream set described in the format doc: per-read
flag, length and orientation bit always; reference id and shift for
matched reads; mismatch letters split by the reference symbol; a
run-length descriptor of mismatch positions for the general case; and
unmatched reads stored verbatim with the signature dotted out.

Readable reference implementations (sort_bin, align_and_score,
best_reference, encode_matches_rle) define the semantics; the batch
entry points run the same logic as compiled kernels over flat arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .alphabet import CODE_N, DECODE_LUT, ENCODE_LUT, encode_seq
from .binning import BinBatch, BinRecord, _permute_reads
from .errors import CorruptArchiveError

FLAG_COPY = 0
FLAG_DISS = 1
FLAG_EX = 2
FLAG_MIS = 3
FLAG_OTH = 4
FLAG_COUNT = 5

WINDOW_DEFAULT = 512
DOT = ord(".")

STREAM_NAMES = ("flags", "lengths", "rev", "prev", "shift", "matches",
                "letters_a", "letters_c", "letters_g", "letters_t",
                "letters_n", "hreads")


@dataclass(frozen=True)
class MatchParams:
    """Reference-search knobs.

    max_dist 0 means automatic: half of each read's length.
    """

    mismatch_cost: int = 2
    insert_cost: int = 1
    max_dist: int = 0
    window: int = WINDOW_DEFAULT

    def __post_init__(self):
        if self.mismatch_cost < 0 or self.insert_cost < 0:
            raise ValueError("costs must be nonnegative")
        if self.max_dist < 0:
            raise ValueError("max_dist must be nonnegative")
        if self.window < 1:
            raise ValueError("window must hold at least one read")


DEFAULT_PARAMS = MatchParams()


@dataclass(frozen=True)
class MatchResult:
    flag: int
    prev_id: int | None = None  # back-distance, 1 = previous read
    shift: int | None = None
    mismatch_positions: tuple = ()
    distance: int | None = None


@dataclass
class StreamSet:
    """The twelve raw per-bin streams, in archive order."""

    flags: bytes = b""
    lengths: bytes = b""
    rev: bytes = b""
    prev: bytes = b""
    shift: bytes = b""
    matches: bytes = b""
    letters_a: bytes = b""
    letters_c: bytes = b""
    letters_g: bytes = b""
    letters_t: bytes = b""
    letters_n: bytes = b""
    hreads: bytes = b""

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name in STREAM_NAMES)

    @classmethod
    def from_tuple(cls, streams) -> "StreamSet":
        return cls(**dict(zip(STREAM_NAMES, streams)))


# ---------------------------------------------------------------------------
# reference implementations

_KEY_ORDER = str.maketrans("ACGTN", "\x00\x01\x02\x03\x04")


def rotate_key(seq: str, pos: int) -> str:
    """Sort key: the read rotated so the signature leads."""
    return seq[pos:] + seq[:pos]


def sort_bin(records) -> list:
    """Stable ascending order by rotated key in code order (N last),
    ties by original index."""
    def key(item):
        i, r = item
        tie = r.orig_index if r.orig_index >= 0 else i
        return rotate_key(r.seq, r.pos).translate(_KEY_ORDER), tie
    return [r for _, r in sorted(enumerate(records), key=key)]


def align_and_score(cur: BinRecord, ref: BinRecord,
                    params: MatchParams = DEFAULT_PARAMS):
    """(distance, shift, mismatch positions) of cur against ref.

    Shift is ref.pos - cur.pos: current position t aligns with
    reference position t + shift. Overhang symbols (head or tail of
    cur outside the reference) each cost insert_cost.
    """
    shift = ref.pos - cur.pos
    lc, lr = len(cur.seq), len(ref.seq)
    head = max(0, -shift)
    ov_end = min(lc, lr - shift)
    mism = [t for t in range(head, ov_end) if cur.seq[t] != ref.seq[t + shift]]
    overlap = max(0, ov_end - head)
    dist = params.mismatch_cost * len(mism) \
        + params.insert_cost * (lc - overlap)
    return dist, shift, mism


def best_reference(cur: BinRecord, window,
                   params: MatchParams = DEFAULT_PARAMS) -> MatchResult:
    """Classify cur against the window (most recent last).

    A read identical to the immediately previous one is a copy before
    any search. Otherwise the minimal-distance window entry within
    max_dist becomes the reference; distance ties prefer the most
    recent entry.
    """
    if window and cur.seq == window[-1].seq:
        return MatchResult(FLAG_COPY)
    limit = params.max_dist if params.max_dist > 0 else len(cur.seq) // 2
    best = None
    depth = min(len(window), params.window)
    for back in range(1, depth + 1):
        ref = window[-back]
        dist, shift, mism = align_and_score(cur, ref, params)
        if dist > limit:
            continue
        if best is None or dist < best[0]:
            best = (dist, back, shift, mism, len(ref.seq))
    if best is None:
        return MatchResult(FLAG_DISS)
    dist, back, shift, mism, lr = best
    if not mism:
        flag = FLAG_EX
    elif len(mism) == 1 and mism[0] == lr - 1 - shift:
        flag = FLAG_MIS
    else:
        flag = FLAG_OTH
    return MatchResult(flag, back, shift, tuple(mism), dist)


def encode_matches_rle(mismatch_positions, overlap_len: int,
                       sig_span=(0, 0)) -> bytes:
    """Run lengths of matching positions, one byte each.

    Positions are relative to the overlap start. The signature span
    (start, stop), known identical by construction, is excluded from
    run counting. A byte below 255 with coded positions still left
    implies one mismatch; 255 continues a long run. The trailing run
    is emitted only if nonzero.
    """
    s0, s1 = sig_span
    mmset = set(mismatch_positions)
    for t in mmset:
        if not 0 <= t < overlap_len or s0 <= t < s1:
            raise ValueError("mismatch position outside coded range")
    out = bytearray()
    run = 0
    for t in range(overlap_len):
        if s0 <= t < s1:
            continue
        if t in mmset:
            while run >= 255:
                out.append(255)
                run -= 255
            out.append(run)
            run = 0
        else:
            run += 1
    while run >= 255:
        out.append(255)
        run -= 255
    if run > 0:
        out.append(run)
    return bytes(out)


def decode_matches_rle(data: bytes, overlap_len: int, sig_span=(0, 0),
                       start: int = 0):
    """Inverse of encode_matches_rle: (positions, bytes consumed)."""
    s0, s1 = sig_span
    coded_total = overlap_len - max(0, min(s1, overlap_len) - max(s0, 0))
    positions = []
    consumed = 0
    t = 0
    at = start

    def skip(t):
        return s1 if s0 <= t < s1 else t

    while consumed < coded_total:
        if at >= len(data):
            raise CorruptArchiveError("match descriptor ends prematurely")
        v = data[at]
        at += 1
        take = v
        if consumed + take > coded_total:
            raise CorruptArchiveError("match run exceeds overlap")
        for _ in range(take):
            t = skip(t) + 1
        consumed += take
        if v != 255 and consumed < coded_total:
            t = skip(t)
            positions.append(t)
            t += 1
            consumed += 1
    return positions, at - start


# ---------------------------------------------------------------------------
# batch kernels

@njit(cache=True, nogil=True, inline="always")
def _keys_ordered(codes, offsets, pos, a, b):  # pragma: no cover - jit
    """True if rotated key of a <= key of b (ties keep input order)."""
    oa = offsets[a]
    la = offsets[a + 1] - oa
    pa = np.int64(pos[a])
    ob = offsets[b]
    lb = offsets[b + 1] - ob
    pb = np.int64(pos[b])
    m = la if la < lb else lb
    for k in range(m):
        ia = pa + k
        if ia >= la:
            ia -= la
        ib = pb + k
        if ib >= lb:
            ib -= lb
        ca = codes[oa + ia]
        cb = codes[ob + ib]
        if ca != cb:
            return ca < cb
    return la <= lb


@njit(cache=True, nogil=True)
def _sort_indices(codes, offsets, pos):  # pragma: no cover - jit
    """Stable bottom-up merge sort of record indices by rotated key."""
    n = offsets.size - 1
    idx = np.arange(n, dtype=np.int64)
    tmp = np.empty(n, np.int64)
    width = 1
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width
            hi = lo + 2 * width
            if mid > n:
                mid = n
            if hi > n:
                hi = n
            if mid < hi:
                i = lo
                j = mid
                k = lo
                while i < mid and j < hi:
                    if _keys_ordered(codes, offsets, pos, idx[i], idx[j]):
                        tmp[k] = idx[i]
                        i += 1
                    else:
                        tmp[k] = idx[j]
                        j += 1
                    k += 1
                while i < mid:
                    tmp[k] = idx[i]
                    i += 1
                    k += 1
                while j < hi:
                    tmp[k] = idx[j]
                    j += 1
                    k += 1
                for q in range(lo, hi):
                    idx[q] = tmp[q]
            lo += 2 * width
        width *= 2
    return idx


@njit(cache=True, nogil=True)
def _encode_bin(codes, offsets, pos, sig_len, c_m, c_i, max_dist, window,
                flags_out, lengths_out, prev_out, shift_out, matches_out,
                la_out, lc_out, lg_out, lt_out, ln_out, hr_out,
                ascii_lut):  # pragma: no cover - jit
    n = offsets.size - 1
    p_prev = p_shift = p_matches = 0
    p_la = p_lc = p_lg = p_lt = p_ln = p_hr = 0
    for j in range(n):
        off = offsets[j]
        L = offsets[j + 1] - off
        pj = np.int64(pos[j])
        lengths_out[2 * j] = L & 0xFF
        lengths_out[2 * j + 1] = (L >> 8) & 0xFF
        if j > 0:
            po = offsets[j - 1]
            if off - po == L:
                same = True
                for k in range(L):
                    if codes[off + k] != codes[po + k]:
                        same = False
                        break
                if same:
                    flags_out[j] = FLAG_COPY
                    continue
        lim = max_dist if max_dist > 0 else L // 2
        best_d = lim + 1
        best_back = -1
        best_shift = np.int64(0)
        best_mm = 0
        wmax = window if window < j else j
        for back in range(1, wmax + 1):
            r = j - back
            roff = offsets[r]
            lr = offsets[r + 1] - roff
            sh = np.int64(pos[r]) - pj
            head = -sh if sh < 0 else np.int64(0)
            ov_end = L if L < lr - sh else lr - sh
            ov = ov_end - head
            if ov < 0:
                ov = 0
            d = c_i * (L - ov)
            if d >= best_d:
                continue
            mm = 0
            for t in range(head, ov_end):
                if codes[off + t] != codes[roff + t + sh]:
                    mm += 1
                    d += c_m
                    if d >= best_d:
                        break
            if d < best_d:
                best_d = d
                best_back = back
                best_shift = sh
                best_mm = mm
        if best_back < 0:
            flags_out[j] = FLAG_DISS
            for t in range(L):
                if sig_len > 0 and pj <= t < pj + sig_len:
                    hr_out[p_hr] = DOT
                else:
                    hr_out[p_hr] = ascii_lut[codes[off + t]]
                p_hr += 1
            continue
        r = j - best_back
        roff = offsets[r]
        lr = offsets[r + 1] - roff
        sh = best_shift
        head = -sh if sh < 0 else np.int64(0)
        ov_end = L if L < lr - sh else lr - sh
        if best_mm == 0:
            fl = FLAG_EX
        elif best_mm == 1:
            tmm = np.int64(-1)
            for t in range(head, ov_end):
                if codes[off + t] != codes[roff + t + sh]:
                    tmm = t
                    break
            fl = FLAG_MIS if tmm == lr - 1 - sh else FLAG_OTH
        else:
            fl = FLAG_OTH
        flags_out[j] = fl
        v = best_back
        while v >= 0x80:
            prev_out[p_prev] = (v & 0x7F) | 0x80
            p_prev += 1
            v >>= 7
        prev_out[p_prev] = v
        p_prev += 1
        zz = (sh << 1) ^ (sh >> 63)
        while zz >= 0x80:
            shift_out[p_shift] = (zz & 0x7F) | 0x80
            p_shift += 1
            zz >>= 7
        shift_out[p_shift] = zz
        p_shift += 1
        for t in range(head):
            ln_out[p_ln] = ascii_lut[codes[off + t]]
            p_ln += 1
        run = 0
        s0 = pj
        s1 = pj + sig_len
        for t in range(head, ov_end):
            in_sig = sig_len > 0 and s0 <= t < s1
            cc = codes[off + t]
            rc = codes[roff + t + sh]
            if cc == rc:
                if fl == FLAG_OTH and not in_sig:
                    run += 1
                continue
            if fl == FLAG_OTH:
                while run >= 255:
                    matches_out[p_matches] = 255
                    p_matches += 1
                    run -= 255
                matches_out[p_matches] = run
                p_matches += 1
                run = 0
            if rc == CODE_N:
                ln_out[p_ln] = ascii_lut[cc]
                p_ln += 1
            else:
                idx = cc if cc < rc else cc - 1
                if rc == 0:
                    la_out[p_la] = idx
                    p_la += 1
                elif rc == 1:
                    lc_out[p_lc] = idx
                    p_lc += 1
                elif rc == 2:
                    lg_out[p_lg] = idx
                    p_lg += 1
                else:
                    lt_out[p_lt] = idx
                    p_lt += 1
        if fl == FLAG_OTH:
            while run >= 255:
                matches_out[p_matches] = 255
                p_matches += 1
                run -= 255
            if run > 0:
                matches_out[p_matches] = run
                p_matches += 1
        for t in range(ov_end, L):
            ln_out[p_ln] = ascii_lut[codes[off + t]]
            p_ln += 1
    return p_prev, p_shift, p_matches, p_la, p_lc, p_lg, p_lt, p_ln, p_hr


@njit(cache=True, nogil=True)
def _decode_bin(flags, lengths, prevb, shiftb, matchesb,
                la, lc, lg, lt, ln, hr, sig_codes, window, total_symbols,
                enc_lut):  # pragma: no cover - jit
    """Inverse of _encode_bin. Returns (codes, offsets, pos, err) plus
    per-stream consumption; err 0 ok, 1 structure, 2 underrun, 3 bad
    symbol, 4 alignment, 5 descriptor."""
    n = flags.size
    sig_len = sig_codes.size
    codes = np.empty(total_symbols, np.uint8)
    offsets = np.empty(n + 1, np.int64)
    offsets[0] = 0
    pos = np.zeros(n, np.int32)
    p_prev = p_shift = p_matches = 0
    p_la = p_lc = p_lg = p_lt = p_ln = p_hr = 0
    used = np.zeros(9, np.int64)
    for j in range(n):
        L = np.int64(lengths[2 * j]) | (np.int64(lengths[2 * j + 1]) << 8)
        off = offsets[j]
        if L < 1 or off + L > total_symbols:
            return codes, offsets, pos, used, 1
        offsets[j + 1] = off + L
        fl = flags[j]
        if fl == FLAG_COPY:
            if j == 0 or offsets[j] - offsets[j - 1] != L:
                return codes, offsets, pos, used, 1
            po = offsets[j - 1]
            for k in range(L):
                codes[off + k] = codes[po + k]
            pos[j] = pos[j - 1]
        elif fl == FLAG_DISS:
            if p_hr + L > hr.size:
                return codes, offsets, pos, used, 2
            d0 = np.int64(-1)
            for t in range(L):
                if hr[p_hr + t] == DOT:
                    d0 = t
                    break
            if sig_len == 0:
                if d0 >= 0:
                    return codes, offsets, pos, used, 3
            else:
                if d0 < 0 or d0 + sig_len > L:
                    return codes, offsets, pos, used, 3
            for t in range(L):
                b = hr[p_hr + t]
                in_sig = sig_len > 0 and d0 <= t < d0 + sig_len
                if in_sig:
                    if b != DOT:
                        return codes, offsets, pos, used, 3
                    codes[off + t] = sig_codes[t - d0]
                else:
                    c = enc_lut[b]
                    if c > CODE_N:
                        return codes, offsets, pos, used, 3
                    codes[off + t] = c
            p_hr += L
            pos[j] = d0 if d0 >= 0 else 0
        elif fl == FLAG_EX or fl == FLAG_MIS or fl == FLAG_OTH:
            back = np.int64(0)
            sha = 0
            while True:
                if p_prev >= prevb.size:
                    return codes, offsets, pos, used, 2
                byte = prevb[p_prev]
                p_prev += 1
                back |= np.int64(byte & 0x7F) << sha
                sha += 7
                if byte < 0x80:
                    break
                if sha > 63:
                    return codes, offsets, pos, used, 1
            if back < 1 or back > j or back > window:
                return codes, offsets, pos, used, 1
            zz = np.int64(0)
            sha = 0
            while True:
                if p_shift >= shiftb.size:
                    return codes, offsets, pos, used, 2
                byte = shiftb[p_shift]
                p_shift += 1
                zz |= np.int64(byte & 0x7F) << sha
                sha += 7
                if byte < 0x80:
                    break
                if sha > 63:
                    return codes, offsets, pos, used, 1
            sh = (zz >> 1) ^ (-(zz & 1))
            r = j - back
            roff = offsets[r]
            lr = offsets[r + 1] - roff
            pj = np.int64(pos[r]) - sh
            if sig_len > 0:
                if pj < 0 or pj + sig_len > L:
                    return codes, offsets, pos, used, 4
            elif pj != 0:
                return codes, offsets, pos, used, 4
            head = -sh if sh < 0 else np.int64(0)
            ov_end = L if L < lr - sh else lr - sh
            if ov_end <= head:
                return codes, offsets, pos, used, 4
            pos[j] = pj
            for t in range(head, ov_end):
                codes[off + t] = codes[roff + t + sh]
            for t in range(head):
                if p_ln >= ln.size:
                    return codes, offsets, pos, used, 2
                c = enc_lut[ln[p_ln]]
                p_ln += 1
                if c > CODE_N:
                    return codes, offsets, pos, used, 3
                codes[off + t] = c
            if fl == FLAG_MIS or fl == FLAG_OTH:
                s0 = pj
                s1 = pj + sig_len
                # collect mismatch targets in scan order
                if fl == FLAG_MIS:
                    tmm = lr - 1 - sh
                    if tmm < head or tmm >= ov_end:
                        return codes, offsets, pos, used, 4
                    rc = codes[roff + tmm + sh]
                    ok, p_la, p_lc, p_lg, p_lt, p_ln = _pull_letter(
                        codes, off, tmm, rc, la, lc, lg, lt, ln,
                        p_la, p_lc, p_lg, p_lt, p_ln, enc_lut)
                    if ok != 0:
                        return codes, offsets, pos, used, ok
                else:
                    is0 = s0 if s0 > head else head
                    is1 = s1 if s1 < ov_end else ov_end
                    inter = is1 - is0
                    if inter < 0:
                        inter = 0
                    coded_total = (ov_end - head) - inter
                    consumed = np.int64(0)
                    t = head
                    while consumed < coded_total:
                        if p_matches >= matchesb.size:
                            return codes, offsets, pos, used, 2
                        v = np.int64(matchesb[p_matches])
                        p_matches += 1
                        if consumed + v > coded_total:
                            return codes, offsets, pos, used, 5
                        for _ in range(v):
                            if sig_len > 0 and s0 <= t < s1:
                                t = s1
                            t += 1
                        consumed += v
                        if v != 255 and consumed < coded_total:
                            if sig_len > 0 and s0 <= t < s1:
                                t = s1
                            rc = codes[roff + t + sh]
                            ok, p_la, p_lc, p_lg, p_lt, p_ln = _pull_letter(
                                codes, off, t, rc, la, lc, lg, lt, ln,
                                p_la, p_lc, p_lg, p_lt, p_ln, enc_lut)
                            if ok != 0:
                                return codes, offsets, pos, used, ok
                            t += 1
                            consumed += 1
            for t in range(ov_end, L):
                if p_ln >= ln.size:
                    return codes, offsets, pos, used, 2
                c = enc_lut[ln[p_ln]]
                p_ln += 1
                if c > CODE_N:
                    return codes, offsets, pos, used, 3
                codes[off + t] = c
        else:
            return codes, offsets, pos, used, 1
    if offsets[n] != total_symbols:
        return codes, offsets, pos, used, 1
    used[0] = p_prev
    used[1] = p_shift
    used[2] = p_matches
    used[3] = p_la
    used[4] = p_lc
    used[5] = p_lg
    used[6] = p_lt
    used[7] = p_ln
    used[8] = p_hr
    return codes, offsets, pos, used, 0


@njit(cache=True, nogil=True, inline="always")
def _pull_letter(codes, off, t, rc, la, lc, lg, lt, ln,
                 p_la, p_lc, p_lg, p_lt, p_ln, enc_lut):  # pragma: no cover
    """Reconstruct one mismatching symbol from its letters stream."""
    if rc == CODE_N:
        if p_ln >= ln.size:
            return 2, p_la, p_lc, p_lg, p_lt, p_ln
        c = enc_lut[ln[p_ln]]
        p_ln += 1
        if c > CODE_N:
            return 3, p_la, p_lc, p_lg, p_lt, p_ln
        codes[off + t] = c
        return 0, p_la, p_lc, p_lg, p_lt, p_ln
    if rc == 0:
        if p_la >= la.size:
            return 2, p_la, p_lc, p_lg, p_lt, p_ln
        idx = la[p_la]
        p_la += 1
    elif rc == 1:
        if p_lc >= lc.size:
            return 2, p_la, p_lc, p_lg, p_lt, p_ln
        idx = lc[p_lc]
        p_lc += 1
    elif rc == 2:
        if p_lg >= lg.size:
            return 2, p_la, p_lc, p_lg, p_lt, p_ln
        idx = lg[p_lg]
        p_lg += 1
    else:
        if p_lt >= lt.size:
            return 2, p_la, p_lc, p_lg, p_lt, p_ln
        idx = lt[p_lt]
        p_lt += 1
    if idx > 3:
        return 3, p_la, p_lc, p_lg, p_lt, p_ln
    c = idx if idx < rc else idx + 1
    codes[off + t] = c
    return 0, p_la, p_lc, p_lg, p_lt, p_ln


# ---------------------------------------------------------------------------
# batch entry points

def sort_batch(batch: BinBatch) -> BinBatch:
    """Stable rotated-key order over array-form records."""
    if batch.n <= 1:
        return batch
    order = _sort_indices(batch.codes, batch.offsets, batch.pos)
    codes, offsets = _permute_reads(batch.codes, batch.offsets, order)
    return BinBatch(codes, offsets, batch.pos[order], batch.rev[order])


def encode_bin_arrays(batch: BinBatch, sig_len: int,
                      params: MatchParams = DEFAULT_PARAMS) -> StreamSet:
    """Streams for one sorted bin (see sort_batch)."""
    n = batch.n
    if n == 0:
        return StreamSet()
    symbols = batch.symbols
    flags = np.empty(n, np.uint8)
    lengths = np.empty(2 * n, np.uint8)
    prev = np.empty(5 * n + 8, np.uint8)
    shift = np.empty(3 * n + 8, np.uint8)
    matches = np.empty(symbols + symbols // 128 + 2 * n + 64, np.uint8)
    la = np.empty(symbols + 16, np.uint8)
    lc = np.empty(symbols + 16, np.uint8)
    lg = np.empty(symbols + 16, np.uint8)
    lt = np.empty(symbols + 16, np.uint8)
    ln = np.empty(symbols + 16, np.uint8)
    hr = np.empty(symbols + 16, np.uint8)
    sizes = _encode_bin(batch.codes, batch.offsets, batch.pos, sig_len,
                        params.mismatch_cost, params.insert_cost,
                        params.max_dist, params.window,
                        flags, lengths, prev, shift, matches,
                        la, lc, lg, lt, ln, hr, DECODE_LUT)
    p_prev, p_shift, p_matches, p_la, p_lc, p_lg, p_lt, p_ln, p_hr = sizes
    return StreamSet(flags.tobytes(), lengths.tobytes(),
                     batch.rev.astype(np.uint8).tobytes(),
                     prev[:p_prev].tobytes(), shift[:p_shift].tobytes(),
                     matches[:p_matches].tobytes(), la[:p_la].tobytes(),
                     lc[:p_lc].tobytes(), lg[:p_lg].tobytes(),
                     lt[:p_lt].tobytes(), ln[:p_ln].tobytes(),
                     hr[:p_hr].tobytes())


def decode_bin_arrays(streams: StreamSet, count: int, signature: str,
                      params: MatchParams = DEFAULT_PARAMS) -> BinBatch:
    """Inverse of encode_bin_arrays for a bin of `count` records."""
    if count == 0:
        return BinBatch(np.zeros(0, np.uint8), np.zeros(1, np.int64),
                        np.zeros(0, np.int32), np.zeros(0, np.uint8))
    flags = np.frombuffer(streams.flags, dtype=np.uint8)
    lengths = np.frombuffer(streams.lengths, dtype=np.uint8)
    rev = np.frombuffer(streams.rev, dtype=np.uint8)
    if flags.size != count or lengths.size != 2 * count or rev.size != count:
        raise CorruptArchiveError("per-read stream sizes disagree")
    if rev.size and int(rev.max()) > 1:
        raise CorruptArchiveError("orientation bit out of range")
    total = int(np.frombuffer(streams.lengths, dtype="<u2")
                .astype(np.int64).sum())
    sig_codes = encode_seq(signature)
    buffers = [np.frombuffer(getattr(streams, name), dtype=np.uint8)
               for name in ("prev", "shift", "matches", "letters_a",
                            "letters_c", "letters_g", "letters_t",
                            "letters_n", "hreads")]
    codes, offsets, pos, used, err = _decode_bin(
        flags, lengths, buffers[0], buffers[1], buffers[2], buffers[3],
        buffers[4], buffers[5], buffers[6], buffers[7], buffers[8],
        sig_codes, params.window, total, ENCODE_LUT)
    if err:
        reasons = {1: "inconsistent record structure",
                   2: "stream ends prematurely",
                   3: "illegal symbol in stream",
                   4: "reference alignment out of bounds",
                   5: "match descriptor run exceeds overlap"}
        raise CorruptArchiveError(reasons.get(int(err), "damaged bin"))
    for k, buf in enumerate(buffers):
        if used[k] != buf.size:
            raise CorruptArchiveError("stream has trailing bytes")
    return BinBatch(codes, offsets, pos, rev.copy())


def encode_bin(records, sig_len: int,
               params: MatchParams = DEFAULT_PARAMS) -> StreamSet:
    """Record-level wrapper; records must already be in sort_bin order."""
    n = len(records)
    lens = [len(r.seq) for r in records]
    offsets = np.zeros(n + 1, np.int64)
    offsets[1:] = np.cumsum(lens)
    codes = np.empty(int(offsets[-1]), np.uint8)
    for i, r in enumerate(records):
        codes[offsets[i]:offsets[i + 1]] = encode_seq(r.seq)
    pos = np.array([r.pos for r in records], np.int32)
    rev = np.array([1 if r.rev else 0 for r in records], np.uint8)
    return encode_bin_arrays(BinBatch(codes, offsets, pos, rev),
                             sig_len, params)


def decode_bin(streams: StreamSet, count: int, signature: str,
               params: MatchParams = DEFAULT_PARAMS) -> list[BinRecord]:
    """Inverse of encode_bin: the sorted record sequence."""
    return decode_bin_arrays(streams, count, signature, params).records()


def flag_counts(flags_stream: bytes) -> np.ndarray:
    """Occurrences of each flag value in a raw flags stream."""
    arr = np.frombuffer(flags_stream, dtype=np.uint8)
    return np.bincount(arr, minlength=FLAG_COUNT)[:FLAG_COUNT]
