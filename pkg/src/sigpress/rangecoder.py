"""Order-4 adaptive range coder.

Byte-oriented renormalization with explicit carry propagation (cache
byte plus pending-0xFF run). The model is a per-context frequency table
over the previous `context_order` symbols: exact when the context space
is small (every in-package use: alphabets 2, 4 and 5), multiplicatively
hashed into a bounded table otherwise. Counts start at 1, grow by a
fixed increment, and every count in a context halves once its total
exceeds 2**13, which keeps totals well inside the coder's precision.

Coder instances are single use: each byte stream is coded with a fresh
model, so streams stay independently decodable.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .errors import CorruptArchiveError

TOP = 1 << 24
MAX_TOTAL = 1 << 13
INC = 24
_TABLE_BUDGET = 1 << 22  # max count cells across contexts


def _table_slots(alphabet_size: int, order: int) -> tuple[int, bool]:
    """(slot count, hashed?) for a context table within the budget."""
    exact = alphabet_size ** order
    if exact * alphabet_size <= _TABLE_BUDGET:
        return exact, False
    slots = 1
    while slots * 2 * alphabet_size <= _TABLE_BUDGET:
        slots *= 2
    return slots, True


@njit(cache=True, nogil=True, inline="always")
def _shift_low(low, cache, csize, out, opos):  # pragma: no cover - jit
    if low < 0xFF000000 or low > 0xFFFFFFFF:
        carry = low >> 32
        temp = cache
        while csize > 0:
            out[opos] = (temp + carry) & 0xFF
            opos += 1
            temp = 0xFF
            csize -= 1
        cache = (low >> 24) & 0xFF
    csize += 1
    low = (low << 8) & 0xFFFFFFFF
    return low, cache, csize, opos


@njit(cache=True, nogil=True, inline="always")
def _ctx_slot(ctx, slots, hashed):  # pragma: no cover - jit
    if not hashed:
        return ctx
    h = (ctx * 2654435761) & 0x3FFFFFFFFFFFFFFF
    return (h >> 13) & (slots - 1)


@njit(cache=True, nogil=True)
def _rc_encode(syms, alpha, period, slots, hashed, out):  # pragma: no cover - jit
    freq = np.ones((slots, alpha), np.uint16)
    tot = np.full(slots, alpha, np.uint32)
    low = 0
    rng = 0xFFFFFFFF
    cache = 0
    csize = 1
    opos = 0
    ctx = 0
    for i in range(syms.size):
        s = syms[i]
        slot = _ctx_slot(ctx, slots, hashed)
        total = np.int64(tot[slot])
        cum = np.int64(0)
        for k in range(s):
            cum += freq[slot, k]
        cnt = np.int64(freq[slot, s])
        r = rng // total
        low += cum * r
        rng = cnt * r
        while rng < TOP:
            low, cache, csize, opos = _shift_low(low, cache, csize, out, opos)
            rng <<= 8
        freq[slot, s] += INC
        t = total + INC
        if t > MAX_TOTAL:
            t = 0
            for k in range(alpha):
                c = (freq[slot, k] + 1) >> 1
                freq[slot, k] = c
                t += c
        tot[slot] = t
        ctx = (ctx * alpha + s) % period
    for _ in range(5):
        low, cache, csize, opos = _shift_low(low, cache, csize, out, opos)
    return opos


@njit(cache=True, nogil=True)
def _rc_decode(data, n, alpha, period, slots, hashed):  # pragma: no cover - jit
    out = np.empty(n, np.uint8)
    freq = np.ones((slots, alpha), np.uint16)
    tot = np.full(slots, alpha, np.uint32)
    rng = 0xFFFFFFFF
    code = 0
    ipos = 0
    for _ in range(5):
        if ipos >= data.size:
            return out, 1
        code = ((code << 8) | data[ipos]) & 0xFFFFFFFF
        ipos += 1
    ctx = 0
    for i in range(n):
        slot = _ctx_slot(ctx, slots, hashed)
        total = np.int64(tot[slot])
        r = rng // total
        val = code // r
        if val >= total:
            val = total - 1
        cum = np.int64(0)
        s = 0
        while cum + freq[slot, s] <= val:
            cum += freq[slot, s]
            s += 1
        cnt = np.int64(freq[slot, s])
        code -= cum * r
        rng = cnt * r
        while rng < TOP:
            if ipos >= data.size:
                return out, 1
            code = ((code << 8) | data[ipos]) & 0xFFFFFFFF
            ipos += 1
            rng <<= 8
        out[i] = s
        freq[slot, s] += INC
        t = total + INC
        if t > MAX_TOTAL:
            t = 0
            for k in range(alpha):
                c = (freq[slot, k] + 1) >> 1
                freq[slot, k] = c
                t += c
        tot[slot] = t
        ctx = (ctx * alpha + s) % period
    return out, 0


def _check_args(alphabet_size: int, context_order: int) -> None:
    if not 2 <= alphabet_size <= 256:
        raise ValueError("alphabet size must be in 2..256")
    if not 0 <= context_order <= 4:
        raise ValueError("context order must be in 0..4")


def rc_encode(symbols, alphabet_size: int, context_order: int = 4) -> bytes:
    """Code a symbol stream (values < alphabet_size) to bytes."""
    _check_args(alphabet_size, context_order)
    syms = np.frombuffer(bytes(symbols), dtype=np.uint8) \
        if not isinstance(symbols, np.ndarray) else symbols.astype(np.uint8)
    if syms.size and int(syms.max()) >= alphabet_size:
        raise ValueError("symbol outside alphabet")
    if syms.size == 0:
        return b""
    slots, hashed = _table_slots(alphabet_size, context_order)
    period = alphabet_size ** context_order
    out = np.empty(2 * syms.size + 64, dtype=np.uint8)
    opos = _rc_encode(syms, alphabet_size, period, slots, hashed, out)
    return out[:opos].tobytes()


def rc_decode(data: bytes, expected_len: int, alphabet_size: int,
              context_order: int = 4) -> bytes:
    """Inverse of rc_encode; raises CorruptArchiveError on truncation."""
    _check_args(alphabet_size, context_order)
    if expected_len == 0:
        return b""
    slots, hashed = _table_slots(alphabet_size, context_order)
    period = alphabet_size ** context_order
    buf = np.frombuffer(data, dtype=np.uint8)
    out, err = _rc_decode(buf, expected_len, alphabet_size, period,
                          slots, hashed)
    if err:
        raise CorruptArchiveError("symbol stream ends prematurely")
    return out.tobytes()
