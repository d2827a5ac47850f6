"""Order-4 byte compressor with escape-based context blending.

A PPM-style model over byte streams: contexts of the previous 4, 3, 2
and 1 bytes live in fixed-size hash tables, each node holding a sparse
list of up to 48 (symbol, count) pairs. Prediction walks from order 4
downward; a node that has not seen the current symbol codes an escape
whose weight is the node's distinct-symbol count, and a context with no
node at all is skipped silently (the decoder skips it too, so nothing
needs to be coded). Below the hashed orders sit a flat order-0 table
and finally a uniform distribution over all 256 values.

Update exclusion applies: after a byte is coded, its count is bumped in
every context that was actually consulted, and nodes are created where
the walk found vacancies. Lower orders never see the byte.

Tables are bounded and never rehashed. When the table passes 7/8 load,
or an insert probe fails, the whole model is dropped and restarted via
an O(1) epoch bump between bytes. No exclusion lists are kept when
estimating probabilities; that costs a little compression and buys a
lot of speed.

State lives in a reusable CmScratch (about 9.5 MB). Every call starts
from an empty model, so each stream is independently decodable.
"""
from __future__ import annotations

import threading

import numpy as np
from numba import njit

from .errors import CorruptArchiveError

TOP = 1 << 24

NODE_SYMS = 48
NODE_INC = 4
NODE_INIT = 2
NODE_MAX_TOTAL = 4096
ORDER0_INC = 4
ORDER0_MAX_TOTAL = 8192
PROBE_LIMIT = 128

# hashed orders 4, 3, 2, 1
ORDER_SIZE = np.array([1 << 15, 1 << 14, 1 << 13, 1 << 11], np.int64)
ORDER_BASE = np.array([0, 1 << 15, 49152, 57344], np.int64)
TOTAL_SLOTS = int(ORDER_SIZE.sum())
LIVE_LIMIT = TOTAL_SLOTS * 7 // 8


class CmScratch:
    """Reusable model arrays; one instance per thread."""

    __slots__ = ("keys", "stamp", "nsym", "total", "syms", "cnts",
                 "cnt0", "epoch")

    def __init__(self):
        self.keys = np.zeros(TOTAL_SLOTS, np.int64)
        self.stamp = np.zeros(TOTAL_SLOTS, np.uint32)
        self.nsym = np.zeros(TOTAL_SLOTS, np.uint8)
        self.total = np.zeros(TOTAL_SLOTS, np.uint16)
        self.syms = np.zeros((TOTAL_SLOTS, NODE_SYMS), np.uint8)
        self.cnts = np.zeros((TOTAL_SLOTS, NODE_SYMS), np.uint16)
        self.cnt0 = np.zeros(256, np.uint32)
        self.epoch = 0


_local = threading.local()


def _scratch() -> CmScratch:
    s = getattr(_local, "cm_scratch", None)
    if s is None:
        s = CmScratch()
        _local.cm_scratch = s
    return s


def _bump_epoch(s: CmScratch) -> int:
    """Fresh epoch (vacating every slot) plus an empty order-0 table.
    Stamps are 32-bit and in-stream resets bump the counter too, so
    rewind with plenty of headroom before it could alias."""
    if s.epoch >= 1 << 31:
        s.stamp[:] = 0
        s.epoch = 0
    s.cnt0[:] = 0
    return s.epoch + 1


@njit(cache=True, nogil=True, inline="always")
def _find_slot(keys, stamp, epoch, oidx, key):  # pragma: no cover - jit
    """Probe one order's region. Returns (slot, state): state 0 found,
    1 vacant slot available at `slot`, 2 probe exhausted."""
    size = ORDER_SIZE[oidx]
    base = ORDER_BASE[oidx]
    h = (key * 2654435761) & 0x3FFFFFFFFFFFFFFF
    start = (h >> 13) & (size - 1)
    for j in range(PROBE_LIMIT):
        slot = base + ((start + j) & (size - 1))
        if stamp[slot] != epoch:
            return slot, 1
        if keys[slot] == key:
            return slot, 0
    return -1, 2


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
def _node_add(nsym, total, syms, cnts, slot, b):  # pragma: no cover - jit
    """Bump symbol b in an existing node; a full node ignores new
    symbols and keeps escaping them."""
    n = nsym[slot]
    t = np.int64(total[slot])
    found = False
    for k in range(n):
        if syms[slot, k] == b:
            cnts[slot, k] += NODE_INC
            t += NODE_INC
            found = True
            break
    if not found:
        if n < NODE_SYMS:
            syms[slot, n] = b
            cnts[slot, n] = NODE_INIT
            nsym[slot] = n + 1
            n += 1
            t += NODE_INIT
        else:
            total[slot] = t
            return
    if t > NODE_MAX_TOTAL:
        t = 0
        for k in range(n):
            c = (cnts[slot, k] + 1) >> 1
            cnts[slot, k] = c
            t += c
    total[slot] = t


@njit(cache=True, nogil=True, inline="always")
def _node_create(keys, stamp, nsym, total, syms, cnts,
                 epoch, slot, key, b):  # pragma: no cover - jit
    keys[slot] = key
    stamp[slot] = epoch
    nsym[slot] = 1
    total[slot] = NODE_INIT
    syms[slot, 0] = b
    cnts[slot, 0] = NODE_INIT


@njit(cache=True, nogil=True)
def _cm_encode(data, keys, stamp, nsym, total, syms, cnts, cnt0,
               epoch, out):  # pragma: no cover - jit
    low = 0
    rng = 0xFFFFFFFF
    cache = 0
    csize = 1
    opos = 0
    hist = np.int64(0)
    live = 0
    t0 = np.int64(0)
    d0 = np.int64(0)
    reset = False
    vslot = np.empty(4, np.int64)
    vstate = np.empty(4, np.int64)
    for i in range(data.size):
        # worst case one input byte costs ~9 output bytes (escape
        # cascade); opos + csize grows by exactly 1 per shift_low
        if opos + csize + 15 > out.size:
            return -1, epoch
        b = np.int64(data[i])
        matched = np.int64(-2)
        for oidx in range(4):
            o = 4 - oidx
            ctxval = hist & ((np.int64(1) << (8 * o)) - 1)
            key = ctxval * 2 + 1
            slot, state = _find_slot(keys, stamp, epoch, oidx, key)
            vslot[oidx] = slot
            vstate[oidx] = state
            if state == 0:
                tnode = np.int64(total[slot]) + np.int64(nsym[slot])
                cum = np.int64(0)
                cnt = np.int64(0)
                for k in range(nsym[slot]):
                    if syms[slot, k] == b:
                        cnt = np.int64(cnts[slot, k])
                        break
                    cum += cnts[slot, k]
                if cnt == 0:
                    cum = np.int64(total[slot])
                    cnt = np.int64(nsym[slot])
                else:
                    matched = o
                r = rng // tnode
                low += cum * r
                rng = cnt * r
                while rng < TOP:
                    low, cache, csize, opos = _shift_low(
                        low, cache, csize, out, opos)
                    rng <<= 8
                if matched != -2:
                    break
            elif state == 2:
                reset = True
        if matched == -2:
            if d0 > 0:
                tnode = t0 + d0
                c = np.int64(cnt0[b])
                if c > 0:
                    cum = np.int64(0)
                    for k in range(b):
                        cum += cnt0[k]
                    cnt = c
                    matched = 0
                else:
                    cum = t0
                    cnt = d0
                r = rng // tnode
                low += cum * r
                rng = cnt * r
                while rng < TOP:
                    low, cache, csize, opos = _shift_low(
                        low, cache, csize, out, opos)
                    rng <<= 8
            if matched == -2:
                r = rng // 256
                low += b * r
                rng = r
                while rng < TOP:
                    low, cache, csize, opos = _shift_low(
                        low, cache, csize, out, opos)
                    rng <<= 8
                matched = -1
        lim = matched if matched >= 1 else 1
        for oidx in range(4):
            o = 4 - oidx
            if o < lim:
                break
            state = vstate[oidx]
            if state == 0:
                _node_add(nsym, total, syms, cnts, vslot[oidx], b)
            elif state == 1:
                ctxval = hist & ((np.int64(1) << (8 * o)) - 1)
                _node_create(keys, stamp, nsym, total, syms, cnts,
                             epoch, vslot[oidx], ctxval * 2 + 1, b)
                live += 1
        if matched <= 0:
            if cnt0[b] == 0:
                d0 += 1
            cnt0[b] += ORDER0_INC
            t0 += ORDER0_INC
            if t0 > ORDER0_MAX_TOTAL:
                t0 = 0
                for k in range(256):
                    if cnt0[k] > 0:
                        c = (cnt0[k] + 1) >> 1
                        cnt0[k] = c
                        t0 += c
        hist = ((hist << 8) | b) & 0xFFFFFFFF
        if live > LIVE_LIMIT:
            reset = True
        if reset:
            epoch += 1
            live = 0
            t0 = 0
            d0 = 0
            for k in range(256):
                cnt0[k] = 0
            reset = False
    for _ in range(5):
        low, cache, csize, opos = _shift_low(low, cache, csize, out, opos)
    return opos, epoch


@njit(cache=True, nogil=True)
def _cm_decode(data, n, keys, stamp, nsym, total, syms, cnts, cnt0,
               epoch):  # pragma: no cover - jit
    out = np.empty(n, np.uint8)
    rng = 0xFFFFFFFF
    code = 0
    ipos = 0
    for _ in range(5):
        if ipos >= data.size:
            return out, epoch, 1
        code = ((code << 8) | data[ipos]) & 0xFFFFFFFF
        ipos += 1
    hist = np.int64(0)
    live = 0
    t0 = np.int64(0)
    d0 = np.int64(0)
    reset = False
    vslot = np.empty(4, np.int64)
    vstate = np.empty(4, np.int64)
    for i in range(n):
        b = np.int64(-1)
        matched = np.int64(-2)
        for oidx in range(4):
            o = 4 - oidx
            ctxval = hist & ((np.int64(1) << (8 * o)) - 1)
            key = ctxval * 2 + 1
            slot, state = _find_slot(keys, stamp, epoch, oidx, key)
            vslot[oidx] = slot
            vstate[oidx] = state
            if state == 0:
                tnode = np.int64(total[slot]) + np.int64(nsym[slot])
                r = rng // tnode
                val = code // r
                if val >= tnode:
                    val = tnode - 1
                cum = np.int64(0)
                cnt = np.int64(0)
                if val < total[slot]:
                    for k in range(nsym[slot]):
                        c = np.int64(cnts[slot, k])
                        if cum + c > val:
                            cnt = c
                            b = np.int64(syms[slot, k])
                            break
                        cum += c
                    matched = o
                else:
                    cum = np.int64(total[slot])
                    cnt = np.int64(nsym[slot])
                code -= cum * r
                rng = cnt * r
                while rng < TOP:
                    if ipos >= data.size:
                        return out, epoch, 1
                    code = ((code << 8) | data[ipos]) & 0xFFFFFFFF
                    ipos += 1
                    rng <<= 8
                if matched != -2:
                    break
            elif state == 2:
                reset = True
        if matched == -2:
            if d0 > 0:
                tnode = t0 + d0
                r = rng // tnode
                val = code // r
                if val >= tnode:
                    val = tnode - 1
                cum = np.int64(0)
                cnt = np.int64(0)
                if val < t0:
                    for k in range(256):
                        c = np.int64(cnt0[k])
                        if cum + c > val:
                            cnt = c
                            b = np.int64(k)
                            break
                        cum += c
                    matched = 0
                else:
                    cum = t0
                    cnt = d0
                code -= cum * r
                rng = cnt * r
                while rng < TOP:
                    if ipos >= data.size:
                        return out, epoch, 1
                    code = ((code << 8) | data[ipos]) & 0xFFFFFFFF
                    ipos += 1
                    rng <<= 8
            if matched == -2:
                r = rng // 256
                val = code // r
                if val >= 256:
                    val = 255
                b = val
                code -= b * r
                rng = r
                while rng < TOP:
                    if ipos >= data.size:
                        return out, epoch, 1
                    code = ((code << 8) | data[ipos]) & 0xFFFFFFFF
                    ipos += 1
                    rng <<= 8
                matched = -1
        out[i] = b
        lim = matched if matched >= 1 else 1
        for oidx in range(4):
            o = 4 - oidx
            if o < lim:
                break
            state = vstate[oidx]
            if state == 0:
                _node_add(nsym, total, syms, cnts, vslot[oidx], b)
            elif state == 1:
                ctxval = hist & ((np.int64(1) << (8 * o)) - 1)
                _node_create(keys, stamp, nsym, total, syms, cnts,
                             epoch, vslot[oidx], ctxval * 2 + 1, b)
                live += 1
        if matched <= 0:
            if cnt0[b] == 0:
                d0 += 1
            cnt0[b] += ORDER0_INC
            t0 += ORDER0_INC
            if t0 > ORDER0_MAX_TOTAL:
                t0 = 0
                for k in range(256):
                    if cnt0[k] > 0:
                        c = (cnt0[k] + 1) >> 1
                        cnt0[k] = c
                        t0 += c
        hist = ((hist << 8) | b) & 0xFFFFFFFF
        if live > LIVE_LIMIT:
            reset = True
        if reset:
            epoch += 1
            live = 0
            t0 = 0
            d0 = 0
            for k in range(256):
                cnt0[k] = 0
            reset = False
    return out, epoch, 0


def cm_encode(data, scratch: CmScratch | None = None) -> bytes:
    """Compress a byte stream; empty input yields empty output."""
    buf = np.frombuffer(bytes(data), dtype=np.uint8) \
        if not isinstance(data, np.ndarray) else data.astype(np.uint8)
    if buf.size == 0:
        return b""
    s = scratch if scratch is not None else _scratch()
    # 10n covers the ~9 bytes/byte worst case, so the last rung holds
    for cap in (buf.size // 2 + 1024, 2 * buf.size + 1024,
                10 * buf.size + 1024):
        s.epoch = _bump_epoch(s)
        out = np.empty(cap, dtype=np.uint8)
        opos, s.epoch = _cm_encode(buf, s.keys, s.stamp, s.nsym, s.total,
                                   s.syms, s.cnts, s.cnt0, s.epoch, out)
        if opos >= 0:
            return out[:opos].tobytes()
    raise AssertionError("coded stream exceeded worst-case bound")


def cm_decode(data: bytes, expected_len: int,
              scratch: CmScratch | None = None) -> bytes:
    """Inverse of cm_encode; raises CorruptArchiveError on truncation."""
    if expected_len == 0:
        return b""
    s = scratch if scratch is not None else _scratch()
    s.epoch = _bump_epoch(s)
    buf = np.frombuffer(data, dtype=np.uint8)
    out, s.epoch, err = _cm_decode(buf, expected_len, s.keys, s.stamp,
                                   s.nsym, s.total, s.syms, s.cnts,
                                   s.cnt0, s.epoch)
    if err:
        raise CorruptArchiveError("byte stream ends prematurely")
    return out.tobytes()
