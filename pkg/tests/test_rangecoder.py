import math
import random

import pytest

import oracles
from sigpress.errors import CorruptArchiveError
from sigpress.rangecoder import rc_decode, rc_encode


def _roundtrip(data: bytes, alpha: int, order: int = 4) -> bytes:
    coded = rc_encode(data, alpha, context_order=order)
    back = rc_decode(coded, len(data), alpha, context_order=order)
    assert back == data
    return coded


def test_empty_input():
    assert rc_encode(b"", 5) == b""
    assert rc_decode(b"", 0, 5) == b""


def test_single_symbol_alphabets_and_lengths(rng):
    for alpha in (2, 3, 5, 16, 256):
        for n in (1, 2, 7, 100):
            data = bytes(rng.randrange(alpha) for _ in range(n))
            _roundtrip(data, alpha)


def test_roundtrip_random_orders(rng):
    for order in range(5):
        for alpha in (2, 5, 27, 256):
            n = rng.randrange(1, 3000)
            data = bytes(rng.randrange(alpha) for _ in range(n))
            _roundtrip(data, alpha, order)


def test_roundtrip_structured_inputs(rng):
    cases = [
        b"\x00" * 5000,                       # constant
        bytes(range(250)) * 20,               # periodic
        bytes([0, 1] * 2500),                 # alternating
        bytes(rng.randrange(2) for _ in range(4096)),  # skewed binary
    ]
    for data in cases:
        _roundtrip(data, 256)


def test_skewed_input_compresses_below_entropy_plus_slack(rng):
    # 95/5 binary mix: H ~ 0.286 bits/sym
    data = bytes(0 if rng.random() < 0.95 else 1 for _ in range(50000))
    coded = _roundtrip(data, 2)
    bound = oracles.empirical_entropy_bits(data)
    assert 8 * len(coded) < 1.15 * bound + 1024


def test_uniform_input_cannot_beat_entropy(rng):
    for alpha in (4, 256):
        n = 60000
        data = bytes(rng.randrange(alpha) for _ in range(n))
        coded = _roundtrip(data, alpha)
        assert 8 * len(coded) >= 0.995 * n * math.log2(alpha)
        # order-4 pays a learning cost per context; stays within 5%
        assert 8 * len(coded) <= 1.05 * n * math.log2(alpha) + 64
    # a single small-alphabet order-0 context adapts almost for free
    n = 60000
    data = bytes(rng.randrange(4) for _ in range(n))
    flat = rc_encode(data, 4, context_order=0)
    assert 8 * len(flat) <= 1.01 * 2 * n + 64


def test_context_order_helps_on_periodic_data():
    data = bytes(range(16)) * 2000
    flat = rc_encode(data, 16, context_order=0)
    ctx = rc_encode(data, 16, context_order=1)
    assert len(ctx) < len(flat) / 4


def test_deterministic():
    data = bytes([3, 1, 2, 0] * 600)
    assert rc_encode(data, 4) == rc_encode(data, 4)


def test_validation_errors():
    with pytest.raises(ValueError):
        rc_encode(b"\x00", 1)
    with pytest.raises(ValueError):
        rc_encode(b"\x00", 257)
    with pytest.raises(ValueError):
        rc_encode(b"\x00", 4, context_order=5)
    with pytest.raises(ValueError):
        rc_encode(b"\x04", 4)  # symbol out of range
    with pytest.raises(ValueError):
        rc_decode(b"", 3, 4, context_order=-1)


def test_truncated_stream_raises():
    data = bytes([1, 2, 3] * 500)
    coded = rc_encode(data, 4)
    with pytest.raises(CorruptArchiveError):
        rc_decode(coded[:4], len(data), 4)
    with pytest.raises(CorruptArchiveError):
        rc_decode(b"", 10, 4)


def test_decode_wrong_length_differs(rng):
    data = bytes(rng.randrange(4) for _ in range(400))
    coded = rc_encode(data, 4)
    assert rc_decode(coded, 300, 4) == data[:300]
