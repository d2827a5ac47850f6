import random

import numpy as np
import pytest

import oracles
from conftest import overlapping_reads, random_read
from sigpress.binning import BinRecord, dispatch_block
from sigpress.errors import CorruptArchiveError
from sigpress.fastq import parse_fastq_block
from sigpress.refcoder import (DEFAULT_PARAMS, FLAG_COPY, FLAG_DISS, FLAG_EX,
                               FLAG_MIS, FLAG_OTH, MatchParams, StreamSet,
                               align_and_score, best_reference,
                               decode_bin, decode_bin_arrays,
                               decode_matches_rle, encode_bin,
                               encode_bin_arrays, encode_matches_rle,
                               flag_counts, rotate_key, sort_batch, sort_bin)
from sigpress.signature import SignatureParams, signature_of_bin


def _bin_batches(reads, params):
    data = b"".join(b"@r\n%s\n+\n%s\n" % (s.encode(), b"#" * len(s))
                    for s in reads)
    return dispatch_block(parse_fastq_block(data), params)


# ---------------------------------------------------------------------------
# sorting

def test_rotate_key():
    assert rotate_key("AACGTTT", 2) == "CGTTTAA"
    assert rotate_key("ACGT", 0) == "ACGT"


def test_sort_bin_orders_by_rotated_key():
    recs = [BinRecord("TTACG", 2, False, 0),   # key ACGTT
            BinRecord("ACGAA", 0, False, 1),   # key ACGAA
            BinRecord("GGACG", 2, False, 2)]   # key ACGGG
    assert [r.orig_index for r in sort_bin(recs)] == [1, 2, 0]


def test_sort_bin_n_after_t_and_stable():
    recs = [BinRecord("ACGN", 0, False, 0),
            BinRecord("ACGT", 0, False, 1),
            BinRecord("ACGT", 0, False, 2)]
    assert [r.orig_index for r in sort_bin(recs)] == [1, 2, 0]


def test_sort_batch_matches_reference(rng):
    params = SignatureParams(length=4, zone=2)
    reads = overlapping_reads(rng, 800, 300, rng.randrange(30, 60)) \
        + [random_read(rng, rng.randrange(4, 30)) for _ in range(100)]
    for code, batch in _bin_batches(reads, params).items():
        got = sort_batch(batch).records()
        want = sort_bin(batch.records())
        assert [(r.seq, r.pos, r.rev) for r in got] \
            == [(r.seq, r.pos, r.rev) for r in want], code


def test_sort_ties_keep_input_order(rng):
    # equal rotated keys of different lengths: shorter first, then by
    # arrival; reads are pos 0 so the key is the read itself
    recs = [BinRecord("ACGTT", 0, False, 0),
            BinRecord("ACG", 0, False, 1),
            BinRecord("ACGTT", 0, False, 2),
            BinRecord("ACGT", 0, False, 3)]
    assert [r.orig_index for r in sort_bin(recs)] == [1, 3, 0, 2]


# ---------------------------------------------------------------------------
# alignment and classification

def test_align_and_score_worked_example():
    ref = BinRecord("AACGTACGCCGGCAT", 5, False, 0)
    cur = BinRecord("CCTACGCCGGCATCC", 3, False, 1)
    dist, shift, mism = align_and_score(cur, ref, DEFAULT_PARAMS)
    assert (dist, shift, mism) == (4, 2, [1])


def test_align_and_score_head_insert():
    # negative shift leaves cur's head uncovered
    ref = BinRecord("ACGTAA", 0, False, 0)
    cur = BinRecord("TTACGTAA", 2, False, 1)
    dist, shift, mism = align_and_score(cur, ref, DEFAULT_PARAMS)
    assert shift == -2
    assert mism == []
    assert dist == 2 * 0 + 1 * 2


def test_align_and_score_no_overlap():
    ref = BinRecord("ACGT", 0, False, 0)
    cur = BinRecord("ACGT", 30, False, 1)
    dist, shift, mism = align_and_score(cur, ref, DEFAULT_PARAMS)
    assert mism == [] and dist == 4  # all four symbols unmatched


def test_best_reference_copy_beats_search():
    prev = BinRecord("ACGTACGT", 0, False, 0)
    res = best_reference(BinRecord("ACGTACGT", 0, False, 1), [prev])
    assert res.flag == FLAG_COPY


def test_best_reference_flags():
    params = MatchParams(max_dist=20)
    window = [BinRecord("AACGTACGCCGGCAT", 5, False, 0)]
    # exact overlap, shift 2
    res = best_reference(BinRecord("CGTACGCCGGCAT", 3, False, 1),
                         window, params)
    assert (res.flag, res.prev_id, res.shift) == (FLAG_EX, 1, 2)
    assert res.mismatch_positions == ()
    # single mismatch at the reference's final position
    res = best_reference(BinRecord("CGTACGCCGGCAA", 3, False, 1),
                         window, params)
    assert res.flag == FLAG_MIS
    assert res.mismatch_positions == (12,)
    # general case from the worked example
    res = best_reference(BinRecord("CCTACGCCGGCATCC", 3, False, 1),
                         window, params)
    assert (res.flag, res.prev_id, res.shift) == (FLAG_OTH, 1, 2)
    assert res.mismatch_positions == (1,)
    assert res.distance == 4


def test_best_reference_threshold_and_window():
    far = BinRecord("TTTTGGGG", 0, False, 0)
    cur = BinRecord("ACACACAC", 0, False, 1)
    assert best_reference(cur, [far]).flag == FLAG_DISS
    # auto threshold is len//2: 8 mismatches * 2 > 4
    good = BinRecord("ACACACAT", 0, False, 0)
    assert best_reference(cur, [good]).flag == FLAG_MIS
    # a window of 1 cannot see past the most recent read
    params = MatchParams(window=1)
    res = best_reference(cur, [good, far], params)
    assert res.flag == FLAG_DISS
    res = best_reference(cur, [far, good], params)
    assert res.flag == FLAG_MIS


def test_best_reference_tie_prefers_recent():
    a = BinRecord("ACGTACGTA", 0, False, 0)
    b = BinRecord("ACGTACGTC", 0, False, 1)
    cur = BinRecord("ACGTACGTT", 0, False, 2)
    res = best_reference(cur, [a, b])
    assert res.prev_id == 1  # back-distance 1 is the newer read


# ---------------------------------------------------------------------------
# mismatch run lengths

def test_rle_worked_examples():
    # overlap 13, signature at 3..7, mismatch at position 1
    assert encode_matches_rle([1], 13, (3, 7)) == bytes([1, 7])
    # no mismatches at all still yields the full-run descriptor
    assert encode_matches_rle([], 10, (4, 8)) == bytes([6])
    # adjacent mismatches produce zero-length runs
    assert encode_matches_rle([0, 1, 2], 3) == bytes([0, 0, 0])
    # long runs continue through 255 bytes
    assert encode_matches_rle([260], 400) == bytes([255, 5, 139])
    assert encode_matches_rle([], 255) == bytes([255])


def test_rle_rejects_out_of_range():
    with pytest.raises(ValueError):
        encode_matches_rle([13], 13)
    with pytest.raises(ValueError):
        encode_matches_rle([5], 13, (4, 8))  # inside the signature


def test_rle_decode_errors():
    with pytest.raises(CorruptArchiveError):
        decode_matches_rle(b"", 4)
    with pytest.raises(CorruptArchiveError):
        decode_matches_rle(bytes([9]), 4)


def test_rle_roundtrip_against_oracle(rng):
    for _ in range(400):
        overlap = rng.randrange(1, 600)
        s0 = rng.randrange(0, overlap + 1)
        s1 = min(overlap, s0 + rng.randrange(0, 12))
        allowed = [t for t in range(overlap) if not s0 <= t < s1]
        k = rng.randrange(0, len(allowed) + 1) if allowed else 0
        mism = sorted(rng.sample(allowed, k))
        data = encode_matches_rle(mism, overlap, (s0, s1))
        got, used = decode_matches_rle(data, overlap, (s0, s1))
        assert got == mism
        assert used == len(data)
        oracle, used2 = oracles.rle_mismatches(data, overlap, (s0, s1))
        assert oracle == mism
        assert used2 == len(data)


def test_rle_concatenated_descriptors():
    one = encode_matches_rle([2], 8)
    two = encode_matches_rle([0, 6], 9, (2, 4))
    blob = one + two
    got1, used1 = decode_matches_rle(blob, 8)
    got2, used2 = decode_matches_rle(blob, 9, (2, 4), start=used1)
    assert (got1, got2) == ([2], [0, 6])
    assert used1 + used2 == len(blob)


# ---------------------------------------------------------------------------
# whole-bin encode/decode

def _assert_batches_equal(a, b):
    assert np.array_equal(a.codes, b.codes)
    assert np.array_equal(a.offsets, b.offsets)
    assert np.array_equal(a.pos, b.pos)
    assert np.array_equal(a.rev, b.rev)


def _roundtrip_bins(reads, sig_params, match=DEFAULT_PARAMS):
    """Encode and decode every bin; returns per-bin flag totals."""
    totals = np.zeros(5, dtype=np.int64)
    for code, batch in _bin_batches(reads, sig_params).items():
        signature = signature_of_bin(code, sig_params)
        batch = sort_batch(batch)
        streams = encode_bin_arrays(batch, len(signature), match)
        back = decode_bin_arrays(streams, batch.n, signature, match)
        _assert_batches_equal(batch, back)
        totals += flag_counts(streams.flags)
    return totals


def test_bin_roundtrip_worked_example():
    sig = "ACGC"
    recs = sort_bin([
        BinRecord("CCTACGCCGGCATCC", 3, False, 0),
        BinRecord("AACGTACGCCGGCAT", 5, False, 1),
    ])
    # rotated keys: ACGCCGGCAT + AACGT sorts before ACGCCGGCAT + CCCCT
    assert [r.orig_index for r in recs] == [1, 0]
    streams = encode_bin(recs, len(sig))
    assert list(streams.flags) == [FLAG_DISS, FLAG_OTH]
    back = decode_bin(streams, 2, sig)
    assert [(r.seq, r.pos) for r in back] == [(r.seq, r.pos) for r in recs]


def test_worked_example_stream_routing():
    """The running pair, forced into encode order ref-then-cur."""
    sig = "ACGC"
    ref = BinRecord("AACGTACGCCGGCAT", 5, False, 0)
    cur = BinRecord("CCTACGCCGGCATCC", 3, False, 1)
    streams = encode_bin([ref, cur], len(sig))
    assert list(streams.flags) == [FLAG_DISS, FLAG_OTH]
    assert streams.prev == bytes([1])
    assert streams.shift == bytes([4])      # zigzag(+2)
    assert streams.matches == bytes([1, 7])
    assert streams.letters_g == bytes([1])  # C under reference G
    assert streams.letters_n == b"CC"       # tail insert, verbatim
    assert streams.letters_a == b""
    assert streams.letters_c == b""
    assert streams.letters_t == b""
    assert streams.hreads == b"AACGT....CGGCAT"
    back = decode_bin(streams, 2, sig)
    assert [(r.seq, r.pos) for r in back] \
        == [("AACGTACGCCGGCAT", 5), ("CCTACGCCGGCATCC", 3)]


def test_copy_flag_roundtrip():
    sig = "ACG"
    recs = [BinRecord("TACGT", 1, False, 0),
            BinRecord("TACGT", 1, True, 1),
            BinRecord("TACGT", 1, False, 2)]
    streams = encode_bin(recs, len(sig))
    assert list(streams.flags) == [FLAG_DISS, FLAG_COPY, FLAG_COPY]
    back = decode_bin(streams, 3, sig)
    assert [r.seq for r in back] == ["TACGT"] * 3
    assert [r.rev for r in back] == [False, True, False]


def test_bin_roundtrip_random_corpora(rng):
    sig_params = SignatureParams(length=4, zone=4)
    for trial in range(6):
        glen = rng.randrange(300, 3000)
        rlen = rng.randrange(20, 120)
        reads = overlapping_reads(rng, glen, rng.randrange(50, 400), rlen,
                                  n_rate=0.01 if trial % 2 else 0.0)
        reads += [random_read(rng, rng.randrange(1, 12)) for _ in range(20)]
        totals = _roundtrip_bins(reads, sig_params)
        assert totals.sum() == len(reads)


def test_bin_roundtrip_matched_flags_appear(rng):
    sig_params = SignatureParams(length=4, zone=4)
    reads = overlapping_reads(rng, 400, 600, 50)
    totals = _roundtrip_bins(reads, sig_params)
    # dense coverage must produce real matches, not just hard reads
    assert totals[FLAG_EX] + totals[FLAG_MIS] + totals[FLAG_OTH] > 100
    assert totals[FLAG_COPY] > 0


def test_bin_roundtrip_degenerate_costs(rng):
    sig_params = SignatureParams(length=4, zone=0)
    reads = overlapping_reads(rng, 300, 150, 40)
    for match in (MatchParams(mismatch_cost=0, insert_cost=0),
                  MatchParams(mismatch_cost=0, insert_cost=0, max_dist=1),
                  MatchParams(window=1),
                  MatchParams(max_dist=1000)):
        totals = _roundtrip_bins(reads, sig_params, match)
        assert totals.sum() == len(reads)


def test_n_bin_roundtrip(rng):
    """Reads without a signature carry no anchor: sig_len 0, pos 0."""
    sig_params = SignatureParams(length=6, zone=0)
    reads = ["N" * rng.randrange(1, 40) for _ in range(30)]
    reads += ["AAAAAAAAAA", "ACG", "A"]
    reads += [random_read(rng, 8, n_rate=0.6) for _ in range(40)]
    batches = _bin_batches(reads, sig_params)
    assert sig_params.n_bin in batches
    totals = _roundtrip_bins(reads, sig_params)
    assert totals.sum() == len(reads)


def test_kernel_flags_match_reference_search(rng):
    """The array kernel must classify exactly like best_reference."""
    sig_params = SignatureParams(length=4, zone=2)
    match = MatchParams(window=16)
    reads = overlapping_reads(rng, 500, 300, 44, n_rate=0.005)
    for code, batch in _bin_batches(reads, sig_params).items():
        batch = sort_batch(batch)
        streams = encode_bin_arrays(batch, 4 if code != sig_params.n_bin
                                    else 0, match)
        window = []
        want = []
        for rec in batch.records():
            res = best_reference(rec, window, match)
            want.append(res.flag)
            window.append(rec)
            if len(window) > match.window:
                window.pop(0)
        assert list(streams.flags) == want, code


def test_decode_rejects_tampered_streams(rng):
    sig_params = SignatureParams(length=4, zone=0)
    reads = overlapping_reads(rng, 200, 80, 30)
    code, batch = max(_bin_batches(reads, sig_params).items(),
                      key=lambda kv: kv[1].n)
    signature = signature_of_bin(code, sig_params)
    batch = sort_batch(batch)
    streams = encode_bin_arrays(batch, len(signature), DEFAULT_PARAMS)
    count = batch.n

    def expect_corrupt(**changes):
        broken = StreamSet(**{**streams.__dict__, **changes})
        with pytest.raises(CorruptArchiveError):
            decode_bin_arrays(broken, count, signature, DEFAULT_PARAMS)

    expect_corrupt(flags=streams.flags[:-1])
    expect_corrupt(flags=bytes([9]) * count)
    expect_corrupt(lengths=streams.lengths[:-2])
    expect_corrupt(rev=streams.rev[:-1])
    expect_corrupt(rev=bytes([2]) * count)
    expect_corrupt(prev=b"")
    expect_corrupt(hreads=streams.hreads[:-1])
    if streams.matches:
        expect_corrupt(matches=streams.matches[:-1])
    # trailing rubble after a well-formed stream is an error too
    expect_corrupt(prev=streams.prev + b"\x01")
    expect_corrupt(letters_n=streams.letters_n + b"A")


def test_decode_rejects_bad_back_reference():
    sig = "ACG"
    recs = [BinRecord("TACGT", 1, False, 0),
            BinRecord("TACGTA", 1, False, 1)]
    streams = encode_bin(recs, len(sig))
    assert list(streams.flags) == [FLAG_DISS, FLAG_EX]
    # point the matched read at a nonexistent earlier record
    broken = StreamSet(**{**streams.__dict__, "prev": bytes([2])})
    with pytest.raises(CorruptArchiveError):
        decode_bin(broken, 2, sig)
