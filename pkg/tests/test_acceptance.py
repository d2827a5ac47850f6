"""Acceptance gate: one test per shipping criterion, run in order.

Each test is self-contained and states its requirement in the
docstring. Criterion 6 asserts a claim about the closed-form binomial
approximation that small arguments genuinely violate; it is expected
to fail and documents the counterexample rather than papering over it.
"""
import random

import numpy as np
import pytest

import oracles
from conftest import random_read
from sigpress.binning import BinRecord
from sigpress.bounds import (BoundSpec, clean_bound_bits, clean_lower_bound,
                             log2_binomial_bits, noisy_bound_bits,
                             noisy_lower_bound)
from sigpress.cli import main
from sigpress.contextmodel import cm_decode, cm_encode
from sigpress.pipeline import bin_encode, pack_decode, pack_encode
from sigpress.rangecoder import rc_decode, rc_encode
from sigpress.refcoder import (FLAG_OTH, align_and_score, best_reference,
                               encode_bin)
from sigpress.signature import SignatureParams, bin_of, find_signature
from sigpress.simulate import random_reference, simulate_fastq

MBIT = 1e6


# ---------------------------------------------------------------------------
# 1. lower-bound reproduction at the human experiment scale

def test_c1_lower_bound_reproduction():
    """bound for a 2859 Mbp genome and 1250M x 100 bp reads: 0.085 bpb
    clean, 0.182 bpb at 1% errors, components 5718 / 1250 / 3642.12 /
    1981.20 / 10099.14 Mbit, each within 0.01 Mbit."""
    clean = BoundSpec(genome_len=2859 * 10**6, num_reads=1250 * 10**6,
                      read_len=100)
    noisy = BoundSpec(genome_len=2859 * 10**6, num_reads=1250 * 10**6,
                      read_len=100, error_rate=0.01)
    parts = clean_bound_bits(clean)
    assert parts["genome"] / MBIT == pytest.approx(5718.00, abs=0.01)
    assert parts["orientations"] / MBIT == pytest.approx(1250.00, abs=0.01)
    assert parts["starts"] / MBIT == pytest.approx(3642.12, abs=0.01)
    nparts = noisy_bound_bits(noisy)
    assert nparts["substituted"] / MBIT == pytest.approx(1981.20, abs=0.01)
    assert nparts["error_positions"] / MBIT \
        == pytest.approx(10099.14, abs=0.01)
    assert clean_lower_bound(clean) == pytest.approx(0.085, abs=0.0005)
    assert noisy_lower_bound(noisy) == pytest.approx(0.182, abs=0.0005)


# ---------------------------------------------------------------------------
# 2. the running worked example, end to end through the bin coder

def test_c2_worked_example_golden():
    """AACGT+ACGC+CGGCAT against CCT+ACGC+CGGCATCC: distance 4, shift
    +2, flag oth, match runs [1, 7], the C-under-G mismatch routed to
    letters_g, the CC tail to letters_n."""
    ref = BinRecord("AACGTACGCCGGCAT", 5, False, 0)
    cur = BinRecord("CCTACGCCGGCATCC", 3, False, 1)
    dist, shift, mism = align_and_score(cur, ref)
    assert dist == 4
    assert shift == 2
    assert mism == [1]
    res = best_reference(cur, [ref])
    assert res.flag == FLAG_OTH
    streams = encode_bin([ref, cur], sig_len=4)
    assert streams.matches == bytes([1, 7])
    assert streams.letters_g == bytes([1])  # reduced code of C under G
    assert streams.letters_n == b"CC"
    assert streams.shift == bytes([4])      # +2, zigzag coded


# ---------------------------------------------------------------------------
# 3. end-to-end losslessness across 50 randomized corpora

def _random_corpus(rng: random.Random) -> list:
    reads = []
    genome = random_read(rng, rng.randrange(500, 4000), n_rate=0.002)
    for _ in range(rng.randrange(80, 300)):
        length = rng.randrange(36, 152)
        if len(genome) > length:
            at = rng.randrange(len(genome) - length)
            reads.append(genome[at:at + length])
        else:
            reads.append(random_read(rng, length))
    # N runs punched into a few sampled reads
    for _ in range(rng.randrange(1, 12)):
        k = rng.randrange(len(reads))
        seq = list(reads[k])
        at = rng.randrange(len(seq))
        for i in range(at, min(len(seq), at + rng.randrange(1, 30))):
            seq[i] = "N"
        reads[k] = "".join(seq)
    # duplicates, all-N reads, and reads shorter than p + z
    for _ in range(rng.randrange(1, 20)):
        reads.append(reads[rng.randrange(len(reads))])
    reads += ["N" * rng.randrange(1, 60) for _ in range(rng.randrange(4))]
    reads += [random_read(rng, rng.randrange(1, 20), n_rate=0.1)
              for _ in range(rng.randrange(8))]
    rng.shuffle(reads)
    return reads


def test_c3_end_to_end_losslessness(tmp_path):
    """50 randomized corpora (lengths 36-151, N runs, duplicates,
    all-N reads, sub-p+z reads) survive the full pipeline with their
    read multisets intact."""
    for trial in range(50):
        rng = random.Random(1000 + trial)
        reads = _random_corpus(rng)
        base = tmp_path / f"t{trial}"
        base.mkdir()
        with open(base / "in.fastq", "w") as fh:
            for i, seq in enumerate(reads):
                fh.write(f"@r{i}\n{seq}\n+\n{'I' * len(seq)}\n")
        bin_encode([base / "in.fastq"], base / "b", SignatureParams())
        pack_encode(base / "b", base / "c")
        pack_decode(base / "c", base / "out.dna")
        got = oracles.read_multiset(base / "out.dna")
        assert got == sorted(reads), f"corpus {trial} not restored"


# ---------------------------------------------------------------------------
# 4. desk-scale compression ratios and the coverage trend

def _pack_bpb(tmp_path, tag, coverage, error_rate, reference) -> float:
    fastq = tmp_path / f"{tag}.fastq"
    count = int(coverage * len(reference) / 100)
    simulate_fastq(reference, count, 100, error_rate, 77, fastq)
    rc = main(["bin", "e", "-i", str(fastq), "-o",
               str(tmp_path / f"{tag}b")])
    assert rc == 0
    fastq.unlink()
    rc = main(["pack", "e", "-i", str(tmp_path / f"{tag}b"), "-o",
               str(tmp_path / f"{tag}c"), "--json"])
    assert rc == 0
    data = (tmp_path / f"{tag}c.cdna").stat().st_size
    meta = (tmp_path / f"{tag}c.cmeta").stat().st_size
    return 8.0 * (data + meta) / (count * 100)


def test_c4_desk_scale_ratio_ordering(tmp_path):
    """On a 10 Mbp random reference with 100 bp reads: at 45x,
    bpb(clean) < bpb(1% errors) < 2.0 with bpb(clean) < 0.9, and the
    clean bpb falls monotonically across 1x, 5x, 15x, 45x."""
    reference = random_reference(10_000_000, 2026)
    ladder = {}
    for cov in (1, 5, 15, 45):
        ladder[cov] = _pack_bpb(tmp_path, f"c{cov}", cov, 0.0, reference)
    noisy = _pack_bpb(tmp_path, "n45", 45, 0.01, reference)
    assert ladder[45] < 0.9
    assert ladder[45] < noisy < 2.0
    assert ladder[1] > ladder[5] > ladder[15] > ladder[45]


# ---------------------------------------------------------------------------
# 5. signature scan equals brute-force enumeration

def test_c5_signature_oracle_equivalence():
    """find_signature agrees with full enumeration of allowed p-mers
    in both orientations over 10^5 random reads, for p in 3..8 and
    skip zones 0, 6, 12."""
    combos = [(p, z) for p in range(3, 9) for z in (0, 6, 12)]
    per_combo = 100_000 // len(combos)
    for p, z in combos:
        rng = random.Random(p * 100 + z)
        params = SignatureParams(length=p, zone=z)
        for _ in range(per_combo):
            seq = random_read(rng, rng.randrange(1, 110), n_rate=0.03)
            got = find_signature(seq, params)
            want = oracles.brute_signature(seq, p, z)
            if want is None:
                assert got is None, (p, z, seq)
                assert bin_of(got, params) == params.n_bin
            else:
                assert got is not None, (p, z, seq)
                assert (got.sig, got.pos, got.rev) == want, (p, z, seq)


# ---------------------------------------------------------------------------
# 6. closed-form binomial accuracy claim (known-false; kept honest)

def test_c6_binomial_form_accuracy():
    """Claim under test: for every n <= 10^4 the difference form
    n log n - (n-m) log(n-m) - m log m stays within 0.1% of exact
    log2 C(n, m). The sqrt(2 pi n) terms it drops are unbounded in
    relative terms near the edges (n=2, m=1 gives 2.0 vs 1.0 bits),
    so this fails immediately and is left failing on purpose."""
    for n in range(1, 10_001):
        for m in sorted({1, 2, n // 3, n // 2, n - 1}):
            if not 1 <= m < n:
                continue
            approx = log2_binomial_bits(n, m)
            exact = log2_binomial_bits(n, m, exact=True)
            rel = abs(approx - exact) / exact if exact else 0.0
            assert rel <= 0.001, (
                f"relative error {rel:.1%} at n={n}, m={m}: "
                f"closed form {approx:.6f} vs exact {exact:.6f} bits")


# ---------------------------------------------------------------------------
# 7. entropy coder round-trips and the uniform-input floor

def _big_inputs(alpha: int, n: int):
    rng = np.random.default_rng(alpha)
    yield "random", rng.integers(0, alpha, n, dtype=np.uint8).tobytes()
    yield "constant", bytes([alpha - 1]) * n
    unit = bytes(range(min(alpha, 97)))
    yield "periodic", (unit * (n // len(unit) + 1))[:n]


def test_c7_entropy_coder_correctness():
    """RC and CM byte coders round-trip random, constant and periodic
    inputs of 10^7 symbols, and neither beats the Shannon bound on
    i.i.d. uniform input by more than 0.5%."""
    n = 10**7
    for kind, data in _big_inputs(4, n):
        coded = rc_encode(data, 4)
        assert rc_decode(coded, n, 4) == data, f"rc {kind}"
        if kind == "random":
            assert 8 * len(coded) >= 0.995 * n * 2.0
    for kind, data in _big_inputs(256, n):
        coded = cm_encode(data)
        assert cm_decode(coded, n) == data, f"cm {kind}"
        if kind == "random":
            assert 8 * len(coded) >= 0.995 * n * 8.0


# ---------------------------------------------------------------------------
# 8. archives do not depend on the thread count

def test_c8_thread_determinism(tmp_path):
    """bin + pack with -t1 and -t8 produce byte-identical archives."""
    reference = random_reference(300_000, 5)
    fastq = tmp_path / "in.fastq"
    simulate_fastq(reference, 30_000, 100, 0.01, 11, fastq)
    blobs = []
    for t in (1, 8):
        rc = main(["bin", "e", "-i", str(fastq), "-o",
                   str(tmp_path / f"b{t}"), "-t", str(t),
                   "-b", "1"])
        assert rc == 0
        rc = main(["pack", "e", "-i", str(tmp_path / f"b{t}"), "-o",
                   str(tmp_path / f"p{t}"), "-t", str(t)])
        assert rc == 0
        blobs.append(((tmp_path / f"b{t}.bdna").read_bytes(),
                      (tmp_path / f"p{t}.cdna").read_bytes(),
                      (tmp_path / f"p{t}.cmeta").read_bytes()))
    assert blobs[0][0] == blobs[1][0], "stage-1 bin data differs"
    assert blobs[0][1] == blobs[1][1], "archive payload differs"
    assert blobs[0][2] == blobs[1][2], "archive metadata differs"
