"""Information-theoretic lower bounds for simulated read sets.

How few bits could any compressor spend on reads sampled uniformly
from a known-length genome? Enough to rebuild the genome itself (2
bits per base), one orientation bit per read, and the multiset of
read start positions, counted as a binomial coefficient through the
Stirling difference form

    log2 C(n, m) ~ n log2 n - (n - m) log2 (n - m) - m log2 m.

With substitution errors, add the identity of each substituted base
(log2 3 bits) and the choice of error positions, another binomial
term. Results are plain bits; the CLI scales to decimal megabits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

LOG2_3 = math.log2(3.0)


@dataclass(frozen=True)
class BoundSpec:
    """A simulated sequencing experiment, by the numbers."""

    genome_len: int
    num_reads: int
    read_len: int
    error_rate: float = 0.0

    def __post_init__(self):
        if self.genome_len <= 0 or self.num_reads <= 0 or self.read_len <= 0:
            raise ValueError("genome, read count and read length "
                             "must be positive")
        if not 0.0 <= self.error_rate <= 1.0:
            raise ValueError("error rate must be within [0, 1]")

    @property
    def total_bases(self) -> int:
        return self.num_reads * self.read_len

    @property
    def coverage(self) -> float:
        return self.total_bases / self.genome_len


def _xlog2(x: float) -> float:
    return x * math.log2(x) if x > 0 else 0.0


def log2_binomial_bits(range_n: int, count_m: int,
                       exact: bool = False) -> float:
    """log2 of C(range_n, count_m) in bits.

    The default is the Stirling difference form above (0 log 0 = 0).
    exact=True evaluates the coefficient by log summation instead,
    which is exact up to float rounding but linear in count_m.
    """
    n, m = range_n, count_m
    if m < 0 or n < 0 or m > n:
        raise ValueError("need 0 <= m <= n")
    if exact:
        m = min(m, n - m)
        return sum(math.log2(n - k) - math.log2(k + 1) for k in range(m))
    return _xlog2(n) - _xlog2(n - m) - _xlog2(m)


def clean_bound_bits(spec: BoundSpec) -> dict:
    """Bit budget per component for error-free reads."""
    genome = 2.0 * spec.genome_len
    orientations = float(spec.num_reads)
    starts = log2_binomial_bits(spec.genome_len + spec.num_reads,
                                spec.num_reads)
    return {"genome": genome, "orientations": orientations,
            "starts": starts, "total": genome + orientations + starts}


def noisy_bound_bits(spec: BoundSpec) -> dict:
    """Clean budget plus the two substitution-error components."""
    parts = clean_bound_bits(spec)
    errors = round(spec.error_rate * spec.total_bases)
    substituted = errors * LOG2_3
    positions = log2_binomial_bits(spec.total_bases, errors)
    parts["substituted"] = substituted
    parts["error_positions"] = positions
    parts["total"] += substituted + positions
    return parts


def clean_lower_bound(spec: BoundSpec) -> float:
    """Bits per base below which error-free reads cannot be coded."""
    return clean_bound_bits(spec)["total"] / spec.total_bases


def noisy_lower_bound(spec: BoundSpec) -> float:
    """As clean_lower_bound, with uniform substitution errors."""
    return noisy_bound_bits(spec)["total"] / spec.total_bases


def bound_report(spec: BoundSpec) -> dict:
    """Component table for the CLI: bits plus the bpb bound."""
    parts = noisy_bound_bits(spec) if spec.error_rate > 0 \
        else clean_bound_bits(spec)
    parts["bpb"] = parts["total"] / spec.total_bases
    parts["coverage"] = spec.coverage
    return parts
