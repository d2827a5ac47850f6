import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


def random_read(rng: random.Random, length: int, n_rate: float = 0.0) -> str:
    bases = "ACGT"
    out = []
    for _ in range(length):
        if n_rate and rng.random() < n_rate:
            out.append("N")
        else:
            out.append(bases[rng.randrange(4)])
    return "".join(out)


def overlapping_reads(rng: random.Random, genome_len: int, count: int,
                      read_len: int, n_rate: float = 0.0) -> list:
    """Reads sampled from one random genome, so bins see real overlap."""
    genome = random_read(rng, genome_len, n_rate)
    reads = []
    for _ in range(count):
        start = rng.randrange(genome_len - read_len + 1)
        reads.append(genome[start:start + read_len])
    return reads


def write_fastq(path, reads) -> None:
    with open(path, "w") as fh:
        for i, seq in enumerate(reads):
            fh.write(f"@r{i}\n{seq}\n+\n{'F' * len(seq)}\n")


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)
