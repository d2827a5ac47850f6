"""Command line front end.

    sigpress bin e   -i reads.fastq -o reads      FASTQ -> .bdna/.bmeta
    sigpress bin d   -i reads -o reads.dna        bins -> DNA text
    sigpress pack e  -i reads -o reads            bins -> .cdna/.cmeta
    sigpress pack d  -i reads -o reads.dna        archive -> DNA text
    sigpress bound   -g 3e9 -n 1.25e9 -l 100      coding lower bound
    sigpress simulate --random-ref 1000000 ...    synthetic FASTQ

Summaries go to stderr so stdout stays clean for --json. Exit codes:
0 success, 1 usage, 2 data or I/O failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .bounds import BoundSpec, bound_report
from .errors import SigpressError
from .pipeline import bin_decode, bin_encode, pack_decode, pack_encode
from .refcoder import MatchParams
from .signature import SignatureParams
from .simulate import load_reference, random_reference, simulate_fastq

MBIT = 1e6


class _Parser(argparse.ArgumentParser):
    """argparse, but usage errors exit 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _count(value: str) -> int:
    """Integer argument that also accepts 3e9 style floats."""
    n = int(float(value))
    if n != float(value):
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer")
    return n


def _default_threads() -> int:
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="sigpress",
                  description="reference-free DNA read compressor")
    sub = top.add_subparsers(dest="command", required=True,
                             parser_class=_Parser)

    b = sub.add_parser("bin", help="group reads by signature on disk")
    b.add_argument("mode", choices=("e", "d"),
                   help="e: FASTQ to bins, d: bins to DNA text")
    b.add_argument("-i", dest="input", action="append", default=[],
                   metavar="PATH", help="input file (repeatable) / "
                   "bin prefix in mode d")
    b.add_argument("-f", dest="file_list", metavar="LIST",
                   help="space-separated list of input files")
    b.add_argument("-o", dest="output", required=True, metavar="PATH",
                   help="output bin prefix / DNA text path in mode d")
    b.add_argument("-g", dest="gzipped", action="store_true",
                   help="inputs are gzip-compressed")
    b.add_argument("-p", dest="sig_len", type=int, default=8,
                   metavar="LEN", help="signature length (default 8)")
    b.add_argument("-s", dest="zone", type=int, default=12, metavar="LEN",
                   help="signature-free suffix length (default 12)")
    b.add_argument("-b", dest="block_mb", type=_count, default=256,
                   metavar="MB", help="input block size (default 256)")
    b.add_argument("-t", dest="threads", type=int,
                   default=_default_threads(), metavar="N",
                   help="worker threads (default: all cores)")
    b.add_argument("--json", action="store_true",
                   help="machine-readable summary on stdout")
    b.set_defaults(func=_cmd_bin)

    p = sub.add_parser("pack", help="compress binned reads")
    p.add_argument("mode", choices=("e", "d"),
                   help="e: bins to archive, d: archive to DNA text")
    p.add_argument("-i", dest="input", required=True, metavar="PREFIX",
                   help="bin prefix (mode e) / archive prefix (mode d)")
    p.add_argument("-o", dest="output", required=True, metavar="PATH",
                   help="archive prefix / DNA text path in mode d")
    p.add_argument("-e", dest="max_dist", type=int, default=0,
                   metavar="COST", help="match rejection threshold "
                   "(default 0: half the read length)")
    p.add_argument("-m", dest="mismatch_cost", type=int, default=2,
                   metavar="COST", help="mismatch cost (default 2)")
    p.add_argument("-s", dest="insert_cost", type=int, default=1,
                   metavar="COST", help="unmatched-base cost (default 1)")
    p.add_argument("-w", dest="window", type=int, default=512,
                   metavar="N", help="reference search window "
                   "(default 512)")
    p.add_argument("-t", dest="threads", type=int,
                   default=_default_threads(), metavar="N",
                   help="worker threads (default: all cores)")
    p.add_argument("--json", action="store_true",
                   help="machine-readable summary on stdout")
    p.set_defaults(func=_cmd_pack)

    d = sub.add_parser("bound", help="information lower bound in bits")
    d.add_argument("-g", "--genome", dest="genome_len", type=_count,
                   required=True, metavar="BASES",
                   help="genome length (non-N bases)")
    d.add_argument("-n", "--reads", dest="num_reads", type=_count,
                   required=True, metavar="N", help="number of reads")
    d.add_argument("-l", "--length", dest="read_len", type=_count,
                   required=True, metavar="LEN", help="read length")
    d.add_argument("-e", "--error", dest="error_rate", type=float,
                   default=0.0, metavar="RATE",
                   help="substitution error rate (default 0)")
    d.add_argument("--json", action="store_true",
                   help="machine-readable summary on stdout")
    d.set_defaults(func=_cmd_bound)

    s = sub.add_parser("simulate", help="generate synthetic FASTQ reads")
    ref = s.add_mutually_exclusive_group(required=True)
    ref.add_argument("-r", "--reference", metavar="PATH",
                     help="reference sequence (FASTA or raw text)")
    ref.add_argument("--random-ref", dest="random_ref", type=_count,
                     metavar="BASES", help="draw a uniform random "
                     "reference of this length instead")
    amount = s.add_mutually_exclusive_group(required=True)
    amount.add_argument("-n", "--count", type=_count, metavar="N",
                        help="number of reads")
    amount.add_argument("-c", "--coverage", type=float, metavar="X",
                        help="read count from target coverage")
    s.add_argument("-l", "--length", dest="read_len", type=_count,
                   default=100, metavar="LEN",
                   help="read length (default 100)")
    s.add_argument("-e", "--error", dest="error_rate", type=float,
                   default=0.0, metavar="RATE",
                   help="substitution error rate (default 0)")
    s.add_argument("--seed", type=int, default=0, metavar="N",
                   help="RNG seed (default 0)")
    s.add_argument("-o", dest="output", required=True, metavar="PATH",
                   help="output FASTQ path")
    s.add_argument("--json", action="store_true",
                   help="machine-readable summary on stdout")
    s.set_defaults(func=_cmd_simulate)

    return top


def _say(line: str):
    print(line, file=sys.stderr)


def _finish(args, summary: dict) -> int:
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_bin(args) -> int:
    if args.mode == "e":
        inputs = list(args.input)
        if args.file_list:
            inputs.extend(args.file_list.split())
        if not inputs:
            raise SigpressError("no input files (use -i or -f)")
        params = SignatureParams(length=args.sig_len, zone=args.zone)
        info = bin_encode(inputs, args.output, params,
                          gzipped=args.gzipped,
                          block_bytes=args.block_mb * (1 << 20),
                          threads=args.threads)
        _say(f"binned {info['reads']} reads ({info['bases']} bases) "
             f"into {info['bins']} bins in {info['elapsed']:.1f}s")
        _say(f"bin data {info['data_bytes']} bytes, "
             f"catalog {info['meta_bytes']} bytes")
    else:
        if len(args.input) != 1:
            raise SigpressError("mode d takes exactly one -i bin prefix")
        info = bin_decode(args.input[0], args.output,
                          threads=args.threads)
        _say(f"restored {info['reads']} reads ({info['bases']} bases) "
             f"from {info['bins']} bins in {info['elapsed']:.1f}s")
    return _finish(args, info)


def _cmd_pack(args) -> int:
    if args.mode == "e":
        match = MatchParams(mismatch_cost=args.mismatch_cost,
                            insert_cost=args.insert_cost,
                            max_dist=args.max_dist, window=args.window)
        info = pack_encode(args.input, args.output, match,
                           threads=args.threads)
        _say(f"packed {info['reads']} reads ({info['bases']} bases) "
             f"from {info['bins']} bins in {info['elapsed']:.1f}s")
        flags = info["flags"]
        total = max(1, sum(flags.values()))
        _say("matches: " + ", ".join(
            f"{name} {100.0 * n / total:.1f}%"
            for name, n in flags.items()))
        _say(f"{info['bpb']:.4f} bits per base")
    else:
        info = pack_decode(args.input, args.output, threads=args.threads)
        _say(f"restored {info['reads']} reads ({info['bases']} bases) "
             f"from {info['bins']} bins in {info['elapsed']:.1f}s")
    return _finish(args, info)


def _cmd_bound(args) -> int:
    spec = BoundSpec(genome_len=args.genome_len,
                     num_reads=args.num_reads, read_len=args.read_len,
                     error_rate=args.error_rate)
    report = bound_report(spec)
    rows = [("genome model", "genome"),
            ("orientations", "orientations"),
            ("read starts", "starts"),
            ("substituted bases", "substituted"),
            ("error positions", "error_positions"),
            ("total", "total")]
    for label, key in rows:
        if key in report:
            _say(f"{label + ':':<19}{report[key] / MBIT:12.2f} Mbit")
    _say(f"{'lower bound:':<19}{report['bpb']:12.3f} bpb")
    return _finish(args, report)


def _cmd_simulate(args) -> int:
    if args.random_ref is not None:
        reference = random_reference(args.random_ref, args.seed)
    else:
        reference = load_reference(args.reference)
    if args.count is not None:
        count = args.count
    else:
        if args.coverage <= 0:
            raise SigpressError("coverage must be positive")
        count = max(1, math.ceil(args.coverage * len(reference)
                                 / args.read_len))
    info = simulate_fastq(reference, count, args.read_len,
                          args.error_rate, args.seed, args.output)
    _say(f"wrote {info['reads']} reads ({info['bases']} bases, "
         f"{info['coverage']:.1f}x) to {args.output}")
    return _finish(args, info)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SigpressError, OSError, ValueError) as exc:
        print(f"sigpress: error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
