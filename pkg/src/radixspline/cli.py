"""``radixspline`` command line: gen, build, bench, sweep."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time

from .bench import INDEX_KINDS, BenchConfig, run_bench, run_sweep, write_csv
from .datasets import KINDS, DatasetSpec, generate, load_dataset, write_keys, write_metadata
from .exceptions import CorrectnessError, RadixSplineError
from .index import build

EXIT_INCORRECT = 2


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _cmd_gen(args) -> int:
    spec = DatasetSpec(
        kind=args.kind, n=args.n, seed=args.seed, mu=args.mu, sigma=args.sigma,
        universe_bits=args.universe_bits, segments=args.segments, max_run=args.max_run,
    )
    keys = generate(spec)
    write_keys(args.out, keys)
    meta = write_metadata(args.out, spec)
    print(f"wrote {keys.size} keys to {args.out} (metadata: {meta})")
    return 0


def _cmd_build(args) -> int:
    label, keys = load_dataset(args.dataset)
    t0 = time.perf_counter_ns()
    index = build(keys, args.error, args.radix_bits)
    build_ns = time.perf_counter_ns() - t0
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(index.to_bytes())
    summary = {
        "dataset": label,
        "keys": index.num_keys,
        "error": index.error,
        "radix_bits": index.radix_bits,
        "knots": index.num_knots,
        "size_bytes": index.size_in_bytes(),
        "build_ns": build_ns,
    }
    print(json.dumps(summary))
    return 0


def _config(args, **extra) -> BenchConfig:
    return BenchConfig(
        dataset=args.dataset,
        probes=args.probes,
        seed=args.seed,
        reps=args.reps,
        absent_fraction=args.absent_fraction,
        stride=args.stride,
        **extra,
    )


def _cmd_bench(args) -> int:
    cfg = _config(args, index=args.index, error=args.error, radix_bits=args.radix_bits)
    result = run_bench(cfg)
    write_csv([result], args.csv)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config(args, errors=_int_list(args.errors), radix_bits_grid=_int_list(args.radix_bits_grid))
    rows = run_sweep(cfg)
    write_csv(rows, args.csv)
    if any(r.status.startswith("incorrect") for r in rows):
        return EXIT_INCORRECT
    return 0 if all(r.status == "ok" for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radixspline", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic key file")
    gen.add_argument("--kind", choices=KINDS, required=True)
    gen.add_argument("-n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--mu", type=float, default=0.0)
    gen.add_argument("--sigma", type=float, default=2.0)
    gen.add_argument("--universe-bits", type=int, default=64)
    gen.add_argument("--segments", type=int, default=16)
    gen.add_argument("--max-run", type=int, default=1, help="repeat each key 1..MAX_RUN times")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen)

    def add_dataset(p):
        p.add_argument("--dataset", required=True,
                       help="key file path, or a spec such as lognormal:n=1000000,seed=1")

    def add_rs(p):
        p.add_argument("--error", type=int, default=32)
        p.add_argument("--radix-bits", type=int, default=18)

    def add_timing(p):
        p.add_argument("--probes", type=int, default=1_000_000,
                       help="lookup count (use 10000000 for full-scale runs)")
        p.add_argument("--seed", type=int, default=42, help="probe seed")
        p.add_argument("--reps", type=int, default=1)
        p.add_argument("--absent-fraction", type=float, default=0.0,
                       help="share of probes drawn over the key range instead of from the keys")
        p.add_argument("--stride", type=int, default=32, help="sampled index stride")
        p.add_argument("--csv", default="-", help="output CSV path ('-' for stdout)")

    b = sub.add_parser("build", help="build an index and print its statistics")
    add_dataset(b)
    add_rs(b)
    b.add_argument("--out", help="write the serialized index here")
    b.set_defaults(func=_cmd_build)

    be = sub.add_parser("bench", help="time one index configuration")
    add_dataset(be)
    be.add_argument("--index", choices=INDEX_KINDS, default="rs")
    add_rs(be)
    add_timing(be)
    be.set_defaults(func=_cmd_bench)

    sw = sub.add_parser("sweep", help="RadixSpline error x radix-bits grid")
    add_dataset(sw)
    sw.add_argument("--errors", default="2,4,8,16,32,64,128,256")
    sw.add_argument("--radix-bits-grid", default="10,12,14,16,18,20,22,24")
    add_timing(sw)
    sw.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CorrectnessError as exc:
        print(f"correctness failure: {exc}", file=sys.stderr)
        return EXIT_INCORRECT
    except (RadixSplineError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
