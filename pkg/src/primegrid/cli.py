"""Command line front end: ``primegrid <command> ...``.

Every command writes a small run manifest (parameters, sha256 digests of the
files it read and wrote, versions, wall time) next to its outputs.

Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numeric or
resource error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analytic, gaps, optimizer, seqgen, shiftmodel, trail, words
from .errors import (
    DataError,
    DomainError,
    GenerationError,
    InvariantViolation,
    NumericError,
    ResourceError,
)
from .signature import DEFAULT_SEGMENT_SIZE

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def count(text: str) -> int:
    """Non-negative integer that may be written as ``1e7``."""
    try:
        v = float(text) if any(c in text for c in "eE.") else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if v < 0 or int(v) != v:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return int(v)


def int_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must look like lo:hi, got {text!r}")
    if lo > hi:
        raise argparse.ArgumentTypeError("range needs lo <= hi")
    return lo, hi


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


class Run:
    """Collects what a command read and wrote, then emits the manifest."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.params = {k: v for k, v in vars(args).items() if k not in ("func", "manifest_dir")}
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.t0 = time.perf_counter()

    def manifest(self) -> dict:
        return {
            "command": self.command,
            "parameters": {k: (str(v) if isinstance(v, Path) else v) for k, v in self.params.items()},
            "inputs": {str(p): sha256(p) for p in self.inputs if p.is_file()},
            "outputs": {str(p): sha256(p) for p in self.outputs if p.is_file()},
            "versions": {"engine": __version__, "format": trail.FORMAT_VERSION},
            "wall_time": round(time.perf_counter() - self.t0, 6),
        }

    def finish(self, directory: Path) -> Path:
        path = Path(directory) / f"{self.command}.manifest.json"
        write_text(path, dump_json(self.manifest()))
        return path


def emit(obj, out: Path | None, run: Run) -> None:
    text = dump_json(obj)
    if out is None:
        sys.stdout.write(text)
    else:
        run.outputs.append(write_text(out, text))


def load_stops(path: Path, run: Run) -> trail.PrimeStops:
    """A checkpoint directory or a raw stops file (assumed to start at p_1)."""
    path = Path(path)
    if path.is_dir():
        store = trail.TrailStore.open(path)
        run.inputs += [store.checkpoint_path, store.stops_path]
        return store.stops()
    if not path.exists():
        raise DataError(f"no such stops file: {path}")
    run.inputs.append(path)
    return trail.PrimeStops.from_file(path)


# ---------------------------------------------------------------------------
# commands


def cmd_trail(args, run: Run):
    if args.resume:
        store = trail.TrailStore.open(args.resume)
        if args.to is not None and args.to < store.manifest.next_n - 1:
            raise UsageError("--to is below what the checkpoint already covers")
    else:
        if args.to is None:
            raise UsageError("--to is required unless --resume is given")
        if args.checkpoint_dir is None:
            raise UsageError("--checkpoint-dir is required for a fresh run")
        start = max(2, args.from_)
        if start > args.to:
            raise UsageError("--from must not exceed --to")
        cp = trail.TrailCheckpoint.initial()
        if start > 2:
            # the trail is cumulative: integers below --from are processed but not stored
            cp = trail.advance(cp, start, None, args.segment_size, args.threads)
        store = trail.TrailStore.create(args.checkpoint_dir, cp, args.to)
    cp = store.run(args.to, args.segment_size, args.threads, args.max_segments)
    run.outputs += [store.checkpoint_path, store.stops_path]
    m = store.manifest
    done = cp.next_n > m.to_n
    summary = {
        "checkpoint_dir": str(store.directory),
        "complete": done,
        "next_n": cp.next_n,
        "to": m.to_n,
        "L_inf": cp.cumsum_linf,
        "prime_count": cp.prime_count,
        "stops_file": str(store.stops_path),
    }
    emit(summary, None, run)


def _stops_up_to(stops: trail.PrimeStops, n_max: int | None) -> np.ndarray:
    values = stops.values
    if n_max is None:
        return values
    k = len(trail.primes_up_to(n_max)) - stops.offset
    if k > len(values):
        raise DataError(f"stops cover only {stops.offset + len(values)} primes, need all primes <= {n_max}")
    return values[: max(k, 0)]


def cmd_gaps(args, run: Run):
    if args.classical:
        if args.n_max is None:
            raise UsageError("--classical needs --n-max")
        values = trail.primes_up_to(args.n_max)
    else:
        if args.stops is None:
            raise UsageError("--stops is required (or --classical)")
        values = _stops_up_to(load_stops(args.stops, run), args.n_max)
    series = gaps.gap_series(values, order=args.order, trail=not args.classical)
    hist = gaps.histogram(series, n_max=args.n_max, stamp=args.json is not None)
    if args.order == 2 and not args.full_range and args.range is None:
        hist = hist.clip(*gaps.D2_DEFAULT_RANGE)
    if args.range is not None:
        hist = hist.clip(*args.range)
    if args.hist:
        run.outputs.append(write_text(args.hist, hist.to_csv()))
    if args.json:
        run.outputs.append(write_text(args.json, hist.to_json()))
    summary = {
        "kind": series.kind,
        "values": len(series),
        "jumping_champions": hist.jumping_champions(),
    }
    if series.kind == "TrailD1":
        summary["first_index"] = {str(k): v for k, v in gaps.excluded_values_check(series).items()}
    if not args.hist and not args.json:
        sys.stdout.write(hist.to_csv())
    else:
        emit(summary, None, run)


def cmd_ratio(args, run: Run):
    stops = load_stops(args.stops, run)
    total = stops.offset + len(stops)
    primes = trail.primes_up_to(trail.nth_prime_upper_bound(total))[stops.offset : total]
    rows = trail.ratio_series(stops, primes, args.stride)
    lines = ["k,ratio"] + [f"{k},{r!r}" for k, r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        run.outputs.append(write_text(args.out, text))
    else:
        sys.stdout.write(text)


def cmd_pnt(args, run: Run):
    stops = load_stops(args.stops, run)
    a, b = gaps.pnt_ratios(args.k, stops)
    n = int(stops.values[args.k - stops.offset - 1])
    emit({"k": args.k, "N": n, "pi_inf": gaps.pi_infty(n, stops), "pi_log_over_N": a, "pi_over_li": b}, args.out, run)


def cmd_constants(args, run: Run):
    emit(analytic.all_constants(), args.out, run)


def cmd_find_word(args, run: Run):
    word = words.parse_word(args.word)
    primes = [int(p) for p in args.primes.split(",")]
    x, m = words.crt_locate(word, primes)
    found = words.search_word(word, primes, args.k_max, args.time_budget, args.total_budget)
    result = {"word": list(word), "primes": primes, "x": str(x), "M": str(m), "found": found is not None}
    if found is not None:
        loc, k = found
        result.update(location=str(loc), k=k, congruences_hold=words.congruences_hold(loc, word, primes))
    emit(result, args.out, run)


def cmd_markov(args, run: Run):
    emit(shiftmodel.example_report(args.which), args.out, run)


def _distribution(spec: str, run: Run) -> np.ndarray:
    if spec not in seqgen.BUILTIN:
        run.inputs.append(Path(spec))
    return seqgen.load_distribution(spec)


def cmd_simulate(args, run: Run):
    p = _distribution(args.dist, run)
    stats = seqgen.simulate(args.model, p, args.length, args.runs, args.seed)
    lines = [json.dumps(s.as_dict(), sort_keys=True) for s in stats]
    if args.out:
        run.outputs.append(write_text(args.out, "\n".join(lines) + "\n"))
    else:
        sys.stdout.write("\n".join(lines) + "\n")
    summary = seqgen.summarize(stats)
    summary.update(model=args.model, dist=args.dist, length=args.length, prng="numpy PCG64", seed=args.seed)
    emit(summary, args.report, run)


def cmd_optimize(args, run: Run):
    init = None if args.init is None else _distribution(args.init, run)
    cfg = optimizer.DEConfig(
        population=args.pop,
        weight=args.weight,
        crossover=args.crossover,
        strategy=args.strategy,
        generations=args.gens,
        eval_length=args.eval_length,
        eval_seed_policy=args.eval_seed_policy,
        eval_seed=args.seed if args.eval_seed is None else args.eval_seed,
        workers=args.threads,
        initial=init,
    )
    p, res = optimizer.inverse_fit(args.model, None, cfg, args.seed, log_scale=not args.linear)
    run.outputs.append(write_text(args.out, seqgen.distribution_csv(p)))
    report = {
        "model": args.model,
        "best_rms": res.value,
        "history": res.history,
        "evaluations": res.evaluations,
        "config": {
            "population": cfg.population,
            "weight": cfg.weight,
            "crossover": cfg.crossover,
            "strategy": cfg.strategy,
            "generations": cfg.generations,
            "eval_length": cfg.eval_length,
            "eval_seed_policy": cfg.eval_seed_policy,
            "eval_seed": cfg.eval_seed,
            "log_scale": not args.linear,
        },
        "seed": args.seed,
        "distribution": str(args.out),
    }
    emit(report, args.report, run)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="primegrid", description="Number trail and prime grid computations")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--manifest-dir", type=Path, default=Path("."), help="where <command>.manifest.json goes")
    sub = parser.add_subparsers(dest="command", required=True)
    threads_default = os.cpu_count() or 1

    p = sub.add_parser("trail", help="accumulate L_inf and record its value at every prime")
    p.add_argument("--from", dest="from_", type=count, default=2, help="first integer whose stop is stored")
    p.add_argument("--to", type=count, help="last integer processed (inclusive)")
    p.add_argument("--checkpoint-dir", type=Path, help="directory for checkpoint.json and the stops file")
    p.add_argument("--resume", type=Path, metavar="DIR", help="continue the run stored in DIR")
    p.add_argument("--segment-size", type=count, default=DEFAULT_SEGMENT_SIZE)
    p.add_argument("--threads", type=count, default=threads_default)
    p.add_argument("--max-segments", type=count, help="stop after this many segments, leaving a resumable checkpoint")
    p.set_defaults(func=cmd_trail)

    p = sub.add_parser("gaps", help="gap series histograms")
    p.add_argument("--stops", type=Path, help="checkpoint directory or stops file")
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    p.add_argument("--classical", action="store_true", help="gaps between primes instead of trail stops")
    p.add_argument("--n-max", type=count, help="only primes <= N")
    p.add_argument("--hist", type=Path, help="write the histogram as CSV")
    p.add_argument("--json", type=Path, help="write the histogram as JSON")
    p.add_argument("--range", type=int_range, help="keep bins lo:hi")
    p.add_argument("--full-range", action="store_true", help="do not clip second-order histograms to -60:60")
    p.set_defaults(func=cmd_gaps)

    p = sub.add_parser("ratio", help="L_inf(p_k)/p_k every STRIDE primes")
    p.add_argument("--stops", type=Path, required=True)
    p.add_argument("--stride", type=count, default=100000)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("pnt", help="prime counting ratios on the trail at L_inf(p_k)")
    p.add_argument("--stops", type=Path, required=True)
    p.add_argument("--k", type=count, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_pnt)

    p = sub.add_parser("constants", help="zeta based constants and letter densities")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("find-word", help="locate a norm word by the Chinese remainder theorem")
    p.add_argument("--word", required=True, help="'1111' or '17,30'")
    p.add_argument("--primes", required=True, help="comma separated, one per letter")
    p.add_argument("--k-max", "--kmax", type=count, default=10**6)
    p.add_argument("--time-budget", type=float, default=60.0, help="seconds per factorization")
    p.add_argument("--total-budget", type=float, help="seconds for the whole search")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_find_word)

    p = sub.add_parser("markov-example", help="calibrated Markov chains avoiding 1111 (and 11121112)")
    p.add_argument("--which", choices=sorted(shiftmodel.EXAMPLES), required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_markov)

    p = sub.add_parser("simulate", help="generate forbidden-word-free sequences and estimate c0")
    p.add_argument("--model", type=int, choices=seqgen.MODELS, required=True)
    p.add_argument("--dist", default="table3-p1", help="table3-p1, table3-p2 or a CSV with 26 rows")
    p.add_argument("--length", type=count, default=10**7)
    p.add_argument("--runs", type=count, default=1)
    p.add_argument("--seed", type=count, required=True)
    p.add_argument("--out", type=Path, help="per-run JSON lines")
    p.add_argument("--report", type=Path, help="summary JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="differential evolution for the input distribution")
    p.add_argument("--model", type=int, choices=(0, 1, 2), required=True, help="0 disables elimination")
    p.add_argument("--pop", type=count, default=40)
    p.add_argument("--gens", type=count, default=200)
    p.add_argument("--eval-length", type=count, default=10**6)
    p.add_argument("--strategy", choices=sorted(optimizer.STRATEGIES), default="best/1/bin")
    p.add_argument("--weight", type=float, default=0.7, help="DE weight F")
    p.add_argument("--crossover", type=float, default=0.5, help="DE crossover CR")
    p.add_argument("--eval-seed-policy", choices=optimizer.SEED_POLICIES, default="fixed")
    p.add_argument("--eval-seed", type=count, help="generator seed for evaluations (default: --seed)")
    p.add_argument("--init", help="seed the population with this distribution")
    p.add_argument("--linear", action="store_true", help="search p directly instead of log10 p")
    p.add_argument("--threads", type=count, default=1)
    p.add_argument("--seed", type=count, required=True)
    p.add_argument("--out", type=Path, required=True, help="best distribution as CSV")
    p.add_argument("--report", type=Path, help="run report JSON")
    p.set_defaults(func=cmd_optimize)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on malformed flags
    run = Run(args.command, args)
    try:
        args.func(args, run)
        run.finish(args.manifest_dir)
    except (UsageError, DomainError) as exc:
        parser.error(str(exc))  # exit 2
    except (DataError, InvariantViolation, OSError) as exc:
        print(f"primegrid: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, ResourceError, GenerationError) as exc:
        print(f"primegrid: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
