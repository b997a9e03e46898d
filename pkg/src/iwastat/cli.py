"""Command-line front end.

Every subcommand prints deterministic output: numbers use 10 significant
digits with their error bound, and the only run-dependent text (timestamp) sits
in a header line that ``--no-header`` suppresses.  ``--json`` prints the same
values as one JSON document.

Exit codes: 0 success, 1 usage error, 2 invariant violation, 3 I/O error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from ._backend import BACKEND

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("iwastat")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _num(v) -> float:
    return float(f"{float(v):.10g}")


def _fmt(v) -> str:
    return f"{float(v):.10g}"


class Output:
    """Collects ``(key, value, bound)`` items and renders them as text or JSON."""

    def __init__(self):
        self.items: list[tuple[str, object, Optional[float]]] = []

    def add(self, key: str, value, bound: Optional[float] = None) -> None:
        self.items.append((key, value, bound))

    def add_density(self, key: str, dv) -> None:
        self.add(key, float(dv.value), dv.error_bound)

    def to_dict(self) -> dict:
        doc = {}
        for key, value, bound in self.items:
            if isinstance(value, float):
                value = _num(value)
            doc[key] = value if bound is None else {"value": value, "error_bound": _num(bound)}
        return doc

    def to_text(self) -> str:
        lines = []
        for key, value, bound in self.items:
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = _fmt(value)
            elif isinstance(value, (list, dict)):
                text = json.dumps(value, separators=(",", ":"))
            elif value is None:
                text = "none"
            else:
                text = str(value)
            if bound is not None:
                text += f" ± {_fmt(bound)}"
            lines.append(f"{key}={text}")
        return "\n".join(lines) + "\n"


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _resolved_config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "json", "no_header", "verbose")}
    for k, v in cfg.items():
        if isinstance(v, Path):
            cfg[k] = str(v)
    return cfg


def _cache_dir(args) -> Optional[Path]:
    if getattr(args, "cache_dir", None):
        return Path(args.cache_dir)
    env = os.environ.get("IWASTAT_CACHE")
    return Path(env) if env else None


def _primes(text: str) -> list[int]:
    try:
        out = sorted({int(v) for v in text.split(",") if v.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad prime list {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty prime list")
    return out


# --- subcommands --------------------------------------------------------------


def cmd_densities(args, out: Output) -> int:
    from .cldensity import (
        density_rank_exact,
        density_rank_ge,
        density_rank_ge_1,
        lambda_lower_bound,
        pochhammer,
        verify_sum_product_identity,
    )

    p, n = args.p, args.n
    if n < 1:
        raise ValueError("--n must be >= 1")
    out.add_density("pochhammer", pochhammer(p))
    for j in range(n + 1):
        out.add_density(f"rank_eq_{j}", density_rank_exact(p, j))
    ge1 = density_rank_ge_1(p)
    value = float(ge1.value)
    bound = ge1.error_bound
    for j in range(1, n):
        dj = density_rank_exact(p, j)
        value -= float(dj.value)
        bound += dj.error_bound + 2.0**-52
    out.add(f"rank_ge_{n}_by_subtraction", max(value, 0.0), bound)
    out.add_density(f"rank_ge_{n}", density_rank_ge(p, n))
    out.add_density(f"lambda_ge_{n}_lower_bound", lambda_lower_bound(p, n))
    out.add("identity_q", f"1/{p}")
    out.add("identity_terms", n)
    out.add("identity_residual", verify_sum_product_identity(Fraction(1, p), n))
    return EXIT_OK


def cmd_classgroup(args, out: Output) -> int:
    from .classgroup import class_number_analytic, group_structure

    g = group_structure(args.delta)
    out.add("delta", args.delta)
    out.add("h", g.order)
    out.add("divisors", list(g.divisors))
    for p in args.primes or []:
        out.add(f"r_{p}", g.p_rank(p))
    if args.check:
        h2 = class_number_analytic(args.delta)
        out.add("h_analytic", h2)
        if h2 != g.order:
            return EXIT_INVARIANT
    return EXIT_OK


def cmd_lambda(args, out: Output) -> int:
    from .iwasawa import gold_criterion, lambda_invariant, splitting_of

    res = lambda_invariant(args.delta, args.p, max_level=args.max_level)
    out.add("delta", args.delta)
    out.add("p", args.p)
    out.add("splitting", splitting_of(args.delta, args.p).value)
    out.add("lambda", res.lam)
    out.add("stable", res.stable)
    out.add("level_used", res.level_used)
    out.add("method", res.method.value)
    if args.gold:
        try:
            out.add("gold_lambda_ge_2", gold_criterion(args.delta, args.p))
        except ValueError:
            out.add("gold_lambda_ge_2", None)
    return EXIT_OK


def _progress(hi: int, n: int) -> None:
    log.info("block done: |D| <= %d, %d records", hi, n)


def cmd_sweep(args, out: Output) -> int:
    from .sweep import check_invariants, report, run_sweep, summarize

    ckpt = args.checkpoint
    cache = _cache_dir(args)
    if ckpt is None and cache is not None:
        tag = "-".join(map(str, args.primes))
        ckpt = cache / f"sweep-p{tag}-c{args.lambda_ceiling}-L{args.max_level}.jsonl"
    records = run_sweep(
        args.x,
        args.primes,
        lambda_ceiling=args.lambda_ceiling,
        workers=args.workers,
        checkpoint_path=ckpt,
        max_level=args.max_level,
        block_size=args.block_size,
        progress=_progress,
    )
    densities = summarize(records, args.primes, args.lambda_ceiling)
    checks = check_invariants(records, args.primes)
    out.add("x", args.x)
    out.add("primes", list(args.primes))
    out.add("fields", len(records))
    if ckpt is not None:
        out.add("checkpoint", str(ckpt))
    for d in densities:
        out.add(f"{d.family}@{d.x}.empirical", d.empirical)
        out.add(f"{d.family}@{d.x}.count", f"{d.family_count}/{d.total_count}")
        if d.predicted is not None:
            kind = "lower_bound" if d.predicted_kind == "lower_bound" else "predicted"
            out.add(f"{d.family}@{d.x}.{kind}", float(d.predicted.value), d.predicted.error_bound)
        if d.excluded:
            out.add(f"{d.family}@{d.x}.excluded", d.excluded)
    for c in checks:
        out.add(f"check.{c.name}", "pass" if c.passed else "FAIL")
    if args.out is not None:
        paths = report(records, densities, args.out, args.x, args.primes, svg=args.svg)
        out.add("written", [str(p) for p in paths])
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVARIANT


def cmd_hunt(args, out: Output) -> int:
    from .sweep import hunt_stream

    found = hunt_stream(args.x, args.criterion, start=args.start, progress=_progress)
    out.add("range", f"{args.start}..{args.x}")
    for crit, hits in found.items():
        out.add(f"{crit}.count", len(hits))
        out.add(f"{crit}.smallest", hits[0] if hits else None)
        if not hits:
            out.add(f"{crit}.note", f"none with {args.start} <= |D| <= {args.x}")
        else:
            out.add(f"{crit}.first", hits[: args.show])
    return EXIT_OK


def cmd_matrix_sim(args, out: Output) -> int:
    from .randmatrix import exhaustive_corank_distribution, sample_corank_distribution

    if args.exhaustive:
        hist = exhaustive_corank_distribution(args.p, args.size)
    else:
        hist = sample_corank_distribution(args.p, args.size, args.trials, args.seed, workers=args.workers)
    if args.csv is not None:
        Path(args.csv).write_text(hist.to_csv(), encoding="utf-8")
    out.add("p", args.p)
    out.add("size", args.size)
    out.add("trials", hist.trials)
    for k in range(min(args.size, args.show_max) + 1):
        out.add(f"corank_{k}.count", hist.counts.get(k, 0))
        out.add(f"corank_{k}.empirical", hist.empirical(k))
        out.add(f"corank_{k}.predicted", hist.predicted(k))
    out.add("total_variation", hist.total_variation())
    return EXIT_OK


def cmd_verify(args, out: Output) -> int:
    from .verify import run_all

    checks = run_all(
        classgroup_x=args.classgroup_x,
        lambda_x=args.lambda_x,
        primes=args.primes,
        trials=args.trials,
        seed=args.seed,
    )
    for c in checks:
        out.add(f"{c.name}", "pass" if c.passed else "FAIL")
        out.add(f"{c.name}.detail", c.detail)
    ok = all(c.passed for c in checks)
    out.add("result", "pass" if ok else "FAIL")
    if args.out is not None:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        doc = {"schema_version": "1", "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks]}
        (path / "verify.json").write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return EXIT_OK if ok else EXIT_INVARIANT


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="print one JSON document")
    common.add_argument("--no-header", action="store_true", help="omit the timestamped config header")
    common.add_argument("--cache-dir", type=Path, default=None, help="default checkpoint directory (else $IWASTAT_CACHE)")
    common.add_argument("-v", "--verbose", action="store_true", help="log one line per block to stderr")

    parser = _Parser(prog="iwastat", description="Class groups, lambda-invariants and Cohen-Lenstra statistics.")
    parser.add_argument("--version", action="version", version=f"iwastat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("densities", parents=[common], help="density formulas for one prime")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_densities)

    p = sub.add_parser("classgroup", parents=[common], help="structure of Cl(D)")
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--primes", type=_primes, default=None, help="also print these p-ranks")
    p.add_argument("--check", action="store_true", help="confirm h with the analytic formula")
    p.set_defaults(func=cmd_classgroup)

    p = sub.add_parser("lambda", parents=[common], help="Iwasawa lambda-invariant")
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--max-level", type=int, default=6)
    p.add_argument("--gold", action="store_true", help="also evaluate the Gold congruence")
    p.set_defaults(func=cmd_lambda)

    p = sub.add_parser("sweep", parents=[common], help="sweep all fundamental |D| <= X")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--primes", type=_primes, default=[3, 5])
    p.add_argument("--lambda-ceiling", type=int, default=2000)
    p.add_argument("--max-level", type=int, default=6)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--block-size", type=int, default=4096, help="|D| values per work unit")
    p.add_argument("--out", type=Path, default=None, help="directory for CSV/JSON reports")
    p.add_argument("--svg", action="store_true", help="also write SVG histograms")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("hunt", parents=[common], help="streaming class-group example hunt")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--start", type=int, default=1)
    p.add_argument("--criterion", action="append", required=True, help="e.g. rank_ge:3:3 or contains:15:2")
    p.add_argument("--show", type=int, default=10)
    p.set_defaults(func=cmd_hunt)

    p = sub.add_parser("matrix-sim", parents=[common], help="random-matrix corank histogram")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--exhaustive", action="store_true", help="enumerate all matrices instead of sampling")
    p.add_argument("--csv", type=Path, default=None, help="write the histogram CSV here")
    p.add_argument("--show-max", type=int, default=4)
    p.set_defaults(func=cmd_matrix_sim)

    p = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    p.add_argument("--classgroup-x", type=int, default=10000)
    p.add_argument("--lambda-x", type=int, default=2000)
    p.add_argument("--primes", type=_primes, default=[3, 5])
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    from .sweep import CheckpointError, InvariantViolation

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    out = Output()
    try:
        code = args.func(args, out)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (CheckpointError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, OverflowError) as exc:
        print(f"iwastat {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    config = _resolved_config(args)
    if args.json:
        doc = out.to_dict()
        if not args.no_header:
            doc = {"header": {"version": __version__, "backend": BACKEND, "generated_at": _timestamp(), "config": config}, **doc}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = out.to_text()
        if not args.no_header:
            head = f"# iwastat {__version__} backend={BACKEND} generated_at={_timestamp()} config={json.dumps(config, sort_keys=True)}\n"
            text = head + text
    sys.stdout.write(text)
    sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
