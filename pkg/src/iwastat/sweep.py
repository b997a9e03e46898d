"""Discriminant sweeps: per-field records, empirical densities, example hunts, reports.

Fields are processed in contiguous ``|D|`` blocks (block ``k`` covers
``k*B + 1 .. (k+1)*B``). Records stream to an append-only JSONL checkpoint in
ascending ``|D|``; a restarted sweep replays the file and continues after the
last complete record, so the final record list never depends on where a run
was interrupted or on the worker count.
"""

from __future__ import annotations

import csv
import json
import logging
import multiprocessing
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional, Sequence

from ._backend import kernels
from .arith import Splitting, count_fundamental, fundamental_mask, kronecker, require_odd_prime
from .classgroup import AbelianGroupStructure, elementary_divisors
from .cldensity import DensityValue, density_rank_exact, density_rank_ge, lambda_lower_bound
from .iwasawa import DEFAULT_MAX_LEVEL, LambdaResult, Method, lambda_invariant

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
BLOCK_SIZE = 4096
FSYNC_EVERY = 1000
DEFAULT_LAMBDA_CEILING = 2000

CSV_COLUMNS = ("delta", "h", "divisors", "p", "splitting", "r_p", "lambda", "lambda_stable", "method")


class InvariantViolation(AssertionError):
    pass


class CheckpointError(Exception):
    def __init__(self, path, message, line: Optional[int] = None):
        self.path = str(path)
        self.line = line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


class PartialDataError(ValueError):
    pass


@dataclass(frozen=True)
class PrimeEntry:
    p: int
    splitting: Splitting
    r_p: int
    lam: Optional[LambdaResult] = None

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "splitting": self.splitting.value,
            "r_p": self.r_p,
            "lambda": None if self.lam is None else self.lam.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PrimeEntry":
        lam = obj.get("lambda")
        return cls(obj["p"], Splitting(obj["splitting"]), obj["r_p"], None if lam is None else LambdaResult.from_dict(lam))


@dataclass(frozen=True)
class SweepRecord:
    delta: int
    h: int
    structure: AbelianGroupStructure
    entries: tuple[PrimeEntry, ...]

    def __post_init__(self):
        if self.structure.order != self.h:
            raise InvariantViolation(f"D={self.delta}: order {self.structure.order} != h {self.h}")
        for e in self.entries:
            if e.r_p != self.structure.p_rank(e.p):
                raise InvariantViolation(f"D={self.delta}: stored r_{e.p} disagrees with structure")
            if e.lam is not None and e.lam.stable and e.lam.lam < e.r_p:
                raise InvariantViolation(
                    f"D={self.delta}, p={e.p}: lambda={e.lam.lam} < r_p={e.r_p}"
                )

    @property
    def abs_delta(self) -> int:
        return -self.delta

    def entry(self, p: int) -> PrimeEntry:
        for e in self.entries:
            if e.p == p:
                return e
        raise KeyError(f"prime {p} not recorded for D={self.delta}")

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "h": self.h,
            "divisors": list(self.structure.divisors),
            "primes": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SweepRecord":
        return cls(
            obj["delta"],
            obj["h"],
            AbelianGroupStructure(tuple(obj["divisors"])),
            tuple(PrimeEntry.from_dict(e) for e in obj["primes"]),
        )


def compute_block(
    lo: int,
    hi: int,
    primes: Sequence[int],
    lambda_ceiling: int = DEFAULT_LAMBDA_CEILING,
    max_level: int = DEFAULT_MAX_LEVEL,
) -> list[SweepRecord]:
    """Records for every fundamental ``|D|`` in ``[lo, hi]``."""
    out = []
    for m, h, rows in kernels.block_class_groups(lo, hi, fundamental_mask(lo, hi)):
        d = -m
        g = AbelianGroupStructure(elementary_divisors(rows))
        entries = []
        for p in primes:
            k = kronecker(d, p)
            split = Splitting.SPLIT if k == 1 else Splitting.INERT if k == -1 else Splitting.RAMIFIED
            lam = lambda_invariant(d, p, max_level=max_level, h=h) if m <= lambda_ceiling else None
            entries.append(PrimeEntry(p, split, g.p_rank(p), lam))
        out.append(SweepRecord(d, h, g, tuple(entries)))
    return out


def _block_task(args):
    return compute_block(*args)


def _header(primes, lambda_ceiling, max_level) -> dict:
    return {
        "type": "header",
        "schema_version": SCHEMA_VERSION,
        "primes": list(primes),
        "lambda_ceiling": lambda_ceiling,
        "max_level": max_level,
    }


def load_checkpoint(path, expected_header: Optional[dict] = None) -> list[SweepRecord]:
    """Replay a checkpoint; a torn final line (no newline) is dropped and truncated away."""
    path = Path(path)
    records: list[SweepRecord] = []
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(path, f"cannot read checkpoint: {exc}") from exc
    if not raw:
        return records
    good_end = 0
    lines = raw.split(b"\n")
    complete = lines[:-1]
    if lines[-1]:
        log.warning("%s: dropping incomplete final line", path)
    last = 0
    for lineno, line in enumerate(complete, start=1):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CheckpointError(path, f"corrupt checkpoint line: {exc.msg}", lineno) from exc
        if lineno == 1:
            if obj.get("type") != "header":
                raise CheckpointError(path, "missing header", lineno)
            if obj.get("schema_version") != SCHEMA_VERSION:
                raise CheckpointError(path, f"unsupported schema {obj.get('schema_version')!r}", lineno)
            if expected_header is not None and obj != expected_header:
                raise CheckpointError(path, "checkpoint was written with different parameters", lineno)
        else:
            try:
                rec = SweepRecord.from_dict(obj)
            except (KeyError, TypeError, ValueError) as exc:
                raise CheckpointError(path, f"malformed record: {exc}", lineno) from exc
            if rec.abs_delta <= last:
                raise CheckpointError(path, "records out of order", lineno)
            last = rec.abs_delta
            records.append(rec)
        good_end += len(line) + 1
    if good_end != len(raw):
        with open(path, "r+b") as fh:
            fh.truncate(good_end)
    return records


class _CheckpointWriter:
    def __init__(self, path, header: dict, fresh: bool):
        self.path = Path(path)
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.fh = open(self.path, "a", encoding="utf-8")
        except OSError as exc:
            raise CheckpointError(path, f"cannot open checkpoint for writing: {exc}") from exc
        self.pending = 0
        if fresh:
            self._write(header)
            self.sync()

    def _write(self, obj: dict) -> None:
        self.fh.write(json.dumps(obj, separators=(",", ":")) + "\n")

    def write(self, rec: SweepRecord) -> None:
        self._write(rec.to_dict())
        self.pending += 1
        if self.pending >= FSYNC_EVERY:
            self.sync()

    def sync(self) -> None:
        self.fh.flush()
        os.fsync(self.fh.fileno())
        self.pending = 0

    def close(self) -> None:
        self.sync()
        self.fh.close()


def _blocks(start: int, stop: int, size: int) -> Iterator[tuple[int, int]]:
    lo = start
    while lo <= stop:
        hi = min(((lo - 1) // size + 1) * size, stop)
        yield lo, hi
        lo = hi + 1


def run_sweep(
    x: int,
    primes: Iterable[int] = (3, 5),
    lambda_ceiling: int = DEFAULT_LAMBDA_CEILING,
    workers: int = 1,
    checkpoint_path=None,
    max_level: int = DEFAULT_MAX_LEVEL,
    block_size: int = BLOCK_SIZE,
    progress: Optional[Callable[[int, int], None]] = None,
) -> list[SweepRecord]:
    """One record per fundamental ``|D| <= x``, ascending; resumable through ``checkpoint_path``."""
    x = int(x)
    if x < 3:
        raise ValueError("x must be at least 3")
    if block_size < 1:
        raise ValueError("block_size must be positive")
    primes = tuple(sorted(require_odd_prime(p) for p in set(primes)))
    header = _header(primes, lambda_ceiling, max_level)
    records: list[SweepRecord] = []
    writer = None
    if checkpoint_path is not None:
        path = Path(checkpoint_path)
        fresh = not path.exists() or path.stat().st_size == 0
        if not fresh:
            records = [r for r in load_checkpoint(path, header) if r.abs_delta <= x]
        writer = _CheckpointWriter(path, header, fresh)
    start = records[-1].abs_delta + 1 if records else 1
    tasks = [(lo, hi, primes, lambda_ceiling, max_level) for lo, hi in _blocks(start, x, block_size)]
    try:
        if workers > 1 and len(tasks) > 1:
            with multiprocessing.get_context("spawn").Pool(workers) as pool:
                _consume(pool.imap(_block_task, tasks), tasks, records, writer, progress)
        else:
            _consume(map(_block_task, tasks), tasks, records, writer, progress)
    finally:
        if writer is not None:
            writer.close()
    return records


def _consume(results, tasks, records, writer, progress) -> None:
    for (lo, hi, *_), block in zip(tasks, results):
        for rec in block:
            if writer is not None:
                writer.write(rec)
            records.append(rec)
        if writer is not None:
            writer.sync()
        if progress is not None:
            progress(hi, len(records))


# --- families -----------------------------------------------------------------


@dataclass(frozen=True)
class Family:
    """Named family of fields.

    ``rank_ge:p:n``, ``rank_eq:p:n``, ``lambda_ge:p:n``, ``contains:m:n``
    (``(Z/m)^n`` inside ``Cl(K)``) and ``lambda_all_ge:p1,p2,...:n``.
    """

    kind: str
    primes: tuple[int, ...]
    n: int

    KINDS = ("rank_ge", "rank_eq", "lambda_ge", "contains", "lambda_all_ge")

    @classmethod
    def parse(cls, text: str) -> "Family":
        try:
            kind, ps, n = text.split(":")
            primes = tuple(int(v) for v in ps.split(","))
            n = int(n)
        except ValueError:
            raise ValueError(f"bad family {text!r}; expected kind:p:n") from None
        if kind not in cls.KINDS:
            raise ValueError(f"unknown family kind {kind!r}")
        if kind != "lambda_all_ge" and len(primes) != 1:
            raise ValueError(f"{kind} takes a single modulus")
        if kind != "contains":
            for p in primes:
                require_odd_prime(p)
        elif primes[0] < 2:
            raise ValueError("modulus must be >= 2")
        if n < 0 or (n == 0 and kind != "rank_eq"):
            raise ValueError("n out of range")
        return cls(kind, primes, n)

    def __str__(self) -> str:
        return f"{self.kind}:{','.join(map(str, self.primes))}:{self.n}"

    @property
    def uses_lambda(self) -> bool:
        return self.kind.startswith("lambda")

    def member(self, rec: SweepRecord) -> Optional[bool]:
        """Membership, or ``None`` when a needed lambda is unsupported or unstable."""
        if self.kind == "rank_ge":
            return rec.structure.p_rank(self.primes[0]) >= self.n
        if self.kind == "rank_eq":
            return rec.structure.p_rank(self.primes[0]) == self.n
        if self.kind == "contains":
            return rec.structure.m_rank(self.primes[0]) >= self.n
        verdict = True
        for p in self.primes:
            lam = rec.entry(p).lam
            if lam is None:
                raise PartialDataError(f"lambda_{p} not computed for D={rec.delta}")
            if not lam.stable:
                return None
            verdict = verdict and lam.lam >= self.n
        return verdict

    def prediction(self) -> tuple[Optional[DensityValue], Optional[str]]:
        p, n = self.primes[0], self.n
        if self.kind == "rank_ge":
            return density_rank_ge(p, n), "density"
        if self.kind == "rank_eq":
            return density_rank_exact(p, n), "density"
        if self.kind == "lambda_ge":
            return lambda_lower_bound(p, n), "lower_bound"
        return None, None


@dataclass(frozen=True)
class DensityEstimate:
    family: str
    x: int
    family_count: int
    total_count: int
    empirical: float
    predicted: Optional[DensityValue]
    predicted_kind: Optional[str]
    abs_error: Optional[float]
    excluded: int = 0

    def __post_init__(self):
        if not (0 <= self.empirical <= 1) or self.family_count > self.total_count:
            raise ValueError("inconsistent density estimate")

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "x": self.x,
            "family_count": self.family_count,
            "total_count": self.total_count,
            "empirical": self.empirical,
            "predicted": None if self.predicted is None else float(self.predicted.value),
            "predicted_error_bound": None if self.predicted is None else self.predicted.error_bound,
            "predicted_kind": self.predicted_kind,
            "abs_error": self.abs_error,
            "excluded": self.excluded,
        }


def _as_family(f) -> Family:
    return f if isinstance(f, Family) else Family.parse(f)


def _upto(records: Sequence[SweepRecord], x: Optional[int]) -> tuple[list[SweepRecord], int]:
    if not records:
        raise PartialDataError("no records")
    if x is None:
        x = records[-1].abs_delta
    sub = [r for r in records if r.abs_delta <= x]
    if len(sub) != count_fundamental(x):
        raise PartialDataError(f"records do not cover every fundamental |D| <= {x}")
    return sub, x


def empirical_density(records: Sequence[SweepRecord], family, x: Optional[int] = None) -> DensityEstimate:
    """``#F(x) / #F_IQ(x)`` with the matching prediction attached.

    Fields whose lambda is unsupported or unstable stay in the denominator but
    never count toward a lambda family; they are reported as ``excluded``.
    """
    fam = _as_family(family)
    sub, x = _upto(records, x)
    hits = excluded = 0
    for r in sub:
        m = fam.member(r)
        if m is None:
            excluded += 1
        elif m:
            hits += 1
    emp = hits / len(sub)
    pred, kind = fam.prediction()
    err = None if pred is None else abs(emp - float(pred.value))
    return DensityEstimate(str(fam), x, hits, len(sub), emp, pred, kind, err, excluded)


def hunt_examples(records: Sequence[SweepRecord], criterion) -> list[int]:
    """Discriminants satisfying ``criterion``, ascending in ``|D|``."""
    fam = _as_family(criterion)
    return [r.delta for r in records if fam.member(r)]


def hunt_stream(
    x: int,
    criteria: Sequence,
    start: int = 1,
    block_size: int = BLOCK_SIZE,
    progress: Optional[Callable[[int, int], None]] = None,
) -> dict[str, list[int]]:
    """Class-group-only hunts over ``start <= |D| <= x`` without keeping records in memory."""
    fams = [_as_family(c) for c in criteria]
    if any(f.uses_lambda for f in fams):
        raise ValueError("streaming hunts support class-group families only")
    found: dict[str, list[int]] = {str(f): [] for f in fams}
    for lo, hi in _blocks(start, x, block_size):
        for m, h, rows in kernels.block_class_groups(lo, hi, fundamental_mask(lo, hi)):
            g = AbelianGroupStructure(elementary_divisors(rows))
            rec = SweepRecord(-m, h, g, ())
            for f in fams:
                if f.member(rec):
                    found[str(f)].append(-m)
        if progress is not None:
            progress(hi, sum(len(v) for v in found.values()))
    return found


def default_families(primes: Sequence[int], lambda_available: bool) -> list[Family]:
    fams = []
    for p in primes:
        fams += [Family("rank_eq", (p,), 0), Family("rank_eq", (p,), 1), Family("rank_eq", (p,), 2)]
        fams += [Family("rank_ge", (p,), 1), Family("rank_ge", (p,), 2)]
        if lambda_available:
            fams += [Family("lambda_ge", (p,), 1), Family("lambda_ge", (p,), 2)]
    return fams


def summarize(records: Sequence[SweepRecord], primes: Sequence[int], lambda_ceiling: int) -> list[DensityEstimate]:
    x = records[-1].abs_delta
    out = []
    xl = min(x, lambda_ceiling)
    for fam in default_families(primes, lambda_available=xl >= 3):
        out.append(empirical_density(records, fam, xl if fam.uses_lambda else x))
    return out


# --- invariants ---------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_invariants(records: Sequence[SweepRecord], primes: Sequence[int]) -> list[CheckResult]:
    """Per-record lambda >= r_p, family containment, inert triviality, density coherence."""
    results = []
    for p in primes:
        evaluable = [r for r in records if r.entry(p).lam is not None and r.entry(p).lam.stable]
        bad = [r.delta for r in evaluable if r.entry(p).lam.lam < r.entry(p).r_p]
        results.append(CheckResult(f"lambda_ge_rank[p={p}]", not bad, f"{len(evaluable)} fields, violations={bad[:5]}"))
        for n in (1, 2):
            rank_set = {r.delta for r in evaluable if r.entry(p).r_p >= n}
            lam_set = {r.delta for r in evaluable if r.entry(p).lam.lam >= n}
            missing = sorted(rank_set - lam_set, key=abs)
            results.append(
                CheckResult(
                    f"containment[p={p},n={n}]",
                    not missing,
                    f"|rank set|={len(rank_set)} |lambda set|={len(lam_set)} missing={missing[:5]}",
                )
            )
            results.append(
                CheckResult(
                    f"coherence[p={p},n={n}]",
                    len(lam_set) >= len(rank_set),
                    f"{len(lam_set)} >= {len(rank_set)} on {len(evaluable)} fields",
                )
            )
        trivial = [
            r for r in records
            if r.entry(p).lam is not None and r.entry(p).splitting != Splitting.SPLIT and r.h % p
        ]
        bad = [r.delta for r in trivial if r.entry(p).lam.lam != 0]
        results.append(CheckResult(f"inert_trivial[p={p}]", not bad, f"{len(trivial)} fields, violations={bad[:5]}"))
        split = [r for r in evaluable if r.entry(p).splitting == Splitting.SPLIT]
        bad = [r.delta for r in split if r.entry(p).lam.lam < 1]
        results.append(CheckResult(f"split_positive[p={p}]", not bad, f"{len(split)} fields, violations={bad[:5]}"))
    return results


# --- reports ------------------------------------------------------------------


def _csv_rows(records: Sequence[SweepRecord]):
    for r in records:
        divs = "[" + ",".join(str(d) for d in r.structure.divisors) + "]"
        for e in r.entries:
            lam = e.lam
            yield [
                r.delta,
                r.h,
                divs,
                e.p,
                e.splitting.value,
                e.r_p,
                "" if lam is None or lam.lam is None else lam.lam,
                "" if lam is None else ("true" if lam.stable else "false"),
                "" if lam is None else lam.method.value,
            ]


def _svg_bars(title: str, counts: dict) -> str:
    keys = sorted(counts)
    width, height, pad = 40 * max(len(keys), 1) + 60, 240, 30
    top = max(counts.values()) if counts else 1
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{pad}" y="18" font-family="sans-serif" font-size="13">{title}</text>',
    ]
    for i, k in enumerate(keys):
        bar = int((height - 2 * pad - 20) * counts[k] / top)
        x = pad + 40 * i
        y = height - pad - bar
        parts.append(f'<rect x="{x}" y="{y}" width="30" height="{bar}" fill="#4a7ab5"/>')
        parts.append(f'<text x="{x + 15}" y="{height - pad + 14}" font-family="sans-serif" font-size="11" text-anchor="middle">{k}</text>')
        parts.append(f'<text x="{x + 15}" y="{y - 3}" font-family="sans-serif" font-size="9" text-anchor="middle">{counts[k]}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def report(
    records: Sequence[SweepRecord],
    densities: Sequence[DensityEstimate],
    out_dir,
    x: int,
    primes: Sequence[int],
    formats: Sequence[str] = ("csv", "json"),
    svg: bool = False,
) -> list[Path]:
    """Write ``sweep.csv`` / ``sweep.json`` (and optional SVG histograms); returns the written paths."""
    if not records:
        return []
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "csv" in formats:
            path = out / "sweep.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(CSV_COLUMNS)
                w.writerows(_csv_rows(records))
            written.append(path)
        if "json" in formats:
            path = out / "sweep.json"
            doc = {
                "schema_version": SCHEMA_VERSION,
                "x": x,
                "primes": list(primes),
                "records": [r.to_dict() for r in records],
                "densities": [d.to_dict() for d in densities],
            }
            path.write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")
            written.append(path)
        if svg:
            for p in primes:
                ranks: dict = {}
                lams: dict = {}
                for r in records:
                    e = r.entry(p)
                    ranks[e.r_p] = ranks.get(e.r_p, 0) + 1
                    if e.lam is not None and e.lam.stable:
                        lams[e.lam.lam] = lams.get(e.lam.lam, 0) + 1
                path = out / f"rank_p{p}.svg"
                path.write_text(_svg_bars(f"{p}-rank distribution, |D| <= {x}", ranks), encoding="utf-8")
                written.append(path)
                if lams:
                    path = out / f"lambda_p{p}.svg"
                    path.write_text(_svg_bars(f"lambda_{p} distribution (stable)", lams), encoding="utf-8")
                    written.append(path)
    except OSError as exc:
        raise OSError(f"failed writing report under {out}: {exc}") from exc
    return written
