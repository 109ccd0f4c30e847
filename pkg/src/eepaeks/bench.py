"""Operation-count and wall-clock benchmarks.

Counting and timing are separate passes: the count pass runs each algorithm
once under :func:`~eepaeks.groups.count_ops`; the timing pass repeats it
``trials`` times with no counter installed.
"""

from __future__ import annotations

import csv
import importlib
import random
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, TextIO

from eepaeks.groups import OpCounters, PublicParams, count_ops, setup
from eepaeks.policy import Gate, KeywordPolicy, KeywordSet, Leaf, Keyword, compile_policy
from eepaeks.scheme import KeyPair, Role, enc, enc_trans, keygen, search, trap, trap_trans

OPS = ("enc", "trap", "enc_trans", "trap_trans", "search")
CSV_HEADER = ("op", "m", "l", "trials", "exps", "muls", "hashes", "pairings", "mean_ns")


def bench_keywords(m: int) -> KeywordSet:
    return KeywordSet(Keyword("kw", f"v{i}") for i in range(m))


def bench_policy(ws: KeywordSet, l: int) -> KeywordPolicy:
    """AND over ``l`` leaves taken cyclically from ``ws`` (so search succeeds).

    A single leaf compiles to a 1x1 matrix; more leaves give an l x l matrix.
    """
    kws = [ws[i % len(ws)] for i in range(l)]
    if l == 1:
        return compile_policy(Leaf(kws[0]))
    return compile_policy(Gate(l, tuple(Leaf(k) for k in kws)))


def expected_counts(op: str, m: int, l: int, t: int | None = None) -> dict[str, int]:
    """Closed-form counts for one call; ``t`` defaults to the bench policy width."""
    t = (1 if l == 1 else l) if t is None else t
    return {
        "enc": {"exps": m + 4, "muls": m + 1, "hashes": m, "pairings": 0},
        "trap": {"exps": 2 * l + 4, "muls": t * l + 2 * l + 1, "hashes": l, "pairings": 0},
        "enc_trans": {"exps": m + 3, "muls": 1, "hashes": 0, "pairings": 0},
        "trap_trans": {"exps": 2 * l + 3, "muls": 1, "hashes": 0, "pairings": 0},
        "search": {"pairings": m + l + 2, "hashes": 0},
    }[op]


@dataclass
class Fixture:
    pp: PublicParams
    cloud: KeyPair
    aux: KeyPair
    sender: KeyPair
    receiver: KeyPair
    rng: random.Random = field(default_factory=random.Random)

    @classmethod
    def make(cls, seed: int = 0, pp: PublicParams | None = None) -> "Fixture":
        pp = pp or setup()
        rng = random.Random(seed)
        keys = [keygen(pp, r, rng) for r in (Role.CLOUD, Role.AUX, Role.SENDER, Role.RECEIVER)]
        return cls(pp, *keys, rng=rng)

    def calls(self, m: int, l: int) -> dict[str, Callable[[], object]]:
        ws = bench_keywords(m)
        pol = bench_policy(ws, l)
        ct = enc(self.pp, self.sender, self.cloud.pk, self.aux.pk, ws, self.rng)
        td = trap(self.pp, self.receiver, self.cloud.pk, self.aux.pk, pol, self.rng)
        ctx, tdx = enc_trans(self.aux, ct, self.rng), trap_trans(self.aux, td, self.rng)
        return {
            "enc": lambda: enc(self.pp, self.sender, self.cloud.pk, self.aux.pk, ws, self.rng),
            "trap": lambda: trap(self.pp, self.receiver, self.cloud.pk, self.aux.pk, pol, self.rng),
            "enc_trans": lambda: enc_trans(self.aux, ct, self.rng),
            "trap_trans": lambda: trap_trans(self.aux, td, self.rng),
            "search": lambda: search(self.cloud, ctx, tdx),
        }


@dataclass
class BenchRow:
    op: str
    m: int
    l: int
    trials: int
    counts: OpCounters
    mean_ns: float | None

    def as_row(self) -> list:
        c = self.counts
        mean = "" if self.mean_ns is None else f"{self.mean_ns:.0f}"
        return [self.op, self.m, self.l, self.trials, c.exps, c.muls, c.hashes, c.pairings, mean]


def count_pass(fx: Fixture, m: int, l: int, ops: Iterable[str] = OPS) -> dict[str, OpCounters]:
    calls = fx.calls(m, l)
    out = {}
    for op in ops:
        with count_ops() as c:
            result = calls[op]()
        if op == "search" and result is not True:
            raise RuntimeError("bench search did not match")
        out[op] = c
    return out


def time_pass(fx: Fixture, m: int, l: int, trials: int, ops: Iterable[str] = OPS) -> dict[str, float]:
    calls = fx.calls(m, l)
    out = {}
    for op in ops:
        fn = calls[op]
        fn()  # warm-up
        t0 = time.perf_counter_ns()
        for _ in range(trials):
            fn()
        out[op] = (time.perf_counter_ns() - t0) / trials
    return out


def run_bench(
    sizes: Iterable[tuple[int, int]],
    trials: int = 5,
    count_only: bool = False,
    seed: int = 0,
    ops: Iterable[str] = OPS,
) -> list[BenchRow]:
    fx = Fixture.make(seed)
    ops = tuple(ops)
    rows = []
    for m, l in sizes:
        counts = count_pass(fx, m, l, ops)
        times = {} if count_only else time_pass(fx, m, l, trials, ops)
        for op in ops:
            rows.append(BenchRow(op, m, l, 0 if count_only else trials, counts[op], times.get(op)))
    return rows


def write_csv(rows: Iterable[BenchRow], fp: TextIO) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.as_row())


@dataclass
class Linearity:
    xs: list[int]
    ys: list[float]
    slope: float
    intercept: float
    r_squared: float


def fit_linear(xs: list[int], ys: list[float]) -> Linearity:
    slope, intercept = statistics.linear_regression(xs, ys)
    r = statistics.correlation(xs, ys)
    return Linearity(list(xs), list(ys), slope, intercept, r * r)


def enc_linearity(ms: Iterable[int] = range(10, 101, 10), trials: int = 7, seed: int = 0) -> Linearity:
    """Fit encryption time against the keyword count m.

    Sizes are swept round-robin and each point keeps the fastest of ``trials``
    runs, so a transient slowdown cannot skew a single size.
    """
    fx = Fixture.make(seed)
    xs = list(ms)
    sets = {m: bench_keywords(m) for m in xs}
    best = dict.fromkeys(xs, float("inf"))
    for _ in range(trials + 1):  # first sweep doubles as warm-up
        for m in xs:
            t0 = time.perf_counter_ns()
            enc(fx.pp, fx.sender, fx.cloud.pk, fx.aux.pk, sets[m], fx.rng)
            best[m] = min(best[m], time.perf_counter_ns() - t0)
    ys = [best[m] for m in xs]
    return fit_linear(xs, ys)


# -- backend comparison ---------------------------------------------------------------


def _kernel_suite(mod, k: int) -> dict[str, Callable[[], object]]:
    kb = k.to_bytes(32, "big")
    g1, g2 = mod.G1.generator(), mod.G2.generator()
    p = g1.mul(kb)
    q = g2.mul(kb)
    e = mod.pair(p, q)
    return {
        "g1_mul": lambda: g1.mul(kb),
        "g2_mul": lambda: g2.mul(kb),
        "hash_to_g1": lambda: mod.G1.hash_to(b"bench-keyword", b"EEPAEKS-BENCH"),
        "gt_pow": lambda: e.pow(kb),
        "pairing": lambda: mod.pair(p, q),
    }


def compare_backends(trials: int = 3, python_trials: int = 1) -> list[dict]:
    """Mean ns per kernel for each importable backend, plus the speed-up ratio."""
    mods = {}
    for name in ("eepaeks._native", "eepaeks._purepy"):
        try:
            mods[name.rsplit(".", 1)[1].lstrip("_")] = importlib.import_module(name)
        except ImportError:
            continue
    k = random.Random(1).randrange(1, 2**254)
    table: dict[str, dict[str, float]] = {}
    for label, mod in mods.items():
        n = trials if label == "native" else python_trials
        for kernel, fn in _kernel_suite(mod, k).items():
            fn()
            t0 = time.perf_counter_ns()
            for _ in range(n):
                fn()
            table.setdefault(kernel, {})[label] = (time.perf_counter_ns() - t0) / n
    rows = []
    for kernel, vals in table.items():
        row = {"kernel": kernel, **{f"{b}_ns": v for b, v in vals.items()}}
        if "native" in vals and "purepy" in vals:
            row["speedup"] = vals["purepy"] / vals["native"]
        rows.append(row)
    return rows
