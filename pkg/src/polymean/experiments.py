"""Monte Carlo estimates of how often a Fréchet mean is unique.

Samples are standard Gaussian draws rounded to dyadic rationals; each
(k, n, trial) cell gets its own counter-based generator keyed by a 64-bit
mix of the run seed, so trials can run in any order or in parallel.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from gmpy2 import mpq

from .frechet import Sample, fm_set
from .polytope import PolytopeNorm, parse_norm

MASK64 = (1 << 64) - 1
MAX_K = 6
MAX_N = 12


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def trial_seed(seed: int, k: int, n: int, trial: int) -> int:
    h = splitmix64(seed & MASK64)
    for v in (k, n, trial):
        h = splitmix64(h ^ (v & MASK64))
    return h


def sample_gaussian_rational(
    k: int, n: int, seed: int, denominator_bits: int = 53, loc=0, scale=1
) -> Sample:
    """``n`` points in ``R^k`` with coordinates ``loc + scale * z``.

    ``z`` is a Box-Muller normal from Philox uniforms, rounded to the
    nearest multiple of ``2**-denominator_bits``.
    """
    if k < 1 or n < 1:
        raise ValueError("k and n must be positive")
    rng = np.random.Generator(np.random.Philox(seed & MASK64))
    m = k * n
    pairs = (m + 1) // 2
    u = rng.random((pairs, 2))
    z = []
    for u1, u2 in u:
        rad = math.sqrt(-2.0 * math.log(1.0 - u1))
        z.append(rad * math.cos(2.0 * math.pi * u2))
        z.append(rad * math.sin(2.0 * math.pi * u2))
    den = 1 << denominator_bits
    loc, scale = mpq(loc), mpq(scale)
    q = [loc + scale * mpq(round(math.ldexp(v, denominator_bits)), den) for v in z[:m]]
    return Sample([q[i * k : (i + 1) * k] for i in range(n)])


@dataclass(frozen=True)
class ExperimentConfig:
    norm: str = "linf"
    k: int = 2
    n_range: tuple = (2, 10)
    trials: int = 100
    seed: int = 0
    denominator_bits: int = 53
    projection: str = "fourier-motzkin"
    force: bool = False

    def __post_init__(self):
        lo, hi = self.n_range
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if lo < 2 or hi < lo:
            raise ValueError("n range must start at 2 or more and be nonempty")
        if not self.force and (self.k > MAX_K or hi > MAX_N):
            raise ValueError(
                f"experiment size guard: k <= {MAX_K} and n <= {MAX_N} unless forced"
            )

    def resolve_norm(self) -> PolytopeNorm:
        if self.norm in ("linf", "l1"):
            return parse_norm(f"{self.norm}:{self.k}")
        norm = parse_norm(self.norm)
        if norm.k != self.k:
            raise ValueError(f"norm {self.norm} has dimension {norm.k}, not {self.k}")
        return norm

    @property
    def label(self) -> str:
        if self.norm in ("linf", "l1"):
            return self.norm
        return self.norm.split(":")[0] if ":" in self.norm else Path(self.norm).stem


def load_config(path) -> ExperimentConfig:
    """Read ``key=value`` lines; ``n_range`` is written ``lo..hi``."""
    kw: dict = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "n_range":
            lo, _, hi = value.partition("..")
            kw[key] = (int(lo), int(hi))
        elif key in ("k", "trials", "seed", "denominator_bits"):
            kw[key] = int(value, 0)
        elif key == "force":
            kw[key] = value.lower() in ("1", "true", "yes")
        elif key in ("norm", "projection"):
            kw[key] = value
        else:
            raise ValueError(f"unknown config key {key!r}")
    return ExperimentConfig(**kw)


@dataclass(frozen=True)
class Cell:
    norm: str
    k: int
    n: int
    trials: int
    histogram: tuple  # histogram[d] = trials with fm_dim == d, d = 0..k
    elapsed_ms: int = field(default=0, compare=False)

    @property
    def unique_count(self) -> int:
        return self.histogram[0]

    @property
    def proportion(self) -> float:
        return self.unique_count / self.trials


@dataclass
class ExperimentResult:
    cells: list = field(default_factory=list)

    def __post_init__(self):
        self.cells = sorted(self.cells, key=lambda c: (c.norm, c.k, c.n))

    def merge(self, other: "ExperimentResult") -> "ExperimentResult":
        return ExperimentResult(self.cells + other.cells)

    def cell(self, k: int, n: int, norm: str | None = None) -> Cell:
        for c in self.cells:
            if c.k == k and c.n == n and (norm is None or c.norm == norm):
                return c
        raise KeyError((norm, k, n))


def _one_trial(args) -> int:
    norm, k, n, seed, bits, projection = args
    S = sample_gaussian_rational(k, n, seed, bits)
    return fm_set(norm, S, projection=projection).fm_dim


def run_uniqueness_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    norm = cfg.resolve_norm()
    lo, hi = cfg.n_range
    cells = []
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for n in range(lo, hi + 1):
            t0 = time.perf_counter()
            jobs = [
                (norm, cfg.k, n, trial_seed(cfg.seed, cfg.k, n, t), cfg.denominator_bits, cfg.projection)
                for t in range(cfg.trials)
            ]
            dims = pool.map(_one_trial, jobs, chunksize=4) if pool else map(_one_trial, jobs)
            hist = [0] * (cfg.k + 1)
            for d in dims:
                hist[d] += 1
            elapsed = round((time.perf_counter() - t0) * 1000)
            cells.append(Cell(cfg.label, cfg.k, n, cfg.trials, tuple(hist), elapsed))
    finally:
        if pool:
            pool.shutdown()
    return ExperimentResult(cells)


# --------------------------------------------------------------------------
# output


def csv_text(result: ExperimentResult, timings: bool = False) -> str:
    """CSV with one row per cell.

    ``elapsed_ms`` is written as 0 unless ``timings`` is set, so that equal
    results give byte-identical files.
    """
    K = max((c.k for c in result.cells), default=0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["norm", "k", "n", "trials", "unique_count"]
        + [f"dim{d}" for d in range(K + 1)]
        + ["elapsed_ms"]
    )
    for c in result.cells:
        hist = list(c.histogram) + [0] * (K + 1 - len(c.histogram))
        w.writerow(
            [c.norm, c.k, c.n, c.trials, c.unique_count]
            + hist
            + [c.elapsed_ms if timings else 0]
        )
    return buf.getvalue()


def emit_csv(result: ExperimentResult, path, timings: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(result, timings))


def parse_csv(text: str) -> ExperimentResult:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    dcols = [i for i, h in enumerate(header) if h.startswith("dim")]
    cells = []
    for row in body:
        rec = dict(zip(header, row))
        k = int(rec["k"])
        hist = tuple(int(row[i]) for i in dcols[: k + 1])
        if hist[0] != int(rec["unique_count"]):
            raise ValueError("unique_count disagrees with dim0")
        cells.append(
            Cell(rec["norm"], k, int(rec["n"]), int(rec["trials"]), hist, int(rec["elapsed_ms"]))
        )
    return ExperimentResult(cells)


def read_csv(path) -> ExperimentResult:
    return parse_csv(Path(path).read_text())


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_text(result: ExperimentResult, title: str | None = None) -> str:
    """Unique proportion against n, one polyline per (norm, k)."""
    if not result.cells:
        raise ValueError("empty result")
    W, H = 640, 420
    left, right, top, bottom = 70, 150, 40, 60
    pw, ph = W - left - right, H - top - bottom
    ns = sorted({c.n for c in result.cells})
    n0, n1 = ns[0], ns[-1]
    span = max(n1 - n0, 1)

    def x(n):
        return left + pw * (n - n0) / span

    def y(p):
        return top + ph * (1 - p)

    series: dict = {}
    for c in result.cells:
        series.setdefault((c.norm, c.k), []).append(c)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>')
    out.append(
        f'<path d="M{left},{top} V{top + ph} H{left + pw}" fill="none" stroke="black"/>'
    )
    for n in ns:
        out.append(f'<line x1="{x(n):.1f}" y1="{top + ph}" x2="{x(n):.1f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x(n):.1f}" y="{top + ph + 18}" text-anchor="middle">{n}</text>')
    for i in range(5):
        p = i / 4
        out.append(f'<line x1="{left - 5}" y1="{y(p):.1f}" x2="{left}" y2="{y(p):.1f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y(p) + 4:.1f}" text-anchor="end">{p:.2f}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{H - 15}" text-anchor="middle">sample size n</text>')
    out.append(
        f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {top + ph / 2:.1f})">proportion unique</text>'
    )
    for idx, ((norm, k), cells) in enumerate(sorted(series.items())):
        color = _COLORS[idx % len(_COLORS)]
        pts = " ".join(f"{x(c.n):.1f},{y(c.proportion):.1f}" for c in cells)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        for c in cells:
            out.append(f'<circle cx="{x(c.n):.1f}" cy="{y(c.proportion):.1f}" r="3" fill="{color}"/>')
        ly = top + 10 + 20 * idx
        lx = left + pw + 20
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}">{norm} k={k}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(result: ExperimentResult, path, title: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(svg_text(result, title))
