"""
Benchmark harness: median wall-clock time of the piecewise linear signature
constructors over a (k, d, m, algorithm) grid.
"""
from __future__ import annotations

import csv
import io
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from src.pathsig.errors import ShapeError
from src.pathsig.signatures import Algorithm, sig_pwln_chen, sig_pwln_congruence
from src.pathsig.tensor_algebra import CoefficientField, TensorAlgebraSpace

CSV_HEADER = ["k", "d", "m", "algorithm", "median_ms", "samples", "winner"]

CONSTRUCTORS: Dict[Algorithm, Callable] = {
    Algorithm.CHEN: sig_pwln_chen,
    Algorithm.CONGRUENCE: sig_pwln_congruence,
}

Clock = Callable[[], float]


@dataclass
class BenchConfig:
    dimensions: List[int]
    segments: List[int]
    levels: List[int]
    algorithms: List[Algorithm] = field(default_factory=lambda: [Algorithm.CHEN, Algorithm.CONGRUENCE])
    samples: int = 100
    rng_seed: int = 0
    entry_bound: int = 20
    parallel: bool = False
    quiet: bool = True

    def validate(self) -> None:
        for name in ("dimensions", "segments", "levels", "algorithms"):
            if not getattr(self, name):
                raise ShapeError(f"Benchmark grid is empty: no {name} given")
        for name in ("dimensions", "segments", "levels"):
            bad = [v for v in getattr(self, name) if v < 1]
            if bad:
                raise ShapeError(f"Benchmark {name} must be positive, got {bad}")
        if self.samples < 1:
            raise ShapeError(f"samples must be at least 1, got {self.samples}")

    def cells(self) -> List[Tuple[int, int, int]]:
        """(k, d, m) triples in lexicographic order."""
        return list(product(sorted(set(self.levels)), sorted(set(self.dimensions)), sorted(set(self.segments))))

    def ordered_algorithms(self) -> List[Algorithm]:
        return sorted(set(self.algorithms), key=lambda a: a.value)


@dataclass
class BenchRow:
    k: int
    d: int
    m: int
    algorithm: Algorithm
    median_ms: float
    samples: int
    winner: Optional[Algorithm] = None


def random_coefficients(rng: np.random.Generator, d: int, m: int, bound: int) -> np.ndarray:
    """Integer entries uniform in [-bound, bound], stored as float64."""
    return rng.integers(-bound, bound + 1, size=(d, m)).astype(np.float64)


def time_constructor(
    constructor: Callable,
    space: TensorAlgebraSpace,
    matrices: List[np.ndarray],
    clock: Clock = time.perf_counter,
) -> List[float]:
    """Milliseconds per call; only the constructor itself sits between the clock reads."""
    timings = []
    for matrix in matrices:
        start = clock()
        constructor(space, matrix)
        timings.append((clock() - start) * 1e3)
    return timings


def run_cell(config: BenchConfig, k: int, d: int, m: int, algorithm: Algorithm, clock: Clock = time.perf_counter) -> BenchRow:
    # Same seed for every algorithm of a cell, so they time identical inputs.
    rng = np.random.default_rng([config.rng_seed, k, d, m])
    matrices = [random_coefficients(rng, d, m, config.entry_bound) for _ in range(config.samples)]
    space = TensorAlgebraSpace(d, k, CoefficientField.FLOAT64)
    timings = time_constructor(CONSTRUCTORS[algorithm], space, matrices, clock)
    return BenchRow(k, d, m, algorithm, float(np.median(timings)), config.samples)


def mark_winners(rows: List[BenchRow]) -> None:
    cells: Dict[Tuple[int, int, int], List[BenchRow]] = {}
    for row in rows:
        cells.setdefault((row.k, row.d, row.m), []).append(row)
    for cell_rows in cells.values():
        fastest = min(cell_rows, key=lambda r: r.median_ms)
        for row in cell_rows:
            row.winner = fastest.algorithm


def run_benchmark(config: BenchConfig, clock: Clock = time.perf_counter) -> List[BenchRow]:
    config.validate()
    if config.quiet:
        vprint = lambda *args, **kwargs: None
    else:
        vprint = lambda *args, **kwargs: print(*args, file=sys.stderr, **kwargs)

    tasks = [(k, d, m, algorithm) for (k, d, m) in config.cells() for algorithm in config.ordered_algorithms()]

    def run(task: Tuple[int, int, int, Algorithm]) -> BenchRow:
        k, d, m, algorithm = task
        row = run_cell(config, k, d, m, algorithm, clock)
        vprint(f"k={k} d={d} m={m} {algorithm.value}: {row.median_ms:.3f} ms")
        return row

    vprint(f"Timing {len(tasks)} cells with {config.samples} samples each...")
    if config.parallel:
        # cells run concurrently, samples inside a cell never do
        with ThreadPoolExecutor() as pool:
            rows = list(pool.map(run, tasks))
    else:
        rows = [run(task) for task in tasks]
    mark_winners(rows)
    return rows


def render_csv(rows: List[BenchRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([
            row.k, row.d, row.m, row.algorithm.value, f"{row.median_ms:.3f}", row.samples,
            row.winner.value if row.winner else "",
        ])
    return out.getvalue()


def _cell_text(cell_rows: List[BenchRow]) -> str:
    if not cell_rows:
        return "-"
    mark = len(cell_rows) > 1
    return ", ".join(
        f"{'*' if mark and row.algorithm is row.winner else ''}{row.median_ms:.1f}" for row in cell_rows
    )


def render_table(rows: List[BenchRow]) -> str:
    """
    One d-by-m table per truncation level. Each cell lists the medians in
    algorithm order; '*' marks the faster one.
    """
    cells: Dict[Tuple[int, int, int], List[BenchRow]] = {}
    for row in rows:
        cells.setdefault((row.k, row.d, row.m), []).append(row)
    algorithms = sorted({row.algorithm for row in rows}, key=lambda a: a.value)

    lines: List[str] = []
    for k in sorted({row.k for row in rows}):
        ds = sorted({row.d for row in rows if row.k == k})
        ms = sorted({row.m for row in rows if row.k == k})
        header = ["d\\m"] + [str(m) for m in ms]
        body = [[str(d)] + [_cell_text(cells.get((k, d, m), [])) for m in ms] for d in ds]
        widths = [max(len(line[c]) for line in [header] + body) for c in range(len(header))]
        lines.append(f"k={k} (median ms: {', '.join(a.value for a in algorithms)}; * = faster)")
        for line in [header] + body:
            lines.append("  ".join(text.rjust(width) for text, width in zip(line, widths)))
        lines.append("")
    return "\n".join(lines)
