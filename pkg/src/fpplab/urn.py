"""Two-color Polya urns with time-inhomogeneous increments.

At each step the whole increment goes to red with probability
red / (red + blue), otherwise to blue. Fed with the branch sizes of the
colored Wilson construction, the urn's final red fraction is the red share
of the spanning tree.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DataError, ParameterError
from .randsrc import RngLike, as_generator

__all__ = [
    "UrnState",
    "urn_step",
    "urn_run",
    "urn_run_many",
    "urn_exact_distribution",
    "BoundednessStat",
    "increment_boundedness_check",
    "write_ratios_csv",
    "read_ratios_csv",
    "write_increments_csv",
]


@dataclass(frozen=True)
class UrnState:
    red: int
    blue: int
    history: tuple = field(default=())  # (increment, "R" or "B") per step

    def __post_init__(self):
        if int(self.red) != self.red or int(self.blue) != self.blue:
            raise ParameterError("ball counts must be integers")
        if self.red < 1 or self.blue < 1:
            raise ParameterError(f"both colors need at least one ball, got ({self.red}, {self.blue})")

    @property
    def total(self) -> int:
        return self.red + self.blue

    @property
    def ratio(self) -> float:
        return self.red / self.total


def urn_step(state: UrnState, increment: int, rng: RngLike) -> UrnState:
    if int(increment) != increment or increment < 1:
        raise ParameterError(f"increment must be a positive integer, got {increment!r}")
    increment = int(increment)
    if as_generator(rng).random() * state.total < state.red:
        return UrnState(state.red + increment, state.blue, state.history + ((increment, "R"),))
    return UrnState(state.red, state.blue + increment, state.history + ((increment, "B"),))


def _check_increments(increments) -> np.ndarray:
    inc = np.asarray(increments)
    if inc.ndim != 1 or len(inc) == 0:
        raise ParameterError("increments must be a nonempty sequence")
    if not np.issubdtype(inc.dtype, np.integer):
        if not np.all(np.mod(inc, 1) == 0):
            raise ParameterError("increments must be integers")
        inc = inc.astype(np.int64)
    if inc.min() < 1:
        raise ParameterError("increments must be positive")
    return inc.astype(np.int64)


def urn_run(initial, increments, rng: RngLike, return_state: bool = False):
    """Final red fraction after applying ``increments`` from ``initial = (red, blue)``."""
    inc = _check_increments(increments)
    start = UrnState(*initial)
    gen = as_generator(rng)
    red, total = start.red, start.total
    u = gen.random(len(inc))
    picks = []
    for x, ui in zip(inc.tolist(), u.tolist()):
        if ui * total < red:
            red += x
            picks.append((x, "R"))
        else:
            picks.append((x, "B"))
        total += x
    if return_state:
        return UrnState(red, total - red, start.history + tuple(picks))
    return red / total


def urn_run_many(initial, increments, runs: int, rng: RngLike) -> np.ndarray:
    """Final red counts of ``runs`` independent urns sharing one increment sequence.

    Uses one uniform per urn per step, in step-major order.
    """
    inc = _check_increments(increments)
    start = UrnState(*initial)
    gen = as_generator(rng)
    red = np.full(runs, start.red, dtype=np.int64)
    total = start.total
    for x in inc.tolist():
        red += (gen.random(runs) * total < red) * x
        total += x
    return red


def urn_exact_distribution(initial, increments) -> dict:
    """Exact law of the final red count as ``{red: Fraction}`` (small inputs only)."""
    inc = _check_increments(increments)
    start = UrnState(*initial)
    dist = {start.red: Fraction(1)}
    total = start.total
    for x in inc.tolist():
        nxt: dict = {}
        for r, p in dist.items():
            pr = Fraction(r, total)
            nxt[r + x] = nxt.get(r + x, 0) + p * pr
            nxt[r] = nxt.get(r, 0) + p * (1 - pr)
        dist = nxt
        total += x
    return dict(sorted(dist.items()))


@dataclass(frozen=True)
class BoundednessStat:
    n: int
    values: np.ndarray  # per run: max_i |Delta_i| / sqrt(n)

    def percentile(self, q: float) -> float:
        return float(np.percentile(self.values, q))


def increment_boundedness_check(runs, n: int) -> BoundednessStat:
    """max over all recorded branch sizes (first path included) divided by sqrt(n), per run."""
    if len(runs) == 0:
        raise ParameterError("no runs given")
    vals = np.empty(len(runs))
    for i, r in enumerate(runs):
        if r.n != n:
            raise ParameterError(f"run {i} has n={r.n}, expected {n}")
        vals[i] = r.increment_sizes.max() / np.sqrt(n)
    return BoundednessStat(n, vals)


def write_ratios_csv(ratios, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("ratio\n")
        for x in np.asarray(ratios, dtype=float).tolist():
            fh.write(f"{x!r}\n")


def read_ratios_csv(path) -> np.ndarray:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "ratio":
        raise DataError(f"{path}: expected header 'ratio'")
    out = []
    for i, line in enumerate(lines[1:], start=2):
        try:
            out.append(float(line))
        except ValueError:
            raise DataError(f"{path}:{i}: not a number: {line!r}") from None
    return np.array(out)


def write_increments_csv(traces, path) -> None:
    """One row per run: run index followed by that run's increments."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        for i, tr in enumerate(traces):
            wr.writerow([i, *map(int, tr)])
