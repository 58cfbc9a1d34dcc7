"""SI / first-passage spreading with i.i.d. heavy-tailed passage times.

The infection time of a vertex is its weighted distance from the root, so
``run_spread`` is Dijkstra's algorithm with weights drawn lazily per edge.
``run_delayed`` simulates the comparison process that keeps at most two
clocks running, and ``run_q`` the scalar recursion bounding it.

Edge weights live in a float array indexed by edge id where NaN marks an
undrawn weight. Passing the same array to several runs couples them on
identical draws.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DataError, ParameterError
from .graphcore import RootedGraph
from .randsrc import (
    RngLike,
    WeightLaw,
    as_generator,
    open_uniform,
    residual_from_uniform,
    residual_min_mean_many,
)

__all__ = [
    "SpreadTrace",
    "QTrace",
    "QMeanCurve",
    "q_mean_curve",
    "run_spread",
    "run_delayed",
    "run_q",
    "run_q_many",
    "bound_recursion",
    "star_tail",
    "new_weights",
    "write_trace_csv",
    "read_trace_csv",
]


@dataclass(frozen=True)
class SpreadTrace:
    """One realization.

    ``times[k-1]`` is T_k and ``order[k-1]`` the k-th infected vertex;
    ``infector_edge[v]`` is the edge that infected v (-1 for the root and for
    vertices never reached). ``front_sizes[k-1]`` counts active edges right
    after the k-th infection. Unreached entries have time ``inf``.
    """

    times: np.ndarray
    order: np.ndarray
    infector_edge: np.ndarray
    front_sizes: np.ndarray
    first_bottleneck: int | None

    @property
    def n(self) -> int:
        return len(self.times)

    @property
    def never_count(self) -> int:
        return int(np.isinf(self.times).sum())

    @property
    def increments(self) -> np.ndarray:
        """T_{k+1} - T_k for k = 1..n-1."""
        return np.diff(self.times)

    def infected_count(self, t: float) -> int:
        """N_t: number of vertices infected by time t."""
        return int(np.searchsorted(self.times, t, side="right"))


@dataclass(frozen=True)
class QTrace:
    values: np.ndarray  # Q_1..Q_kmax


@dataclass(frozen=True)
class QMeanCurve:
    """Estimates of E[Q_k] for k = 1..k_max (index k-1).

    ``raw`` is the plain sample mean. ``conditional`` replaces each increment
    by its conditional mean given the current value, ``E[Q_2] + sum_{j<k}
    m(Q_j)`` with m from ``residual_min_mean``; it is unbiased for the same
    quantity and has a much lighter tail, since m(t) grows like t^(1-alpha).
    """

    runs: int
    raw: np.ndarray
    raw_se: np.ndarray
    conditional: np.ndarray
    conditional_se: np.ndarray


def new_weights(g: RootedGraph) -> np.ndarray:
    """All-undrawn weight array for coupling runs on ``g``."""
    return np.full(g.m, np.nan)


# ---------------------------------------------------------------------------
# kernels


@numba.njit(cache=True, inline="always")
def _draw(code, alpha, t0, rng):
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    x = u ** (-1.0 / alpha)
    if code == 0:
        return t0 * x
    return x - 1.0


@numba.njit(cache=True, inline="always")
def _less(ka, ta, kb, tb):
    return ka < kb or (ka == kb and ta < tb)


@numba.njit(cache=True)
def _heap_push(hk, ht, hv, size, k, t, v):
    i = size
    hk[i] = k
    ht[i] = t
    hv[i] = v
    while i > 0:
        p = (i - 1) >> 1
        if _less(hk[i], ht[i], hk[p], ht[p]):
            hk[i], hk[p] = hk[p], hk[i]
            ht[i], ht[p] = ht[p], ht[i]
            hv[i], hv[p] = hv[p], hv[i]
            i = p
        else:
            break
    return size + 1


@numba.njit(cache=True)
def _heap_pop(hk, ht, hv, size):
    size -= 1
    hk[0] = hk[size]
    ht[0] = ht[size]
    hv[0] = hv[size]
    i = 0
    while True:
        l = 2 * i + 1
        r = l + 1
        s = i
        if l < size and _less(hk[l], ht[l], hk[s], ht[s]):
            s = l
        if r < size and _less(hk[r], ht[r], hk[s], ht[s]):
            s = r
        if s == i:
            break
        hk[i], hk[s] = hk[s], hk[i]
        ht[i], ht[s] = ht[s], ht[i]
        hv[i], hv[s] = hv[s], hv[i]
        i = s
    return size


@numba.njit(cache=True)
def _dijkstra(n, indptr, nbr, eid, root, w, code, alpha, t0, rng, k_stop):
    # heap key (distance, last edge); the edge id breaks ties as in the fixed order
    m2 = len(nbr)
    hk = np.empty(m2 + 1)
    ht = np.empty(m2 + 1, dtype=np.int64)
    hv = np.empty(m2 + 1, dtype=np.int64)
    dist = np.full(n, np.inf)
    best_e = np.full(n, np.iinfo(np.int64).max)
    done = np.zeros(n, dtype=np.bool_)
    times = np.full(n, np.inf)
    order = np.full(n, -1, dtype=np.int64)
    inf_edge = np.full(n, -1, dtype=np.int64)
    front = np.zeros(n, dtype=np.int64)
    dist[root] = 0.0
    best_e[root] = -1
    size = _heap_push(hk, ht, hv, 0, 0.0, -1, root)
    k = 0
    cur_front = 0
    while size > 0 and k < k_stop:
        d = hk[0]
        e = ht[0]
        v = hv[0]
        size = _heap_pop(hk, ht, hv, size)
        if done[v]:
            continue
        done[v] = True
        times[k] = d
        order[k] = v
        inf_edge[v] = e
        for j in range(indptr[v], indptr[v + 1]):
            u = nbr[j]
            ej = eid[j]
            if done[u]:
                cur_front -= 1
                continue
            cur_front += 1
            x = w[ej]
            if x != x:
                x = _draw(code, alpha, t0, rng)
                w[ej] = x
            nd = d + x
            if nd < dist[u] or (nd == dist[u] and ej < best_e[u]):
                dist[u] = nd
                best_e[u] = ej
                size = _heap_push(hk, ht, hv, size, nd, ej, u)
        front[k] = cur_front
        k += 1
    return times, order, inf_edge, front, k


@numba.njit(cache=True)
def _delayed(n, indptr, nbr, eid, eu, ev, root, w, code, alpha, t0, rng):
    m = len(eu)
    infected = np.zeros(n, dtype=np.bool_)
    in_heap = np.zeros(m, dtype=np.bool_)
    heap = np.empty(m + 1, dtype=np.int64)  # min-heap of candidate edge ids
    hsize = 0
    sel_e = np.full(2, -1, dtype=np.int64)
    sel_fire = np.full(2, np.inf)
    sel_target = np.full(2, -1, dtype=np.int64)
    times = np.full(n, np.inf)
    order = np.full(n, -1, dtype=np.int64)
    inf_edge = np.full(n, -1, dtype=np.int64)
    front = np.zeros(n, dtype=np.int64)
    now = 0.0
    v = root
    via = -1
    cur_front = 0
    k = 0
    while True:
        infected[v] = True
        times[k] = now
        order[k] = v
        inf_edge[v] = via
        for s in range(2):
            if sel_e[s] >= 0 and sel_target[s] == v:
                sel_e[s] = -1
                sel_fire[s] = np.inf
        for j in range(indptr[v], indptr[v + 1]):
            u = nbr[j]
            ej = eid[j]
            if infected[u]:
                cur_front -= 1
            else:
                cur_front += 1
                if not in_heap[ej]:
                    in_heap[ej] = True
                    # sift up
                    i = hsize
                    heap[i] = ej
                    hsize += 1
                    while i > 0:
                        p = (i - 1) >> 1
                        if heap[i] < heap[p]:
                            heap[i], heap[p] = heap[p], heap[i]
                            i = p
                        else:
                            break
        front[k] = cur_front
        k += 1
        if k == n:
            break
        # fill free slots with the smallest-index active edges
        for s in range(2):
            if sel_e[s] >= 0:
                continue
            while hsize > 0:
                e = heap[0]
                # pop
                hsize -= 1
                heap[0] = heap[hsize]
                i = 0
                while True:
                    l = 2 * i + 1
                    r = l + 1
                    b = i
                    if l < hsize and heap[l] < heap[b]:
                        b = l
                    if r < hsize and heap[r] < heap[b]:
                        b = r
                    if b == i:
                        break
                    heap[i], heap[b] = heap[b], heap[i]
                    i = b
                a = eu[e]
                c = ev[e]
                if infected[a] and infected[c]:
                    continue
                tgt = c if infected[a] else a
                x = w[e]
                if x != x:
                    x = _draw(code, alpha, t0, rng)
                    w[e] = x
                sel_e[s] = e
                sel_fire[s] = now + x
                sel_target[s] = tgt
                break
        if sel_e[0] < 0 and sel_e[1] < 0:
            break
        if sel_e[1] < 0 or (
            sel_e[0] >= 0 and _less(sel_fire[0], sel_e[0], sel_fire[1], sel_e[1])
        ):
            s = 0
        else:
            s = 1
        now = sel_fire[s]
        via = sel_e[s]
        v = sel_target[s]
    return times, order, inf_edge, front, k


# ---------------------------------------------------------------------------


def _first_bottleneck(front: np.ndarray, n: int) -> int | None:
    hit = np.flatnonzero(front[: n - 1] <= 1)
    return int(hit[0]) + 1 if len(hit) else None


def _prep_weights(g, weights):
    if weights is None:
        return np.full(g.m, np.nan)
    w = weights
    if not (isinstance(w, np.ndarray) and w.dtype == np.float64 and w.shape == (g.m,)):
        raise ParameterError(f"weights must be a float64 array of length m={g.m}")
    if np.any(w[~np.isnan(w)] < 0):
        raise ParameterError("weights must be nonnegative")
    return w


def run_spread(
    g: RootedGraph,
    law: WeightLaw,
    rng: RngLike,
    weights: np.ndarray | None = None,
    k_stop: int | None = None,
) -> SpreadTrace:
    """Exact spreading from ``g.root``.

    ``weights`` (NaN = undrawn) is filled in place, so a later call with the
    same array reuses the draws. With ``k_stop`` the run stops after that many
    infections; the remaining times are ``inf``.
    """
    w = _prep_weights(g, weights)
    gen = as_generator(rng)
    ks = g.n if k_stop is None else int(k_stop)
    if not 1 <= ks <= g.n:
        raise ParameterError(f"k_stop must lie in [1, n], got {k_stop}")
    times, order, inf_edge, front, k = _dijkstra(
        g.n, g.indptr, g.nbr, g.eid, g.root, w, law.code, law.alpha, law.t0, gen, ks
    )
    return SpreadTrace(times, order, inf_edge, front, _first_bottleneck(front[:k], g.n))


def run_delayed(
    g: RootedGraph, law: WeightLaw, rng: RngLike, weights: np.ndarray | None = None
) -> SpreadTrace:
    """Delayed process: at most two clocks run at a time.

    Selected edges are always the active edges of smallest index; a clock
    starts when its edge is selected and keeps its original weight. An edge
    whose susceptible endpoint gets infected by the other clock is dropped and
    replaced at once.
    """
    w = _prep_weights(g, weights)
    gen = as_generator(rng)
    eu = np.ascontiguousarray(g.edges[:, 0])
    ev = np.ascontiguousarray(g.edges[:, 1])
    times, order, inf_edge, front, k = _delayed(
        g.n, g.indptr, g.nbr, g.eid, eu, ev, g.root, w, law.code, law.alpha, law.t0, gen
    )
    return SpreadTrace(times, order, inf_edge, front, _first_bottleneck(front[:k], g.n))


# ---------------------------------------------------------------------------
# Q process


def run_q_many(law: WeightLaw, k_max: int, runs: int, rng: RngLike) -> np.ndarray:
    """``runs`` independent Q traces as a (runs, k_max) array."""
    if k_max < 2:
        raise ParameterError("k_max must be at least 2")
    if runs < 1:
        raise ParameterError("runs must be at least 1")
    gen = as_generator(rng)
    a = law.alpha
    q = np.zeros((runs, k_max))
    u = open_uniform(gen, (runs, 2))
    first = law.t0 * u ** (-1.0 / a) if law.code == 0 else u ** (-1.0 / a) - 1.0
    q[:, 1] = first.min(axis=1)
    for k in range(2, k_max):
        u = open_uniform(gen, (2, runs))
        fresh = law.t0 * u[0] ** (-1.0 / a) if law.code == 0 else u[0] ** (-1.0 / a) - 1.0
        old = residual_from_uniform(law, q[:, k - 1], u[1])
        q[:, k] = q[:, k - 1] + np.minimum(fresh, old)
    return q


def q_mean_curve(law: WeightLaw, k_max: int, runs: int, rng: RngLike) -> QMeanCurve:
    """Mean curve of the Q process without storing the traces.

    Uses the same draws as ``run_q_many`` with the same arguments, so the
    underlying paths coincide.
    """
    if k_max < 2:
        raise ParameterError("k_max must be at least 2")
    if runs < 2:
        raise ParameterError("runs must be at least 2")
    law.require_smoothing_range()
    gen = as_generator(rng)
    a = law.alpha
    raw = np.zeros(k_max)
    raw_sq = np.zeros(k_max)
    cond = np.zeros(k_max)
    cond_sq = np.zeros(k_max)
    u = open_uniform(gen, (runs, 2))
    first = law.t0 * u ** (-1.0 / a) if law.code == 0 else u ** (-1.0 / a) - 1.0
    q = first.min(axis=1)
    acc = np.zeros(runs)  # sum of conditional increments after Q_2
    b1 = _q2_mean(law)
    for k in range(1, k_max):
        raw[k], raw_sq[k] = q.sum(), (q * q).sum()
        cond[k], cond_sq[k] = acc.sum(), (acc * acc).sum()
        if k == k_max - 1:
            break
        acc += residual_min_mean_many(law, q)
        u = open_uniform(gen, (2, runs))
        fresh = law.t0 * u[0] ** (-1.0 / a) if law.code == 0 else u[0] ** (-1.0 / a) - 1.0
        q = q + np.minimum(fresh, residual_from_uniform(law, q, u[1]))

    def mean_se(s1, s2):
        m = s1 / runs
        var = np.maximum(s2 / runs - m * m, 0.0) * runs / (runs - 1)
        return m, np.sqrt(var / runs)

    raw_m, raw_se = mean_se(raw, raw_sq)
    cond_m, cond_se = mean_se(cond, cond_sq)
    cond_m[1:] += b1
    return QMeanCurve(runs, raw_m, raw_se, cond_m, cond_se)


def _q2_mean(law: WeightLaw) -> float:
    """E[min(X, Y)] for i.i.d. power-law X, Y with cutoff t0."""
    return law.t0 * 2 * law.alpha / (2 * law.alpha - 1)


def run_q(law: WeightLaw, k_max: int, rng: RngLike) -> QTrace:
    """Q_1 = 0, Q_2 = min of two fresh draws, then
    Q_{k+1} = Q_k + min(fresh draw, residual of an edge of age Q_k)."""
    return QTrace(run_q_many(law, k_max, 1, rng)[0])


def bound_recursion(C: float, b1: float, alpha: float, n: int) -> np.ndarray:
    """b_1..b_n with b_{k+1} = b_k + C b_k^(1-alpha)."""
    if C < 0 or not b1 > 0 or not 0 < alpha < 1 or n < 1:
        raise ParameterError("need C >= 0, b1 > 0, 0 < alpha < 1, n >= 1")
    b = np.empty(n)
    b[0] = b1
    for k in range(1, n):
        b[k] = b[k - 1] + C * b[k - 1] ** (1.0 - alpha)
    return b


def star_tail(k: int, t: float, alpha: float) -> float:
    """P[X_(k) > t] for the k-th order statistic of k+1 i.i.d. pow(alpha, 1) variables."""
    if k < 1:
        raise ParameterError("k must be at least 1")
    if not t > 1:
        raise ParameterError("t must exceed the cutoff 1")
    p = t ** (-alpha)
    q = 1.0 - p
    # 1 - q^{k+1} - (k+1) q^k p, written to avoid cancellation for large t
    return float(-math.expm1((k + 1) * math.log1p(-p)) - (k + 1) * q**k * p)


# ---------------------------------------------------------------------------
# trace export


def write_trace_csv(trace: SpreadTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["k", "T_k", "front_size", "infector_edge", "vertex"])
        for k in range(trace.n):
            v = int(trace.order[k])
            t = trace.times[k]
            wr.writerow(
                [
                    k + 1,
                    "inf" if math.isinf(t) else repr(float(t)),
                    int(trace.front_sizes[k]) if v >= 0 else "",
                    int(trace.infector_edge[v]) if v >= 0 else "",
                    v if v >= 0 else "",
                ]
            )


def read_trace_csv(path):
    """Returns (times, front_sizes, infector_edges, vertices) in infection order."""
    rows = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or header[:4] != ["k", "T_k", "front_size", "infector_edge"]:
            raise DataError(f"{path}: bad trace header {header}")
        for line_no, row in enumerate(rd, start=2):
            try:
                t = math.inf if row[1] == "inf" else float(row[1])
                rows.append((t, int(row[2] or -1), int(row[3] or -1), int(row[4] or -1)))
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{line_no}: {exc}") from None
    arr = np.array(rows, dtype=object).T if rows else np.empty((4, 0))
    return (
        np.array(arr[0], dtype=float),
        np.array(arr[1], dtype=np.int64),
        np.array(arr[2], dtype=np.int64),
        np.array(arr[3], dtype=np.int64),
    )
