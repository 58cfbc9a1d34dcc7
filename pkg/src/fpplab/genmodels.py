"""Random graph families: critical Galton-Watson trees, the colored Wilson
construction of UST(K_n) plus an edge, and near-critical Erdos-Renyi graphs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
from scipy import sparse, stats
from scipy.sparse import csgraph

from .errors import ParameterError, ResourceError, StructuralError
from .graphcore import RootedGraph, subtree_sizes
from .randsrc import RngLike, as_generator

__all__ = [
    "OffspringLaw",
    "LabeledTree",
    "ColoredUstResult",
    "ErSample",
    "sample_gw",
    "sample_gw_conditioned",
    "sample_kesten",
    "RootKappaSample",
    "sample_conditioned_root_kappa",
    "add_root_edge",
    "tree_root_kappa",
    "tree_kappa_with_root_edge",
    "random_root_edge_target",
    "sample_ust_colored",
    "first_lerw_length",
    "lerw_branch_size",
    "delta_law",
    "delta_pmf",
    "first_path_pmf",
    "rayleigh_ks",
    "er_edge_probability",
    "sample_er",
    "sample_er_coupled",
    "er_sample_from_edges",
    "write_metadata",
]


# ---------------------------------------------------------------------------
# Galton-Watson trees


@dataclass(frozen=True)
class OffspringLaw:
    """Critical offspring law: ``poisson1``, ``geometric_half`` or ``binomial`` (Binomial(k, 1/k))."""

    kind: str = "poisson1"
    k: int = 2

    def __post_init__(self):
        if self.kind not in ("poisson1", "geometric_half", "binomial"):
            raise ParameterError(f"unknown offspring law {self.kind!r}")
        if self.kind == "binomial" and self.k < 2:
            raise ParameterError("Binomial(k, 1/k) needs k >= 2 to be non-degenerate")

    @classmethod
    def parse(cls, name: str) -> "OffspringLaw":
        name = name.lower().replace("-", "_")
        if name in ("poisson1", "poisson"):
            return cls("poisson1")
        if name in ("geometric_half", "geometric", "geom"):
            return cls("geometric_half")
        if name.startswith("binomial"):
            k = int(name.split(":")[1]) if ":" in name else 2
            return cls("binomial", k)
        raise ParameterError(f"unknown offspring law {name!r}")

    @property
    def mean(self) -> float:
        return 1.0

    @property
    def variance(self) -> float:
        if self.kind == "poisson1":
            return 1.0
        if self.kind == "geometric_half":
            return 2.0
        return 1.0 - 1.0 / self.k

    def pmf(self, j):
        j = np.asarray(j)
        if self.kind == "poisson1":
            out = np.exp(-1.0 - np.array([math.lgamma(x + 1) for x in np.ravel(j)])).reshape(j.shape)
        elif self.kind == "geometric_half":
            out = 0.5 ** (j + 1.0)
        else:
            k, p = self.k, 1.0 / self.k
            out = np.array(
                [math.comb(k, int(x)) * p**x * (1 - p) ** (k - x) if 0 <= x <= k else 0.0 for x in np.ravel(j)]
            ).reshape(j.shape)
        return np.where(j >= 0, out, 0.0)

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "poisson1":
            return gen.poisson(1.0, size)
        if self.kind == "geometric_half":
            return gen.geometric(0.5, size) - 1
        return gen.binomial(self.k, 1.0 / self.k, size)

    def draw_size_biased(self, gen: np.random.Generator, size: int) -> np.ndarray:
        """Draws from ``P[xi_hat = j] = j p_j``."""
        if self.kind == "poisson1":
            return 1 + gen.poisson(1.0, size)
        if self.kind == "geometric_half":
            return 1 + gen.negative_binomial(2, 0.5, size)
        return 1 + gen.binomial(self.k - 1, 1.0 / self.k, size)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "binomial":
            d["k"] = self.k
        return d


@dataclass
class LabeledTree:
    """Rooted tree in breadth-first labelling: vertex 0 is the root and each
    generation occupies a contiguous id range, children grouped by parent."""

    parent: np.ndarray
    generation_sizes: np.ndarray
    truncated: bool = False
    attempts: int = 1
    special: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.parent)

    @property
    def height(self) -> int:
        return len(self.generation_sizes) - 1

    @property
    def depth(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.generation_sizes)), self.generation_sizes)

    def generation(self, d: int) -> int:
        return int(self.generation_sizes[d]) if d < len(self.generation_sizes) else 0

    def children_counts(self) -> np.ndarray:
        return np.bincount(self.parent[1:], minlength=self.size)

    def subtree_sizes(self) -> np.ndarray:
        return subtree_sizes(self.parent, self.depth)

    def edges(self) -> np.ndarray:
        v = np.arange(1, self.size)
        return np.column_stack([self.parent[1:], v])

    def to_graph(self) -> RootedGraph:
        return RootedGraph(self.size, self.edges(), 0, validate=False)


def _grow(law, gen, cap, roots_counts, min_height=0):
    """Breadth-first growth. Returns (parents per generation, truncated) or None if
    the tree dies out before reaching ``min_height``."""
    chunks = [np.array([-1], dtype=np.int64)]
    current = np.zeros(1, dtype=np.int64)
    total = 1
    while True:
        counts = law.draw(gen, len(current)) if roots_counts is None or len(chunks) > 1 else roots_counts
        nkids = int(counts.sum())
        if nkids == 0:
            break
        par = np.repeat(current, counts)
        chunks.append(par)
        current = np.arange(total, total + nkids, dtype=np.int64)
        total += nkids
        # the cap only applies once the height condition is met, so it never biases acceptance
        if total > cap and len(chunks) - 1 >= min_height:
            return chunks, True
    if len(chunks) - 1 < min_height:
        return None
    return chunks, False


def _tree_from_chunks(chunks, truncated, attempts=1, special=None):
    return LabeledTree(
        parent=np.concatenate(chunks),
        generation_sizes=np.array([len(c) for c in chunks], dtype=np.int64),
        truncated=truncated,
        attempts=attempts,
        special=special,
    )


def sample_gw(law: OffspringLaw, rng: RngLike, size_cap: int = 10**6) -> LabeledTree:
    """Unconditioned critical GW tree; flagged ``truncated`` if it outgrows ``size_cap``."""
    if size_cap < 1:
        raise ParameterError("size_cap must be at least 1")
    chunks, trunc = _grow(law, as_generator(rng), size_cap, None)
    return _tree_from_chunks(chunks, trunc)


def sample_gw_conditioned(
    law: OffspringLaw,
    N: int,
    rng: RngLike,
    max_attempts: int | None = None,
    size_cap: int = 10**7,
) -> LabeledTree:
    """GW tree conditioned on ``Z_N > 0``, by exact rejection.

    ``attempts`` on the result counts draws including the accepted one. The
    accepted tree is grown to extinction; if it exceeds ``size_cap`` it is
    returned with ``truncated=True``.
    """
    if N < 1:
        raise ParameterError("N must be at least 1")
    gen = as_generator(rng)
    budget = max_attempts if max_attempts is not None else 10**4 * N
    for attempt in range(1, budget + 1):
        out = _grow(law, gen, size_cap, None, min_height=N)
        if out is not None:
            return _tree_from_chunks(*out, attempts=attempt)
    raise ResourceError(f"no tree with Z_{N} > 0 in {budget} attempts")


@dataclass(frozen=True)
class RootKappaSample:
    """kappa at the root of a conditioned tree, from root-branch sizes only.

    ``exact`` is False when two or more branches passed ``branch_cap``; then
    ``kappa`` is a lower bound.
    """

    kappa: int
    exact: bool
    attempts: int
    height: int
    branch_sizes: np.ndarray


def sample_conditioned_root_kappa(
    law: OffspringLaw,
    N: int,
    rng: RngLike,
    branch_cap: int = 10**5,
    max_attempts: int | None = None,
) -> RootKappaSample:
    """Same law (and the same draws) as ``tree_root_kappa(sample_gw_conditioned(...))``.

    Only frontier vertices and per-branch counts are kept. Once depth N is
    reached, a root branch larger than ``branch_cap`` stops growing; since
    kappa = 1 + sum of branch sizes - largest branch, the value stays exact
    while at most one branch is stopped.
    """
    if N < 1:
        raise ParameterError("N must be at least 1")
    gen = as_generator(rng)
    budget = max_attempts if max_attempts is not None else 10**4 * N
    for attempt in range(1, budget + 1):
        c = int(law.draw(gen, 1)[0])
        if c == 0:
            continue
        labels = np.arange(c)
        sizes = np.ones(c, dtype=np.int64)
        alive = np.ones(c, dtype=bool)
        height = 1
        while len(labels):
            counts = law.draw(gen, len(labels))
            labels = np.repeat(labels, counts)
            if len(labels) == 0:
                break
            height += 1
            sizes += np.bincount(labels, minlength=c)
            if height >= N:
                over = alive & (sizes > branch_cap)
                if over.any():
                    alive &= ~over
                    labels = labels[alive[labels]]
        if height < N:
            continue
        stopped = int((~alive).sum())
        return RootKappaSample(
            kappa=int(1 + sizes.sum() - sizes.max()),
            exact=stopped <= 1,
            attempts=attempt,
            height=height,
            branch_sizes=sizes,
        )
    raise ResourceError(f"no tree with Z_{N} > 0 in {budget} attempts")


def sample_kesten(law: OffspringLaw, depth: int, rng: RngLike) -> LabeledTree:
    """Infinite GW tree conditioned on survival (spine construction), truncated at ``depth``."""
    if depth < 1:
        raise ParameterError("depth must be at least 1")
    gen = as_generator(rng)
    chunks = [np.array([-1], dtype=np.int64)]
    specials = [np.array([True])]
    current = np.zeros(1, dtype=np.int64)
    spec_pos = 0
    total = 1
    for _ in range(depth):
        counts = law.draw(gen, len(current))
        counts[spec_pos] = law.draw_size_biased(gen, 1)[0]
        offs = np.concatenate([[0], np.cumsum(counts)])
        nkids = int(offs[-1])
        chunks.append(np.repeat(current, counts))
        spec_pos = int(offs[spec_pos] + gen.integers(counts[spec_pos]))
        mask = np.zeros(nkids, dtype=bool)
        mask[spec_pos] = True
        specials.append(mask)
        current = np.arange(total, total + nkids, dtype=np.int64)
        total += nkids
    return _tree_from_chunks(chunks, False, special=np.concatenate(specials))


# ---------------------------------------------------------------------------
# extra root edge


def random_root_edge_target(tree: LabeledTree, rng: RngLike) -> int:
    """Uniform vertex that is neither the root nor one of its children."""
    z1 = tree.generation(1)
    eligible = tree.size - 1 - z1
    if eligible <= 0:
        raise StructuralError("no eligible target for an extra root edge")
    return int(1 + z1 + as_generator(rng).integers(eligible))


def add_root_edge(tree, rng: RngLike | None = None, target: int | None = None) -> RootedGraph:
    """Tree plus one edge from the root to a uniform non-adjacent vertex.

    Accepts a ``LabeledTree`` or a tree-shaped ``RootedGraph``.
    """
    if isinstance(tree, LabeledTree):
        if tree.size < 3:
            raise StructuralError("need at least 3 vertices")
        g = tree.to_graph()
    else:
        g = tree
        if g.m != g.n - 1:
            raise StructuralError("input is not a tree")
    root = g.root
    banned = np.zeros(g.n, dtype=bool)
    banned[root] = True
    banned[g.neighbors(root)] = True
    eligible = np.flatnonzero(~banned)
    if len(eligible) == 0:
        raise StructuralError("no eligible target for an extra root edge")
    if target is None:
        if rng is None:
            raise ParameterError("either rng or target is required")
        target = int(eligible[as_generator(rng).integers(len(eligible))])
    elif banned[target]:
        raise StructuralError(f"target {target} is the root or already adjacent to it")
    edges = np.vstack([g.edges, [[root, target]]])
    return RootedGraph(g.n, edges, root, validate=False)


def tree_root_kappa(tree: LabeledTree, sizes: np.ndarray | None = None) -> int:
    """kappa at the root of a tree: size minus the largest root subtree."""
    if tree.size == 1:
        return 1
    sizes = tree.subtree_sizes() if sizes is None else sizes
    z1 = tree.generation(1)
    return int(tree.size - sizes[1 : 1 + z1].max())


def tree_kappa_with_root_edge(tree: LabeledTree, target: int, sizes: np.ndarray | None = None) -> int:
    """kappa at the root after adding the edge (root, target).

    The cycle is the root-target tree path; the trees hanging off it are the
    subtrees of off-path children of path vertices.
    """
    sizes = tree.subtree_sizes() if sizes is None else sizes
    parent = tree.parent
    on_path = np.zeros(tree.size, dtype=bool)
    v = target
    while v != -1:
        on_path[v] = True
        v = parent[v]
    kids = np.arange(1, tree.size)
    hang = kids[on_path[parent[1:]] & ~on_path[1:]]
    return int(tree.size - (sizes[hang].max() if len(hang) else 0))


# ---------------------------------------------------------------------------
# colored Wilson algorithm on K_n


@numba.njit(cache=True)
def _lerw(n, start, target, pos, path, rng):
    # loop-erased walk on K_n from `start` until it hits a vertex with target[v] set;
    # returns (number of path vertices, hit vertex), path[0] == start
    path[0] = start
    pos[start] = 0
    k = 1
    cur = start
    while True:
        r = rng.integers(0, n - 1)
        if r >= cur:
            r += 1
        if target[r]:
            hit = r
            break
        p = pos[r]
        if p >= 0:
            for i in range(p + 1, k):
                pos[path[i]] = -1
            k = p + 1
        else:
            path[k] = r
            pos[r] = k
            k += 1
        cur = r
    for i in range(k):
        pos[path[i]] = -1
    return k, hit


@numba.njit(cache=True)
def _colored_wilson(n, rng):
    nxt = np.full(n, -1, dtype=np.int64)
    color = np.full(n, -1, dtype=np.int64)  # 0 red, 1 blue
    covered = np.zeros(n, dtype=np.bool_)
    pos = np.full(n, -1, dtype=np.int64)
    path = np.empty(n, dtype=np.int64)
    inc = np.empty(n, dtype=np.int64)
    before = np.empty(n, dtype=np.int64)
    ninc = 0
    covered[0] = True
    ncov = 1
    # C_{-1}: walk from x1 to x0
    k, hit = _lerw(n, 1, covered, pos, path, rng)
    for i in range(k):
        covered[path[i]] = True
        nxt[path[i]] = path[i + 1] if i + 1 < k else hit
    inc[ninc] = k
    before[ninc] = 1
    ninc += 1
    ncov += k
    for i in range(k):
        color[path[i]] = 1
    color[0] = 1
    nextstart = 2
    red = 0
    started = False
    while ncov < n:
        while covered[nextstart]:
            nextstart += 1
        k, hit = _lerw(n, nextstart, covered, pos, path, rng)
        for i in range(k):
            covered[path[i]] = True
            nxt[path[i]] = path[i + 1] if i + 1 < k else hit
        if not started:
            # R_0 is this walk plus its endpoint; B_0 the rest of C_{-1}
            color[hit] = 0
            c = 0
            started = True
        else:
            c = color[hit]
        for i in range(k):
            color[path[i]] = c
        inc[ninc] = k
        before[ninc] = ncov
        ninc += 1
        ncov += k
    for v in range(n):
        if color[v] == 0:
            red += 1
    return nxt, color, inc[:ninc], before[:ninc], red, started


@dataclass
class ColoredUstResult:
    """Output of the colored Wilson construction.

    ``increment_sizes[0]`` is |Delta_{-1}| (the first path length L),
    ``increment_sizes[1]`` is |Delta_0|, then |Delta_1|, ...;
    ``colored_before[i]`` is the number of covered vertices when that walk
    started (|C_{i-1}| in the construction's indexing).
    """

    n: int
    graph: RootedGraph
    extra_edge: int
    color: np.ndarray  # per vertex: 0 red, 1 blue
    red_count: int
    blue_count: int
    initial_red: int
    initial_blue: int
    increment_sizes: np.ndarray
    colored_before: np.ndarray
    degenerate: bool = False

    @property
    def first_path_length(self) -> int:
        return int(self.increment_sizes[0])

    @property
    def urn_increments(self) -> np.ndarray:
        """|Delta_1|, |Delta_2|, ... (the urn's random increments)."""
        return self.increment_sizes[2:]

    @property
    def tree_edges(self) -> np.ndarray:
        return self.graph.edges[: self.n - 1]


def sample_ust_colored(n: int, rng: RngLike) -> ColoredUstResult:
    """UST of K_n through an added edge (x0, x1), with the red/blue bookkeeping.

    Walks start from the smallest not-yet-covered vertex label. If the first
    walk covers every vertex there is no coloring step; the result is then
    flagged ``degenerate`` with every vertex blue.
    """
    if n < 3:
        raise ParameterError("n must be at least 3")
    nxt, color, inc, before, red, started = _colored_wilson(n, as_generator(rng))
    v = np.arange(1, n)
    tree = np.column_stack([v, nxt[1:]])
    edges = np.vstack([tree, [[0, 1]]])
    multi = bool(nxt[1] == 0)
    g = RootedGraph(n, edges, 0, multigraph=multi, validate=False)
    if started:
        # R_0: second walk plus its endpoint; B_0: C_{-1} minus that endpoint
        r0 = inc[1] + 1
        b0 = inc[0]
    else:
        r0, b0 = 0, n
    return ColoredUstResult(
        n=n,
        graph=g,
        extra_edge=n - 1,
        color=color,
        red_count=int(red),
        blue_count=int(n - red),
        initial_red=int(r0),
        initial_blue=int(b0),
        increment_sizes=inc.copy(),
        colored_before=before.copy(),
        degenerate=not started,
    )


@numba.njit(cache=True)
def _first_lerw(n, rng):
    covered = np.zeros(n, dtype=np.bool_)
    covered[0] = True
    pos = np.full(n, -1, dtype=np.int64)
    path = np.empty(n, dtype=np.int64)
    k, hit = _lerw(n, 1, covered, pos, path, rng)
    return k


@numba.njit(cache=True)
def _branch_lerw(n, c, rng):
    covered = np.zeros(n, dtype=np.bool_)
    covered[:c] = True
    pos = np.full(n, -1, dtype=np.int64)
    path = np.empty(n, dtype=np.int64)
    k, hit = _lerw(n, c, covered, pos, path, rng)
    return k


def first_lerw_length(n: int, rng: RngLike) -> int:
    """Length of the first walk of the construction (x1 to x0), i.e. d(x0, x1) in the tree."""
    if n < 2:
        raise ParameterError("n must be at least 2")
    return int(_first_lerw(n, as_generator(rng)))


def lerw_branch_size(n: int, c: int, rng: RngLike) -> int:
    """Size of one branch walk from an uncovered vertex into a covered set of size c.

    By the symmetry of K_n only |C| matters, so the covered set is taken to be
    ``{0, ..., c-1}``; this is the same walk the construction runs at each step.
    """
    if not 1 <= c < n:
        raise ParameterError("need 1 <= c < n")
    return int(_branch_lerw(n, c, as_generator(rng)))


def delta_pmf(n: int, c: int) -> np.ndarray:
    """``P[|Delta| = k | |C| = c]`` for k = 1..n-c (index k-1)."""
    if not 1 <= c < n:
        raise ParameterError("need 1 <= c < n")
    k = np.arange(1, n - c + 1)
    stay = np.concatenate([[1.0], np.cumprod(1.0 - (k[:-1] + c) / n)])
    return (k + c) / n * stay


def first_path_pmf(n: int) -> np.ndarray:
    """``P[L = k]`` for the length L = d(x0, x1) of the first walk, k = 1..n-1 (index k-1)."""
    return delta_pmf(n, 1)


def rayleigh_ks(lengths, n: int) -> float:
    """KS distance between the law of ``L / sqrt(n)`` and the standard Rayleigh law."""
    x = np.asarray(lengths, dtype=float) / np.sqrt(n)
    return float(stats.kstest(x, stats.rayleigh.cdf).statistic)


def delta_law(n: int, c: int, k: int) -> float:
    if not 1 <= c < n or not 1 <= k <= n - c:
        raise ParameterError(f"need 1 <= c < n and 1 <= k <= n - c, got n={n}, c={c}, k={k}")
    return float(delta_pmf(n, c)[k - 1])


# ---------------------------------------------------------------------------
# near-critical Erdos-Renyi


def er_edge_probability(n: int, lam: float) -> float:
    return float(min(1.0, max(0.0, 1.0 / n + lam * n ** (-4.0 / 3.0))))


@dataclass
class ErSample:
    lam: float
    n: int
    p: float
    largest_cluster: RootedGraph
    cluster_vertices: np.ndarray  # original labels, sorted; local id i <-> cluster_vertices[i]
    cluster_sizes: np.ndarray  # all cluster sizes, decreasing
    surplus_of_largest: int
    num_edges: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.largest_cluster.n

    @property
    def is_tree(self) -> bool:
        return self.surplus_of_largest == 0


def _pair_offsets(n):
    i = np.arange(n, dtype=np.int64)
    return i * (n - 1) - i * (i - 1) // 2


def _decode_pairs(n, q):
    off = _pair_offsets(n)
    i = np.searchsorted(off, q, side="right") - 1
    j = q - off[i] + i + 1
    return np.column_stack([i, j])


def _skip_positions(total, p, gen):
    if p <= 0.0 or total == 0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    out = []
    last = -1
    while True:
        remaining = total - 1 - last
        size = int(p * remaining + 6.0 * math.sqrt(p * remaining) + 16)
        posn = last + np.cumsum(gen.geometric(p, size))
        keep = posn[posn < total]
        out.append(keep)
        if len(keep) < size:
            break
        last = int(posn[-1])
    return np.concatenate(out)


def er_sample_from_edges(n: int, lam: float, edges: np.ndarray) -> ErSample:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    adj = sparse.csr_matrix((np.ones(len(edges), dtype=np.int8), (edges[:, 0], edges[:, 1])), shape=(n, n))
    ncomp, lab = csgraph.connected_components(adj, directed=False)
    sizes = np.bincount(lab, minlength=ncomp)
    first = np.full(ncomp, n, dtype=np.int64)
    np.minimum.at(first, lab, np.arange(n))
    best = max(range(ncomp), key=lambda c: (sizes[c], -first[c]))
    verts = np.flatnonzero(lab == best)
    local = np.full(n, -1, dtype=np.int64)
    local[verts] = np.arange(len(verts))
    in_c = lab[edges[:, 0]] == best if len(edges) else np.zeros(0, dtype=bool)
    cedges = local[edges[in_c]]
    g = RootedGraph(len(verts), cedges, 0, validate=False)
    return ErSample(
        lam=lam,
        n=n,
        p=er_edge_probability(n, lam),
        largest_cluster=g,
        cluster_vertices=verts,
        cluster_sizes=np.sort(sizes)[::-1],
        surplus_of_largest=int(len(cedges) - len(verts) + 1),
        num_edges=len(edges),
    )


def sample_er(n: int, lam: float, rng: RngLike) -> ErSample:
    """G(n, 1/n + lam n^(-4/3)) by geometric skipping over the pair sequence."""
    if n < 10:
        raise ParameterError("n must be at least 10")
    p = er_edge_probability(n, lam)
    q = _skip_positions(n * (n - 1) // 2, p, as_generator(rng))
    return er_sample_from_edges(n, lam, _decode_pairs(n, q))


def sample_er_coupled(n: int, lams, rng: RngLike, max_n: int = 2000):
    """Monotone coupling: one uniform label per pair, edge present at lambda iff label <= p(lambda).

    Returns a list of (pair-index array, ErSample), one per lambda.
    """
    if n > max_n:
        raise ResourceError(f"label-based coupling limited to n <= {max_n}")
    if n < 10:
        raise ParameterError("n must be at least 10")
    labels = as_generator(rng).random(n * (n - 1) // 2)
    out = []
    for lam in lams:
        q = np.flatnonzero(labels <= er_edge_probability(n, lam))
        out.append((q, er_sample_from_edges(n, lam, _decode_pairs(n, q))))
    return out


# ---------------------------------------------------------------------------


def write_metadata(path, model: str, params: dict, master_seed: int, stream_index: int, **extra) -> None:
    doc = {"model": model, "params": params, "master_seed": int(master_seed), "stream_index": int(stream_index)}
    doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
