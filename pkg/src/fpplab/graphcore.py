"""Rooted graphs, bridges and the bottleneck index kappa.

``kappa(G, s)`` is the minimum, over edges ``e``, of the size of the root's
component in ``G - e``. Only bridges can disconnect, so it is ``n`` for
2-edge-connected graphs and otherwise the smallest root-side bridge
component. The fast path is one lowpoint DFS (numba) plus subtree sizes;
``kappa_oracle`` enumerates vertex subsets and shares no code with it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DataError, ResourceError, StructuralError

__all__ = [
    "RootedGraph",
    "KappaProfile",
    "kappa",
    "kappa_tree",
    "kappa_cycle_decomposition",
    "cycle_decomposition",
    "kappa_d",
    "kappa_oracle",
    "max_kappa_over_roots",
    "kappa_per_vertex",
    "subtree_sizes",
    "write_edgelist",
    "read_edgelist",
    "path_graph",
    "cycle_graph",
    "star_graph",
    "complete_graph",
]


class RootedGraph:
    """Immutable connected graph on vertices ``0..n-1`` with a distinguished root.

    Edge indices are creation order and serve as the fixed tie-breaking order
    of the spreading processes. Adjacency is stored in CSR form, sorted by
    edge index within each vertex. Parallel edges are rejected unless
    ``multigraph=True`` (needed when an added edge duplicates a tree edge).
    """

    __slots__ = ("n", "edges", "root", "multigraph", "indptr", "nbr", "eid")

    def __init__(self, n, edges, root=0, *, multigraph=False, validate=True):
        n = int(n)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if n < 1:
            raise StructuralError("graph needs at least one vertex")
        root = int(root)
        self.n = n
        self.root = root
        self.multigraph = bool(multigraph)
        self.edges = edges
        if validate:
            self._validate()
        m = len(edges)
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        ids = np.concatenate([np.arange(m), np.arange(m)])
        perm = np.lexsort((ids, src))
        self.nbr = dst[perm]
        self.eid = ids[perm]
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=self.indptr[1:])
        for a in (self.edges, self.nbr, self.eid, self.indptr):
            a.setflags(write=False)

    def _validate(self):
        n, e = self.n, self.edges
        if not 0 <= self.root < n:
            raise StructuralError(f"root {self.root} outside [0, {n})")
        if len(e) and (e.min() < 0 or e.max() >= n):
            raise StructuralError("edge endpoint outside vertex range")
        if np.any(e[:, 0] == e[:, 1]):
            raise StructuralError("self-loops are not allowed")
        if not self.multigraph and len(e):
            key = np.minimum(e[:, 0], e[:, 1]) * n + np.maximum(e[:, 0], e[:, 1])
            if len(np.unique(key)) != len(key):
                raise StructuralError("multi-edges are not allowed in a simple graph")
        if n > 1:
            ncomp = csgraph.connected_components(self.csr(), directed=False, return_labels=False)
            if ncomp != 1:
                raise StructuralError(f"graph is disconnected ({ncomp} components)")

    @property
    def m(self) -> int:
        return len(self.edges)

    def csr(self) -> sparse.csr_matrix:
        e = self.edges
        data = np.ones(len(e), dtype=np.int8)
        return sparse.csr_matrix((data, (e[:, 0], e[:, 1])), shape=(self.n, self.n))

    def degree(self, v=None):
        deg = np.diff(self.indptr)
        return deg if v is None else int(deg[v])

    def neighbors(self, v):
        return self.nbr[self.indptr[v] : self.indptr[v + 1]]

    def incident_edges(self, v):
        return self.eid[self.indptr[v] : self.indptr[v + 1]]

    def with_root(self, root: int) -> "RootedGraph":
        if not 0 <= root < self.n:
            raise StructuralError(f"root {root} outside [0, {self.n})")
        g = object.__new__(RootedGraph)
        for name in ("n", "edges", "multigraph", "indptr", "nbr", "eid"):
            setattr(g, name, getattr(self, name))
        g.root = int(root)
        return g

    def adjacency_lists(self):
        return [list(zip(self.neighbors(v).tolist(), self.incident_edges(v).tolist())) for v in range(self.n)]

    def __repr__(self):
        kind = "multigraph" if self.multigraph else "graph"
        return f"RootedGraph({kind}, n={self.n}, m={self.m}, root={self.root})"


@dataclass
class KappaProfile:
    kappa_at_root: int
    bridges: list  # (edge index, root-side size, far-side size), sorted by edge index
    kappa_per_vertex: np.ndarray | None = None

    @property
    def has_bridges(self) -> bool:
        return bool(self.bridges)


# ---------------------------------------------------------------------------
# lowpoint DFS


@numba.njit(cache=True)
def _lowpoint_dfs(n, indptr, nbr, eid, root):
    tin = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    it = indptr[:-1].copy()
    stack = np.empty(n, dtype=np.int64)
    tin[root] = 0
    order[0] = root
    cnt = 1
    stack[0] = root
    sp = 1
    while sp > 0:
        v = stack[sp - 1]
        if it[v] < indptr[v + 1]:
            j = it[v]
            it[v] += 1
            e = eid[j]
            if e == parent_edge[v]:
                continue
            w = nbr[j]
            if tin[w] == -1:
                tin[w] = cnt
                low[w] = cnt
                order[cnt] = w
                cnt += 1
                parent[w] = v
                parent_edge[w] = e
                stack[sp] = w
                sp += 1
            elif tin[w] < low[v]:
                low[v] = tin[w]
        else:
            sp -= 1
            if sp > 0:
                p = parent[v]
                if low[v] < low[p]:
                    low[p] = low[v]
    sub = np.ones(n, dtype=np.int64)
    for i in range(cnt - 1, 0, -1):
        v = order[i]
        sub[parent[v]] += sub[v]
    return tin, low, parent, parent_edge, order, cnt, sub


def _dfs(g: RootedGraph):
    out = _lowpoint_dfs(g.n, g.indptr, g.nbr, g.eid, g.root)
    if out[5] != g.n:
        raise StructuralError("graph is disconnected")
    return out


def _bridge_children(g, tin, low, parent):
    """Vertices whose DFS parent edge is a bridge."""
    nonroot = parent >= 0
    is_b = np.zeros(g.n, dtype=bool)
    is_b[nonroot] = low[nonroot] > tin[parent[nonroot]]
    return np.flatnonzero(is_b)


def kappa(g: RootedGraph, per_vertex: bool = False) -> KappaProfile:
    tin, low, parent, parent_edge, order, cnt, sub = _dfs(g)
    kids = _bridge_children(g, tin, low, parent)
    n = g.n
    bridges = sorted((int(parent_edge[c]), int(n - sub[c]), int(sub[c])) for c in kids)
    k = min([b[1] for b in bridges], default=n)
    prof = KappaProfile(kappa_at_root=int(k), bridges=bridges)
    if per_vertex:
        prof.kappa_per_vertex = _per_vertex(n, order, parent, parent_edge, sub, kids)
    return prof


def _per_vertex(n, order, parent, parent_edge, sub, kids):
    # 2-edge-connected blocks along DFS preorder; the largest far side seen
    # from a block is attained at a bridge incident to that block.
    is_bchild = np.zeros(n, dtype=bool)
    is_bchild[kids] = True
    block = np.zeros(n, dtype=np.int64)
    nb = 1
    for v in order[1:]:
        if is_bchild[v]:
            block[v] = nb
            nb += 1
        else:
            block[v] = block[parent[v]]
    maxfar = np.zeros(nb, dtype=np.int64)
    if len(kids):
        np.maximum.at(maxfar, block[parent[kids]], sub[kids])
        np.maximum.at(maxfar, block[kids], n - sub[kids])
    return n - maxfar[block]


def kappa_per_vertex(g: RootedGraph) -> np.ndarray:
    return kappa(g, per_vertex=True).kappa_per_vertex


def max_kappa_over_roots(g: RootedGraph) -> tuple[int, int]:
    kv = kappa_per_vertex(g)
    v = int(np.argmax(kv))
    return v, int(kv[v])


# ---------------------------------------------------------------------------
# closed forms for trees and unicyclic graphs


def subtree_sizes(parent: np.ndarray, depth: np.ndarray) -> np.ndarray:
    """Subtree sizes from a parent array (root has parent -1), one level at a time."""
    n = len(parent)
    size = np.ones(n, dtype=np.int64)
    if n == 1:
        return size
    by_depth = np.argsort(depth, kind="stable")
    bounds = np.searchsorted(depth[by_depth], np.arange(int(depth.max()) + 2))
    for d in range(int(depth.max()), 0, -1):
        idx = by_depth[bounds[d] : bounds[d + 1]]
        np.add.at(size, parent[idx], size[idx])
    return size


def _bfs_tree(g: RootedGraph):
    order, pred = csgraph.breadth_first_order(g.csr(), g.root, directed=False)
    pred = np.asarray(pred, dtype=np.int64)
    pred[g.root] = -1
    depth = np.zeros(g.n, dtype=np.int64)
    dist = csgraph.shortest_path(g.csr(), directed=False, unweighted=True, indices=g.root)
    depth[:] = dist.astype(np.int64)
    return pred, depth


def kappa_tree(g: RootedGraph) -> int:
    if g.m != g.n - 1:
        raise StructuralError(f"not a tree: n={g.n}, m={g.m}")
    if g.n == 1:
        return 1
    parent, depth = _bfs_tree(g)
    size = subtree_sizes(parent, depth)
    return int(g.n - size[g.neighbors(g.root)].max())


def cycle_decomposition(g: RootedGraph):
    """Return (cycle vertices, sizes of the trees hanging off the cycle) of a unicyclic graph."""
    if g.m != g.n:
        raise StructuralError(f"not unicyclic: n={g.n}, m={g.m}")
    deg = g.degree().copy()
    alive = np.ones(g.n, dtype=bool)
    stack = list(np.flatnonzero(deg == 1))
    while stack:
        v = stack.pop()
        alive[v] = False
        for w in g.neighbors(v):
            if alive[w]:
                deg[w] -= 1
                if deg[w] == 1:
                    stack.append(int(w))
    cyc = np.flatnonzero(alive)
    off = np.flatnonzero(~alive)
    if len(off) == 0:
        return cyc, np.zeros(0, dtype=np.int64)
    sub = g.csr()[off][:, off]
    _, lab = csgraph.connected_components(sub, directed=False)
    return cyc, np.bincount(lab).astype(np.int64)


def kappa_cycle_decomposition(g: RootedGraph) -> int:
    cyc, hanging = cycle_decomposition(g)
    if g.root not in set(cyc.tolist()):
        raise StructuralError("root does not lie on the cycle")
    return int(g.n - (hanging.max() if len(hanging) else 0))


# ---------------------------------------------------------------------------
# brute-force variants


def _root_component_size(adj, root, banned) -> int:
    seen = {root}
    stack = [root]
    while stack:
        v = stack.pop()
        for w, e in adj[v]:
            if e not in banned and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen)


def kappa_d(g: RootedGraph, d: int, max_subsets: int = 10**7) -> int:
    """Minimum root-component size over all removals of ``d - 1`` edges."""
    if d < 2:
        raise StructuralError("d must be at least 2")
    r = d - 1
    if r > g.m:
        raise StructuralError(f"cannot remove {r} edges from a graph with {g.m}")
    if math.comb(g.m, r) > max_subsets:
        raise ResourceError(f"C({g.m},{r}) subsets exceeds the cap of {max_subsets}")
    adj = g.adjacency_lists()
    best = g.n
    for banned in itertools.combinations(range(g.m), r):
        best = min(best, _root_component_size(adj, g.root, set(banned)))
        if best == 1:
            break
    return best


def kappa_oracle(g: RootedGraph, max_n: int = 14) -> int:
    """Smallest connected vertex set containing the root with exactly one boundary edge."""
    n = g.n
    if n > max_n:
        raise ResourceError(f"oracle enumeration is limited to n <= {max_n}")
    s = g.root
    edges = [(int(u), int(v)) for u, v in g.edges]
    nbrmask = [0] * n
    for u, v in edges:
        nbrmask[u] |= 1 << v
        nbrmask[v] |= 1 << u
    full = (1 << n) - 1
    best = n
    others = [v for v in range(n) if v != s]
    for bits in range(1 << (n - 1)):
        mask = 1 << s
        for i, v in enumerate(others):
            if bits >> i & 1:
                mask |= 1 << v
        if mask == full:
            continue
        size = bin(mask).count("1")
        if size >= best:
            continue
        boundary = sum(1 for u, v in edges if ((mask >> u) & 1) != ((mask >> v) & 1))
        if boundary != 1:
            continue
        # connectivity of the induced subgraph
        reach = 1 << s
        frontier = reach
        while frontier:
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= nbrmask[low.bit_length() - 1]
                f ^= low
            nxt &= mask & ~reach
            reach |= nxt
            frontier = nxt
        if reach == mask:
            best = size
    return best


# ---------------------------------------------------------------------------
# small constructors and edge-list files


def path_graph(n: int, root: int = 0) -> RootedGraph:
    return RootedGraph(n, [(i, i + 1) for i in range(n - 1)], root)


def cycle_graph(n: int, root: int = 0) -> RootedGraph:
    if n < 3:
        raise StructuralError(f"a simple cycle needs at least 3 vertices, got {n}")
    return RootedGraph(n, [(i, (i + 1) % n) for i in range(n)], root)


def star_graph(n: int) -> RootedGraph:
    """Star on n vertices rooted at the center 0."""
    return RootedGraph(n, [(0, i) for i in range(1, n)], 0)


def complete_graph(n: int, root: int = 0) -> RootedGraph:
    return RootedGraph(n, list(itertools.combinations(range(n), 2)), root)


def write_edgelist(g: RootedGraph, path) -> None:
    lines = [f"{g.n} {g.m} {g.root}"]
    lines += [f"{u} {v}" for u, v in g.edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edgelist(path) -> RootedGraph:
    """Read the ``n m root`` / ``u v`` format; parallel edges yield a multigraph."""
    text = Path(path).read_text().splitlines()

    def ints(lineno, line, count):
        parts = line.split()
        if len(parts) != count:
            raise DataError(f"{path}:{lineno}: expected {count} integers, got {line!r}")
        try:
            return [int(p) for p in parts]
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-integer field in {line!r}") from None

    if not text:
        raise DataError(f"{path}:1: empty file")
    n, m, root = ints(1, text[0], 3)
    body = [(i + 2, ln) for i, ln in enumerate(text[1:]) if ln.strip()]
    if len(body) != m:
        raise DataError(f"{path}:{len(text)}: header declares {m} edges, found {len(body)}")
    edges = [ints(lineno, ln, 2) for lineno, ln in body]
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    multi = False
    if len(arr):
        key = np.minimum(arr[:, 0], arr[:, 1]) * max(n, 1) + np.maximum(arr[:, 0], arr[:, 1])
        multi = len(np.unique(key)) != len(key)
    try:
        return RootedGraph(n, arr, root, multigraph=multi)
    except StructuralError as exc:
        raise DataError(f"{path}: {exc}") from None
