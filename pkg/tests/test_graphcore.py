import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import connected_graphs, random_connected_graph
from fpplab.errors import DataError, ResourceError, StructuralError
from fpplab.graphcore import (
    RootedGraph,
    complete_graph,
    cycle_graph,
    kappa,
    kappa_cycle_decomposition,
    kappa_d,
    kappa_oracle,
    kappa_per_vertex,
    kappa_tree,
    max_kappa_over_roots,
    path_graph,
    read_edgelist,
    star_graph,
    write_edgelist,
)


def barbell():
    return RootedGraph(6, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)], 0)


def broom():
    # root 0 with a path 0-1-2-3-4 and leaves 5..9
    edges = [(0, 1), (1, 2), (2, 3), (3, 4)] + [(0, v) for v in range(5, 10)]
    return RootedGraph(10, edges, 0)


def test_validation_rejects_bad_graphs():
    with pytest.raises(StructuralError):
        RootedGraph(3, [(0, 1)], 0)
    with pytest.raises(StructuralError):
        RootedGraph(2, [(0, 1), (1, 0)], 0)
    with pytest.raises(StructuralError):
        RootedGraph(2, [(0, 0), (0, 1)], 0)
    with pytest.raises(StructuralError):
        RootedGraph(2, [(0, 1)], 5)
    g = RootedGraph(2, [(0, 1), (1, 0)], 0, multigraph=True)
    assert kappa(g).kappa_at_root == 2


def test_kappa_examples():
    assert kappa(path_graph(5)).kappa_at_root == 1
    assert kappa(star_graph(10)).kappa_at_root == 9
    for r in range(5):
        assert kappa(cycle_graph(5, r)).kappa_at_root == 5
    prof = kappa(barbell())
    assert prof.kappa_at_root == 3
    assert [(b[1], b[2]) for b in prof.bridges] == [(3, 3)]
    assert not kappa(complete_graph(5)).has_bridges


def test_kappa_tree_examples():
    assert kappa_tree(star_graph(10)) == 9
    assert kappa_tree(path_graph(7, root=3)) == 4
    assert kappa(path_graph(7, root=3)).kappa_at_root == 4
    assert kappa_tree(broom()) == 6 == kappa(broom()).kappa_at_root
    with pytest.raises(StructuralError):
        kappa_tree(cycle_graph(4))


def test_kappa_cycle_decomposition_examples():
    for r in range(8):
        assert kappa_cycle_decomposition(cycle_graph(8, r)) == 8
    c4 = RootedGraph(7, [(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (4, 5), (5, 6)], 0)
    assert kappa_cycle_decomposition(c4) == 4 == kappa(c4).kappa_at_root
    c3 = RootedGraph(
        10, [(0, 1), (1, 2), (2, 0), (1, 3), (3, 4), (2, 5), (5, 6), (6, 7), (7, 8), (8, 9)], 0
    )
    assert kappa_cycle_decomposition(c3) == 5 == kappa(c3).kappa_at_root
    with pytest.raises(StructuralError):
        kappa_cycle_decomposition(c4.with_root(4))


def test_kappa_d_examples():
    for r in range(6):
        assert kappa_d(cycle_graph(6, r), 3) == 1
    assert kappa_d(complete_graph(4), 3) == 4
    assert kappa_d(barbell(), 2) == kappa(barbell()).kappa_at_root
    with pytest.raises(StructuralError):
        kappa_d(path_graph(3), 1)
    with pytest.raises(ResourceError):
        kappa_d(complete_graph(12), 6, max_subsets=1000)


def test_oracle_examples():
    assert kappa_oracle(path_graph(5)) == 1
    assert kappa_oracle(cycle_graph(5)) == 5
    with pytest.raises(ResourceError):
        kappa_oracle(path_graph(20))


def test_max_kappa_over_roots():
    v, k = max_kappa_over_roots(path_graph(7))
    assert (v, k) == (3, 4)
    assert max_kappa_over_roots(cycle_graph(6)) == (0, 6)
    v, k = max_kappa_over_roots(barbell())
    assert k == 3


@given(connected_graphs())
def test_kappa_matches_oracle(g):
    assert kappa(g).kappa_at_root == kappa_oracle(g)


@given(connected_graphs())
def test_per_vertex_matches_rerooting(g):
    kv = kappa_per_vertex(g)
    assert [kappa(g.with_root(v)).kappa_at_root for v in range(g.n)] == kv.tolist()


@given(connected_graphs(max_n=6))
def test_kappa_d2_is_kappa(g):
    if g.m >= 1:
        assert kappa_d(g, 2) == kappa(g).kappa_at_root


@given(connected_graphs())
def test_profile_invariants(g):
    prof = kappa(g)
    assert 1 <= prof.kappa_at_root <= g.n
    for _, near, far in prof.bridges:
        assert near + far == g.n
    if not prof.bridges:
        assert prof.kappa_at_root == g.n


def test_tree_closed_form_matches_kappa(gen):
    for _ in range(200):
        g = random_connected_graph(gen, int(gen.integers(2, 40)), 0.0)
        assert kappa_tree(g) == kappa(g).kappa_at_root


def test_edgelist_roundtrip(tmp_path):
    g = barbell()
    write_edgelist(g, tmp_path / "g.txt")
    h = read_edgelist(tmp_path / "g.txt")
    assert h.n == g.n and h.root == g.root
    assert np.array_equal(h.edges, g.edges)


@pytest.mark.parametrize(
    "text, line",
    [("3 2 0\n0 1\n1 x\n", 3), ("3 2 0\n0 1\n", 2), ("", 1), ("3 2\n0 1\n1 2\n", 1)],
)
def test_edgelist_errors_report_line(tmp_path, text, line):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(DataError, match=f":{line}:"):
        read_edgelist(p)


def test_edgelist_disconnected(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("4 2 0\n0 1\n2 3\n")
    with pytest.raises(DataError):
        read_edgelist(p)


def test_edgelist_parallel_edges_give_multigraph(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("2 2 0\n0 1\n1 0\n")
    g = read_edgelist(p)
    assert g.multigraph and kappa(g).kappa_at_root == 2


@given(st.integers(3, 300))
def test_cycle_and_path_families(n):
    assert kappa(cycle_graph(n)).kappa_at_root == n
    assert kappa(path_graph(n)).kappa_at_root == 1
    assert kappa(star_graph(n)).kappa_at_root == n - 1


def test_cycle_needs_three_vertices():
    with pytest.raises(StructuralError):
        cycle_graph(2)
