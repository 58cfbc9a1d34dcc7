import json
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from conftest import three_se
from fpplab.errors import ParameterError, ResourceError, StructuralError
from fpplab.genmodels import (
    LabeledTree,
    OffspringLaw,
    add_root_edge,
    delta_law,
    delta_pmf,
    er_edge_probability,
    first_lerw_length,
    first_path_pmf,
    lerw_branch_size,
    random_root_edge_target,
    rayleigh_ks,
    sample_conditioned_root_kappa,
    sample_er,
    sample_er_coupled,
    sample_gw,
    sample_gw_conditioned,
    sample_kesten,
    sample_ust_colored,
    tree_kappa_with_root_edge,
    tree_root_kappa,
    write_metadata,
)
from fpplab.graphcore import cycle_graph, kappa, kappa_cycle_decomposition, path_graph, star_graph
from fpplab.randsrc import RngStream

POI = OffspringLaw("poisson1")


def _iterate_pgf(s, k):
    for _ in range(k):
        s = math.exp(s - 1.0)
    return s


def survival_prob(N):
    """P[Z_N > 0] for Poisson(1) offspring, from the generating function."""
    return 1.0 - _iterate_pgf(0.0, N)


# ---------------------------------------------------------------------------
# offspring laws and GW trees


@pytest.mark.parametrize("law", [POI, OffspringLaw("geometric_half"), OffspringLaw("binomial", 3)])
def test_offspring_law_moments(law):
    j = np.arange(0, 60)
    p = law.pmf(j)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert (j * p).sum() == pytest.approx(1.0, abs=1e-12)
    assert ((j - 1.0) ** 2 * p).sum() == pytest.approx(law.variance, abs=1e-10)
    x = law.draw(RngStream(0).gen, 10**5)
    assert abs(x.mean() - 1.0) < three_se(x)


def test_offspring_parse_and_errors():
    assert OffspringLaw.parse("binomial:4") == OffspringLaw("binomial", 4)
    assert OffspringLaw.parse("Geometric") == OffspringLaw("geometric_half")
    with pytest.raises(ParameterError):
        OffspringLaw.parse("zipf")
    with pytest.raises(ParameterError):
        OffspringLaw("binomial", 1)


@pytest.mark.parametrize("law", [POI, OffspringLaw("geometric_half"), OffspringLaw("binomial", 3)])
def test_size_biased_law(law):
    x = law.draw_size_biased(RngStream(1).gen, 10**6)
    for k in (1, 2, 3):
        hit = (x == k).astype(float)
        assert abs(hit.mean() - k * float(law.pmf(k))) < three_se(hit)
    nu = x - 1.0
    assert abs(nu.mean() - law.variance) < three_se(nu)


def test_tree_structure(gen):
    for i in range(50):
        t = sample_gw(POI, RngStream(2, i))
        assert t.parent[0] == -1
        assert t.generation_sizes[0] == 1
        assert t.generation_sizes.sum() == t.size
        assert t.height == len(t.generation_sizes) - 1
        assert t.depth.max() == t.height
        assert np.all(t.parent[1:] < np.arange(1, t.size))
        assert t.subtree_sizes()[0] == t.size
        g = t.to_graph()
        assert g.n == t.size and g.m == t.size - 1


def test_gw_size_law():
    trees = [sample_gw(POI, RngStream(3, i), size_cap=31) for i in range(2 * 10**5)]
    sizes = np.array([t.size for t in trees])
    one = (sizes == 1).astype(float)
    assert abs(one.mean() - math.exp(-1)) < three_se(one)
    p30 = (sizes == 30).mean()
    assert p30 == pytest.approx(30**-1.5 / math.sqrt(2 * math.pi), rel=0.2)


def test_gw_size_cap_truncates():
    t = None
    for i in range(2000):
        t = sample_gw(POI, RngStream(4, i), size_cap=50)
        if t.truncated:
            break
    assert t.truncated and t.size >= 50
    with pytest.raises(ParameterError):
        sample_gw(POI, RngStream(0), size_cap=0)


def test_conditioned_acceptance_rate():
    N = 50
    att = np.array([sample_conditioned_root_kappa(POI, N, RngStream(5, i)).attempts for i in range(600)])
    exact = 1.0 / survival_prob(N)
    assert abs(att.mean() - exact) < three_se(att)
    # limit N P[Z_N > 0] -> 2 / sigma^2
    assert 100 * survival_prob(100) == pytest.approx(2.0, rel=0.05)
    assert 200 * survival_prob(200) == pytest.approx(2.0, rel=0.15)


def test_conditioned_generation_mean():
    # E[Z_10 | Z_50 > 0]; limit 1 + 10 sigma^2 = 11
    N, k = 50, 10
    q = _iterate_pgf(0.0, N - k)
    d, s = 1.0, q
    for _ in range(k):
        d *= math.exp(s - 1.0)
        s = math.exp(s - 1.0)
    exact = (1.0 - q * d) / survival_prob(N)
    assert exact == pytest.approx(11.0, rel=0.15)
    z = np.array([sample_gw_conditioned(POI, N, RngStream(6, i), size_cap=10**5).generation(k) for i in range(1500)])
    assert abs(z.mean() - exact) < three_se(z)


def test_conditioned_trees_reach_depth():
    for i in range(30):
        t = sample_gw_conditioned(POI, 20, RngStream(7, i))
        assert t.height >= 20 and t.generation(20) > 0 and t.attempts >= 1
    with pytest.raises(ResourceError):
        sample_gw_conditioned(POI, 200, RngStream(0), max_attempts=1)
    with pytest.raises(ParameterError):
        sample_gw_conditioned(POI, 0, RngStream(0))


def _bfs_shapes(max_size):
    """All plane trees up to max_size vertices as BFS child-count tuples."""
    out = []

    def rec(seq, open_slots):
        if open_slots == 0:
            out.append(tuple(seq))
            return
        for c in range(0, max_size - (len(seq) + open_slots) + 1):
            rec(seq + [c], open_slots - 1 + c)

    rec([], 1)
    return out


def _height(counts):
    depth = [0]
    nxt = 1
    for v, c in enumerate(counts):
        depth += [depth[v] + 1] * c
        nxt += c
    return max(depth)


def test_conditioned_shapes_match_enumeration():
    N, max_size = 3, 6
    shapes = [s for s in _bfs_shapes(max_size) if _height(s) >= N]
    prob = {s: math.prod(float(POI.pmf(c)) for c in s) for s in shapes}
    seen = Counter()
    for i in range(20000):
        t = sample_gw_conditioned(POI, N, RngStream(8, i), size_cap=100)
        if t.size <= max_size and not t.truncated:
            seen[tuple(t.children_counts().tolist())] += 1
    total = sum(seen.values())
    assert set(seen) <= set(shapes)
    p = np.array([prob[s] for s in shapes])
    obs = np.array([seen[s] for s in shapes])
    chi = stats.chisquare(obs, p / p.sum() * total)
    assert chi.pvalue > 1e-3


def test_root_kappa_sampler_matches_full_tree():
    for i in range(40):
        full = sample_gw_conditioned(POI, 15, RngStream(9, i))
        fast = sample_conditioned_root_kappa(POI, 15, RngStream(9, i))
        assert fast.attempts == full.attempts and fast.height == full.height
        assert fast.exact and fast.kappa == tree_root_kappa(full) == kappa(full.to_graph()).kappa_at_root


def test_kesten_spine():
    for i in range(20):
        t = sample_kesten(POI, 25, RngStream(10, i))
        assert t.height == 25
        spine = np.flatnonzero(t.special)
        assert len(spine) == 26
        assert np.all(t.parent[spine[1:]] == spine[:-1])


# ---------------------------------------------------------------------------
# extra root edge


def test_add_root_edge_examples():
    p = path_graph(10)
    g = add_root_edge(p, target=9)
    assert kappa(g).kappa_at_root == 10
    assert kappa_cycle_decomposition(g) == 10
    with pytest.raises(StructuralError):
        add_root_edge(star_graph(6), RngStream(0))
    with pytest.raises(StructuralError):
        add_root_edge(p, target=1)
    with pytest.raises(ParameterError):
        add_root_edge(p)


def test_add_root_edge_uniform_targets():
    tree = None
    for i in range(100):
        tree = sample_gw(POI, RngStream(11, i))
        if tree.size >= 12:
            break
    z1 = tree.generation(1)
    eligible = np.arange(1 + z1, tree.size)
    gen = RngStream(12).gen
    hits = Counter(random_root_edge_target(tree, gen) for _ in range(10**4))
    assert set(hits) == set(eligible.tolist())
    obs = np.array([hits[v] for v in eligible])
    assert stats.chisquare(obs).pvalue > 1e-3
    g = add_root_edge(tree, RngStream(13))
    assert g.m == g.n and g.edges[-1, 0] == 0


@given(st.integers(0, 10**6))
def test_closed_forms_agree_with_kappa(seed):
    tree = sample_gw_conditioned(POI, 4, RngStream(14, seed), size_cap=400)
    if tree.truncated or tree.size - 1 - tree.generation(1) == 0:
        return
    assert tree_root_kappa(tree) == kappa(tree.to_graph()).kappa_at_root
    target = random_root_edge_target(tree, RngStream(15, seed))
    g = add_root_edge(tree, target=target)
    assert tree_kappa_with_root_edge(tree, target) == kappa(g).kappa_at_root == kappa_cycle_decomposition(g)


# ---------------------------------------------------------------------------
# colored Wilson


@given(st.integers(3, 60), st.integers(0, 10**6))
def test_ust_structure(n, seed):
    res = sample_ust_colored(n, RngStream(16, seed))
    g = res.graph
    assert g.m == n and g.n == n
    assert tuple(g.edges[res.extra_edge]) == (0, 1)
    assert res.red_count + res.blue_count == n
    assert int((res.color == 0).sum()) == res.red_count
    assert res.increment_sizes.sum() == n - 1
    if not res.degenerate:
        assert res.initial_red >= 1 and res.initial_blue >= 0
        # R_0 is the second walk with its endpoint, B_0 is C_{-1} minus that endpoint
        assert res.initial_red == res.increment_sizes[1] + 1
        assert res.initial_blue == res.first_path_length
        assert res.initial_red + res.initial_blue + res.urn_increments.sum() == n
    # the extra edge closes a cycle through x0, so kappa at x0 is at least 2
    assert kappa(g).kappa_at_root >= 2


def test_ust_rejects_small_n():
    with pytest.raises(ParameterError):
        sample_ust_colored(2, RngStream(0))


def test_ust_exchangeability():
    deg5, deg7 = [], []
    for i in range(4000):
        d = np.bincount(sample_ust_colored(40, RngStream(17, i)).tree_edges.ravel(), minlength=40)
        deg5.append(d[5])
        deg7.append(d[7])
    top = 5
    a = np.bincount(np.minimum(deg5, top), minlength=top + 1)
    b = np.bincount(np.minimum(deg7, top), minlength=top + 1)
    keep = (a + b) > 0
    assert stats.chi2_contingency(np.vstack([a[keep], b[keep]])).pvalue > 1e-3


def test_ust_spanning_tree_law_small_n():
    # every spanning tree of K_4 has probability 1/16 (Cayley)
    counts = Counter()
    for i in range(16000):
        e = sample_ust_colored(4, RngStream(18, i)).tree_edges
        counts[tuple(sorted(tuple(sorted(x)) for x in e.tolist()))] += 1
    assert len(counts) == 16
    assert stats.chisquare(list(counts.values())).pvalue > 1e-3


def test_delta_law_normalization_and_edges():
    for n in (10, 100, 500):
        for c in range(1, n, max(1, n // 17)):
            assert delta_pmf(n, c).sum() == pytest.approx(1.0, abs=1e-12)
    assert delta_law(10, 9, 1) == 1.0
    assert np.array_equal(first_path_pmf(50), delta_pmf(50, 1))
    with pytest.raises(ParameterError):
        delta_law(10, 0, 1)
    with pytest.raises(ParameterError):
        delta_law(10, 3, 8)


def test_first_path_law_small():
    n = 60
    L = np.array([sample_ust_colored(n, RngStream(19, i)).first_path_length for i in range(20000)])
    emp = np.bincount(L, minlength=n)[1:n] / len(L)
    assert 0.5 * np.abs(emp - first_path_pmf(n)).sum() < 0.03
    L2 = np.array([first_lerw_length(n, RngStream(20, i)) for i in range(20000)])
    assert stats.ks_2samp(L, L2).pvalue > 1e-3


def test_branch_walk_law_small():
    n, c = 80, 10
    D = np.array([lerw_branch_size(n, c, RngStream(21, i)) for i in range(20000)])
    emp = np.bincount(D, minlength=n - c + 1)[1:] / len(D)
    assert 0.5 * np.abs(emp - delta_pmf(n, c)).sum() < 0.03
    with pytest.raises(ParameterError):
        lerw_branch_size(10, 10, RngStream(0))


def test_rayleigh_mean_and_ks():
    n = 10**4
    L = np.array([first_lerw_length(n, RngStream(22, i)) for i in range(3000)])
    assert L.mean() / math.sqrt(n) == pytest.approx(math.sqrt(math.pi / 2), rel=0.1)
    assert rayleigh_ks(L, n) < 0.05


# ---------------------------------------------------------------------------
# Erdos-Renyi


def test_er_clamped_empty():
    s = sample_er(100, -1e9, RngStream(0))
    assert s.p == 0.0 and s.size == 1 and s.surplus_of_largest == 0 and s.is_tree
    assert np.all(s.cluster_sizes == 1)
    assert s.cluster_vertices.tolist() == [0]
    with pytest.raises(ParameterError):
        sample_er(5, 0.0, RngStream(0))


def test_er_probability():
    assert er_edge_probability(1000, 0.0) == pytest.approx(1e-3)
    assert er_edge_probability(1000, 1e9) == 1.0


def test_er_edge_count_and_cluster_scale():
    n = 10**4
    sizes, m = [], []
    for i in range(200):
        s = sample_er(n, 0.0, RngStream(23, i))
        sizes.append(s.size)
        m.append(s.num_edges)
        assert s.surplus_of_largest >= 0
        assert (s.surplus_of_largest == 0) == s.is_tree
        assert s.cluster_sizes[0] == s.size and s.cluster_sizes.sum() == n
    assert 0.5 <= np.mean(sizes) / n ** (2 / 3) <= 4
    m = np.array(m, dtype=float)
    assert abs(m.mean() - (n - 1) / 2) < three_se(m)


def test_er_coupling_monotone():
    out = sample_er_coupled(500, [-2.0, 0.0, 3.0], RngStream(24))
    sets = [set(q.tolist()) for q, _ in out]
    assert sets[0] <= sets[1] <= sets[2]
    sizes = [s.size for _, s in out]
    assert sizes == sorted(sizes)
    with pytest.raises(ResourceError):
        sample_er_coupled(5000, [0.0], RngStream(0))


def test_metadata_keys(tmp_path):
    write_metadata(tmp_path / "m.json", "gw", {"offspring": "poisson1"}, 7, 0, attempts=3)
    doc = json.loads((tmp_path / "m.json").read_text())
    assert {"model", "params", "master_seed", "stream_index"} <= set(doc)
    assert doc["attempts"] == 3
