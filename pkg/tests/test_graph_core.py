import itertools

import pytest
from hypothesis import given, strategies as st

from ergolab.generators import CanopyTree, GrandfatherGraph, Lattice, RegularTree
from ergolab.graph_core import (
    FiniteGraph,
    GraphError,
    ball,
    ball_signature,
    check_symmetric,
    from_edgelist,
    graph_distance,
    local_matching_radius,
    to_edgelist,
)


def test_distance_examples():
    z2 = Lattice(2)
    assert graph_distance(z2, (0, 0), (0, 0)) == 0
    assert graph_distance(z2, (0, 0), (2, 3)) == 5
    g = GrandfatherGraph()
    gf = g.father(g.father(g.root))
    assert graph_distance(g, g.root, gf) == 1
    assert graph_distance(g, g.root, g.father(gf)) == 2


def test_lazy_distance_matches_bfs():
    # closed-form distances against plain BFS on the same lazy graph
    g = GrandfatherGraph()
    far = ball(g, g.root, 3).vertices()
    from ergolab.graph_core import _bfs_distance

    for v in far[::7]:
        assert g.distance(g.root, v) == _bfs_distance(g, g.root, v)


def test_ball_sizes():
    assert Lattice(2).ball_size((0, 0), 1) == 5
    assert Lattice(2).ball_size((0, 0), 2) == 13
    g = GrandfatherGraph()
    assert g.ball_size(g.root, 0) == 1
    assert g.ball_size(g.root, 1) == 9
    for r in range(4):
        assert len(ball(g, g.root, r).vertices()) == g.ball_size(g.root, r)
    t = RegularTree(3)
    assert [t.ball_size(t.root, r) for r in range(4)] == [1, 4, 10, 22]


def test_transitive_signatures_agree():
    g = GrandfatherGraph()
    others = [v for v, _ in g.neighbors(g.root)][:3]
    for r in (1, 2, 3):
        ref = ball_signature(g, g.root, r)
        assert all(ball_signature(g, v, r) == ref for v in others)


def test_signature_distinguishes():
    t3 = CanopyTree(3)
    leaf = next(v for v in t3.vertices() if t3.depth(v) == 0)
    assert ball_signature(t3, leaf, 1) != ball_signature(t3, t3.root, 1)
    g, t = GrandfatherGraph(), RegularTree(3)
    assert ball_signature(g, g.root, 1) != ball_signature(t, t.root, 1)


def test_signature_sees_multiplicity():
    a = FiniteGraph.from_edges([(0, 1, 2), (1, 2, 1)], 0)
    b = FiniteGraph.from_edges([(0, 1, 1), (1, 2, 2)], 0)
    assert ball_signature(a, 0, 2) != ball_signature(b, 0, 2)


def test_bi_rooted_signature():
    p = FiniteGraph.from_edges([(0, 1), (1, 2)], 1)
    assert ball_signature(p, 1, 1, 0) == ball_signature(p, 1, 1, 2)
    q = FiniteGraph.from_edges([(0, 1), (1, 2), (2, 3)], 1)
    assert ball_signature(q, 1, 2, 0) != ball_signature(q, 1, 2, 2)
    with pytest.raises(GraphError):
        ball_signature(q, 0, 1, 3)


def test_local_matching_radius():
    g = GrandfatherGraph()
    assert local_matching_radius(g, g, 3) == 3
    assert local_matching_radius(g, Lattice(2), 3) == 0
    t7 = CanopyTree(7, root=(2, ()))
    tinf = CanopyTree(None, root=(2, ()))
    assert t7.depth(t7.root) == 2
    assert local_matching_radius(t7, tinf, 6) >= 4


def test_edgelist_round_trip():
    g = FiniteGraph.from_edges([(0, 1, 3), (1, 2, 1), (2, 0, 2)], 0)
    h = from_edgelist(to_edgelist(g))
    assert ball_signature(h, h.root, 2) == ball_signature(g, 0, 2)
    text = to_edgelist(GrandfatherGraph(), 1)
    assert text.splitlines()[0] == "root 0"
    with pytest.raises(GraphError):
        to_edgelist(GrandfatherGraph())


def test_bad_graphs_rejected():
    with pytest.raises(GraphError):
        FiniteGraph.from_edges([(0, 0)], 0)
    with pytest.raises(GraphError):
        FiniteGraph.from_edges([(0, 1, 0)], 0)


def test_symmetry_of_lazy_graphs():
    for g in (GrandfatherGraph(), CanopyTree(None, True, (5, ())), Lattice(2)):
        check_symmetric(g, ball(g, g.root, 2).vertices())


# -- brute-force soundness ---------------------------------------------------


@st.composite
def small_multigraphs(draw, max_n=6):
    n = draw(st.integers(2, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=len(pairs), unique=True))
    mults = draw(st.lists(st.integers(1, 3), min_size=len(chosen), max_size=len(chosen)))
    root = draw(st.integers(0, n - 1))
    return n, [(a, b, m) for (a, b), m in zip(chosen, mults)], root


def _canon(n, edges):
    return {(min(a, b), max(a, b)): m for a, b, m in edges}


def _rooted_iso(n1, e1, r1, n2, e2, r2):
    # only the component of the root matters for a ball of radius n
    def comp(n, e, r):
        adj = {i: set() for i in range(n)}
        for a, b, _ in e:
            adj[a].add(b)
            adj[b].add(a)
        seen, todo = {r}, [r]
        while todo:
            v = todo.pop()
            for u in adj[v] - seen:
                seen.add(u)
                todo.append(u)
        keep = sorted(seen)
        idx = {v: i for i, v in enumerate(keep)}
        return len(keep), [(idx[a], idx[b], m) for a, b, m in e if a in seen], idx[r]

    n1, e1, r1 = comp(n1, e1, r1)
    n2, e2, r2 = comp(n2, e2, r2)
    if n1 != n2 or len(e1) != len(e2):
        return False
    c2 = _canon(n2, e2)
    for perm in itertools.permutations(range(n1)):
        if perm[r1] != r2:
            continue
        if _canon(n1, [(perm[a], perm[b], m) for a, b, m in e1]) == c2:
            return True
    return False


@given(small_multigraphs(), small_multigraphs())
def test_signature_soundness(x, y):
    n1, e1, r1 = x
    n2, e2, r2 = y
    g1 = FiniteGraph.from_edges(e1, r1, range(n1))
    g2 = FiniteGraph.from_edges(e2, r2, range(n2))
    same = ball_signature(g1, r1, 6) == ball_signature(g2, r2, 6)
    assert same == _rooted_iso(n1, e1, r1, n2, e2, r2)


@given(small_multigraphs(), st.permutations(range(6)))
def test_signature_relabel_invariant(x, perm):
    n, edges, root = x
    g = FiniteGraph.from_edges(edges, root, range(n))
    h = FiniteGraph.from_edges([(perm[a], perm[b], m) for a, b, m in edges], perm[root],
                               [perm[i] for i in range(n)])
    for r in (1, 2, 3):
        assert ball_signature(g, root, r) == ball_signature(h, perm[root], r)


@given(small_multigraphs(max_n=8), st.integers(1, 4))
def test_monotone_consistency(x, r):
    n, edges, root = x
    g = FiniteGraph.from_edges(edges, root, range(n))
    b = ball(g, root, r)
    for r2 in range(r + 1):
        assert ball_signature(b, root, r2) == ball_signature(g, root, r2)


@given(small_multigraphs(max_n=8))
def test_multiplicity_symmetric(x):
    n, edges, root = x
    g = FiniteGraph.from_edges(edges, root, range(n))
    for u in range(n):
        for v in range(n):
            assert g.multiplicity(u, v) == g.multiplicity(v, u)
