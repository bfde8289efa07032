"""Rooted multigraphs, balls, distances and canonical ball signatures.

Vertices are arbitrary hashable coordinates chosen by each construction (ints,
lattice tuples, tree words).  A graph is either explicit (:class:`FiniteGraph`)
or lazy: subclasses of :class:`RootedMultigraph` implement ``_expand(v)`` and
the base class memoises the result.
"""
import copy
import hashlib
import threading
from dataclasses import dataclass
from typing import Callable, Hashable

import numpy as np
import pynauty


class GraphError(ValueError):
    pass


class HorizonExceeded(RuntimeError):
    """A lazy graph was asked to materialise beyond its configured horizon."""


@dataclass(frozen=True)
class OrbitChain:
    """Quotient of the walk from ``center`` by automorphisms fixing ``center``.

    ``transitions(s)`` lists ``(s2, p)``; ``size(s)`` is the number of vertices
    in orbit ``s``; ``representative(s)`` returns one of them.  Every vertex in
    an orbit carries the same walk probability, which makes exact entropies
    computable on graphs whose balls grow exponentially.
    """

    start: Hashable
    transitions: Callable
    size: Callable
    representative: Callable


class RootedMultigraph:
    """Rooted, locally finite multigraph without loops.

    ``neighbors(v)`` returns a tuple of ``(u, multiplicity)`` pairs.  Lazy
    subclasses override ``_expand``; expansion is deterministic and cached.
    """

    finite = False

    def __init__(self, root):
        self.root = root
        self._adj = {}
        self._sig_cache = {}
        self._lock = threading.Lock()

    # -- adjacency -------------------------------------------------------
    def _expand(self, v):
        raise NotImplementedError

    def neighbors(self, v):
        nb = self._adj.get(v)
        if nb is None:
            nb = tuple(self._expand(v))
            with self._lock:
                nb = self._adj.setdefault(v, nb)
        return nb

    def degree(self, v):
        return sum(m for _, m in self.neighbors(v))

    def multiplicity(self, u, v):
        for w, m in self.neighbors(u):
            if w == v:
                return m
        return 0

    def rerooted(self, v):
        """Same graph (shared caches) with root ``v``."""
        g = copy.copy(self)
        g.root = v
        return g

    # -- metric ----------------------------------------------------------
    def distance(self, u, v):
        """Graph distance by BFS; subclasses override with exact formulas."""
        return _bfs_distance(self, u, v)

    def ball_size(self, v, r):
        return len(_bfs_layers(self, v, r)[0])

    def orbit_chain(self, center):
        return None

    def depth(self, v):
        raise GraphError(f"{type(self).__name__} has no depth labels")

    def vertices(self):
        raise GraphError("lazy infinite graph has no vertex list")

    # -- pickling drops the lock and caches --------------------------------
    def __getstate__(self):
        state = self.__dict__.copy()
        state["_lock"] = None
        if not isinstance(self, FiniteGraph):
            state["_adj"] = {}
        state["_sig_cache"] = {}
        state.pop("_csr", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()


class FiniteGraph(RootedMultigraph):
    """Explicit finite multigraph; ``adj[v]`` is a tuple of ``(u, m)``."""

    finite = True

    def __init__(self, adj, root):
        super().__init__(root)
        self._adj = {v: tuple(nb) for v, nb in adj.items()}
        if root not in self._adj:
            raise GraphError(f"root {root!r} not in graph")

    @classmethod
    def from_edges(cls, edges, root, vertices=()):
        """Build from ``(u, v, m)`` triples; repeated pairs add up."""
        mult = {}
        for e in edges:
            u, v = e[0], e[1]
            m = e[2] if len(e) > 2 else 1
            if u == v:
                raise GraphError("loops are not allowed")
            if m < 1:
                raise GraphError("multiplicities must be positive")
            key = (u, v)
            mult[key] = mult.get(key, 0) + m
            mult[(v, u)] = mult.get((v, u), 0) + m
        adj = {v: [] for v in vertices}
        adj.setdefault(root, [])
        for (u, v), m in mult.items():
            adj.setdefault(u, []).append((v, m))
        return cls(adj, root)

    def _expand(self, v):
        raise GraphError(f"vertex {v!r} not in graph")

    def vertices(self):
        return list(self._adj)

    def __len__(self):
        return len(self._adj)

    def csr(self):
        return graph_csr(self)


def graph_csr(graph):
    """(vertex list, index map, indptr, indices, weights) of a finite graph, cached."""
    if isinstance(graph, CSRGraph):
        return graph.csr()
    c = graph.__dict__.get("_csr")
    if c is None:
        verts = graph.vertices()
        index = {v: i for i, v in enumerate(verts)}
        indptr = np.zeros(len(verts) + 1, dtype=np.int64)
        idx, w = [], []
        for i, v in enumerate(verts):
            nb = graph.neighbors(v)
            indptr[i + 1] = indptr[i] + len(nb)
            for u, m in nb:
                idx.append(index[u])
                w.append(m)
        c = (verts, index, indptr, np.asarray(idx, dtype=np.int64), np.asarray(w, dtype=np.int64))
        graph.__dict__["_csr"] = c
    return c


class CSRGraph(RootedMultigraph):
    """Finite graph on vertices 0..N-1 stored as CSR arrays (large sparse graphs)."""

    finite = True

    def __init__(self, indptr, indices, weights, root, coords=None):
        super().__init__(int(root))
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=np.int64)
        self.coords = coords
        n = len(self.indptr) - 1
        if not 0 <= self.root < n:
            raise GraphError(f"root {root!r} not in graph")

    def __len__(self):
        return len(self.indptr) - 1

    def _expand(self, v):
        if not 0 <= v < len(self):
            raise GraphError(f"vertex {v!r} not in graph")
        a, b = self.indptr[v], self.indptr[v + 1]
        return list(zip(self.indices[a:b].tolist(), self.weights[a:b].tolist()))

    def degree(self, v):
        a, b = self.indptr[v], self.indptr[v + 1]
        return int(self.weights[a:b].sum())

    def degrees(self):
        rows = np.repeat(np.arange(len(self)), np.diff(self.indptr))
        return np.bincount(rows, weights=self.weights, minlength=len(self)).astype(np.int64)

    def vertices(self):
        return list(range(len(self)))

    def csr(self):
        verts = self.vertices()
        return verts, {v: v for v in verts}, self.indptr, self.indices, self.weights

    def bfs_distances(self, v):
        """Hop distances from v (-1 where unreachable)."""
        from scipy.sparse import csr_matrix
        from scipy.sparse.csgraph import shortest_path

        n = len(self)
        m = csr_matrix((np.ones(len(self.indices)), self.indices, self.indptr), shape=(n, n))
        d = shortest_path(m, unweighted=True, indices=[v])[0]
        out = np.full(n, -1, dtype=np.int64)
        ok = np.isfinite(d)
        out[ok] = d[ok].astype(np.int64)
        return out

    def distance(self, u, v):
        d = int(self.bfs_distances(u)[v])
        if d < 0:
            raise GraphError(f"{v!r} not reachable from {u!r}")
        return d


# ---------------------------------------------------------------------------
# BFS helpers
# ---------------------------------------------------------------------------


def _bfs_layers(graph, center, r):
    dist = {center: 0}
    order = [center]
    frontier = [center]
    for d in range(1, r + 1):
        nxt = []
        for v in frontier:
            for u, _ in graph.neighbors(v):
                if u not in dist:
                    dist[u] = d
                    nxt.append(u)
        if not nxt:
            break
        order.extend(nxt)
        frontier = nxt
    return order, dist


def _bfs_distance(graph, u, v, limit=None):
    if u == v:
        return 0
    seen = {u}
    frontier = [u]
    d = 0
    while frontier:
        d += 1
        if limit is not None and d > limit:
            break
        nxt = []
        for x in frontier:
            for y, _ in graph.neighbors(x):
                if y == v:
                    return d
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    raise GraphError(f"{v!r} not reachable from {u!r}")


def graph_distance(graph, u, v):
    """Exact graph distance; multiplicities are ignored."""
    return graph.distance(u, v)


def ball(graph, center, r):
    """Induced rooted sub-multigraph on ``{v : d(center, v) <= r}``."""
    order, _ = _bfs_layers(graph, center, r)
    inside = set(order)
    adj = {}
    for v in order:
        adj[v] = tuple((u, m) for u, m in graph.neighbors(v) if u in inside)
    return FiniteGraph(adj, center)


def ball_arrays(graph, center, r):
    """Compact form of the r-ball: vertex list, distances and edge arrays (i < j)."""
    order, dist = _bfs_layers(graph, center, r)
    index = {v: i for i, v in enumerate(order)}
    ei, ej, em = [], [], []
    for i, v in enumerate(order):
        for u, m in graph.neighbors(v):
            j = index.get(u)
            if j is not None and j > i:
                ei.append(i)
                ej.append(j)
                em.append(m)
    d = np.fromiter((dist[v] for v in order), dtype=np.int64, count=len(order))
    return order, d, np.asarray(ei, np.int64), np.asarray(ej, np.int64), np.asarray(em, np.int64)


def ball_profile(graph, center, r_max):
    """Array of #B(center, r) for r = 0..r_max."""
    if isinstance(graph, CSRGraph):
        d = graph.bfs_distances(center)
        d = d[(d >= 0) & (d <= r_max)]
        return np.cumsum(np.bincount(d, minlength=r_max + 1))
    if type(graph).ball_size is not RootedMultigraph.ball_size:
        return np.array([graph.ball_size(center, r) for r in range(r_max + 1)], dtype=object)
    _, dist = _bfs_layers(graph, center, r_max)
    counts = np.bincount(np.fromiter(dist.values(), dtype=np.int64), minlength=r_max + 1)
    return np.cumsum(counts)


# ---------------------------------------------------------------------------
# Canonical signatures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BallSignature:
    radius: int
    code: bytes

    def hex(self):
        return self.code.hex()


_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(x):
    x = x.astype(np.uint64)
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * _M1
        x = (x ^ (x >> np.uint64(27))) * _M2
        x = x ^ (x >> np.uint64(31))
    return x


def color_refinement(n, ei, ej, em, initial):
    """Multiplicity-aware colour refinement; returns canonical integer ranks.

    ``initial`` is an (n, k) integer array of isomorphism-invariant labels.
    Ranks are assigned by sorting label tuples, so isomorphic inputs get
    identical rank vectors up to the isomorphism.  Neighbour multisets are
    summarised by a 64-bit additive hash; a collision can only merge colours,
    which keeps the result invariant (just coarser).
    """
    _, rank = np.unique(np.asarray(initial).reshape(n, -1), axis=0, return_inverse=True)
    rank = rank.reshape(-1).astype(np.int64)
    n_cls = rank.max() + 1 if n else 0
    src = np.concatenate([ei, ej])
    dst = np.concatenate([ej, ei])
    mul = np.concatenate([em, em]).astype(np.uint64)
    while True:
        with np.errstate(over="ignore"):
            contrib = _mix(rank[dst].astype(np.uint64) * np.uint64(1000003) + mul)
        acc = np.zeros(n, dtype=np.uint64)
        np.add.at(acc, src, contrib)
        key = np.stack([rank.astype(np.uint64), acc], axis=1)
        _, new = np.unique(key, axis=0, return_inverse=True)
        new = new.reshape(-1).astype(np.int64)
        k = new.max() + 1 if n else 0
        if k == n_cls:
            return new
        rank, n_cls = new, k


def canonical_code(n, ei, ej, em, center=0, second=None, dist=None):
    """Canonical byte code of a rooted (optionally bi-rooted) multigraph.

    Equal codes iff there is a multiplicity-preserving isomorphism mapping
    ``center`` to ``center`` and ``second`` to ``second``.  Refined colours give
    an invariant ordered partition; nauty then computes an exact canonical form
    of the colour-preserving graph with one gadget vertex per multi-edge.
    """
    flag = np.full(n, 2, dtype=np.int64)
    flag[center] = 0
    if second is not None:
        if second == center:
            raise GraphError("second root must differ from the centre")
        flag[second] = 1
    if dist is None:
        dist = np.zeros(n, dtype=np.int64)
    init = np.stack([flag, dist], axis=1)
    rank = color_refinement(n, ei, ej, em, init)
    cells = [[] for _ in range(int(rank.max()) + 1)] if n else []
    for v, c in enumerate(rank.tolist()):
        cells[c].append(v)
    cell_keys = [(int(flag[c[0]]), int(dist[c[0]]), len(c)) for c in cells]
    adj = {v: [] for v in range(n)}
    multi = {}
    nxt = n
    for i, j, m in zip(ei.tolist(), ej.tolist(), em.tolist()):
        if m == 1:
            adj[i].append(j)
        else:
            g = nxt
            nxt += 1
            adj[g] = [i, j]
            multi.setdefault(m, []).append(g)
    gadget_keys = sorted(multi)
    coloring = [set(c) for c in cells] + [set(multi[m]) for m in gadget_keys]
    g = pynauty.Graph(nxt, directed=False, adjacency_dict=adj, vertex_coloring=coloring)
    cert = pynauty.certificate(g)
    header = repr((n, cell_keys, [(m, len(multi[m])) for m in gadget_keys])).encode()
    h = hashlib.blake2b(digest_size=20)
    h.update(header)
    h.update(cert)
    return h.digest()


def ball_signature(graph, center, r, second_root=None):
    """Canonical signature of the r-ball around ``center`` (bi-rooted if
    ``second_root`` is given; it must lie inside the ball)."""
    key = (center, r, second_root)
    sig = graph._sig_cache.get(key)
    if sig is not None:
        return sig
    order, d, ei, ej, em = ball_arrays(graph, center, r)
    second = None
    if second_root is not None:
        try:
            second = order.index(second_root)
        except ValueError:
            raise GraphError("second root outside the ball") from None
    sig = BallSignature(r, canonical_code(len(order), ei, ej, em, 0, second, d))
    graph._sig_cache[key] = sig
    return sig


def local_matching_radius(g1, g2, r_max):
    """Largest r <= r_max with isomorphic rooted r-balls (d_loc = 1/(1+r))."""
    for r in range(1, r_max + 1):
        if ball_signature(g1, g1.root, r) != ball_signature(g2, g2.root, r):
            return r - 1
    return r_max


def automorphism_orbits(graph):
    """Vertex orbits of the (unrooted) automorphism group of a finite graph."""
    verts = graph.vertices()
    index = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    adj = {i: [] for i in range(n)}
    multi = {}
    nxt = n
    for i, v in enumerate(verts):
        for u, m in graph.neighbors(v):
            j = index[u]
            if j <= i:
                continue
            if m == 1:
                adj[i].append(j)
            else:
                adj[nxt] = [i, j]
                multi.setdefault(m, []).append(nxt)
                nxt += 1
    coloring = [set(range(n))] + [set(multi[m]) for m in sorted(multi)]
    g = pynauty.Graph(nxt, directed=False, adjacency_dict=adj, vertex_coloring=coloring)
    _, _, _, orbits, _ = pynauty.autgrp(g)
    groups = {}
    for i in range(n):
        groups.setdefault(int(orbits[i]), []).append(verts[i])
    return list(groups.values())


# ---------------------------------------------------------------------------
# Checks and serialisation
# ---------------------------------------------------------------------------


def check_symmetric(graph, vertices):
    """Raise GraphError unless multiplicity(u, v) == multiplicity(v, u) and no loops."""
    for v in vertices:
        nb = graph.neighbors(v)
        if not nb:
            raise GraphError(f"vertex {v!r} has degree 0")
        for u, m in nb:
            if u == v:
                raise GraphError(f"loop at {v!r}")
            if m < 1 or graph.multiplicity(u, v) != m:
                raise GraphError(f"asymmetric multiplicity on {v!r}-{u!r}")


def to_edgelist(graph, radius=None):
    """Edge-list text: ``root <id>`` then ``u v multiplicity`` lines.

    Vertices are relabelled 0..N-1 in BFS order from the root.  Lazy graphs
    need ``radius`` and are cut to that ball.
    """
    if radius is None:
        if not graph.finite:
            raise GraphError("lazy graphs need a radius")
        radius = len(graph.vertices())
    order, _, ei, ej, em = ball_arrays(graph, graph.root, radius)
    lines = ["root 0"]
    lines += [f"{i} {j} {m}" for i, j, m in zip(ei.tolist(), ej.tolist(), em.tolist())]
    return "\n".join(lines) + "\n"


def from_edgelist(text):
    root = None
    edges = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "root":
            root = int(parts[1])
            continue
        u, v = int(parts[0]), int(parts[1])
        m = int(parts[2]) if len(parts) > 2 else 1
        edges.append((u, v, m))
    if root is None:
        raise GraphError("missing 'root' header")
    return FiniteGraph.from_edges(edges, root)
