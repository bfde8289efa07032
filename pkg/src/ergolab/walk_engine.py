"""Simple random walk on rooted multigraphs: sampling, exact propagation, entropy.

The walk picks a uniform incident edge, so a neighbour u of v is chosen with
probability m(v, u) / deg(v).  Logarithms are natural throughout.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .generators.canopy import CanopyTree, eps
from .generators.structured import GrandfatherGraph, Lattice
from .graph_core import CSRGraph, GraphError, graph_csr
from .seeds import make_rng

PRUNE = 1e-15


class DegreeBoundViolated(GraphError):
    pass


def phi(t):
    return -t * math.log(t) if t > 0 else 0.0


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(rng)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def _choose(nb, u):
    deg = sum(m for _, m in nb)
    x = u * deg
    acc = 0
    for w, m in nb:
        acc += m
        if x < acc:
            return w
    return nb[-1][0]


def step(graph, v, rng):
    """One walk step from v using one uniform from ``rng``."""
    nb = graph.neighbors(v)
    if not nb:
        raise GraphError(f"vertex {v!r} has degree 0")
    return _choose(nb, _as_rng(rng).random())


@dataclass
class WalkPath:
    vertices: list
    seed: object = None

    def __len__(self):
        return len(self.vertices) - 1


def simulate_path(graph, start, n, rng, uniforms=None):
    """Length-n path from ``start``; ``uniforms`` (length n) overrides ``rng``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    if uniforms is None:
        uniforms = _as_rng(rng).random(n)
    path = [start]
    v = start
    for t in range(n):
        nb = graph.neighbors(v)
        if not nb:
            raise GraphError(f"vertex {v!r} has degree 0")
        v = _choose(nb, uniforms[t])
        path.append(v)
    return WalkPath(path, seed)


@dataclass
class WalkBatch:
    """Per-walk end distance D_n, range R_n (-1 if not tracked) and first
    return time (-1 if none within n steps)."""

    n: int
    distance: np.ndarray
    range: np.ndarray
    first_return: np.ndarray
    route: str

    @property
    def returned(self):
        return self.first_return >= 0


def _row_ranges(paths):
    srt = np.sort(paths, axis=1)
    return 1 + (np.diff(srt, axis=1) != 0).sum(axis=1)


def _first_returns(paths):
    hit = paths[:, 1:] == paths[:, :1]
    has = hit.any(axis=1)
    return np.where(has, hit.argmax(axis=1) + 1, -1)


def walk_batch(graph, start, uniforms, backend=None, route=None):
    """Run one walk per row of ``uniforms`` from ``start``.

    Structured graphs use the compressed kernels; finite graphs the CSR
    kernel; anything else the generic Python walker.  All routes consume the
    uniforms identically, so they produce the same walks.
    """
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    W, n = uniforms.shape
    if route is None:
        route = _route(graph, start, n)
    if route == "grandfather":
        a, b, first, rng_ = kernels.grandfather_walks(uniforms, backend)
        return WalkBatch(n, (a + 1) // 2 + (b + 1) // 2, rng_, first, route)
    if route == "lattice":
        dist, rng_, first = kernels.lattice_walks(graph.d, uniforms, backend)
        return WalkBatch(n, dist, rng_, first, route)
    if route == "canopy":
        d0 = graph.depth(start)
        table = np.array([0] + [eps(k) for k in range(1, d0 + n + 2)], dtype=np.int64)
        first, _, dist = kernels.canopy_walks(table, graph.reinforced, d0, uniforms, backend)
        return WalkBatch(n, dist, np.full(W, -1, dtype=np.int64), first, route)
    if route == "csr":
        verts, index, indptr, indices, weights = graph_csr(graph)
        s = index[start]
        paths = kernels.csr_walks(indptr, indices, weights, np.full(W, s), uniforms, backend)
        if isinstance(graph, CSRGraph):
            dmap = graph.bfs_distances(s)
        else:
            _, dd = _bfs_all(graph, start)
            dmap = np.array([dd.get(v, -1) for v in verts])
        return WalkBatch(n, dmap[paths[:, -1]], _row_ranges(paths), _first_returns(paths), route)
    if route == "generic":
        dist = np.empty(W, dtype=np.int64)
        rng_ = np.empty(W, dtype=np.int64)
        first = np.full(W, -1, dtype=np.int64)
        for w in range(W):
            p = simulate_path(graph, start, n, None, uniforms[w]).vertices
            dist[w] = graph.distance(start, p[-1])
            rng_[w] = len(set(p))
            for t in range(1, n + 1):
                if p[t] == start:
                    first[w] = t
                    break
        return WalkBatch(n, dist, rng_, first, route)
    raise ValueError(f"unknown route {route!r}")


def _route(graph, start, n):
    if isinstance(graph, GrandfatherGraph):
        return "grandfather"
    if isinstance(graph, Lattice):
        return "lattice"
    if isinstance(graph, CanopyTree) and graph.height is None and graph.depth_horizon is None:
        return "canopy"
    if graph.finite:
        return "csr"
    return "generic"


def _bfs_all(graph, start):
    from .graph_core import _bfs_layers

    return _bfs_layers(graph, start, len(graph.vertices()))


# ---------------------------------------------------------------------------
# Exact propagation
# ---------------------------------------------------------------------------


@dataclass
class WalkDistribution:
    time: int
    mass: dict
    pruned: float = 0.0

    @classmethod
    def delta(cls, v):
        return cls(0, {v: 1.0})

    def total(self):
        return math.fsum(self.mass.values())


def propagate_distribution(graph, dist, prune=PRUNE):
    """One step of the uniform-edge transition operator; atoms below ``prune``
    are dropped and their mass added to ``pruned``."""
    new = {}
    for v, p in dist.mass.items():
        nb = graph.neighbors(v)
        deg = sum(m for _, m in nb)
        for u, m in nb:
            new[u] = new.get(u, 0.0) + p * m / deg
    lost = 0.0
    if prune:
        small = [u for u, q in new.items() if q < prune]
        for u in small:
            lost += new.pop(u)
    return WalkDistribution(dist.time + 1, new, dist.pruned + lost)


def marginal_entropy(dist):
    probs = dist.mass.values() if isinstance(dist, WalkDistribution) else dist
    return math.fsum(phi(p) for p in probs)


def step_entropy(graph, v):
    nb = graph.neighbors(v)
    deg = sum(m for _, m in nb)
    if deg == 0:
        raise GraphError(f"vertex {v!r} has degree 0")
    return math.fsum(phi(m / deg) for _, m in nb)


@dataclass
class EntropyProfile:
    """H[n] = H_n and S[n] = E[step_entropy(X_n)] for n = 0..n_max."""

    H: np.ndarray
    S: np.ndarray
    pruned: np.ndarray
    support: np.ndarray
    route: str

    def joint(self, a, b):
        """H_a^b by the chain rule."""
        if not 0 <= a <= b < len(self.H):
            raise ValueError("need 0 <= a <= b <= n_max")
        return float(self.H[a] + math.fsum(self.S[a:b]))


def _profile_dict(graph, root, n_max, prune):
    H, S, lost, supp = [], [], [], []
    dist = WalkDistribution.delta(root)
    cache = {}
    for t in range(n_max + 1):
        H.append(marginal_entropy(dist))
        s = 0.0
        for v, p in dist.mass.items():
            e = cache.get(v)
            if e is None:
                e = cache[v] = step_entropy(graph, v)
            s += p * e
        S.append(s)
        lost.append(dist.pruned)
        supp.append(len(dist.mass))
        if t < n_max:
            dist = propagate_distribution(graph, dist, prune)
    return H, S, lost, supp


def _profile_csr(graph, root, n_max, prune):
    from scipy.sparse import csr_matrix

    verts, index, indptr, indices, weights = graph_csr(graph)
    n = len(verts)
    rows = np.repeat(np.arange(n), np.diff(indptr))
    deg = np.bincount(rows, weights=weights, minlength=n).astype(float)
    P = csr_matrix((weights / deg[rows], (rows, indices)), shape=(n, n))
    PT = P.T.tocsr()
    step_h = np.zeros(n)
    np.add.at(step_h, rows, -(weights / deg[rows]) * np.log(weights / deg[rows]))
    p = np.zeros(n)
    p[index[root]] = 1.0
    H, S, lost, supp = [], [], [], []
    total_lost = 0.0
    for t in range(n_max + 1):
        nz = p[p > 0]
        H.append(float(-(nz * np.log(nz)).sum()))
        S.append(float(p @ step_h))
        lost.append(total_lost)
        supp.append(int(len(nz)))
        if t < n_max:
            p = PT @ p
            if prune:
                small = (p > 0) & (p < prune)
                total_lost += float(p[small].sum())
                p[small] = 0.0
    return H, S, lost, supp


def _profile_orbits(graph, chain, n_max, prune):
    trans, info = {}, {}

    def get(s):
        t = trans.get(s)
        if t is None:
            t = trans[s] = chain.transitions(s)
            info[s] = (math.log(chain.size(s)), step_entropy(graph, chain.representative(s)))
        return t

    H, S, lost, supp = [], [], [], []
    cur = {chain.start: 1.0}
    total_lost = 0.0
    for t in range(n_max + 1):
        for s in cur:
            get(s)
        H.append(math.fsum(phi(p) + p * info[s][0] for s, p in cur.items()))
        S.append(math.fsum(p * info[s][1] for s, p in cur.items()))
        lost.append(total_lost)
        supp.append(sum(chain.size(s) for s in cur))
        if t < n_max:
            nxt = {}
            for s, p in cur.items():
                for s2, q in get(s):
                    nxt[s2] = nxt.get(s2, 0.0) + p * q
            if prune:
                for s2 in [s2 for s2, q in nxt.items() if q < prune]:
                    total_lost += nxt.pop(s2)
            cur = nxt
    return H, S, lost, supp


def entropy_profile(graph, root, n_max, prune=PRUNE, route=None):
    """Exact H_n and expected step entropies for n = 0..n_max.

    ``route`` is ``"orbits"`` (quotient by automorphisms fixing the root, when
    the graph provides one), ``"csr"`` (sparse matrix, finite graphs) or
    ``"dict"`` (sparse dictionaries on lazy graphs).
    """
    if route is None:
        if graph.orbit_chain(root) is not None:
            route = "orbits"
        elif graph.finite:
            route = "csr"
        else:
            route = "dict"
    if route == "orbits":
        chain = graph.orbit_chain(root)
        if chain is None:
            raise GraphError("graph has no orbit chain")
        H, S, lost, supp = _profile_orbits(graph, chain, n_max, prune)
    elif route == "csr":
        H, S, lost, supp = _profile_csr(graph, root, n_max, prune)
    elif route == "dict":
        H, S, lost, supp = _profile_dict(graph, root, n_max, prune)
    else:
        raise ValueError(f"unknown route {route!r}")
    return EntropyProfile(np.array(H), np.array(S), np.array(lost), np.array(supp, dtype=object), route)


def joint_entropy(graph, root, a, b, route=None):
    """H_a^b(G, root) = H_a + sum_{i=a}^{b-1} E[step_entropy(X_i)]."""
    if not 0 <= a <= b:
        raise ValueError("need 0 <= a <= b")
    return entropy_profile(graph, root, b, route=route).joint(a, b)


# ---------------------------------------------------------------------------
# Brute-force oracles (path enumeration)
# ---------------------------------------------------------------------------


def enumerate_paths(graph, root, n):
    """All length-n paths from root with their probabilities (exponential)."""
    paths = [((root,), 1.0)]
    for _ in range(n):
        nxt = []
        for p, q in paths:
            nb = graph.neighbors(p[-1])
            deg = sum(m for _, m in nb)
            for u, m in nb:
                nxt.append((p + (u,), q * m / deg))
        paths = nxt
    return paths


def path_entropy_direct(graph, root, a, b):
    """H_a^b from the definition: entropy of the law of (X_a, ..., X_b)."""
    law = {}
    for p, q in enumerate_paths(graph, root, b):
        key = p[a:]
        law[key] = law.get(key, 0.0) + q
    return math.fsum(phi(q) for q in law.values())


def conditional_entropy_direct(graph, root, k, n):
    """H(X_1..X_k | X_n) from the exact joint law of (X_1, ..., X_k, X_n)."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    joint, last = {}, {}
    for p, q in enumerate_paths(graph, root, n):
        key = p[1 : k + 1] + (p[n],)
        joint[key] = joint.get(key, 0.0) + q
        last[p[n]] = last.get(p[n], 0.0) + q
    return math.fsum(phi(q) for q in joint.values()) - math.fsum(phi(q) for q in last.values())


# ---------------------------------------------------------------------------
# Varopoulos-Carne and spine resistance
# ---------------------------------------------------------------------------


@dataclass
class VCReport:
    n: int
    M: int
    max_ratio: float
    worst_distance: int
    checked_atoms: int
    ratios_by_time: list = field(default_factory=list)

    @property
    def ok(self):
        return self.max_ratio <= 1.0


def varopoulos_carne_check(graph, root, n, M, route=None):
    """Check P(X_t = x) <= 2 sqrt(M) exp(-d(root, x)^2 / (2t)) for t = 1..n
    over the exact support; reports the largest ratio."""
    chain = graph.orbit_chain(root) if route in (None, "orbits") else None
    if route == "orbits" and chain is None:
        raise GraphError("graph has no orbit chain")
    pref = 2.0 * math.sqrt(M)
    worst, worst_d, atoms, per_t = 0.0, 0, 0, []
    dist_cache = {}

    def check_deg(v):
        if graph.degree(v) > M:
            raise DegreeBoundViolated(f"deg({v!r}) = {graph.degree(v)} > {M}")

    if chain is not None:
        cur = {chain.start: 1.0}
        for t in range(1, n + 1):
            nxt = {}
            for s, p in cur.items():
                for s2, q in chain.transitions(s):
                    nxt[s2] = nxt.get(s2, 0.0) + p * q
            cur = nxt
            best = 0.0
            for s, p in cur.items():
                d = dist_cache.get(s)
                if d is None:
                    rep = chain.representative(s)
                    check_deg(rep)
                    d = dist_cache[s] = graph.distance(root, rep)
                r = (p / chain.size(s)) / (pref * math.exp(-d * d / (2.0 * t)))
                atoms += 1
                if r > best:
                    best = r
                if r > worst:
                    worst, worst_d = r, d
            per_t.append(best)
    else:
        dist = WalkDistribution.delta(root)
        for t in range(1, n + 1):
            dist = propagate_distribution(graph, dist, prune=0)
            best = 0.0
            for v, p in dist.mass.items():
                d = dist_cache.get(v)
                if d is None:
                    check_deg(v)
                    d = dist_cache[v] = graph.distance(root, v)
                r = p / (pref * math.exp(-d * d / (2.0 * t)))
                atoms += 1
                if r > best:
                    best = r
                if r > worst:
                    worst, worst_d = r, d
            per_t.append(best)
    return VCReport(n, M, worst, worst_d, atoms, per_t)


def spine_resistance(k_from, k_to):
    """sum_{k=k_from+1}^{k_to} k^-2: series resistance of the reinforced spine
    between depths k_from and k_to (the edge into depth k carries k^2 copies)."""
    if not 0 <= k_from < k_to:
        raise ValueError("need 0 <= k_from < k_to")
    k = np.arange(k_to, k_from, -1, dtype=np.float64)
    return float(np.sum(1.0 / (k * k)))
