"""Long-range percolation on the box [-L, L]^d of Z^d, d in {1, 2}."""
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..graph_core import CSRGraph, GraphError
from ..seeds import make_rng


def edge_probability(dist, beta, s_exp):
    """min(1, beta * |x - y|^-s) for positive distances."""
    dist = np.asarray(dist, dtype=float)
    return np.minimum(1.0, beta * dist ** (-s_exp))


def _norm(offsets, norm):
    if norm == "euclidean":
        return np.sqrt((offsets.astype(float) ** 2).sum(axis=1))
    if norm == "l1":
        return np.abs(offsets).sum(axis=1).astype(float)
    raise GraphError(f"unknown norm {norm!r}")


def _offsets(d, L):
    """One representative of each +/- offset pair within the box."""
    w = 2 * L
    if d == 1:
        return np.arange(1, w + 1, dtype=np.int64)[:, None]
    dx, dy = np.meshgrid(np.arange(0, w + 1), np.arange(-w, w + 1), indexing="ij")
    keep = (dx > 0) | ((dx == 0) & (dy > 0))
    return np.stack([dx[keep], dy[keep]], axis=1).astype(np.int64)


class PercolationGraph(CSRGraph):
    """LRP configuration on the whole box; vertex i has coordinates ``coords[i]``."""

    def __init__(self, indptr, indices, weights, root, coords, params):
        super().__init__(indptr, indices, weights, root, coords)
        self.params = params
        s_exp, d = params["s_exp"], params["d"]
        self.transient_regime = d < s_exp < 2 * d

    def index_of(self, point):
        L, d = self.params["L"], self.params["d"]
        side = 2 * L + 1
        idx = 0
        for c in point:
            if abs(c) > L:
                raise GraphError(f"{point!r} outside the box")
            idx = idx * side + (c + L)
        return idx

    @property
    def origin(self):
        return self.index_of((0,) * self.params["d"])


def long_range_percolation(d, beta, s_exp, L, seed, norm="euclidean"):
    """Sample independent edges {x, y} with probability min(1, beta |x-y|^-s).

    Edges are drawn offset by offset: for an offset z there are prod(side - |z_i|)
    candidate pairs, a binomial count of them is present, and their positions
    are a uniform subset.  This is equivalent to independent Bernoulli edges.
    """
    if d not in (1, 2):
        raise GraphError("only d in {1, 2} is supported")
    if L < 1 or beta < 0 or s_exp <= 0:
        raise GraphError("need L >= 1, beta >= 0, s_exp > 0")
    rng = make_rng(seed)
    side = 2 * L + 1
    n = side**d
    offs = _offsets(d, L)
    probs = edge_probability(_norm(offs, norm), beta, s_exp) if beta > 0 else np.zeros(len(offs))
    src, dst = [], []
    for z, p in zip(offs, probs):
        if p <= 0:
            continue
        spans = side - np.abs(z)
        n_pairs = int(np.prod(spans))
        k = n_pairs if p >= 1 else int(rng.binomial(n_pairs, p))
        if k == 0:
            continue
        pos = np.arange(n_pairs) if k == n_pairs else rng.choice(n_pairs, size=k, replace=False)
        if d == 1:
            a = pos
            b = pos + z[0]
        else:
            ix, iy = np.divmod(pos, spans[1])
            y0 = iy + np.maximum(0, -z[1])
            a = ix * side + y0
            b = (ix + z[0]) * side + (y0 + z[1])
        src.append(a)
        dst.append(b)
    if src:
        a = np.concatenate(src)
        b = np.concatenate(dst)
    else:
        a = b = np.zeros(0, dtype=np.int64)
    m = coo_matrix((np.ones(2 * len(a), dtype=np.int64), (np.r_[a, b], np.r_[b, a])), shape=(n, n)).tocsr()
    m.sort_indices()
    grid = np.indices((side,) * d).reshape(d, -1).T - L
    params = {"d": d, "beta": float(beta), "s_exp": float(s_exp), "L": int(L), "seed": int(seed), "norm": norm}
    g = PercolationGraph(m.indptr, m.indices, m.data, 0, grid, params)
    return g.rerooted(g.origin)


def cluster_of_origin(graph, vertex=None):
    """Connected component of ``vertex`` (default: the root) as its own graph.

    Returns None when the vertex is isolated.  Vertices are relabelled
    0..N-1 in increasing order of their original index; ``coords`` and
    ``original`` are carried along.
    """
    v = graph.root if vertex is None else vertex
    if graph.indptr[v] == graph.indptr[v + 1]:
        return None
    n = len(graph)
    rows = np.repeat(np.arange(n), np.diff(graph.indptr))
    m = coo_matrix((graph.weights, (rows, graph.indices)), shape=(n, n)).tocsr()
    _, labels = connected_components(m, directed=False)
    keep = np.flatnonzero(labels == labels[v])
    sub = m[keep][:, keep].tocsr()
    sub.sort_indices()
    new_root = int(np.searchsorted(keep, v))
    coords = graph.coords[keep] if graph.coords is not None else None
    out = CSRGraph(sub.indptr, sub.indices, sub.data, new_root, coords)
    out.original = keep
    return out

