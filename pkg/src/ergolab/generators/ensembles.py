"""Seedable ensembles of rooted graphs: (seed, replica) -> RootedMultigraph."""
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ..graph_core import FiniteGraph, GraphError, automorphism_orbits
from ..seeds import derive_seed, make_rng
from .canopy import CanopyTree
from .galton_watson import AugmentedGW
from .percolation import long_range_percolation
from .structured import GrandfatherGraph, Lattice, RegularTree


class DegreeCapExceeded(RuntimeError):
    pass


class Ensemble:
    """Distribution of a random rooted graph.

    ``sample(seed, replica)`` must be a pure function of its arguments.
    ``exact_law()`` returns ``[(rooted graph, Fraction), ...]`` when the law
    has finite support small enough to enumerate, otherwise None.
    """

    kind = "ensemble"
    deterministic = False
    transitive = False
    degree_bound = None

    def __init__(self, **params):
        self.params = params

    def sample(self, seed, replica):
        raise NotImplementedError

    def exact_law(self):
        return None

    def describe(self):
        return {"kind": self.kind, **{k: _jsonable(v) for k, v in self.params.items()}}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (tuple, list, np.ndarray)):
        return [_jsonable(x) for x in v]
    return v


class FixedGraphEnsemble(Ensemble):
    """A single deterministic rooted graph."""

    deterministic = True

    def __init__(self, graph, kind, transitive=False, **params):
        super().__init__(**params)
        self.graph = graph
        self.kind = kind
        self.transitive = transitive
        self.degree_bound = getattr(graph, "degree_bound", None)

    def sample(self, seed, replica):
        return self.graph

    def exact_law(self):
        return [(self.graph, Fraction(1))]


class FiniteGraphEnsemble(Ensemble):
    """A fixed finite graph rerooted uniformly or proportionally to degree."""

    kind = "finite"

    def __init__(self, graph, rooting="uniform", **params):
        if rooting not in ("uniform", "degree_biased"):
            raise GraphError(f"unknown rooting {rooting!r}")
        if not graph.finite:
            raise GraphError("finite_graph_ensemble needs a finite graph")
        super().__init__(rooting=rooting, **params)
        self.graph = graph
        self.rooting = rooting
        self._verts = graph.vertices()
        self._int_weights = [graph.degree(v) if rooting == "degree_biased" else 1 for v in self._verts]
        w = np.array(self._int_weights, dtype=float)
        self._weights = w
        self._cdf = np.cumsum(w) / w.sum()
        self.degree_bound = int(max(graph.degree(v) for v in self._verts))
        self._law = None

    def sample(self, seed, replica):
        u = make_rng(seed, replica).random()
        i = int(np.searchsorted(self._cdf, u, side="right"))
        return self.graph.rerooted(self._verts[min(i, len(self._verts) - 1)])

    def exact_law(self):
        """One representative per automorphism orbit, weighted by orbit mass."""
        if self._law is None:
            w = dict(zip(self._verts, self._int_weights))
            total = sum(self._int_weights)
            self._law = [
                (self.graph.rerooted(orb[0]), Fraction(sum(w[v] for v in orb), total))
                for orb in automorphism_orbits(self.graph)
            ]
        return self._law


class AGWEnsemble(Ensemble):
    kind = "agw"

    def __init__(self, offspring, depth_horizon=None, max_children=64):
        super().__init__(offspring=list(offspring), depth_horizon=depth_horizon, max_children=max_children)
        probe = AugmentedGW(offspring, 0, depth_horizon, max_children)
        self.degenerate = probe.degenerate
        self.truncated = probe.truncated
        self.degree_bound = probe.degree_bound
        self.deterministic = bool(np.count_nonzero(probe.probs) == 1)

    def sample(self, seed, replica):
        p = self.params
        return AugmentedGW(p["offspring"], derive_seed(seed, replica), p["depth_horizon"], p["max_children"])


class LRPEnsemble(Ensemble):
    """Long-range percolation seen from a vertex near the centre of the box.

    Replicas are grouped ``roots_per_config`` at a time on one sampled
    configuration.  The root is drawn from the inner box
    ``|x|_inf <= inner * L``, uniformly or proportionally to degree, and is
    conditioned to be non-isolated.  Translation invariance makes this a
    finite-box proxy for the cluster rooted at the origin.
    """

    kind = "lrp"

    def __init__(self, d=1, beta=1.0, s_exp=1.5, L=1000, norm="euclidean", rooting="degree_biased",
                 roots_per_config=50, inner=0.5):
        super().__init__(d=d, beta=beta, s_exp=s_exp, L=L, norm=norm, rooting=rooting,
                         roots_per_config=roots_per_config, inner=inner)
        self._cache = {}

    def configuration(self, seed, index):
        key = (seed, index)
        g = self._cache.get(key)
        if g is None:
            p = self.params
            g = long_range_percolation(p["d"], p["beta"], p["s_exp"], p["L"], derive_seed(seed, index), p["norm"])
            inner = np.all(np.abs(g.coords) <= p["inner"] * p["L"], axis=1)
            deg = g.degrees()
            cand = np.flatnonzero(inner & (deg > 0))
            if len(cand) == 0:
                raise GraphError("no non-isolated vertex in the inner box")
            w = deg[cand].astype(float) if p["rooting"] == "degree_biased" else np.ones(len(cand))
            g.root_candidates = cand
            g.root_cdf = np.cumsum(w) / w.sum()
            if len(self._cache) > 4:
                self._cache.clear()
            self._cache[key] = g
        return g

    def sample(self, seed, replica):
        c, _ = divmod(replica, self.params["roots_per_config"])
        g = self.configuration(seed, c)
        u = make_rng(derive_seed(seed, c), replica).random()
        i = min(int(np.searchsorted(g.root_cdf, u, side="right")), len(g.root_candidates) - 1)
        return g.rerooted(int(g.root_candidates[i]))

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_cache"] = {}
        return state


class BiasedEnsemble(Ensemble):
    """Reweight ``base`` by deg(root)**power via acceptance-rejection.

    ``power=+1`` biases by degree and ``power=-1`` unbiases.  Proposals with
    degree above ``cap`` are rejected and counted in ``rejected_over_cap``.
    """

    def __init__(self, base, power, cap=None, max_proposals=100000):
        if power not in (1, -1):
            raise ValueError("power must be +1 or -1")
        cap = cap if cap is not None else base.degree_bound
        if cap is None and power == 1:
            raise GraphError("degree biasing needs a degree cap for unbounded ensembles")
        super().__init__(power=power, cap=cap)
        self.base = base
        self.power = power
        self.cap = cap
        self.max_proposals = max_proposals
        self.kind = f"{base.kind}+{'bias' if power == 1 else 'unbias'}"
        self.deterministic = False
        self.transitive = base.transitive
        self.degree_bound = base.degree_bound
        self.rejected_over_cap = 0

    def describe(self):
        return {"kind": self.kind, "base": self.base.describe(), "power": self.power, "cap": self.cap}

    def _accept_prob(self, deg):
        if self.power == 1:
            return deg / self.cap
        return 1.0 / deg

    def sample(self, seed, replica):
        s = derive_seed(seed, replica)
        rng = make_rng(s)
        for j in range(self.max_proposals):
            g = self.base.sample(s, j)
            deg = g.degree(g.root)
            if self.cap is not None and deg > self.cap:
                self.rejected_over_cap += 1
                continue
            if rng.random() < self._accept_prob(deg):
                return g
        raise DegreeCapExceeded("no proposal accepted")

    def exact_law(self):
        law = self.base.exact_law()
        if law is None:
            return None
        w = [p * Fraction(g.degree(g.root)) ** self.power for g, p in law]
        z = sum(w)
        return [(g, x / z) for (g, _), x in zip(law, w)]


def bias_by_degree(ensemble, cap=None):
    return BiasedEnsemble(ensemble, 1, cap)


def unbias_by_degree(ensemble, cap=None):
    return BiasedEnsemble(ensemble, -1, cap)


def augmented_galton_watson(offspring, depth_horizon=None, max_children=64):
    return AGWEnsemble(offspring, depth_horizon, max_children)


def finite_graph_ensemble(graph, rooting="uniform"):
    return FiniteGraphEnsemble(graph, rooting)


# -- named finite graphs -------------------------------------------------------


def path_graph(n):
    return FiniteGraph.from_edges([(i, i + 1) for i in range(n - 1)], 0)


def cycle_graph(n):
    return FiniteGraph.from_edges([(i, (i + 1) % n) for i in range(n)], 0)


def complete_graph(n):
    return FiniteGraph.from_edges([(i, j) for i in range(n) for j in range(i + 1, n)], 0)


def star_graph(n):
    return FiniteGraph.from_edges([(0, i) for i in range(1, n + 1)], 0)


@lru_cache(maxsize=None)
def _fixed(kind, args):
    if kind == "grandfather":
        return FixedGraphEnsemble(GrandfatherGraph(), "grandfather", transitive=True)
    if kind == "lattice":
        (d,) = args
        return FixedGraphEnsemble(Lattice(d), "lattice", transitive=True, d=d)
    if kind == "regular_tree":
        (k,) = args
        return FixedGraphEnsemble(RegularTree(k), "regular_tree", transitive=True, k=k)
    raise KeyError(kind)


FINITE_GRAPHS = {"path": path_graph, "cycle": cycle_graph, "complete": complete_graph, "star": star_graph}
ENSEMBLE_KINDS = ("grandfather", "lattice", "regular_tree", "canopy", "canopy_rooted", "agw", "lrp", "finite")


def make_ensemble(kind, **params):
    """Build an ensemble from its kind tag and parameters (the config format).

    ``bias`` (``"degree"`` or ``"inverse_degree"``) wraps the result in a
    degree reweighting; ``degree_cap`` sets its cap.
    """
    params = dict(params)
    bias = params.pop("bias", None)
    cap = params.pop("degree_cap", None)
    if kind == "grandfather":
        ens = _fixed("grandfather", ())
    elif kind == "lattice":
        ens = _fixed("lattice", (int(params.get("d", 2)),))
    elif kind == "regular_tree":
        ens = _fixed("regular_tree", (int(params.get("k", 3)),))
    elif kind == "canopy":
        # finite T_n / T^R_n rerooted at random
        n = int(params["n"])
        tree = CanopyTree(n, bool(params.get("reinforced", False)))
        ens = FiniteGraphEnsemble(tree, params.get("rooting", "degree_biased"), n=n,
                                  reinforced=bool(params.get("reinforced", False)))
        ens.kind = "canopy"
    elif kind == "canopy_rooted":
        # T_n or T_inf at a fixed spine vertex
        n = params.get("n")
        reinforced = bool(params.get("reinforced", False))
        depth = int(params.get("root_depth", 0))
        tree = CanopyTree(n, reinforced, (depth, ()), params.get("depth_horizon"))
        ens = FixedGraphEnsemble(tree, "canopy_rooted", n=n, reinforced=reinforced, root_depth=depth)
    elif kind == "agw":
        ens = AGWEnsemble(params.get("offspring", [0, 0.5, 0.5]), params.get("depth_horizon"),
                          int(params.get("max_children", 64)))
    elif kind == "lrp":
        ens = LRPEnsemble(**params)
    elif kind == "finite":
        if "edges" in params:
            graph = FiniteGraph.from_edges([tuple(e) for e in params["edges"]], params.get("root", 0))
        else:
            name = params.get("graph", "path")
            if name not in FINITE_GRAPHS:
                raise GraphError(f"unknown finite graph {name!r}")
            graph = FINITE_GRAPHS[name](int(params.get("n", 3)))
        extra = {("name" if k == "graph" else k): v for k, v in params.items() if k != "rooting"}
        ens = FiniteGraphEnsemble(graph, params.get("rooting", "uniform"), **extra)
    else:
        raise GraphError(f"unknown ensemble kind {kind!r}")
    if bias == "degree":
        ens = bias_by_degree(ens, cap)
    elif bias == "inverse_degree":
        ens = unbias_by_degree(ens, cap)
    elif bias is not None:
        raise GraphError(f"unknown bias {bias!r}")
    return ens
