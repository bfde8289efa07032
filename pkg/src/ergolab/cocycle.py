"""The Radon-Nikodym cocycle of reversed one-step edges.

Delta is tabulated on bi-rooted r-ball classes: ``fwd[c]`` is the law of the
class of (G, X0, X1), ``bwd[c]`` the law of the class of (G, X1, X0), and
``delta[c] = bwd[c] / fwd[c]``.  Exact tables hold Fractions.
"""
import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .ensemble_stats import Estimate, _blocks, _walk_rng, parallel_map
from .graph_core import GraphError, _bfs_layers, ball_signature
from .walk_engine import WalkPath, _choose


class UnknownClass(GraphError):
    pass


class UnseenReversalWarning(UserWarning):
    pass


class CocycleBoundViolation(AssertionError):
    pass


def edge_class(graph, x, y, r):
    return ball_signature(graph, x, r, y).code


@dataclass
class EdgeClassTable:
    radius: int
    M: int
    fwd: dict
    bwd: dict
    delta: dict
    reverse: dict  # class -> class of the reversed pair (most frequent)
    counts: dict = field(default_factory=dict)  # class -> (forward count, backward count)
    samples: int = 0
    exact: bool = False
    unseen: list = field(default_factory=list)

    def __len__(self):
        return len(self.delta)

    def lookup(self, code):
        try:
            return self.delta[code]
        except KeyError:
            raise UnknownClass(f"edge class {code.hex()[:12]} not in table") from None

    def __call__(self, graph, x, y):
        if x == y:
            return Fraction(1) if self.exact else 1.0
        return self.lookup(edge_class(graph, x, y, self.radius))

    def log_se(self, code):
        """Delta-method SE of log Delta for a Monte-Carlo entry."""
        if self.exact:
            return 0.0
        nf, nb = self.counts.get(code, (0, 0))
        if nf == 0 or nb == 0:
            return math.inf
        return math.sqrt(1 / nf + 1 / nb)

    def normalization(self):
        """sum_c fwd(c) delta(c); equals 1 when no class was unseen forward."""
        return sum(self.fwd[c] * self.delta[c] for c in self.fwd)

    def check_bounds(self):
        lo, hi = Fraction(1, self.M), Fraction(self.M)
        bad = [c for c, d in self.delta.items() if not lo <= d <= hi]
        if bad:
            raise CocycleBoundViolation(f"{len(bad)} classes outside [1/M, M]")
        return True

    def inverse_symmetry(self, z=3.0):
        """Worst |log(Delta(c) Delta(rev c))| and whether all are within z SE."""
        worst, ok = 0.0, True
        for c, rc in self.reverse.items():
            if rc not in self.delta:
                continue
            dev = abs(math.log(self.delta[c]) + math.log(self.delta[rc]))
            slack = z * math.hypot(self.log_se(c), self.log_se(rc)) if not self.exact else 0.0
            worst = max(worst, dev)
            ok &= dev <= slack + 1e-12
        return worst, ok

    def tampered(self, code=None, factor=2):
        """Copy with one entry multiplied by ``factor`` (fault injection)."""
        code = code if code is not None else max(self.fwd, key=lambda c: self.fwd[c])
        delta = dict(self.delta)
        delta[code] = delta[code] * factor
        return replace(self, delta=delta)

    def to_dict(self):
        keys = sorted(self.delta, key=lambda c: c.hex())
        return {
            "radius": self.radius, "M": self.M, "samples": self.samples, "exact": self.exact,
            "unseen": [c.hex() for c in self.unseen],
            "classes": [
                {"code": c.hex(), "fwd": float(self.fwd.get(c, 0)), "bwd": float(self.bwd.get(c, 0)),
                 "delta": float(self.delta[c]), "reverse": self.reverse[c].hex() if c in self.reverse else None,
                 "exact": str(self.delta[c]) if self.exact else None}
                for c in keys
            ],
        }


def _exact_pairs(ensemble, r):
    """[(forward class, reversed class, probability)] from the exact law."""
    out = []
    for g, w in ensemble.exact_law():
        x = g.root
        nb = g.neighbors(x)
        deg = sum(m for _, m in nb)
        for y, m in nb:
            out.append((edge_class(g, x, y, r), edge_class(g, y, x, r), w * Fraction(m, deg)))
    return out


def _pair_task(ensemble, seed, start, count, r):
    out = []
    for i in range(start, start + count):
        g = ensemble.sample(seed, i)
        x = g.root
        y = _choose(g.neighbors(x), _walk_rng(seed, i).random())
        out.append((edge_class(g, x, y, r), edge_class(g, y, x, r), g.degree(x)))
    return out


def _build(pairs, r, M, samples, exact):
    fwd, bwd, rev_counts, counts = {}, {}, {}, {}
    for c, rc, p in pairs:
        fwd[c] = fwd.get(c, 0) + p
        bwd[rc] = bwd.get(rc, 0) + p
        rev_counts.setdefault(c, {})
        rev_counts[c][rc] = rev_counts[c].get(rc, 0) + p
        if not exact:
            nf, nb = counts.get(c, (0, 0))
            counts[c] = (nf + 1, nb)
            nf, nb = counts.get(rc, (0, 0))
            counts[rc] = (nf, nb + 1)
    if not exact:
        fwd = {c: v / samples for c, v in fwd.items()}
        bwd = {c: v / samples for c, v in bwd.items()}
    delta, unseen = {}, []
    for c in set(fwd) | set(bwd):
        if c not in fwd or fwd[c] == 0:
            unseen.append(c)
            delta[c] = Fraction(M) if exact else float(M)
        else:
            delta[c] = bwd.get(c, 0) / fwd[c]
    reverse = {c: max(d, key=d.get) for c, d in rev_counts.items()}
    return EdgeClassTable(r, M, fwd, bwd, delta, reverse, counts, samples, exact, sorted(unseen))


def estimate_delta(ensemble, r=2, samples=10000, seed=0, workers=1, exact=None, M=None):
    """Tabulate Delta on bi-rooted r-ball classes.

    Exact when the ensemble law is enumerable (transitive graphs use the root
    alone).  Monte-Carlo tables use one step of the walk per replica graph.
    Classes seen only in the reversed law get Delta = M with a warning.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if exact is None:
        exact = ensemble.exact_law() is not None
    if exact:
        pairs = _exact_pairs(ensemble, r)
        observed = 0
    else:
        tasks = [(ensemble, seed, s, c, r) for s, c in _blocks(samples, 250)]
        raw = [p for part in parallel_map(_pair_task, tasks, workers) for p in part]
        pairs = [(c, rc, 1) for c, rc, _ in raw]
        observed = max(d for _, _, d in raw)
        samples = len(raw)
    M = M or ensemble.degree_bound or observed
    if not M:
        raise GraphError("degree bound unknown")
    table = _build(pairs, r, int(M), samples, exact)
    if table.unseen:
        warnings.warn(f"{len(table.unseen)} edge classes seen only reversed; Delta set to M",
                      UnseenReversalWarning, stacklevel=2)
    return table


def delta_along_path(table, graph, path):
    """Product of Delta over consecutive steps; 1 for a path of one vertex."""
    verts = path.vertices if isinstance(path, WalkPath) else list(path)
    out = Fraction(1) if table.exact else 1.0
    for x, y in zip(verts, verts[1:]):
        out *= table(graph, x, y)
    return out


def elog_delta(table):
    """E[log Delta(G, X0, X1)] under the forward law (<= 0 by Jensen)."""
    codes = list(table.fwd)
    p = np.array([float(table.fwd[c]) for c in codes])
    ld = np.array([math.log(table.delta[c]) for c in codes])
    val = math.fsum(p * ld)
    if table.exact:
        return Estimate(val, 0.0, 0)
    n = table.samples
    var = math.fsum(p * (ld - val) ** 2)
    return Estimate(val, math.sqrt(var / n), n)


def ballistic_bound(table):
    """Lower bound |E log Delta| / log M on the speed."""
    e = elog_delta(table)
    lm = math.log(table.M)
    return Estimate(abs(e.value) / lm, e.se / lm, e.n)


def harmonicity_check(table, graph, vertices):
    """max_x |deg(x)^-1 sum_y m(x, y) Delta(x, y) - 1| over ``vertices``."""
    worst = 0
    for x in vertices:
        nb = graph.neighbors(x)
        deg = sum(m for _, m in nb)
        if table.exact:
            s = sum(Fraction(m, deg) * table(graph, x, y) for y, m in nb)
        else:
            s = math.fsum(m / deg * table(graph, x, y) for y, m in nb)
        worst = max(worst, abs(s - 1))
    return worst


def delta_is_constant(table):
    return len(set(table.delta.values())) <= 1


@dataclass
class CycleReport:
    max_abs_log: float
    cycles: int
    walk_cycles: int
    bfs_cycles: int
    longest: int
    max_excess: float = 0.0  # worst |log prod| minus its z-SE slack

    def ok(self, tol=1e-10):
        return self.max_excess <= tol

    def to_dict(self):
        return {**self.__dict__, "ok": self.ok()}


def short_cycles(graph, center, radius):
    """Closed paths through ``center``: one per non-tree edge of the BFS ball,
    plus a back-and-forth along each tree edge at the centre."""
    order, dist = _bfs_layers(graph, center, radius)
    parent = {center: None}
    for x in order:
        for y, _ in graph.neighbors(x):
            if y in dist and y not in parent and dist[y] == dist[x] + 1:
                parent[y] = x
    inside = set(order)

    def to_root(v):
        out = [v]
        while parent[out[-1]] is not None:
            out.append(parent[out[-1]])
        return out

    cycles = [[center, y, center] for y, _ in graph.neighbors(center)]
    seen = set()
    for x in order:
        for y, m in graph.neighbors(x):
            if y not in inside:
                continue
            tree = parent.get(y) == x or parent.get(x) == y
            if tree and m == 1:
                continue
            key = (min(hash(x), hash(y)), max(hash(x), hash(y)))
            if key in seen:
                continue
            seen.add(key)
            cycles.append(to_root(x)[::-1] + to_root(y))
    return cycles


def cycle_product_check(table, graph, n_cycles=200, max_len=50, seed=0, bfs_radius=2, z=3.0):
    """Max |log prod Delta| over sampled closed walks from the root (walks run
    until first return, capped at ``max_len``) and BFS-found short cycles.

    For Monte-Carlo tables each cycle is allowed z times the SE of its
    log-product; ``ok()`` tests the worst excess over that slack.
    """
    rng = _walk_rng(seed, 0)
    cycles = []
    walk_count = 0
    for _ in range(n_cycles):
        path = [graph.root]
        for u in rng.random(max_len):
            path.append(_choose(graph.neighbors(path[-1]), u))
            if path[-1] == graph.root:
                cycles.append(path)
                walk_count += 1
                break
    bfs = short_cycles(graph, graph.root, bfs_radius) if bfs_radius else []
    cycles += bfs
    worst = excess = 0.0
    for c in cycles:
        dev = abs(math.log(delta_along_path(table, graph, c)))
        se = 0.0
        if not table.exact:
            se = math.sqrt(math.fsum(table.log_se(edge_class(graph, x, y, table.radius)) ** 2
                                     for x, y in zip(c, c[1:])))
        worst = max(worst, dev)
        excess = max(excess, dev - z * se)
    longest = max((len(c) - 1 for c in cycles), default=0)
    return CycleReport(worst, len(cycles), walk_count, len(bfs), longest, excess)


def refinement_check(ensemble, r, samples=10000, seed=0, workers=1, z=3.0):
    """Compare Delta at radius r and r + 1 on the same edges.

    Returns (worst |log ratio|, all within z SE) over pairs where the radius-r
    class has a single radius-(r+1) refinement.
    """
    lo = estimate_delta(ensemble, r, samples, seed, workers)
    hi = estimate_delta(ensemble, r + 1, samples, seed, workers)
    parents = {}
    if lo.exact:
        pairs = zip(_exact_pairs(ensemble, r), _exact_pairs(ensemble, r + 1))
        for (c, _, _), (c2, _, _) in pairs:
            parents.setdefault(c, set()).add(c2)
    else:
        for i in range(samples):
            g = ensemble.sample(seed, i)
            x = g.root
            y = _choose(g.neighbors(x), _walk_rng(seed, i).random())
            parents.setdefault(edge_class(g, x, y, r), set()).add(edge_class(g, x, y, r + 1))
    worst, ok = 0.0, True
    for c, kids in parents.items():
        if len(kids) != 1:
            continue
        (k,) = kids
        dev = abs(math.log(lo.delta[c]) - math.log(hi.delta[k]))
        slack = z * math.hypot(lo.log_se(c), hi.log_se(k))
        worst = max(worst, dev)
        ok &= dev <= slack + 1e-12
    return worst, ok


def pathwise_log_bound(table, graph, path, distance):
    """|log Delta(X0, Xn)| <= log(M) d(X0, Xn) for one walk path."""
    return abs(math.log(delta_along_path(table, graph, path))) <= math.log(table.M) * distance + 1e-9


def class_labels(table, graph, center):
    """Delta value per neighbour of ``center`` (for display)."""
    return [(y, m, table(graph, center, y)) for y, m in graph.neighbors(center)]


__all__ = [
    "CocycleBoundViolation", "CycleReport", "EdgeClassTable", "UnknownClass", "UnseenReversalWarning",
    "ballistic_bound", "class_labels", "cycle_product_check", "delta_along_path", "delta_is_constant",
    "edge_class", "elog_delta", "estimate_delta", "harmonicity_check", "pathwise_log_bound",
    "refinement_check", "short_cycles",
]
