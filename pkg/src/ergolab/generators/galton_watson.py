"""Augmented Galton-Watson trees grown lazily from hashed offspring draws."""
import bisect

import numpy as np

from ..graph_core import GraphError, HorizonExceeded, RootedMultigraph
from ..seeds import hash_uniform

MAX_CHILDREN = 64


def normalise_offspring(offspring, max_children=MAX_CHILDREN):
    """Truncate at ``max_children`` and renormalise; returns (probs, truncated)."""
    p = np.asarray(offspring, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0):
        raise GraphError("offspring must be a non-negative probability vector")
    if abs(p.sum() - 1.0) > 1e-9:
        raise GraphError("offspring probabilities must sum to 1")
    truncated = p.size > max_children + 1 and p[max_children + 1 :].sum() > 0
    p = p[: max_children + 1]
    return p / p.sum(), bool(truncated)


class AugmentedGW(RootedMultigraph):
    """Two independent GW trees whose roots are joined by an edge.

    Vertices are ``(side, word)`` with ``side`` in {0, 1}; the root is
    ``(0, ())``.  The number of children of a vertex is an inverse-CDF draw
    from a keyed hash of ``(side, word)``, so re-expansion is identical.
    """

    def __init__(self, offspring, seed, depth_horizon=None, max_children=MAX_CHILDREN):
        self.probs, self.truncated = normalise_offspring(offspring, max_children)
        self.cdf = np.cumsum(self.probs).tolist()
        self.cdf[-1] = 1.0
        self.seed = int(seed)
        self.depth_horizon = depth_horizon
        self.degenerate = self.probs[0] == 1.0
        self.degree_bound = len(self.probs)  # parent + at most len-1 children
        super().__init__((0, ()))

    def n_children(self, v):
        side, w = v
        u = hash_uniform(self.seed, side, len(w), *w)
        return bisect.bisect_right(self.cdf, u)

    def _expand(self, v):
        side, w = v
        if self.depth_horizon is not None and len(w) > self.depth_horizon:
            raise HorizonExceeded(f"generation {len(w)} beyond horizon {self.depth_horizon}")
        out = [((side, w[:-1]) if w else (1 - side, ()), 1)]
        out.extend(((side, w + (i,)), 1) for i in range(self.n_children(v)))
        return out

    def distance(self, u, v):
        (s1, w1), (s2, w2) = u, v
        if s1 != s2:
            return len(w1) + len(w2) + 1
        k = 0
        while k < len(w1) and k < len(w2) and w1[k] == w2[k]:
            k += 1
        return len(w1) + len(w2) - 2 * k


def offspring_mean(probs):
    return float(np.dot(np.arange(len(probs)), probs))
