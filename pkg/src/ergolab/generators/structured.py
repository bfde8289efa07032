"""Deterministic transitive graphs: the grandfather graph, Z^d and regular trees."""
from math import comb

from ..graph_core import GraphError, OrbitChain, RootedMultigraph


def _ceil_half(x):
    return (x + 1) // 2


class GrandfatherGraph(RootedMultigraph):
    """3-regular tree oriented towards a fixed end, plus grandson-grandfather edges.

    A vertex is ``(h, word)``: go up ``h`` levels from the origin along its
    ray towards the end, then down along ``word`` (bits).  For ``h >= 1`` a
    non-empty word starts with 1 (bit 0 is the chain child).  Neighbour order:
    son0, son1, father, grandsons 00, 01, 10, 11, grandfather.
    """

    degree_bound = 8

    def __init__(self):
        super().__init__((0, ()))

    @staticmethod
    def father(v):
        h, w = v
        return (h, w[:-1]) if w else (h + 1, ())

    @staticmethod
    def son(v, bit):
        h, w = v
        if h >= 1 and not w and bit == 0:
            return (h - 1, ())
        return (h, w + (bit,))

    def _expand(self, v):
        son, father = self.son, self.father
        f = father(v)
        out = [(son(v, 0), 1), (son(v, 1), 1), (f, 1)]
        for b1 in (0, 1):
            s = son(v, b1)
            for b2 in (0, 1):
                out.append((son(s, b2), 1))
        out.append((father(f), 1))
        return out

    @staticmethod
    def level(v):
        """Busemann level towards the end (father = +1)."""
        return v[0] - len(v[1])

    @staticmethod
    def tree_offsets(u, v):
        """(up, down) tree steps from u to v through their common ancestor."""
        (h1, w1), (h2, w2) = u, v
        if h1 == h2:
            k = 0
            while k < len(w1) and k < len(w2) and w1[k] == w2[k]:
                k += 1
            return len(w1) - k, len(w2) - k
        if h1 < h2:
            return len(w1) + h2 - h1, len(w2)
        return len(w1), len(w2) + h1 - h2

    def distance(self, u, v):
        up, down = self.tree_offsets(u, v)
        return _ceil_half(up) + _ceil_half(down)

    @staticmethod
    def orbit_size(a, b):
        if a == 0:
            return 1 << b
        return 1 if b == 0 else 1 << (b - 1)

    def ball_size(self, v, r):
        total = 0
        for a in range(2 * r + 1):
            rem = r - _ceil_half(a)
            if rem < 0:
                break
            for b in range(2 * rem + 1):
                total += self.orbit_size(a, b)
        return total

    def orbit_chain(self, center):
        def down(s, bit):
            a, b = s
            if b == 0 and a >= 1 and bit == 0:
                return (a - 1, 0)
            return (a, b + 1)

        def up(s):
            a, b = s
            return (a, b - 1) if b > 0 else (a + 1, 0)

        def transitions(s):
            out = {}
            nxt = [down(s, 0), down(s, 1), up(s)]
            nxt += [down(down(s, b1), b2) for b1 in (0, 1) for b2 in (0, 1)]
            nxt.append(up(up(s)))
            for t in nxt:
                out[t] = out.get(t, 0.0) + 0.125
            return list(out.items())

        def representative(s):
            a, b = s
            v = center
            for _ in range(a):
                v = self.father(v)
            if b:
                v = self.son(v, 1 if a else 0)
                for _ in range(b - 1):
                    v = self.son(v, 0)
            return v

        return OrbitChain((0, 0), transitions, lambda s: self.orbit_size(*s), representative)


class Lattice(RootedMultigraph):
    """Z^d with unit multiplicities; vertices are d-tuples, root the origin.

    Neighbour slot 2i is ``-e_i`` and 2i+1 is ``+e_i``.
    """

    def __init__(self, d):
        if d < 1:
            raise GraphError("dimension must be >= 1")
        self.d = d
        self.degree_bound = 2 * d
        super().__init__((0,) * d)

    def _expand(self, v):
        out = []
        for i in range(self.d):
            for delta in (-1, 1):
                u = list(v)
                u[i] += delta
                out.append((tuple(u), 1))
        return out

    def distance(self, u, v):
        return sum(abs(a - b) for a, b in zip(u, v))

    def ball_size(self, v, r):
        return sum((1 << k) * comb(self.d, k) * comb(r, k) for k in range(min(self.d, r) + 1))


class RegularTree(RootedMultigraph):
    """k-regular tree; vertices are words from the root ``()``."""

    def __init__(self, k=3):
        if k < 2:
            raise GraphError("k must be >= 2")
        self.k = k
        self.degree_bound = k
        super().__init__(())

    def _expand(self, w):
        if not w:
            return [((i,), 1) for i in range(self.k)]
        return [(w[:-1], 1)] + [(w + (i,), 1) for i in range(self.k - 1)]

    def distance(self, u, v):
        n = 0
        while n < len(u) and n < len(v) and u[n] == v[n]:
            n += 1
        return len(u) + len(v) - 2 * n

    def ball_size(self, v, r):
        k = self.k
        return 1 + k * sum((k - 1) ** j for j in range(r))

    def orbit_chain(self, center):
        k = self.k

        def transitions(j):
            if j == 0:
                return [(1, 1.0)]
            return [(j + 1, (k - 1) / k), (j - 1, 1 / k)]

        def size(j):
            return 1 if j == 0 else k * (k - 1) ** (j - 1)

        def representative(j):
            prev, v = None, center
            for _ in range(j):
                for u, _ in self.neighbors(v):
                    if u != prev:
                        prev, v = v, u
                        break
            return v

        return OrbitChain(0, transitions, size, representative)


def grandfather_graph():
    return GrandfatherGraph()


def lattice(d):
    return Lattice(d)


def regular_tree(k=3):
    return RegularTree(k)
