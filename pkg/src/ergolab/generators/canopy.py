"""The epsilon/xi recursion, canopy trees T_n and T_inf, and their reinforcements."""
from dataclasses import dataclass
from fractions import Fraction

from ..graph_core import GraphError, HorizonExceeded, OrbitChain, RootedMultigraph

# eps[k] for k >= 1 (eps[0] unused), xi[k] = prod_{i<=k} eps[i], xi[0] = 1.
_EPS = [0, 1]
_XI = [1, 1]


def _grow(k_max):
    while len(_EPS) <= k_max:
        k = len(_EPS) - 1
        _EPS.append(1 if _XI[k] > k**4 else 2)
        _XI.append(_XI[k] * _EPS[-1])


def eps(k):
    _grow(k)
    return _EPS[k]


def xi(k):
    """xi_k with the conventions xi_0 = xi_{-1} = 1."""
    if k <= 0:
        return 1
    _grow(k)
    return _XI[k]


@dataclass(frozen=True)
class EpsilonSequence:
    epsilons: tuple  # epsilons[k-1] = eps_k
    xis: tuple  # xis[k-1] = xi_k

    @property
    def k_max(self):
        return len(self.epsilons)

    def ratio_bounds(self, k_min=1):
        """(min, max) of xi_k / k^4 over k_min..k_max as exact fractions."""
        ratios = [Fraction(x, k**4) for k, x in enumerate(self.xis, start=1) if k >= k_min]
        return min(ratios), max(ratios)


def epsilon_sequence(k_max):
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    _grow(k_max)
    return EpsilonSequence(tuple(_EPS[1 : k_max + 1]), tuple(_XI[1 : k_max + 1]))


def _edge_mult(k, reinforced):
    return k * k if reinforced else 1


class CanopyTree(RootedMultigraph):
    """T_n (``height=n``) or the one-ended T_inf (``height=None``).

    A vertex is ``(D, word)``: the spine vertex at depth ``D`` followed by a
    path of child indices.  Child 0 of a spine vertex is the next spine vertex,
    so canonical words are empty or start with an index >= 1.  Leaves have
    depth 0 and a depth-k vertex has eps_k children.  Neighbour order is
    parent first, then children by index.

    With ``reinforced=True`` every edge between depths k and k-1 carries
    multiplicity k**2.
    """

    def __init__(self, height=None, reinforced=False, root=None, depth_horizon=None):
        if height is not None and height < 1:
            raise GraphError("height must be >= 1")
        self.height = height
        self.reinforced = reinforced
        self.depth_horizon = depth_horizon
        self.finite = height is not None
        self.degree_bound = None
        if root is None:
            root = (height, ()) if height is not None else (0, ())
        super().__init__(root)

    def with_root(self, v):
        return self.rerooted(v)

    @staticmethod
    def depth(v):
        return v[0] - len(v[1])

    def _check(self, v):
        D, w = v
        bad = D < 0 or len(w) > D or (self.height is not None and D > self.height)
        bad = bad or (w and w[0] == 0) or any(not 0 <= c < eps(D - i) for i, c in enumerate(w))
        if bad:
            raise GraphError(f"{v!r} is not a vertex")
        if self.depth_horizon is not None and D > self.depth_horizon:
            raise HorizonExceeded(f"spine depth {D} beyond horizon {self.depth_horizon}")

    def parent(self, v):
        D, w = v
        if w:
            return (D, w[:-1])
        if self.height is not None and D >= self.height:
            return None
        if self.depth_horizon is not None and D + 1 > self.depth_horizon:
            raise HorizonExceeded(f"spine depth {D + 1} beyond horizon {self.depth_horizon}")
        return (D + 1, ())

    def children(self, v):
        D, w = v
        d = D - len(w)
        out = []
        for i in range(eps(d) if d >= 1 else 0):
            out.append((D - 1, ()) if (not w and i == 0) else (D, w + (i,)))
        return out

    def _expand(self, v):
        self._check(v)
        d = self.depth(v)
        out = []
        p = self.parent(v)
        if p is not None:
            out.append((p, _edge_mult(d + 1, self.reinforced)))
        m = _edge_mult(d, self.reinforced)
        out.extend((c, m) for c in self.children(v))
        return out

    def distance(self, u, v):
        (D1, w1), (D2, w2) = u, v
        if D1 == D2:
            k = 0
            while k < len(w1) and k < len(w2) and w1[k] == w2[k]:
                k += 1
            return len(w1) + len(w2) - 2 * k
        return len(w1) + len(w2) + abs(D1 - D2)

    def ball_size(self, v, r):
        """Exact #B(v, r); it depends only on the depth of v."""
        d = self.depth(v)
        top = self.height

        def below(D, m):
            # vertices within m generations below a depth-D vertex
            if m < 0:
                return 0
            return sum(xi(D) // xi(D - t) for t in range(min(m, D) + 1))

        total = 0
        for j in range(r + 1):
            if top is not None and d + j > top:
                break
            total += below(d + j, r - j)
            if j >= 1:
                total -= below(d + j - 1, r - j - 1)
        return total

    def vertices(self):
        if self.height is None:
            raise GraphError("T_inf has no vertex list")
        out = []
        stack = [(self.height, ())]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(self.children(v))
        return out

    def orbit_chain(self, center):
        """States ``(h, m)``: up h steps to an ancestor of the centre, then m down
        (off the centre's line when h >= 1)."""
        d0 = self.depth(center)
        top = self.height
        reinf = self.reinforced

        def size(s):
            h, m = s
            if m == 0:
                return 1
            if h == 0:
                return xi(d0) // xi(d0 - m)
            a = d0 + h
            return (eps(a) - 1) * (xi(a - 1) // xi(a - m))

        def transitions(s):
            h, m = s
            x = d0 + h - m
            up = 0 if (top is not None and x >= top) else _edge_mult(x + 1, reinf)
            nch = eps(x) if x >= 1 else 0
            md = _edge_mult(x, reinf)
            deg = up + nch * md
            out = []
            if up:
                out.append(((h, m - 1) if m else (h + 1, 0), up / deg))
            if nch:
                if h >= 1 and m == 0:
                    out.append(((h - 1, 0), md / deg))
                    if nch > 1:
                        out.append(((h, 1), (nch - 1) * md / deg))
                else:
                    out.append(((h, m + 1), nch * md / deg))
            return out

        def representative(s):
            h, m = s
            v = center
            for _ in range(h):
                v = self.parent(v)
            if m:
                v = self.children(v)[1 if h else 0]
                for _ in range(m - 1):
                    v = self.children(v)[0]
            return v

        return OrbitChain((0, 0), transitions, size, representative)


def canopy_tree(n=None, depth_horizon=None, reinforced=False, root=None):
    """T_n for integer ``n``, T_inf for ``n=None``."""
    return CanopyTree(height=n, reinforced=reinforced, root=root, depth_horizon=depth_horizon)


class ReinforcedTree(RootedMultigraph):
    """Reinforcement of any depth-labelled tree.

    The depth of an edge is the larger depth of its endpoints; an edge of
    depth k becomes k**2 parallel edges.
    """

    def __init__(self, base):
        self.base = base
        self.finite = base.finite
        super().__init__(base.root)

    def depth(self, v):
        return self.base.depth(v)

    def _expand(self, v):
        dv = self.base.depth(v)
        out = []
        for u, m in self.base.neighbors(v):
            k = max(dv, self.base.depth(u))
            out.append((u, m * k * k))
        return out

    def distance(self, u, v):
        return self.base.distance(u, v)

    def ball_size(self, v, r):
        return self.base.ball_size(v, r)

    def vertices(self):
        return self.base.vertices()


def reinforce_edges(tree):
    """Replace each depth-k edge by k**2 parallel edges."""
    if isinstance(tree, CanopyTree):
        if tree.reinforced:
            raise GraphError("tree is already reinforced")
        return CanopyTree(tree.height, True, tree.root, tree.depth_horizon)
    return ReinforcedTree(tree)


@dataclass(frozen=True)
class RootDepthLaw:
    n: int
    enumerated: tuple  # Fractions, index = depth
    closed_form: tuple
    total_oriented_edges: int

    def agreement(self):
        """Depths k at which the closed form equals the enumeration."""
        return [k for k in range(self.n + 1) if self.enumerated[k] == self.closed_form[k]]


def root_depth_distribution(n):
    """Law of the root depth of degree-biased T^R_n, enumerated and closed form."""
    if n < 1:
        raise ValueError("n must be >= 1")
    count = [0] * (n + 1)
    count[n] = 1
    for k in range(n, 0, -1):
        count[k - 1] = count[k] * eps(k)
    mass = []
    for k in range(n + 1):
        down = eps(k) * k * k if k >= 1 else 0
        up = (k + 1) ** 2 if k < n else 0
        mass.append(count[k] * (down + up))
    total = sum(mass)
    enumerated = tuple(Fraction(m, total) for m in mass)
    z = 2 * xi(n) * sum(Fraction((i + 1) ** 2, xi(i)) for i in range(n))
    closed = tuple(
        (Fraction(k * k * xi(n), xi(k - 1)) + Fraction((k + 1) ** 2 * xi(n), xi(k))) / z
        for k in range(n + 1)
    )
    return RootDepthLaw(n, enumerated, closed, total)


def reinforced_edge_total(n):
    """2 xi_n sum_{i<n} (i+1)^2 / xi_i, the oriented-edge count of T^R_n."""
    return 2 * xi(n) * sum(Fraction((i + 1) ** 2, xi(i)) for i in range(n))
