"""Batched random-walk kernels.

Every kernel exists twice: a numba version that loops walker by walker and a
numpy version vectorised across walkers.  Both consume the same array of
uniforms and make identical branch decisions, so for a fixed input they return
identical output.  The public wrappers pick the backend from
:mod:`ergolab._accel`; pass ``backend="numpy"`` or ``"numba"`` to force one.
"""
import numpy as np

from ._accel import USE_NUMBA, HAVE_NUMBA, njit

# ---------------------------------------------------------------------------
# Finite graphs in CSR form
# ---------------------------------------------------------------------------
# Rows are addressed through a global cumulative weight array ``gcum``:
#   base[v] = gcum[indptr[v] - 1]  (0 for the first entry)
#   deg[v]  = gcum[indptr[v+1] - 1] - base[v]
# A step from v with uniform u lands on indices[searchsorted(gcum, base + u*deg, 'right')].


def csr_tables(indptr, weights):
    gcum = np.cumsum(weights, dtype=np.float64)
    base = np.zeros(len(indptr) - 1, dtype=np.float64)
    nz = indptr[:-1] > 0
    base[nz] = gcum[indptr[:-1][nz] - 1]
    deg = np.zeros_like(base)
    has = indptr[1:] > indptr[:-1]
    deg[has] = gcum[indptr[1:][has] - 1] - base[has]
    return gcum, base, deg


@njit
def _csr_walks_nb(indices, gcum, base, deg, starts, uniforms):
    n_walks, n_steps = uniforms.shape
    out = np.empty((n_walks, n_steps + 1), dtype=np.int64)
    for w in range(n_walks):
        v = starts[w]
        out[w, 0] = v
        for t in range(n_steps):
            target = base[v] + uniforms[w, t] * deg[v]
            k = np.searchsorted(gcum, target, side="right")
            v = indices[k]
            out[w, t + 1] = v
    return out


def _csr_walks_np(indices, gcum, base, deg, starts, uniforms):
    n_walks, n_steps = uniforms.shape
    out = np.empty((n_walks, n_steps + 1), dtype=np.int64)
    v = np.asarray(starts, dtype=np.int64).copy()
    out[:, 0] = v
    for t in range(n_steps):
        target = base[v] + uniforms[:, t] * deg[v]
        v = indices[np.searchsorted(gcum, target, side="right")]
        out[:, t + 1] = v
    return out


def csr_walks(indptr, indices, weights, starts, uniforms, backend=None):
    """Paths of shape (walks, steps + 1) on a CSR multigraph."""
    gcum, base, deg = csr_tables(np.asarray(indptr), np.asarray(weights))
    starts = np.asarray(starts, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    if _pick(backend):
        return _csr_walks_nb(indices, gcum, base, deg, starts, uniforms)
    return _csr_walks_np(indices, gcum, base, deg, starts, uniforms)


# ---------------------------------------------------------------------------
# Canopy trees, walker state relative to its start vertex
# ---------------------------------------------------------------------------
# (up, down): the lowest common ancestor of the walker and the start is the
# start's ancestor ``up`` levels higher, and the walker sits ``down`` levels
# below that ancestor on a branch avoiding the start.  The start's chain child is
# child 0, matching the neighbour order of CanopyTree (parent first).


@njit
def _canopy_nb(eps, reinforced, start_depth, uniforms):
    n_walks, n_steps = uniforms.shape
    first = np.full(n_walks, -1, dtype=np.int64)
    final_depth = np.empty(n_walks, dtype=np.int64)
    dist = np.empty(n_walks, dtype=np.int64)
    for w in range(n_walks):
        up = 0
        down = 0
        for t in range(n_steps):
            d = start_depth + up - down
            if reinforced:
                mu = float((d + 1) * (d + 1))
                md = float(d * d)
            else:
                mu = 1.0
                md = 1.0
            e = eps[d] if d >= 1 else 0
            total = mu + e * md
            x = uniforms[w, t] * total
            if x < mu:
                if down > 0:
                    down -= 1
                else:
                    up += 1
            else:
                c = int((x - mu) // md)
                if down == 0 and up >= 1:
                    if c == 0:
                        up -= 1
                    else:
                        down = 1
                else:
                    down += 1
            if up == 0 and down == 0 and first[w] < 0:
                first[w] = t + 1
        final_depth[w] = start_depth + up - down
        dist[w] = up + down
    return first, final_depth, dist


def _canopy_np(eps, reinforced, start_depth, uniforms):
    n_walks, n_steps = uniforms.shape
    up = np.zeros(n_walks, dtype=np.int64)
    down = np.zeros(n_walks, dtype=np.int64)
    first = np.full(n_walks, -1, dtype=np.int64)
    eps = np.asarray(eps, dtype=np.int64)
    for t in range(n_steps):
        d = start_depth + up - down
        if reinforced:
            mu = ((d + 1) * (d + 1)).astype(np.float64)
            md = (d * d).astype(np.float64)
        else:
            mu = np.ones(n_walks)
            md = np.ones(n_walks)
        e = np.where(d >= 1, eps[d], 0)
        x = uniforms[:, t] * (mu + e * md)
        go_up = x < mu
        # md is 0 only at depth 0, where every step goes up
        c = np.where(go_up, 0, (x - mu) // np.where(md > 0, md, 1.0)).astype(np.int64)
        at_chain = (down == 0) & (up >= 1)
        up_new = np.where(go_up & (down == 0), up + 1, up)
        down_new = np.where(go_up & (down > 0), down - 1, down)
        dn = ~go_up
        up_new = np.where(dn & at_chain & (c == 0), up - 1, up_new)
        down_new = np.where(dn & at_chain & (c != 0), 1, down_new)
        down_new = np.where(dn & ~at_chain, down + 1, down_new)
        up, down = up_new, down_new
        hit = (up == 0) & (down == 0) & (first < 0)
        first[hit] = t + 1
    return first, start_depth + up - down, up + down


def canopy_walks(eps, reinforced, start_depth, uniforms, backend=None):
    """First return times (-1 if none), final depths and end distances of
    walks on T_inf (or T^R_inf) started at a vertex of depth ``start_depth``.

    ``eps[k]`` is the number of children of a depth-k vertex; it must cover
    depths up to ``start_depth + steps``.
    """
    eps = np.ascontiguousarray(eps, dtype=np.int64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    if len(eps) <= start_depth + uniforms.shape[1]:
        raise ValueError("epsilon table too short for the requested walk length")
    if _pick(backend):
        return _canopy_nb(eps, bool(reinforced), int(start_depth), uniforms)
    return _canopy_np(eps, bool(reinforced), int(start_depth), uniforms)


# ---------------------------------------------------------------------------
# Grandfather graph, walker state relative to its start vertex
# ---------------------------------------------------------------------------
# (a, b): up ``a`` tree levels from the start to the common ancestor, then down
# ``b`` levels along the stacked bits.  Neighbour slots 0..7 = son0, son1,
# father, grandson00..11, grandfather; son 0 of a chain ancestor is the chain
# child.  The visited vertex (a, bits) is keyed by a rolling hash of the bit
# stack, which gives the range R_n (64-bit keys; collisions are negligible at
# the walk lengths used).

_HP = np.uint64(0x9E3779B97F4A7C15)


@njit
def _key(a, b, h):
    x = (np.uint64(a) * np.uint64(0xBF58476D1CE4E5B9)) ^ (np.uint64(b) * np.uint64(0x94D049BB133111EB)) ^ h
    x = (x ^ (x >> np.uint64(31))) * np.uint64(0xD6E8FEB86659FD93)
    return x ^ (x >> np.uint64(32))


@njit
def _gf_nb(uniforms):
    n_walks, n_steps = uniforms.shape
    a_out = np.empty(n_walks, dtype=np.int64)
    b_out = np.empty(n_walks, dtype=np.int64)
    first = np.full(n_walks, -1, dtype=np.int64)
    rng_out = np.empty(n_walks, dtype=np.int64)
    hs = np.zeros(2 * n_steps + 2, dtype=np.uint64)
    keys = np.empty(n_steps + 1, dtype=np.uint64)
    for w in range(n_walks):
        a = 0
        b = 0
        keys[0] = _key(0, 0, hs[0])
        for t in range(n_steps):
            k = int(uniforms[w, t] * 8.0)
            if k > 7:
                k = 7
            if k <= 2 or k == 7:
                n_down = 1 if k <= 1 else 0
                n_up = 0 if k <= 1 else (1 if k == 2 else 2)
                bits = k
            else:
                n_down = 2
                n_up = 0
                bits = k - 3
            for j in range(n_down):
                if n_down == 1:
                    bit = bits
                else:
                    bit = (bits >> (1 - j)) & 1
                if b == 0 and a >= 1 and bit == 0:
                    a -= 1
                else:
                    hs[b + 1] = hs[b] * _HP + np.uint64(bit + 1)
                    b += 1
            for _ in range(n_up):
                if b > 0:
                    b -= 1
                else:
                    a += 1
            keys[t + 1] = _key(a, b, hs[b])
            if a == 0 and b == 0 and first[w] < 0:
                first[w] = t + 1
        a_out[w] = a
        b_out[w] = b
        srt = np.sort(keys)
        cnt = 1
        for i in range(1, n_steps + 1):
            if srt[i] != srt[i - 1]:
                cnt += 1
        rng_out[w] = cnt
    return a_out, b_out, first, rng_out


def _key_np(a, b, h):
    with np.errstate(over="ignore"):
        x = (a.astype(np.uint64) * np.uint64(0xBF58476D1CE4E5B9)) ^ (b.astype(np.uint64) * np.uint64(0x94D049BB133111EB)) ^ h
        x = (x ^ (x >> np.uint64(31))) * np.uint64(0xD6E8FEB86659FD93)
    return x ^ (x >> np.uint64(32))


def _gf_np(uniforms):
    n_walks, n_steps = uniforms.shape
    rows = np.arange(n_walks)
    a = np.zeros(n_walks, dtype=np.int64)
    b = np.zeros(n_walks, dtype=np.int64)
    first = np.full(n_walks, -1, dtype=np.int64)
    hs = np.zeros((n_walks, 2 * n_steps + 2), dtype=np.uint64)
    keys = np.empty((n_walks, n_steps + 1), dtype=np.uint64)
    keys[:, 0] = _key_np(a, b, hs[rows, 0])

    def down(mask, bit):
        chain = mask & (b == 0) & (a >= 1) & (bit == 0)
        push = mask & ~chain
        a[chain] -= 1
        r = rows[push]
        with np.errstate(over="ignore"):
            hs[r, b[r] + 1] = hs[r, b[r]] * _HP + (bit[r] + 1).astype(np.uint64)
        b[push] += 1

    def up(mask):
        pop = mask & (b > 0)
        b[pop] -= 1
        a[mask & ~pop] += 1

    for t in range(n_steps):
        k = np.minimum((uniforms[:, t] * 8.0).astype(np.int64), 7)
        son = k <= 1
        gs = (k >= 3) & (k <= 6)
        down(son, k)
        down(gs, ((k - 3) >> 1) & 1)
        down(gs, (k - 3) & 1)
        up((k == 2) | (k == 7))
        up(k == 7)
        keys[:, t + 1] = _key_np(a, b, hs[rows, b])
        hit = (a == 0) & (b == 0) & (first < 0)
        first[hit] = t + 1
    srt = np.sort(keys, axis=1)
    rng_out = 1 + (np.diff(srt, axis=1) != 0).sum(axis=1)
    return a, b, first, rng_out.astype(np.int64)


def grandfather_walks(uniforms, backend=None):
    """Relative end states (a, b), first return times and ranges of grandfather walks."""
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    if _pick(backend):
        return _gf_nb(uniforms)
    return _gf_np(uniforms)


# ---------------------------------------------------------------------------
# Z^d
# ---------------------------------------------------------------------------


@njit
def _lattice_nb(d, uniforms):
    n_walks, n_steps = uniforms.shape
    dist = np.empty(n_walks, dtype=np.int64)
    rng_out = np.empty(n_walks, dtype=np.int64)
    first = np.full(n_walks, -1, dtype=np.int64)
    side = 2 * n_steps + 1
    codes = np.empty(n_steps + 1, dtype=np.int64)
    pos = np.zeros(d, dtype=np.int64)
    for w in range(n_walks):
        pos[:] = 0
        code0 = 0
        mult = 1
        for i in range(d):
            code0 += n_steps * mult
            mult *= side
        codes[0] = code0
        for t in range(n_steps):
            k = int(uniforms[w, t] * 2 * d)
            if k > 2 * d - 1:
                k = 2 * d - 1
            axis = k >> 1
            if k & 1:
                pos[axis] += 1
            else:
                pos[axis] -= 1
            code = 0
            mult = 1
            zero = True
            for i in range(d):
                code += (pos[i] + n_steps) * mult
                mult *= side
                if pos[i] != 0:
                    zero = False
            codes[t + 1] = code
            if zero and first[w] < 0:
                first[w] = t + 1
        s = 0
        for i in range(d):
            s += abs(pos[i])
        dist[w] = s
        srt = np.sort(codes)
        cnt = 1
        for i in range(1, n_steps + 1):
            if srt[i] != srt[i - 1]:
                cnt += 1
        rng_out[w] = cnt
    return dist, rng_out, first


def _lattice_np(d, uniforms):
    n_walks, n_steps = uniforms.shape
    k = np.minimum((uniforms * 2 * d).astype(np.int64), 2 * d - 1)
    axis = k >> 1
    sign = np.where(k & 1, 1, -1)
    side = 2 * n_steps + 1
    codes = np.zeros((n_walks, n_steps + 1), dtype=np.int64)
    zero = np.ones((n_walks, n_steps + 1), dtype=bool)
    final = np.zeros(n_walks, dtype=np.int64)
    mult = 1
    for i in range(d):
        steps = np.where(axis == i, sign, 0)
        coord = np.zeros((n_walks, n_steps + 1), dtype=np.int64)
        np.cumsum(steps, axis=1, out=coord[:, 1:])
        codes += (coord + n_steps) * mult
        zero &= coord == 0
        final += np.abs(coord[:, -1])
        mult *= side
    srt = np.sort(codes, axis=1)
    rng_out = 1 + (np.diff(srt, axis=1) != 0).sum(axis=1)
    ret = zero[:, 1:]
    has = ret.any(axis=1)
    first = np.where(has, ret.argmax(axis=1) + 1, -1)
    return final, rng_out.astype(np.int64), first.astype(np.int64)


def lattice_walks(d, uniforms, backend=None):
    """L1 end distance, range and first return time of walks on Z^d from 0."""
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    if _pick(backend):
        return _lattice_nb(int(d), uniforms)
    return _lattice_np(int(d), uniforms)


def _pick(backend):
    if backend is None:
        return USE_NUMBA
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not installed")
        return True
    if backend == "numpy":
        return False
    raise ValueError(f"unknown backend {backend!r}")
