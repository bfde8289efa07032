"""Estimators over ensembles: entropy, speed, range, growth, inequality
reports, stationarity and reversibility tests, mass transport.

Monte-Carlo work is split into replica blocks whose seeds are derived from
the master seed, so results do not depend on the worker count.  Means are
accumulated with ``math.fsum`` over the concatenated per-replica values.
"""
import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import isotonic_regression

from .generators.ensembles import bias_by_degree, unbias_by_degree  # noqa: F401  (re-exported)
from .graph_core import ball_profile, ball_signature
from .seeds import derive_seed, make_rng
from .walk_engine import entropy_profile, walk_batch

H_ZERO = 0.02
WALK_STREAM = 1
BLOCK = 500


class InequalityViolation(AssertionError):
    pass


# ---------------------------------------------------------------------------
# Small statistics helpers
# ---------------------------------------------------------------------------


@dataclass
class Estimate:
    value: float
    se: float
    n: int
    z: float = 3.0

    @property
    def low(self):
        return self.value - self.z * self.se

    @property
    def high(self):
        return self.value + self.z * self.se

    def to_dict(self):
        return {"value": self.value, "se": self.se, "n": self.n, "ci": [self.low, self.high]}


def mean_estimate(values, z=3.0):
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n == 0:
        raise ValueError("no samples")
    m = math.fsum(x) / n
    se = math.sqrt(math.fsum((x - m) ** 2) / (n - 1) / n) if n > 1 else 0.0
    return Estimate(m, se, n, z)


def parallel_map(fn, tasks, workers=1):
    """Order-preserving map; ``workers > 1`` uses a forkserver process pool."""
    tasks = list(tasks)
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    ctx = mp.get_context("forkserver")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
        return list(ex.map(fn, *zip(*tasks)))


def _blocks(total, size=BLOCK):
    return [(i, min(size, total - i)) for i in range(0, total, size)]


def _walk_rng(seed, replica):
    return make_rng(derive_seed(seed, replica), WALK_STREAM)


# ---------------------------------------------------------------------------
# Entropy series
# ---------------------------------------------------------------------------


@dataclass
class EntropySeries:
    h: np.ndarray
    se: np.ndarray
    count: int
    exact: bool
    values: np.ndarray = None  # per-replica H_n rows (Monte Carlo only)

    @property
    def n_max(self):
        return len(self.h) - 1

    def increments(self):
        return np.diff(self.h)

    def increment_se(self):
        if self.values is None:
            return np.zeros(self.n_max)
        d = np.diff(self.values, axis=1)
        return d.std(axis=0, ddof=1) / math.sqrt(len(d))

    def diff_se(self, coeffs):
        """SE of sum_n coeffs[n] * h_n, paired over replicas."""
        if self.values is None:
            return 0.0
        c = np.zeros(self.n_max + 1)
        for n, a in coeffs.items():
            c[n] += a
        x = self.values @ c
        return float(x.std(ddof=1) / math.sqrt(len(x)))

    def to_dict(self):
        return {"h": self.h.tolist(), "se": self.se.tolist(), "count": self.count, "exact": self.exact}


def _h_task(ensemble, seed, start, count, n_max):
    rows = []
    for i in range(start, start + count):
        g = ensemble.sample(seed, i)
        rows.append(entropy_profile(g, g.root, n_max).H)
    return rows


def estimate_h_series(ensemble, n_max, samples=1000, seed=0, workers=1):
    """h_n = E[H_n(G, rho)] for n = 0..n_max.

    Deterministic ensembles and ensembles with an enumerable law are evaluated
    exactly; otherwise each replica graph contributes its exact H_n.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    law = ensemble.exact_law()
    if law is not None:
        H = np.zeros(n_max + 1)
        for g, w in law:
            H += float(w) * entropy_profile(g, g.root, n_max).H
        return EntropySeries(H, np.zeros(n_max + 1), len(law), True)
    parts = parallel_map(_h_task, [(ensemble, seed, s, c, n_max) for s, c in _blocks(samples, 100)], workers)
    vals = np.array([r for part in parts for r in part])
    h = np.array([math.fsum(col) / len(col) for col in vals.T])
    se = vals.std(axis=0, ddof=1) / math.sqrt(len(vals))
    return EntropySeries(h, se, len(vals), False, vals)


@dataclass
class RateEstimate:
    h: float
    low: float
    high: float
    se: float
    h_over_n: float
    monotone: bool
    worst_rise: float

    def to_dict(self):
        return asdict(self)


def entropy_rate(series, z=3.0):
    """Mean entropy from the tail of the (non-increasing) increment sequence.

    The point value is the last increment of the isotonic fit.  Increments
    decrease to h, so the last one plus z SE is an upper bound.  The lower end
    extrapolates a 1/n correction through the increments at N/2 and N,
    ``2 D_N - D_{N/2}``, which is a heuristic rather than a bound.
    """
    if series.n_max < 3:
        raise ValueError("need n_max >= 3")
    inc = series.increments()
    ise = series.increment_se()
    fit = isotonic_regression(inc, increasing=False).x
    N = len(inc)
    h = max(float(fit[-1]), 0.0)
    se = float(ise[-1])
    half = N // 2
    ext_se = series.diff_se({N: 2.0, N - 1: -2.0, half: -1.0, half - 1: 1.0}) if half >= 1 else se
    low = max(2 * float(fit[-1]) - float(fit[half - 1]) - z * ext_se, 0.0)
    high = h + z * se
    # rise of an increment above its predecessor, in units of paired SE
    rises = inc[1:] - inc[:-1]
    if series.values is not None:
        d2 = np.diff(series.values, n=2, axis=1)
        rse = d2.std(axis=0, ddof=1) / math.sqrt(len(d2))
    else:
        rse = np.zeros(len(rises))
    slack = z * rse + 1e-12
    monotone = bool(np.all(rises <= slack))
    worst = float(np.max(rises - slack)) if len(rises) else 0.0
    return RateEstimate(h, low, high, se, float(series.h[-1] / series.n_max), monotone, worst)


def conditional_entropy_expectation(series, k, n):
    """k h_1 + h_{n-k} - h_n, the mean conditional entropy of the first k
    steps given the walk from time n on."""
    if not 1 <= k <= n <= series.n_max:
        raise ValueError("need 1 <= k <= n <= n_max")
    return float(k * series.h[1] + series.h[n - k] - series.h[n])


def subadditivity_gaps(series, z=3.0):
    """List of (n, m, h_{n+m} - h_n - h_m, z * paired SE) for n, m >= 1."""
    out = []
    for n in range(1, series.n_max):
        for m in range(n, series.n_max - n + 1):
            c = {n + m: 1.0}
            c[n] = c.get(n, 0.0) - 1.0
            c[m] = c.get(m, 0.0) - 1.0
            gap = float(series.h[n + m] - series.h[n] - series.h[m])
            out.append((n, m, gap, z * series.diff_se(c)))
    return out


# ---------------------------------------------------------------------------
# Walk statistics: speed and range
# ---------------------------------------------------------------------------


def _walk_task(ensemble, seed, start, count, n, deterministic, backend):
    if deterministic:
        g = ensemble.sample(seed, 0)
        U = _walk_rng(seed, start).random((count, n))
        b = walk_batch(g, g.root, U, backend)
        return b.distance, b.range, b.first_return
    D = np.empty(count, dtype=np.int64)
    R = np.empty(count, dtype=np.int64)
    F = np.empty(count, dtype=np.int64)
    for j, i in enumerate(range(start, start + count)):
        g = ensemble.sample(seed, i)
        b = walk_batch(g, g.root, _walk_rng(seed, i).random((1, n)), backend)
        D[j], R[j], F[j] = b.distance[0], b.range[0], b.first_return[0]
    return D, R, F


@dataclass
class WalkSample:
    n: int
    distance: np.ndarray
    range: np.ndarray
    first_return: np.ndarray


def sample_walks(ensemble, n, samples, seed=0, workers=1, backend=None):
    """``samples`` walks of length n: one per replica graph, or blocks of walks
    on the single graph of a deterministic ensemble."""
    det = ensemble.deterministic
    tasks = [(ensemble, seed, s, c, n, det, backend) for s, c in _blocks(samples)]
    parts = parallel_map(_walk_task, tasks, workers)
    return WalkSample(n, *(np.concatenate([p[k] for p in parts]) for k in range(3)))


def speed_estimate(ensemble, n, samples=10000, seed=0, workers=1, walks=None):
    """Mean of D_n / n with standard error."""
    if n < 1:
        raise ValueError("n must be >= 1")
    w = walks or sample_walks(ensemble, n, samples, seed, workers)
    return mean_estimate(w.distance / n)


@dataclass
class RangeEstimate:
    range_ratio: Estimate
    non_return: Estimate
    diff: Estimate  # paired (R_n/n - no-return indicator)

    def agree(self, z=3.0):
        return abs(self.diff.value) <= z * self.diff.se

    def to_dict(self):
        return {"range_ratio": self.range_ratio.to_dict(), "non_return": self.non_return.to_dict(),
                "diff": self.diff.to_dict(), "agree": self.agree()}


def range_estimate(ensemble, n, samples=10000, seed=0, workers=1, walks=None):
    """R_n / n and the fraction of walks that avoid the root during 1..n."""
    w = walks or sample_walks(ensemble, n, samples, seed, workers)
    if np.any(w.range < 0):
        raise ValueError("range is not tracked on this route")
    r = w.range / n
    nr = (w.first_return < 0).astype(float)
    return RangeEstimate(mean_estimate(r), mean_estimate(nr), mean_estimate(r - nr))


# ---------------------------------------------------------------------------
# Growth
# ---------------------------------------------------------------------------


@dataclass
class GrowthEstimate:
    v: Estimate
    mean_log_ball: np.ndarray
    mean_ball: np.ndarray
    window: tuple
    logs: np.ndarray = None  # per-replica log #B(rho, n)

    def v_over(self, window):
        """Slope estimate over another window of the same samples."""
        slopes = [_slope(row, *window) for row in self.logs]
        return mean_estimate(slopes) if len(slopes) > 1 else Estimate(slopes[0], 0.0, 1)

    def to_dict(self):
        return {"v": self.v.to_dict(), "mean_log_ball": self.mean_log_ball.tolist(),
                "mean_ball": self.mean_ball.tolist(), "window": list(self.window)}


def _growth_task(ensemble, seed, start, count, n_max):
    rows = []
    for i in range(start, start + count):
        g = ensemble.sample(seed, i)
        rows.append(np.array([float(x) for x in ball_profile(g, g.root, n_max)]))
    return rows


def _slope(y, lo, hi):
    n = np.arange(lo, hi + 1, dtype=float)
    return float(np.polyfit(n, y[lo : hi + 1], 1)[0])


def growth_estimate(ensemble, n_max, samples=100, seed=0, workers=1, window=None):
    """v from the least-squares slope of E[log #B(rho, n)] over a tail window
    (default: the last 10% of 0..n_max, at least 3 points)."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    if window is None:
        lo = max(1, min(n_max - 2, int(math.floor(0.9 * n_max))))
        window = (lo, n_max)
    count = 1 if ensemble.deterministic else samples
    parts = parallel_map(_growth_task, [(ensemble, seed, s, c, n_max) for s, c in _blocks(count, 25)], workers)
    rows = np.array([r for p in parts for r in p])
    logs = np.log(rows)
    slopes = [_slope(row, *window) for row in logs]
    v = mean_estimate(slopes) if len(slopes) > 1 else Estimate(slopes[0], 0.0, 1)
    return GrowthEstimate(v, logs.mean(axis=0), rows.mean(axis=0), tuple(window), logs)


@dataclass
class EnvelopeCheck:
    exponent: float
    kappa1: float
    kappa2: float
    fit_range: tuple
    test_range: tuple
    concave: bool
    max_second_diff: float
    envelope_holds: bool
    max_excess: float

    @property
    def passed(self):
        return self.concave and self.envelope_holds and self.exponent < 1

    def to_dict(self):
        return {**asdict(self), "passed": self.passed}


def envelope_check(mean_ball, exponent, n_hi=None, saturation=None, tol=1e-9):
    """Fit log E#B(n) <= log k1 + k2 n^exponent on the first half of 1..n_hi
    and test it on the second half; also test concavity of log E#B(n).

    ``n_hi`` defaults to the last n with E#B(n) <= ``saturation`` (the finite
    box stops the growth).
    """
    y = np.log(np.asarray(mean_ball, dtype=float))
    if n_hi is None:
        ok = np.flatnonzero(np.asarray(mean_ball) <= saturation) if saturation else np.arange(len(y))
        n_hi = int(ok[-1])
    half = max(2, n_hi // 2)
    n_fit = np.arange(1, half + 1)
    X = np.stack([np.ones(len(n_fit)), n_fit.astype(float) ** exponent], axis=1)
    a, b = np.linalg.lstsq(X, y[n_fit], rcond=None)[0]
    a += float(np.max(y[n_fit] - (a + b * n_fit**exponent)))
    n_test = np.arange(half + 1, n_hi + 1)
    excess = y[n_test] - (a + b * n_test.astype(float) ** exponent)
    d2 = np.diff(y[1 : n_hi + 1], n=2)
    return EnvelopeCheck(
        float(exponent), float(math.exp(a)), float(b), (1, half), (half + 1, n_hi),
        bool(np.all(d2 <= tol)), float(d2.max()) if len(d2) else 0.0,
        bool(np.all(excess <= tol)), float(excess.max()) if len(excess) else 0.0,
    )


def lrp_envelope_exponent(d, s_prime):
    """1/delta' with delta' = 1 / log2(2d / s')."""
    return math.log2(2 * d / s_prime)


# ---------------------------------------------------------------------------
# Fundamental inequality
# ---------------------------------------------------------------------------


@dataclass
class InequalityReport:
    s: Estimate
    h: RateEstimate
    v: Estimate
    lower_holds: bool  # s^2/2 <= h
    upper_holds: bool  # h <= v s
    verdict: str
    zero_threshold: float
    envelope: EnvelopeCheck = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"s": self.s.to_dict(), "h": self.h.to_dict(), "v": self.v.to_dict(),
                "lower_holds": self.lower_holds, "upper_holds": self.upper_holds, "verdict": self.verdict,
                "zero_threshold": self.zero_threshold,
                "envelope": self.envelope.to_dict() if self.envelope else None, "notes": self.notes}

    def render(self):
        lines = [
            f"s = {self.s.value:.4f} +/- {self.s.se:.4f}",
            f"h = {self.h.h:.4f} in [{self.h.low:.4f}, {self.h.high:.4f}]",
            f"v = {self.v.value:.4f} +/- {self.v.se:.4f}",
            f"s^2/2 <= h : {'ok' if self.lower_holds else 'VIOLATED'}",
            f"h <= v s   : {'ok' if self.upper_holds else 'VIOLATED'}",
            f"verdict    : {self.verdict}",
        ]
        return "\n".join(lines)


def fundamental_inequality_report(ensemble, n_max=64, samples=1000, seed=0, workers=1, n_speed=None,
                                  growth_n=None, zero_threshold=H_ZERO, envelope=None, raise_on_violation=False):
    """Estimate s, h, v and check s^2/2 <= h <= v s within CI slack.

    Verdicts: "Liouville (h=0)" when the upper end of the h interval is below
    ``zero_threshold``; "Liouville (v=0)" when the upper end of the v interval
    is; "Liouville (subexponential growth)" when ``envelope`` (a dict with
    ``exponent`` and ``saturation``) certifies stretched-exponential growth.
    Otherwise "none".
    """
    n_speed = n_speed or max(n_max, 200)
    growth_n = growth_n or n_max
    series = estimate_h_series(ensemble, n_max, samples, derive_seed(seed, 1), workers)
    rate = entropy_rate(series)
    s = speed_estimate(ensemble, n_speed, samples if not ensemble.deterministic else max(samples, 2000),
                       derive_seed(seed, 2), workers)
    g = growth_estimate(ensemble, growth_n, min(samples, 200), derive_seed(seed, 3), workers)
    v = g.v
    env = None
    notes = []
    if envelope is not None:
        env = envelope_check(g.mean_ball, envelope["exponent"], saturation=envelope.get("saturation"))
        if envelope.get("saturation"):
            # a finite box stops growing; measure v below saturation
            hi = env.test_range[1]
            v = g.v_over((max(1, hi - 2), hi))
            notes.append(f"v measured on n={max(1, hi - 2)}..{hi} below saturation")
    lower = max(s.low, 0.0) ** 2 / 2 <= rate.high + 1e-12
    upper = rate.low <= max(v.high, 0.0) * max(s.high, 0.0) + 1e-12
    if rate.high < zero_threshold:
        verdict = "Liouville (h=0)"
    elif v.high < zero_threshold:
        verdict = "Liouville (v=0)"
    elif env is not None and env.passed:
        verdict = "Liouville (subexponential growth)"
    else:
        verdict = "none"
    rep = InequalityReport(s, rate, v, bool(lower), bool(upper), verdict, zero_threshold, env, notes)
    if not rate.monotone:
        rep.notes.append("entropy increments not monotone within CI")
    if raise_on_violation and not (lower and upper):
        raise InequalityViolation(rep.render())
    return rep


# ---------------------------------------------------------------------------
# Class distributions and tests
# ---------------------------------------------------------------------------


@dataclass
class ClassDistribution:
    radius: int
    probs: dict  # code -> probability (Fraction when exact)
    count: int
    exact: bool
    bi_rooted: bool = False
    codes: list = None  # raw Monte-Carlo sample, in replica order

    def total(self):
        return sum(self.probs.values())


def tv_distance(p, q):
    keys = set(p) | set(q)
    return sum(abs(p.get(k, 0) - q.get(k, 0)) for k in keys) / 2


def _exact_steps(g, v, t):
    """Exact law of X_t from v, with Fractions."""
    cur = {v: Fraction(1)}
    for _ in range(t):
        nxt = {}
        for x, p in cur.items():
            nb = g.neighbors(x)
            deg = sum(m for _, m in nb)
            for y, m in nb:
                nxt[y] = nxt.get(y, 0) + p * Fraction(m, deg)
        cur = nxt
    return cur


def _exact_classes(ensemble, t, r, bi_rooted, reverse):
    law = ensemble.exact_law()
    out = {}
    for g, w in law:
        if ensemble.transitive:
            pos = {g.root: Fraction(1)}  # X_t is again a uniform-looking root
        else:
            pos = _exact_steps(g, g.root, t)
        for x, p in pos.items():
            if not bi_rooted:
                c = ball_signature(g, x, r).code
                out[c] = out.get(c, 0) + w * p
                continue
            nb = g.neighbors(x)
            deg = sum(m for _, m in nb)
            for y, m in nb:
                c = ball_signature(g, y, r, x).code if reverse else ball_signature(g, x, r, y).code
                out[c] = out.get(c, 0) + w * p * Fraction(m, deg)
    return out


def _class_task(ensemble, seed, start, count, t, r, bi_rooted, reverse):
    codes = []
    for i in range(start, start + count):
        g = ensemble.sample(seed, i)
        steps = t + (1 if bi_rooted else 0)
        U = _walk_rng(seed, i).random(steps)
        path = [g.root]
        for u in U:
            nb = g.neighbors(path[-1])
            deg = sum(m for _, m in nb)
            x, acc = u * deg, 0
            for y, m in nb:
                acc += m
                if x < acc:
                    break
            path.append(y)
        if not bi_rooted:
            codes.append(ball_signature(g, path[t], r).code)
        else:
            a, b = path[t], path[t + 1]
            codes.append((ball_signature(g, a, r, b).code, ball_signature(g, b, r, a).code))
    return codes


def class_distribution(ensemble, t, r, samples=10000, seed=0, workers=1, bi_rooted=False, reverse=False,
                       exact=None, offset=0):
    """Law of the r-ball class of (G, X_t), or of the bi-rooted (G, X_t, X_{t+1})
    (``reverse``: (G, X_{t+1}, X_t)).  Exact (Fractions) when the ensemble law
    is enumerable; otherwise empirical over replicas ``offset..offset+samples-1``.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if exact is None:
        exact = ensemble.exact_law() is not None
    if exact:
        probs = _exact_classes(ensemble, t, r, bi_rooted, reverse)
        return ClassDistribution(r, probs, 0, True, bi_rooted)
    tasks = [(ensemble, seed, offset + s, c, t, r, bi_rooted, reverse) for s, c in _blocks(samples, 250)]
    codes = [c for part in parallel_map(_class_task, tasks, workers) for c in part]
    if bi_rooted:
        codes = [c[1] if reverse else c[0] for c in codes]
    return _empirical(codes, r, bi_rooted)


def _empirical(codes, r, bi_rooted):
    counts = {}
    for c in codes:
        counts[c] = counts.get(c, 0) + 1
    n = len(codes)
    return ClassDistribution(r, {c: k / n for c, k in counts.items()}, n, False, bi_rooted, codes)


@dataclass
class TestResult:
    name: str
    tv: float
    passed: bool
    exact: bool
    radius: int
    ci: tuple = None
    p_value: float = None
    null_quantile: float = None
    samples: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["tv"] = float(self.tv)
        d["exact_tv"] = str(self.tv) if isinstance(self.tv, Fraction) else None
        return d


def _tv_labels(a, b, k):
    pa = np.bincount(a, minlength=k) / len(a)
    pb = np.bincount(b, minlength=k) / len(b)
    return 0.5 * np.abs(pa - pb).sum()


def _encode(*groups):
    allc = [c for g in groups for c in g]
    _, lab = np.unique(np.array([c.hex() if isinstance(c, bytes) else str(c) for c in allc]), return_inverse=True)
    out, i = [], 0
    for g in groups:
        out.append(lab[i : i + len(g)])
        i += len(g)
    return out, int(lab.max()) + 1


def _two_sample(codes_a, codes_b, seed, alpha, n_perm=999, n_boot=1000):
    (a, b), k = _encode(codes_a, codes_b)
    obs = _tv_labels(a, b, k)
    rng = make_rng(seed, 7)
    pooled = np.concatenate([a, b])
    null = np.empty(n_perm)
    for j in range(n_perm):
        rng.shuffle(pooled)
        null[j] = _tv_labels(pooled[: len(a)], pooled[len(a) :], k)
    boot = np.empty(n_boot)
    for j in range(n_boot):
        boot[j] = _tv_labels(rng.choice(a, len(a)), rng.choice(b, len(b)), k)
    q = float(np.quantile(null, 1 - alpha))
    p = (1 + int(np.sum(null >= obs - 1e-15))) / (1 + n_perm)
    return float(obs), (float(np.quantile(boot, 0.025)), float(np.quantile(boot, 0.975))), p, q


def _paired_swap(codes_a, codes_b, seed, alpha, n_perm=999, n_boot=1000):
    (a, b), k = _encode(codes_a, codes_b)
    obs = _tv_labels(a, b, k)
    rng = make_rng(seed, 8)
    null = np.empty(n_perm)
    for j in range(n_perm):
        sw = rng.random(len(a)) < 0.5
        null[j] = _tv_labels(np.where(sw, b, a), np.where(sw, a, b), k)
    boot = np.empty(n_boot)
    for j in range(n_boot):
        idx = rng.integers(0, len(a), len(a))
        boot[j] = _tv_labels(a[idx], b[idx], k)
    q = float(np.quantile(null, 1 - alpha))
    p = (1 + int(np.sum(null >= obs - 1e-15))) / (1 + n_perm)
    return float(obs), (float(np.quantile(boot, 0.025)), float(np.quantile(boot, 0.975))), p, q


def stationarity_test(ensemble, n, r, samples=5000, seed=0, workers=1, alpha=0.01, exact=None):
    """TV between the r-ball class laws of (G, X_0) and (G, X_n).

    Exact ensembles must give TV = 0 exactly.  Otherwise the two laws are
    estimated on disjoint replica sets and the verdict compares the observed
    TV with the (1 - alpha) quantile of its permutation null.
    """
    if exact is None:
        exact = ensemble.exact_law() is not None
    if exact:
        p0 = class_distribution(ensemble, 0, r, exact=True)
        pn = class_distribution(ensemble, n, r, exact=True)
        tv = tv_distance(p0.probs, pn.probs)
        return TestResult("stationarity", tv, tv == 0, True, r, details={"n": n, "classes": len(set(p0.probs) | set(pn.probs))})
    d0 = class_distribution(ensemble, 0, r, samples, seed, workers, offset=0, exact=False)
    dn = class_distribution(ensemble, n, r, samples, seed, workers, offset=samples, exact=False)
    tv, ci, p, q = _two_sample(d0.codes, dn.codes, seed, alpha)
    return TestResult("stationarity", tv, tv <= q, False, r, ci, p, q, samples,
                      {"n": n, "classes": len(set(d0.probs) | set(dn.probs))})


def reversibility_test(ensemble, r, samples=5000, seed=0, workers=1, alpha=0.01, exact=None):
    """TV between the bi-rooted class laws of (G, X_0, X_1) and (G, X_1, X_0)."""
    if exact is None:
        exact = ensemble.exact_law() is not None
    if exact:
        f = class_distribution(ensemble, 0, r, bi_rooted=True, exact=True)
        b = class_distribution(ensemble, 0, r, bi_rooted=True, reverse=True, exact=True)
        tv = tv_distance(f.probs, b.probs)
        return TestResult("reversibility", tv, tv == 0, True, r, details={"classes": len(set(f.probs) | set(b.probs))})
    tasks = [(ensemble, seed, s, c, 0, r, True, False) for s, c in _blocks(samples, 250)]
    pairs = [c for part in parallel_map(_class_task, tasks, workers) for c in part]
    fwd = [a for a, _ in pairs]
    rev = [b for _, b in pairs]
    tv, ci, p, q = _paired_swap(fwd, rev, seed, alpha)
    return TestResult("reversibility", tv, tv <= q, False, r, ci, p, q, samples,
                      {"classes": len(set(fwd) | set(rev))})


# ---------------------------------------------------------------------------
# Mass transport
# ---------------------------------------------------------------------------


@dataclass
class MTPResult:
    send: object
    receive: object
    passed: bool
    exact: bool
    se: float = 0.0
    samples: int = 0

    def to_dict(self):
        return {"send": float(self.send), "receive": float(self.receive), "passed": self.passed,
                "exact": self.exact, "se": self.se, "samples": self.samples,
                "exact_values": [str(self.send), str(self.receive)] if self.exact else None}


def _mtp_sides(g, r, F):
    from .graph_core import _bfs_layers

    order, dist = _bfs_layers(g, g.root, r)
    send = receive = 0
    for x in order:
        if x == g.root:
            continue
        d = dist[x]
        send += F(ball_signature(g, g.root, r, x).code, d)
        receive += F(ball_signature(g, x, r, g.root).code, d)
    return send, receive


def mtp_test(ensemble, F, r=2, samples=2000, seed=0, z=3.0):
    """Both sides of E[sum_x F(G, rho, x)] = E[sum_x F(G, x, rho)] for F
    supported on pairs at distance 1..r.

    ``F(code, d)`` receives the bi-rooted class code of the radius-r ball
    around the first root (second root marked) and the distance d.  Exact on
    enumerable ensembles (rational F values give exact equality).
    """
    law = ensemble.exact_law()
    if law is not None:
        send = receive = 0
        for g, w in law:
            s, rcv = _mtp_sides(g, r, F)
            send += w * s
            receive += w * rcv
        return MTPResult(send, receive, send == receive, True)
    diffs, S, R = [], [], []
    for i in range(samples):
        g = ensemble.sample(seed, i)
        s, rcv = _mtp_sides(g, r, F)
        S.append(float(s))
        R.append(float(rcv))
        diffs.append(float(s) - float(rcv))
    d = mean_estimate(diffs, z)
    return MTPResult(mean_estimate(S).value, mean_estimate(R).value, abs(d.value) <= z * d.se, False, d.se, samples)


def hashed_class_function(seed=0, denominator=1000):
    """An arbitrary rational-valued function of (class, distance)."""
    import hashlib

    def F(code, d):
        h = hashlib.blake2b(code + bytes([d]), digest_size=8, key=int(seed).to_bytes(8, "big"))
        return Fraction(int.from_bytes(h.digest(), "big") % denominator, denominator)

    return F


def adjacent_indicator(code, d):
    return 1 if d == 1 else 0
