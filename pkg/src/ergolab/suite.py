"""The ``acceptance`` and ``invariants`` suites behind ``ergolab suite``."""
import time

import numpy as np

from . import acceptance
from . import cocycle as cc
from . import ensemble_stats as es
from . import kernels
from ._accel import HAVE_NUMBA
from .config import validate
from .generators import GrandfatherGraph, make_ensemble
from .graph_core import FiniteGraph, ball_signature
from .records import ResultRecord, append_jsonl, validate_record
from .seeds import derive_seed, make_rng


def _replay():
    from .cli import run

    cfg = validate({"ensemble": {"kind": "agw"}, "operation": {"name": "speed", "n": 50, "samples": 400}, "seed": 7})
    a, b = run(cfg), run(cfg)
    return a.numeric_fields() == b.numeric_fields(), "identical numeric fields on replay"


def _workers():
    ens = make_ensemble("grandfather")
    one = es.speed_estimate(ens, 100, 2000, 11, workers=1)
    four = es.speed_estimate(ens, 100, 2000, 11, workers=4)
    return (one.value, one.se) == (four.value, four.se), f"speed {one.value!r} with 1 and 4 workers"


def _schema():
    from .cli import run

    cfg = validate({"ensemble": {"kind": "grandfather"}, "operation": {"name": "entropy", "n_max": 8}})
    rec = run(cfg)
    return validate_record(rec), "entropy record validates"


def _tamper():
    ens = make_ensemble("grandfather")
    g = ens.sample(0, 0)
    table = cc.estimate_delta(ens, 2)
    clean = cc.cycle_product_check(table, g, 50, 40, seed=1)
    bad = cc.cycle_product_check(table.tampered(), g, 50, 40, seed=1)
    return clean.ok() and not bad.ok(), f"clean max |log| {clean.max_abs_log:.1e}, tampered {bad.max_abs_log:.3f}"


def _kernels():
    if not HAVE_NUMBA:
        return True, "numba not installed; nothing to compare"
    U = make_rng(3, 1).random((64, 300))
    same = all(
        all(np.array_equal(x, y) for x, y in zip(fn(backend="numba"), fn(backend="numpy")))
        for fn in (lambda backend: kernels.grandfather_walks(U, backend),
                   lambda backend: kernels.lattice_walks(2, U, backend))
    )
    return same, "numba and numpy kernels agree on 64 walks"


def _cocycle_laws():
    table = cc.estimate_delta(make_ensemble("grandfather"), 2)
    table.check_bounds()
    inv, ok = table.inverse_symmetry()
    return ok and table.normalization() == 1, f"bounds ok, normalization {table.normalization()}, inverse dev {inv}"


def _stationary_finite():
    ens = make_ensemble("finite", graph="star", n=5, rooting="degree_biased")
    tv = es.stationarity_test(ens, 2, 2).tv
    return tv == 0, f"degree-biased star TV {tv}"


def _signature_relabel():
    rng = make_rng(5, 0)
    edges = [(int(a), int(b)) for a, b in rng.integers(0, 9, size=(14, 2)) if a != b]
    g = FiniteGraph.from_edges(edges, edges[0][0])
    perm = rng.permutation(9)
    h = FiniteGraph.from_edges([(int(perm[a]), int(perm[b])) for a, b in edges], int(perm[edges[0][0]]))
    same = ball_signature(g, g.root, 3) == ball_signature(h, h.root, 3)
    return same, "signature invariant under relabelling"


def _seeds():
    vals = {derive_seed(123, i) for i in range(10**5)}
    return len(vals) == 10**5, "no collisions in 1e5 derived seeds"


def _entropy_chain():
    g = GrandfatherGraph()
    from .walk_engine import joint_entropy, path_entropy_direct

    err = abs(joint_entropy(g, g.root, 0, 4) - path_entropy_direct(g, g.root, 0, 4))
    return err < 1e-10, f"chain rule vs path enumeration {err:.1e}"


INVARIANTS = {
    "replay determinism": _replay,
    "worker-count invariance": _workers,
    "record schema": _schema,
    "cocycle tamper detection": _tamper,
    "kernel backend equivalence": _kernels,
    "cocycle laws": _cocycle_laws,
    "exact stationarity": _stationary_finite,
    "signature relabelling": _signature_relabel,
    "seed splitting": _seeds,
    "entropy chain rule": _entropy_chain,
}


def _record(suite, name, passed, summary, details=None, seconds=0.0):
    cfg = {"ensemble": {"kind": "suite"}, "operation": {"name": suite, "check": name}, "seed": acceptance.SEED,
           "workers": 1}
    return ResultRecord(cfg, {}, {}, {"passed": bool(passed)}, {"summary": summary, **(details or {})},
                        bool(passed), seconds)


def run_suite(name, out=None, only=None, echo=None):
    """Run a suite, write one record per check, return True if all pass."""
    results = []
    if name == "acceptance":
        for res in acceptance.run_all(only, echo):
            results.append(_record(name, f"criterion {res.number}", res.passed, res.summary, res.details,
                                   res.seconds))
    elif name == "invariants":
        for label, fn in INVARIANTS.items():
            t = time.perf_counter()
            try:
                passed, summary = fn()
            except Exception as exc:  # a crashing check is a failing check
                passed, summary = False, f"{type(exc).__name__}: {exc}"
            if echo:
                echo(f"[{'PASS' if passed else 'FAIL'}] {label}: {summary}")
            results.append(_record(name, label, passed, summary, seconds=time.perf_counter() - t))
    else:
        raise ValueError(f"unknown suite {name!r}")
    if out:
        for rec in results:
            append_jsonl(out, rec)
    return all(r.ok for r in results)
