"""Command-line runner.

Every subcommand except ``generate`` and ``suite`` builds an
:class:`ExperimentConfig`, runs it and appends one JSON record to ``--out``
(stdout when absent).  Per-n series go to a CSV next to the JSONL file.

Exit codes: 0 success, 2 config error, 3 verdict failure, 4 horizon or
resource error.
"""
import argparse
import sys
import time
from pathlib import Path

import yaml

from . import cocycle as cc
from . import ensemble_stats as es
from .config import OPERATIONS, ConfigError, ExperimentConfig, load_config
from .generators import DegreeCapExceeded, cluster_of_origin, make_ensemble
from .graph_core import GraphError, HorizonExceeded, to_edgelist
from .records import ResultRecord, append_jsonl, from_estimate, scalar, write_series_csv
from .walk_engine import DegreeBoundViolated

EXIT_OK, EXIT_CONFIG, EXIT_VERDICT, EXIT_RESOURCE = 0, 2, 3, 4


def build_ensemble(cfg):
    try:
        return make_ensemble(cfg.ensemble["kind"], **cfg.ensemble_params())
    except (TypeError, KeyError, GraphError) as exc:
        raise ConfigError(f"bad ensemble parameters: {exc}") from None


def _op_generate(ens, p, cfg):
    g = ens.sample(cfg.seed, int(p.get("replica", 0)))
    radius = p.get("radius")
    text = to_edgelist(g, None if radius is None else int(radius))
    edges = text.count("\n") - 1
    return {"edges": scalar(edges)}, {}, {}, {"edgelist": text}, True


def _op_walk(ens, p, cfg):
    n, samples = int(p.get("n", 100)), int(p.get("samples", 1000))
    w = es.sample_walks(ens, n, samples, cfg.seed, cfg.workers)
    sc = {"mean_distance": from_estimate(es.mean_estimate(w.distance)),
          "non_return": from_estimate(es.mean_estimate((w.first_return < 0).astype(float)))}
    if (w.range >= 0).all():
        sc["mean_range"] = from_estimate(es.mean_estimate(w.range))
    return sc, {}, {}, {}, True


def _op_entropy(ens, p, cfg):
    series = es.estimate_h_series(ens, int(p.get("n_max", 32)), int(p.get("samples", 1000)), cfg.seed,
                                  cfg.workers)
    rate = es.entropy_rate(series)
    sc = {"h": scalar(rate.h, rate.se, (rate.low, rate.high)), "h_over_n": scalar(rate.h_over_n)}
    inc = [None, *series.increments().tolist()]
    return sc, {"h_n": series.h, "se": series.se, "increment": inc}, {"monotone": rate.monotone}, \
        {"exact": series.exact, "count": series.count}, True


def _op_speed(ens, p, cfg):
    est = es.speed_estimate(ens, int(p.get("n", 200)), int(p.get("samples", 10000)), cfg.seed, cfg.workers)
    return {"s": from_estimate(est)}, {}, {}, {}, True


def _op_range(ens, p, cfg):
    r = es.range_estimate(ens, int(p.get("n", 1000)), int(p.get("samples", 10000)), cfg.seed, cfg.workers)
    sc = {"range_ratio": from_estimate(r.range_ratio), "non_return": from_estimate(r.non_return),
          "difference": from_estimate(r.diff)}
    return sc, {}, {"agree": r.agree()}, {}, r.agree()


def _op_growth(ens, p, cfg):
    g = es.growth_estimate(ens, int(p.get("n_max", 20)), int(p.get("samples", 100)), cfg.seed, cfg.workers)
    return {"v": from_estimate(g.v)}, {"mean_log_ball": g.mean_log_ball, "mean_ball": g.mean_ball}, {}, \
        {"window": list(g.window)}, True


def _op_inequality(ens, p, cfg):
    env = None
    if "envelope_exponent" in p or "s_prime" in p:
        expo = p.get("envelope_exponent") or es.lrp_envelope_exponent(ens.params.get("d", 1), p["s_prime"])
        env = {"exponent": float(expo), "saturation": p.get("saturation")}
    rep = es.fundamental_inequality_report(
        ens, int(p.get("n_max", 64)), int(p.get("samples", 1000)), cfg.seed, cfg.workers,
        p.get("n_speed"), p.get("growth_n"), float(p.get("zero_threshold", es.H_ZERO)), env)
    sc = {"s": from_estimate(rep.s), "h": scalar(rep.h.h, rep.h.se, (rep.h.low, rep.h.high)),
          "v": from_estimate(rep.v)}
    verdicts = {"lower": rep.lower_holds, "upper": rep.upper_holds, "verdict": rep.verdict}
    return sc, {}, verdicts, {"report": rep.render(), "notes": rep.notes}, rep.lower_holds and rep.upper_holds


def _test_record(res):
    sc = {"tv": scalar(res.tv)}
    if res.ci:
        sc["tv"]["ci"] = [float(res.ci[0]), float(res.ci[1])]
    if res.p_value is not None:
        sc["p_value"] = scalar(res.p_value)
        sc["null_quantile"] = scalar(res.null_quantile)
    return sc, {}, {"passed": res.passed, "exact": res.exact}, res.details, res.passed


def _op_stationarity(ens, p, cfg):
    res = es.stationarity_test(ens, int(p.get("n", 1)), int(p.get("r", 2)), int(p.get("samples", 5000)),
                               cfg.seed, cfg.workers, float(p.get("alpha", 0.01)))
    return _test_record(res)


def _op_reversibility(ens, p, cfg):
    res = es.reversibility_test(ens, int(p.get("r", 2)), int(p.get("samples", 5000)), cfg.seed, cfg.workers,
                                float(p.get("alpha", 0.01)))
    return _test_record(res)


def _op_mtp(ens, p, cfg):
    kind = p.get("function", "hashed")
    if kind == "hashed":
        F = es.hashed_class_function(int(p.get("function_seed", 0)))
    elif kind == "adjacent":
        F = es.adjacent_indicator
    elif kind == "one":
        def F(code, d):
            return 1
    else:
        raise ConfigError(f"unknown mtp function {kind!r}")
    res = es.mtp_test(ens, F, int(p.get("r", 2)), int(p.get("samples", 2000)), cfg.seed)
    sc = {"send": scalar(res.send, res.se), "receive": scalar(res.receive, res.se)}
    return sc, {}, {"passed": res.passed, "exact": res.exact}, {}, res.passed


def _op_cocycle(ens, p, cfg):
    table = cc.estimate_delta(ens, int(p.get("r", 2)), int(p.get("samples", 10000)), cfg.seed, cfg.workers)
    g = ens.sample(cfg.seed, 0)
    bounds = True
    try:
        table.check_bounds()
    except cc.CocycleBoundViolation:
        bounds = False
    inv_dev, inv_ok = table.inverse_symmetry()
    elog = cc.elog_delta(table)
    verts = [g.root] + [y for y, _ in g.neighbors(g.root)]
    harm = cc.harmonicity_check(table, g, verts)
    cyc = cc.cycle_product_check(table, g, int(p.get("n_cycles", 200)), int(p.get("max_len", 50)), cfg.seed)
    sc = {"elog_delta": from_estimate(elog), "ballistic_bound": from_estimate(cc.ballistic_bound(table)),
          "harmonicity": scalar(harm), "cycle_max_abs_log": scalar(cyc.max_abs_log),
          "normalization": scalar(table.normalization()), "classes": scalar(len(table))}
    verdicts = {"bounds": bounds, "inverse_symmetry": inv_ok, "cycles": cyc.ok(),
                "constant": cc.delta_is_constant(table)}
    return sc, {}, verdicts, {"table": table.to_dict(), "cycles": cyc.to_dict()}, bounds and inv_ok and cyc.ok()


def _op_percolation(ens, p, cfg):
    if ens.kind != "lrp":
        raise ConfigError("percolation needs an lrp ensemble")
    g = ens.configuration(cfg.seed, 0)
    deg = g.degrees()
    cluster = cluster_of_origin(g)
    sc = {"vertices": scalar(len(g)), "edges": scalar(int(deg.sum()) // 2), "mean_degree": scalar(float(deg.mean())),
          "isolated": scalar(int((deg == 0).sum())),
          "origin_cluster": scalar(0 if cluster is None else len(cluster))}
    series, verdicts, ok = {}, {}, True
    if p.get("n_max"):
        growth = es.growth_estimate(ens, int(p["n_max"]), int(p.get("samples", 100)), cfg.seed, cfg.workers)
        series = {"mean_ball": growth.mean_ball, "mean_log_ball": growth.mean_log_ball}
        expo = es.lrp_envelope_exponent(ens.params["d"], float(p.get("s_prime", 1.25)))
        env = es.envelope_check(growth.mean_ball, expo, saturation=float(p.get("saturation", 0.25)) * len(g))
        verdicts = {"concave": env.concave, "envelope": env.envelope_holds}
        sc["kappa1"], sc["kappa2"] = scalar(env.kappa1), scalar(env.kappa2)
        ok = env.passed
    return sc, series, verdicts, {"transient_regime": bool(g.transient_regime)}, ok


RUNNERS = {name: globals()[f"_op_{name}"] for name in OPERATIONS}


def run(cfg: ExperimentConfig):
    """Execute one experiment and return its record."""
    ens = build_ensemble(cfg)
    t = time.perf_counter()
    sc, series, verdicts, details, ok = RUNNERS[cfg.op](ens, cfg.op_params(), cfg)
    return ResultRecord(cfg.to_dict(), sc, {k: list(v) for k, v in series.items()}, verdicts, details, bool(ok),
                        time.perf_counter() - t)


def _kv(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k, yaml.safe_load(v)


def _parser():
    ap = argparse.ArgumentParser(prog="ergolab", description="Random walks on stationary random graphs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--seed", help="master seed (overrides config and ERGOLAB_SEED)")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--out", help="output path (JSONL; stdout if absent)")

    for name in OPERATIONS:
        p = sub.add_parser(name, help=f"run the {name} operation")
        common(p)
        p.add_argument("--ensemble", help="ensemble kind")
        p.add_argument("-e", dest="eparams", action="append", type=_kv, default=[], metavar="KEY=VALUE",
                       help="ensemble parameter")
        p.add_argument("-p", dest="oparams", action="append", type=_kv, default=[], metavar="KEY=VALUE",
                       help="operation parameter")
    p = sub.add_parser("suite", help="run the acceptance or invariants suite")
    p.add_argument("name", choices=["acceptance", "invariants"])
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--out", help="JSONL output path")
    return ap


def _emit(rec, out):
    if out:
        append_jsonl(out, rec)
        if rec.series:
            path = Path(out)
            write_series_csv(path.with_name(f"{path.stem}.{rec.config['operation']['name']}.csv"), rec.series)
    else:
        print(rec.to_json())


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "suite":
            from .suite import run_suite

            only = [int(x) for x in args.only.split(",")] if args.only else None
            return EXIT_OK if run_suite(args.name, out=args.out, only=only, echo=print) else EXIT_VERDICT
        ens = dict(args.eparams)
        if args.ensemble:
            ens["kind"] = args.ensemble
        overrides = {"ensemble": ens or None, "operation": {"name": args.command, **dict(args.oparams)},
                     "seed": args.seed, "workers": args.workers, "out": args.out}
        cfg = load_config(args.config, overrides)
        rec = run(cfg)
        if args.command == "generate":
            text = rec.details.pop("edgelist")
            if cfg.out:
                Path(cfg.out).write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
            return EXIT_OK
        _emit(rec, cfg.out)
        return EXIT_OK if rec.ok else EXIT_VERDICT
    except (HorizonExceeded, DegreeCapExceeded, DegreeBoundViolated, MemoryError) as exc:
        print(f"resource error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ValueError as exc:  # ConfigError, GraphError and bad operation parameters
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
