"""Command-line front end: seeded experiments with JSON/CSV/edge-list output.

Subcommands::

    kstfree construct --p 7 --s 2 --seed 1
    kstfree baseline  --n 256 --s 2 --seed 1
    kstfree verify    --p 7 --s 2 --trials 100000
    kstfree dichotomy --p 11 --k 2 --s 2 --d 2 --trials 500
    kstfree oracle    --max-n 5 --s 2 --t 2

Exit status is 0 only when the run finished and every check inside it passed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .errors import KstError, PreconditionFailed, work_cap
from .ffield import make_field
from .graphgen import ConstructionParams, all_points, build_algebraic_graph, build_random_graph
from .kst_analysis import (brute_force_ex, brute_force_ex_masks, contains_kst, exact_moment,
                           expected_bad_bound, find_bad_sets, kst_upper_bound, moment_bound,
                           neighborhood_distribution, purge_bad_sets, star_count_bound,
                           star_count_identity, tail_bound)
from .mpoly import basis_values, sample_coefficients
from .rng import substream
from .variety import dichotomy_scan, sample_simple_points

SCHEMA_VERSION = "1.0"

# substream keys, fixed so reports stay comparable across versions
_STREAM_NEIGHBORHOOD = 1
_STREAM_VANISHING = 2
_STREAM_ONEDIM = 3
_STREAM_JOINT = 4
_STREAM_MOMENT = 5


@dataclass
class RunConfig:
    command: str
    p: int = 7
    k: int = 1
    s: int = 2
    d: int | None = None
    n: int | None = None
    seed: int = 0
    trials: int | None = None
    C: int | None = None
    t: int | None = None
    side: str = "both"
    mode: str = "exhaustive"
    samples: int = 1000
    work_cap: int | None = None
    convention: str = "block-total"
    output: str | None = None
    format: str = "json"
    edges: str | None = None
    poly: str | None = None
    histogram: str | None = None
    workers: int = 1
    timing: bool = True
    z_threshold: float = 4.0
    moment_slack: float = 0.25
    moment_trials: int = 2000
    scan_trials: int = 500
    high_rule: str = "sqrt"
    r_values: tuple = (1, 2)
    max_n: int = 5
    min_n: int = 1
    cross_check: bool = False

    def __post_init__(self):
        if self.d is None and self.command in ("construct", "verify", "dichotomy"):
            self.d = self.s * self.s - self.s + 2
        if self.trials is None:
            self.trials = {"verify": 100_000, "dichotomy": 500}.get(self.command, 0)
        if self.side not in ("left", "right", "both"):
            raise PreconditionFailed(f"bad side {self.side!r}")
        if self.mode not in ("exhaustive", "sampled"):
            raise PreconditionFailed(f"bad mode {self.mode!r}")
        if self.format not in ("json", "csv", "edges"):
            raise PreconditionFailed(f"bad format {self.format!r}")

    def echo(self) -> dict:
        out = asdict(self)
        out["r_values"] = list(self.r_values)
        out["work_cap"] = work_cap(self.work_cap)
        for key in ("output", "edges", "poly", "histogram", "timing"):
            out.pop(key)
        return out


@dataclass
class RunResult:
    report: dict
    exit_code: int = 0
    text: str | None = None             # CSV / edge-list payload when format != json
    timing: dict = field(default_factory=dict)


class _Clock:
    def __init__(self):
        self.marks = {}

    def section(self, name):
        clock = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                clock.marks[name] = round(time.perf_counter() - self.t0, 6)

        return _Ctx()


def _zscore(freq, p0, trials):
    sigma = math.sqrt(p0 * (1 - p0) / trials) if 0 < p0 < 1 else 0.0
    z = (freq - p0) / sigma if sigma else (0.0 if freq == p0 else math.inf)
    return sigma, z


def _sides(cfg):
    return ("left", "right") if cfg.side == "both" else (cfg.side,)


def _check(name, passed, **detail):
    return {"name": name, "passed": bool(passed), **detail}


def _finish(report, checks, clock, cfg):
    report["checks"] = checks
    if cfg.timing:
        report["timing"] = clock.marks
    return RunResult(report, 0 if all(c["passed"] for c in checks) else 1, timing=clock.marks)


def _sketch_thresholds(n, s):
    if n <= math.e:
        return None, None
    ratio = math.log(n) / math.log(math.log(n))
    return 10 * s * ratio, 0.1 * s * ratio


# --- construct ----------------------------------------------------------------

def cmd_construct(cfg: RunConfig) -> RunResult:
    clock = _Clock()
    params = ConstructionParams(cfg.p, cfg.k, cfg.s, cfg.d, cfg.seed, cfg.convention)
    ctx, s, d, q, n = params.field, params.s, params.d, params.q, params.n
    report = {"schema_version": SCHEMA_VERSION, "config": cfg.echo(),
              "field": {"p": ctx.p, "k": ctx.k, "q": q, "modulus": list(ctx.modulus)}}
    checks = []

    if cfg.C is None:
        bezout = d**s
        with clock.section("threshold_scan"):
            scan = dichotomy_scan(ctx, s, d, bezout, cfg.scan_trials, rng=cfg.seed,
                                  rule=cfg.high_rule, convention=cfg.convention,
                                  work_cap=cfg.work_cap)
        C = scan.suggested_threshold()
        policy = {"policy": "scan", "provisional_C": bezout, "scan_trials": cfg.scan_trials,
                  "largest_low_size": scan.max_low}
        report["dichotomy"] = scan.to_dict()
    else:
        C = cfg.C
        policy = {"policy": "fixed"}
    t = cfg.t if cfg.t is not None else C + 1

    with clock.section("build"):
        G, f = build_algebraic_graph(params, workers=cfg.workers, work_cap=cfg.work_cap)
    edges = G.edge_count()
    report["construction"] = {
        "kind": "algebraic", "n": n, "q": q, "s": s, "d": d, "edge_count": edges,
        "expected_edges": n * n / q, "density_exponent_edges": n ** (2 - 1 / s),
        "in_proven_regime": params.in_proven_regime,
        "polynomial_terms": len(f.terms)}

    with clock.section("neighborhoods"):
        rng = substream(cfg.seed, _STREAM_NEIGHBORHOOD)
        report["neighborhoods"] = [
            neighborhood_distribution(G, s, side, cfg.mode, rng=rng, samples=cfg.samples,
                                      d=d, work_cap=cfg.work_cap).to_dict()
            for side in _sides(cfg)]

    with clock.section("bad_sets"):
        bad = find_bad_sets(G, s, C, work_cap=cfg.work_cap)
    report["bad_sets"] = {**bad.to_dict(), **policy}

    with clock.section("purge"):
        G2, removed = purge_bad_sets(G, bad)
    edges2 = G2.edge_count()
    report["purge"] = {"vertices_removed": removed, "edges_before": edges, "edges_remaining": edges2,
                       "edges_lost": edges - edges2, "loss_ceiling": removed * n,
                       "retention": edges2 / edges if edges else None}
    checks.append(_check("purge_loss_within_ceiling", edges - edges2 <= removed * n))

    with clock.section("kst"):
        witness = contains_kst(G2, s, t, work_cap=cfg.work_cap)
    report["kst"] = {"s": s, "t": t, "found": witness is not None,
                     "witness": witness.to_dict() if witness else None,
                     "t_degree_form": s**d + 1}
    if t == C + 1:
        checks.append(_check("purged_graph_is_kst_free", witness is None, s=s, t=t))

    stars, _ = star_count_identity(G2, s)
    report["bounds"] = {
        "M": moment_bound(d), "exact_moment_formula": float(exact_moment(q, s, d)),
        "tail_bound_half_q": tail_bound(q / 2, d),
        "expected_bad_bound": expected_bad_bound(n, s, q, d),
        "kst_upper_bound": kst_upper_bound(n, s, max(t, 2)),
        "star_count": stars, "star_count_bound": star_count_bound(n, s, t)}
    report["digests"] = {"polynomial": f.digest(), "graph": G.digest(), "purged_graph": G2.digest()}

    result = _finish(report, checks, clock, cfg)
    if cfg.edges:
        _write(cfg.edges, G2.edge_list_text())
    if cfg.poly:
        _write(cfg.poly, f.to_text())
    if cfg.histogram:
        _write(cfg.histogram, neighborhood_distribution(G, s, _sides(cfg)[0], "exhaustive", d=d,
                                                        work_cap=cfg.work_cap).histogram_csv())
    if cfg.format == "edges":
        result.text = G2.edge_list_text()
    elif cfg.format == "csv":
        result.text = neighborhood_distribution(G, s, _sides(cfg)[0], "exhaustive", d=d,
                                                work_cap=cfg.work_cap).histogram_csv()
    return result


# --- baseline -----------------------------------------------------------------

def cmd_baseline(cfg: RunConfig) -> RunResult:
    clock = _Clock()
    n = cfg.n if cfg.n is not None else 256
    s = cfg.s
    report = {"schema_version": SCHEMA_VERSION, "config": cfg.echo()}
    checks = []
    with clock.section("build"):
        G = build_random_graph(n, s, seed=cfg.seed)
    prob = G.provenance["edge_probability"]
    edges = G.edge_count()
    sigma, z = _zscore(edges / (n * n), prob, n * n)
    t_high, t_low = _sketch_thresholds(n, s)
    report["construction"] = {
        "kind": "random", "n": n, "s": s, "edge_probability": prob, "edge_count": edges,
        "expected_edges": prob * n * n, "sigma": sigma * n * n, "z": z,
        "sketch_t_upper": t_high, "sketch_t_lower": t_low}
    checks.append(_check("edge_count_z", abs(z) <= cfg.z_threshold, z=z))

    d = cfg.d if cfg.d is not None else s * s - s + 2
    with clock.section("neighborhoods"):
        rng = substream(cfg.seed, _STREAM_NEIGHBORHOOD)
        report["neighborhoods"] = [
            neighborhood_distribution(G, s, side, cfg.mode, rng=rng, samples=cfg.samples, d=d,
                                      work_cap=cfg.work_cap).to_dict()
            for side in _sides(cfg)]

    t = cfg.t if cfg.t is not None else (math.ceil(t_high) if t_high else n + 1)
    if cfg.C is not None:
        bad = find_bad_sets(G, s, cfg.C, work_cap=cfg.work_cap)
        G2, removed = purge_bad_sets(G, bad)
        report["bad_sets"] = bad.to_dict()
        report["purge"] = {"vertices_removed": removed, "edges_before": edges,
                           "edges_remaining": G2.edge_count()}
    with clock.section("kst"):
        witness = contains_kst(G, s, t, work_cap=cfg.work_cap) if cfg.mode == "exhaustive" else None
    report["kst"] = {"s": s, "t": t, "searched": cfg.mode == "exhaustive",
                     "found": witness is not None, "witness": witness.to_dict() if witness else None}
    report["bounds"] = {"union_bound": 2 * math.comb(n, s) / math.factorial(t) if t <= 170 else 0.0,
                        "kst_upper_bound": kst_upper_bound(n, s, max(t, 2))}
    report["digests"] = {"graph": G.digest()}
    result = _finish(report, checks, clock, cfg)
    if cfg.edges:
        _write(cfg.edges, G.edge_list_text())
    if cfg.format == "edges":
        result.text = G.edge_list_text()
    return result


# --- verify -------------------------------------------------------------------

def _batched(ctx, s, d, convention, rng, trials, columns, chunk=25_000):
    """Values of ``trials`` sampled polynomials at the points encoded by ``columns``."""
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        coeffs = sample_coefficients(ctx, s, d, rng, m, convention)
        yield ctx.dot(coeffs, columns)
        done += m


def _frequency_check(name, hits, trials, p0, z_threshold, **extra):
    freq = hits / trials
    sigma, z = _zscore(freq, p0, trials)
    return _check(name, abs(z) <= z_threshold, empirical=freq, theoretical=p0,
                  abs_deviation=abs(freq - p0), sigma=sigma, z=z, trials=trials, **extra)


def verify_claims(cfg: RunConfig) -> list[dict]:
    ctx = make_field(cfg.p, cfg.k)
    q, s, d, T = ctx.q, cfg.s, cfg.d, cfg.trials
    checks = []

    # single pair vanishes with probability 1/q
    rng = substream(cfg.seed, _STREAM_VANISHING)
    u = rng.integers(0, q, size=(1, s))
    v = rng.integers(0, q, size=(1, s))
    cols = basis_values(ctx, s, d, u, v, cfg.convention)
    hits = sum(int((vals[:, 0] == 0).sum()) for vals in _batched(ctx, s, d, cfg.convention, rng, T, cols))
    checks.append(_frequency_check("vanishing_single_pair", hits, T, 1 / q, cfg.z_threshold))

    # a uniform linear form identifies two distinct points with probability 1/q
    rng = substream(cfg.seed, _STREAM_ONEDIM)
    pts = sample_simple_points(ctx, s, 2, rng)
    diff = ctx.vsub(pts[0], pts[1])[:, None]
    hits = 0
    for lo in range(0, T, 100_000):
        forms = rng.integers(0, q, size=(min(100_000, T - lo), s))
        hits += int((ctx.dot(forms, diff)[:, 0] == 0).sum())
    checks.append(_frequency_check("linear_form_collision", hits, T, 1 / q, cfg.z_threshold))

    # joint vanishing on simple U x V
    for r in cfg.r_values:
        rng = substream(cfg.seed, _STREAM_JOINT, r)
        U = sample_simple_points(ctx, s, s, rng)
        V = sample_simple_points(ctx, s, r, rng)
        xs = np.repeat(U, r, axis=0)
        ys = np.tile(V, (s, 1))
        cols = basis_values(ctx, s, d, xs, ys, cfg.convention)
        hits = sum(int((vals == 0).all(axis=1).sum())
                   for vals in _batched(ctx, s, d, cfg.convention, rng, T, cols))
        in_range = max(s, r) <= min(math.sqrt(q), d)
        checks.append(_frequency_check(f"joint_vanishing_r{r}", hits, T, q ** (-s * r),
                                       cfg.z_threshold, s=s, r=r, within_proven_range=in_range))

    # d-th moment of |N(U)| and the tail bounds it implies
    moment_checks = moment_and_tail(ctx, s, d, cfg.moment_trials, cfg.seed, cfg.convention,
                                    cfg.moment_slack)
    return checks + moment_checks


def neighborhood_sizes(ctx, s, d, trials, seed, convention="block-total"):
    """|N(U)| for one fixed simple U under ``trials`` independent polynomials."""
    rng = substream(seed, _STREAM_MOMENT)
    U = sample_simple_points(ctx, s, s, rng)
    pts = all_points(ctx, s)
    npts = len(pts)
    xs = np.repeat(U, npts, axis=0)
    ys = np.tile(pts, (s, 1))
    cols = basis_values(ctx, s, d, xs, ys, convention)
    sizes = []
    chunk = max(1, 2**22 // max(1, cols.shape[1]))
    for vals in _batched(ctx, s, d, convention, rng, trials, cols, chunk=chunk):
        zero = (vals == 0).reshape(len(vals), s, npts).all(axis=1)
        sizes.extend(zero.sum(axis=1).tolist())
    return U, sizes


def moment_and_tail(ctx, s, d, trials, seed, convention="block-total", slack=0.25,
                    lambdas=None) -> list[dict]:
    q = ctx.q
    U, sizes = neighborhood_sizes(ctx, s, d, trials, seed, convention)
    sizes = np.array(sizes, dtype=object)
    M = moment_bound(d)
    moment = float(sum(int(x) ** d for x in sizes) / trials)
    checks = [_check("moment_bound", moment <= M * (1 + slack), empirical=moment, M=M,
                     ceiling=M * (1 + slack), exact_formula=float(exact_moment(q, s, d)),
                     trials=trials, U=U.tolist())]
    for lam in lambdas or (2, 4, q / 2):
        bound = tail_bound(lam, d)
        b = min(1.0, bound)
        freq = float(sum(1 for x in sizes if x >= lam) / trials)
        sigma = math.sqrt(b * (1 - b) / trials)
        checks.append(_check(f"tail_bound_lambda_{lam:g}", freq <= b + 3 * sigma, empirical=freq,
                             bound=bound, sigma=sigma, trials=trials))
    return checks


def cmd_verify(cfg: RunConfig) -> RunResult:
    clock = _Clock()
    report = {"schema_version": SCHEMA_VERSION, "config": cfg.echo()}
    with clock.section("verify"):
        checks = verify_claims(cfg)
    report["bounds"] = {"M": moment_bound(cfg.d),
                        "expected_bad_bound": expected_bad_bound((cfg.p ** cfg.k) ** cfg.s, cfg.s,
                                                                 cfg.p ** cfg.k, cfg.d)}
    report["verification"] = checks
    return _finish(report, checks, clock, cfg)


# --- dichotomy / oracle -------------------------------------------------------

def cmd_dichotomy(cfg: RunConfig) -> RunResult:
    clock = _Clock()
    ctx = make_field(cfg.p, cfg.k)
    C = cfg.C if cfg.C is not None else cfg.d**cfg.s
    with clock.section("scan"):
        rep = dichotomy_scan(ctx, cfg.s, cfg.d, C, cfg.trials, rng=cfg.seed, rule=cfg.high_rule,
                             convention=cfg.convention, work_cap=cfg.work_cap)
    report = {"schema_version": SCHEMA_VERSION, "config": cfg.echo(),
              "field": {"p": ctx.p, "k": ctx.k, "q": ctx.q, "modulus": list(ctx.modulus)},
              "dichotomy": rep.to_dict()}
    checks = [_check("no_gap_violations", not rep.violations, count=len(rep.violations))]
    result = _finish(report, checks, clock, cfg)
    if cfg.format == "csv":
        result.text = rep.to_csv()
    return result


def oracle_rows(min_n, max_n, s, t, cross_check=False):
    rows = []
    for n in range(min_n, max_n + 1):
        ex = brute_force_ex(n, s, t)
        row = {"n": n, "s": s, "t": t, "ex": ex, "kst_ceiling": kst_upper_bound(n, s, t)}
        if cross_check:
            row["ex_masks"] = brute_force_ex_masks(n, s, t)
        rows.append(row)
    return rows


def cmd_oracle(cfg: RunConfig) -> RunResult:
    clock = _Clock()
    t = cfg.t if cfg.t is not None else 2
    with clock.section("oracle"):
        rows = oracle_rows(cfg.min_n, cfg.max_n, cfg.s, t, cfg.cross_check)
    report = {"schema_version": SCHEMA_VERSION, "config": cfg.echo(), "oracle": rows}
    checks = [_check("ex_below_kst_ceiling", all(r["ex"] <= r["kst_ceiling"] for r in rows))]
    if cfg.cross_check:
        checks.append(_check("oracles_agree", all(r["ex"] == r["ex_masks"] for r in rows)))
    result = _finish(report, checks, clock, cfg)
    if cfg.format == "csv":
        lines = ["n,s,t,ex,kst_ceiling"] + [f"{r['n']},{r['s']},{r['t']},{r['ex']},{r['kst_ceiling']}"
                                            for r in rows]
        result.text = "\n".join(lines) + "\n"
    return result


COMMANDS = {"construct": cmd_construct, "baseline": cmd_baseline, "verify": cmd_verify,
            "dichotomy": cmd_dichotomy, "oracle": cmd_oracle}


# --- argument parsing ---------------------------------------------------------

def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def render(result: RunResult) -> str:
    if result.text is not None:
        return result.text
    return json.dumps(result.report, indent=2) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kstfree", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--work-cap", type=int, default=None,
                        help="max units of work per kernel (env KSTFREE_WORK_CAP)")
    common.add_argument("--output", "-o", default=None)
    common.add_argument("--format", choices=("json", "csv", "edges"), default="json")
    common.add_argument("--no-timing", dest="timing", action="store_false")

    fieldopts = argparse.ArgumentParser(add_help=False)
    fieldopts.add_argument("--p", type=int, default=7)
    fieldopts.add_argument("--k", type=int, default=1)
    fieldopts.add_argument("--s", type=int, default=2)
    fieldopts.add_argument("--d", type=int, default=None, help="degree bound (default s^2-s+2)")
    fieldopts.add_argument("--convention", choices=("block-total", "per-variable"),
                           default="block-total")

    analysis = argparse.ArgumentParser(add_help=False)
    analysis.add_argument("--C", type=int, default=None, help="bad-set threshold")
    analysis.add_argument("--t", type=int, default=None)
    analysis.add_argument("--side", choices=("left", "right", "both"), default="both")
    analysis.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    analysis.add_argument("--samples", type=int, default=1000)
    analysis.add_argument("--edges", default=None, help="write the edge list here")

    p = sub.add_parser("construct", parents=[common, fieldopts, analysis],
                       help="algebraic construction, bad-set purge, K_{s,C+1} check")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--poly", default=None, help="write the sampled polynomial here")
    p.add_argument("--histogram", default=None, help="write the |N(U)| histogram CSV here")
    p.add_argument("--scan-trials", type=int, default=500)
    p.add_argument("--high-rule", choices=("sqrt", "half"), default="sqrt")

    p = sub.add_parser("baseline", parents=[common, analysis], help="independent coin-flip graph")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--d", type=int, default=None)

    p = sub.add_parser("verify", parents=[common, fieldopts], help="Monte Carlo checks of the probabilistic estimates")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--moment-trials", type=int, default=2000)
    p.add_argument("--moment-slack", type=float, default=0.25)
    p.add_argument("--z-threshold", type=float, default=4.0)
    p.add_argument("--r", dest="r_values", type=int, nargs="+", default=[1, 2])

    p = sub.add_parser("dichotomy", parents=[common, fieldopts], help="zero-set size scan")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--C", type=int, default=None, help="low-side ceiling (default d^s)")
    p.add_argument("--high-rule", choices=("sqrt", "half"), default="sqrt")

    p = sub.add_parser("oracle", parents=[common], help="exact ex(n, K_{s,t}) vs the KST ceiling")
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument("--min-n", type=int, default=1)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--cross-check", action="store_true",
                   help="also run the independent edge-mask enumeration")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    known = RunConfig.__dataclass_fields__
    values = {k: v for k, v in vars(ns).items() if k in known}
    if "r_values" in values:
        values["r_values"] = tuple(values["r_values"])
    return RunConfig(**values)


def run(cfg: RunConfig) -> RunResult:
    return COMMANDS[cfg.command](cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        result = run(cfg)
    except KstError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2
    text = render(result)
    if cfg.output:
        _write(cfg.output, text)
    else:
        sys.stdout.write(text)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
