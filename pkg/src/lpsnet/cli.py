"""Command-line front-end: ``lpsnet generate | analyze | failures | simulate | layout``.

Every command writes its outputs plus ``manifest-<command>.json`` (full
configuration and tool version) into the output directory, which defaults to
``$LPSNET_OUT`` or ``./lpsnet-out``. Outputs contain no timestamps, so
re-running a manifest's configuration reproduces them byte for byte.

Exit codes: 0 success, 2 parameter error, 3 runtime or convergence error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import __version__
from . import layout as L
from . import metrics as M
from . import routing as R
from . import simnet as S
from . import topology as T
from .errors import ParameterError
from .graph import Graph, export, parse_edge_list

OUT_ENV = "LPSNET_OUT"
SCHEMA_VERSION = 1


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _spec_from_args(a) -> T.TopologySpec:
    need = {"lps": ("p", "q"), "sf": ("q",), "bf": ("p", "s"), "df": ("a",)}[a.family]
    missing = [f"-{k}" for k in need if getattr(a, k) is None]
    if missing:
        raise ParameterError(f"{a.family} needs {' '.join(missing)}")
    opts = {}
    if a.family == "bf" and a.matching:
        opts["matching"] = a.matching
    if a.family == "df" and a.arrangement:
        opts["arrangement"] = a.arrangement
    if a.family == "lps" and a.allow_small_q:
        opts["allow_small_q"] = True
    return T.TopologySpec(a.family, tuple(getattr(a, k) for k in need), opts)


def _slug(label: str) -> str:
    return label.lower().replace("(", "-").replace(")", "").replace(",", "-")


class _Run:
    """Output directory, format and manifest bookkeeping for one command."""

    def __init__(self, args, command: str):
        self.dir = Path(args.out or os.environ.get(OUT_ENV) or "lpsnet-out")
        self.dir.mkdir(parents=True, exist_ok=True)
        self.fmt = args.format
        self.command = command
        self.files: list[str] = []
        cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
        self.config = cfg

    def write(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text)
        self.files.append(name)
        return path

    def table(self, stem: str, rows: list[dict]) -> Path:
        if self.fmt == "json":
            return self.write(f"{stem}.json", json.dumps(
                {"schema": f"lpsnet-{stem} v{SCHEMA_VERSION}", "rows": rows}, indent=2) + "\n")
        return self.write(f"{stem}.csv", rows_to_csv(rows, f"lpsnet-{stem}"))

    def finish(self, extra: dict | None = None) -> None:
        manifest = {
            "tool": "lpsnet",
            "version": __version__,
            "command": self.command,
            "config": self.config,
            "outputs": self.files,
            **(extra or {}),
        }
        (self.dir / f"manifest-{self.command}.json").write_text(
            json.dumps(manifest, indent=2, default=str) + "\n")


def rows_to_csv(rows: list[dict], schema: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {schema} v{SCHEMA_VERSION}\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def _load_graph(args) -> tuple[str, Graph]:
    if getattr(args, "edges", None):
        g = parse_edge_list(Path(args.edges).read_text(), name=Path(args.edges).stem)
        return g.name, g
    spec = T.TopologySpec.parse(args.spec)
    if args.allow_small_q and spec.family == "lps":
        spec = T.TopologySpec(spec.family, spec.params, {"allow_small_q": True})
    return spec.label, T.build(spec)


# --- commands -----------------------------------------------------------------


def cmd_generate(args) -> int:
    spec = _spec_from_args(args)
    g = T.build(spec)
    run = _Run(args, "generate")
    slug = _slug(spec.label)
    ext = "dot" if args.graph_format == "dot" else "edges"
    run.write(f"{slug}.{ext}", export(g, args.graph_format))
    inf = T.info(spec, g)
    run.write(f"{slug}.info.json", json.dumps({
        "label": inf.label, "family": inf.family, "params": list(inf.params),
        "routers": inf.routers, "radix": inf.radix, "predicted_routers": inf.predicted_routers,
        "edges": g.m, "options": spec.options,
    }, indent=2) + "\n")
    run.finish()
    print(f"{spec.label}: {g.n} routers, radix {g.radix}, {g.m} links -> {run.dir}")
    return 0


def analyze_row(label: str, g: Graph, restarts: int, seed: int) -> dict:
    if not M.is_connected(g):
        raise ParameterError(f"{label} is disconnected")
    st = M.structural(g)
    row = {"topology": label, "routers": g.n, "radix": int(g.degrees.max()),
           "diameter": st.diameter, "mean_distance": round(st.mean_distance, 6), "girth": st.girth}
    if g.is_regular:
        sp = M.spectral(g)
        row.update(lambda_=round(sp.lambda_, 6), mu1=round(sp.mu1, 6),
                   laplacian_mu1=round(sp.laplacian_mu1, 6), ramanujan=sp.ramanujan)
    else:
        row.update(lambda_=None, mu1=None, laplacian_mu1=None, ramanujan=None)
    bi = M.bisection(g, restarts=restarts, seed=seed)
    row.update(bisection_lower=round(bi.lower, 6), bisection_upper=bi.upper,
               normalized_upper=round(bi.normalized_upper, 6))
    return row


def cmd_analyze(args) -> int:
    run = _Run(args, "analyze")
    rows = []
    if args.size_classes:
        if not 1 <= args.classes <= len(T.SIZE_CLASSES):
            raise ParameterError(f"--classes must be in 1..{len(T.SIZE_CLASSES)}")
        for cls in T.SIZE_CLASSES[: args.classes]:
            for text in cls:
                spec = T.TopologySpec.parse(text)
                rows.append(analyze_row(spec.label, T.build(spec), args.restarts, args.seed))
    else:
        if not (args.spec or args.edges):
            raise ParameterError("analyze needs --spec, --edges or --size-classes")
        label, g = _load_graph(args)
        rows.append(analyze_row(label, g, args.restarts, args.seed))
    run.table("analyze", rows)
    run.finish()
    for r in rows:
        print(", ".join(f"{k}={v}" for k, v in r.items()))
    return 0


def cmd_failures(args) -> int:
    label, g = _load_graph(args)
    curve = M.failure_experiment(
        g, args.proportions, seed=args.seed, max_trials=args.max_trials,
        measure_bisection=not args.no_bisection)
    run = _Run(args, "failures")
    rows = curve.rows()
    for r in rows:
        r["topology"] = label
    run.table("failures", rows)
    run.finish()
    for r in rows:
        print(f"{r['proportion']:.3f}: connected {r['connected_rate']:.3f}, diameter {r['mean_diameter']}, "
              f"trials {r['trials']}, converged {r['converged']}")
    if not all(p.converged for p in curve.points) and args.require_convergence:
        print("error: CV target not reached below the trial cap", file=sys.stderr)
        return 3
    return 0


def _sim_config(args, routing: str) -> S.SimConfig:
    return S.SimConfig(
        concentration=args.concentration, buffer_bytes=args.buffer_bytes,
        packet_bytes=args.packet_bytes, message_bytes=args.message_bytes,
        link_bandwidth=args.bandwidth, link_latency=args.link_latency,
        switch_latency=args.switch_latency, routing=routing, ugal_threshold=args.threshold,
        duration=args.duration, warmup=args.warmup, seed=args.seed)


def cmd_simulate(args) -> int:
    specs = [T.TopologySpec.parse(s) for s in args.topology]
    listed = {s.label for s in specs}
    if args.baseline:
        base = T.TopologySpec.parse(args.baseline)
        if base not in specs:
            specs.append(base)
    graphs = {s.label: T.build(s) for s in specs}
    routings = args.routing
    if args.baseline_routing and args.baseline_routing not in routings:
        routings = routings + [args.baseline_routing]
    # one rank count per pattern for every topology so results are comparable
    smallest = min(g.n for g in graphs.values()) * args.concentration
    nbits = {pat: S.default_nbits(smallest, pat) for pat in args.pattern}
    results = {}
    for label, g in graphs.items():
        table = R.build_tables(g)
        for pat in args.pattern:
            placement = S.place_ranks(1 << nbits[pat], g.n * args.concentration,
                                      args.concentration, args.seed)
            pattern = S.make_pattern(pat, nbits[pat], args.seed)
            for routing in routings:
                stats = S.sweep(g, _sim_config(args, routing), pattern, placement, args.loads, table)
                for st in stats:
                    results[(label, pat, routing, st.offered_load)] = st
    rows, extra = [], {}
    if args.baseline:
        extra[f"speedup_vs_{_slug(base.label)}"] = []
    if args.baseline_routing:
        extra[f"normalized_vs_{args.baseline_routing}"] = []
    for (label, pat, routing, load), st in results.items():
        if label not in listed or routing not in args.routing:
            continue
        rows.append((label, pat, st))
        if args.baseline:
            extra[f"speedup_vs_{_slug(base.label)}"].append(
                repr(st.speedup_vs(results[(base.label, pat, routing, load)])))
        if args.baseline_routing:
            ref = results[(label, pat, args.baseline_routing, load)]
            extra[f"normalized_vs_{args.baseline_routing}"].append(
                repr(st.max_message_time / ref.max_message_time))
    run = _Run(args, "simulate")
    if run.fmt == "json":
        out = []
        for i, (label, pat, st) in enumerate(rows):
            d = {"topology": label, "pattern": pat}
            d.update({c: getattr(st, c) for c in S.CSV_COLUMNS[2:]})
            d.update({k: float(v[i]) for k, v in extra.items()})
            out.append(d)
        run.write("simulate.json", json.dumps(
            {"schema": f"lpsnet-sim v{S.CSV_VERSION}", "rows": out}, indent=2) + "\n")
    else:
        run.write("simulate.csv", S.stats_to_csv(rows, extra))
    run.finish({"ranks": {pat: 1 << b for pat, b in nbits.items()}})
    for label, pat, st in rows:
        print(f"{label} {pat} {st.routing} load={st.offered_load}: max={st.max_message_time:.1f} ns "
              f"mean={st.mean_latency:.1f} ns saturated={st.saturated}")
    return 0


def cmd_layout(args) -> int:
    label, g = _load_graph(args)
    model = L.CostModel(electrical_cutoff_m=args.cutoff)
    placement = L.optimize_layout(g, seed=args.seed, budget=args.budget)
    ws = L.wire_stats(g, placement, model)
    bis = None
    if args.bisection:
        bis = M.bisection(g, restarts=args.restarts, seed=args.seed).upper
    total, ratio = L.power_estimate(ws, model, bis)
    lat_max, lat_mean = L.latency_profile(g, placement, model, args.switch_latency,
                                          not args.hops_only)
    run = _Run(args, "layout")
    run.write("placement.csv", placement.to_csv())
    report = {
        "schema": f"lpsnet-layout v{SCHEMA_VERSION}",
        "topology": label,
        "room": {"x_dim": placement.room.x_dim, "y_dim": placement.room.y_dim,
                 "cabinets": placement.room.cabinets},
        "matched_pairs": len(placement.matched_pairs),
        "forced_pairs": len(placement.forced_pairs),
        "wire": {"mean_length": ws.mean_length, "max_length": ws.max_length,
                 "total_length": ws.total_length, "electrical_links": ws.electrical_links,
                 "optical_links": ws.optical_links, "electrical_cutoff_m": ws.cutoff_m},
        "power": {"total_watts": total, "bisection_links": bis, "mw_per_gbps": ratio,
                  "formula": L.POWER_FORMULA},
        "latency": {"switch_latency_ns": args.switch_latency, "max_ns": lat_max,
                    "mean_ns": lat_mean, "switch_traversals": "hops" if args.hops_only else "hops+1"},
    }
    run.write("layout.json", json.dumps(report, indent=2) + "\n")
    if args.latency_sweep:
        rows = [{"switch_latency": s, "max_ns": mx, "mean_ns": mn}
                for s, mx, mn in L.latency_sweep(g, placement, args.latency_sweep, model,
                                                 not args.hops_only)]
        run.table("latency_sweep", rows)
    run.finish()
    print(f"{label}: mean wire {ws.mean_length:.2f} m, max {ws.max_length:.1f} m, "
          f"{ws.electrical_links} electrical / {ws.optical_links} optical, {total:.0f} W")
    return 0


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./lpsnet-out)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = argparse.ArgumentParser(prog="lpsnet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lpsnet {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a topology edge list")
    g.add_argument("family", choices=("lps", "sf", "bf", "df"))
    g.add_argument("-p", type=int)
    g.add_argument("-q", type=int)
    g.add_argument("-s", type=int)
    g.add_argument("-a", type=int)
    g.add_argument("--matching", choices=("multiplier", "identity"))
    g.add_argument("--arrangement", choices=("absolute", "circulant"))
    g.add_argument("--allow-small-q", action="store_true", help="admit LPS with q <= 2 sqrt(p)")
    g.add_argument("--graph-format", choices=("edge-list", "dot"), default="edge-list")
    g.set_defaults(func=cmd_generate)

    def source(sp):
        sp.add_argument("--spec", help="topology, e.g. lps:11,7 or SF(7)")
        sp.add_argument("--edges", help="edge list file")
        sp.add_argument("--allow-small-q", action="store_true", help="admit LPS with q <= 2 sqrt(p)")

    a = sub.add_parser("analyze", parents=[common], help="structural, spectral and bisection row")
    source(a)
    a.add_argument("--size-classes", "--table1", dest="size_classes", action="store_true",
                   help="every family in the reference size classes")
    a.add_argument("--classes", type=int, default=1, help="how many size classes, smallest first")
    a.add_argument("--restarts", type=int, default=32)
    a.set_defaults(func=cmd_analyze)

    f = sub.add_parser("failures", parents=[common], help="random edge-deletion curve")
    source(f)
    f.add_argument("--proportions", type=_floats, default=[0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    f.add_argument("--max-trials", type=int, default=1000, help="largest trial count per batch")
    f.add_argument("--no-bisection", action="store_true")
    f.add_argument("--require-convergence", action="store_true",
                   help="exit 3 if any proportion hits the trial cap")
    f.set_defaults(func=cmd_failures)

    s = sub.add_parser("simulate", parents=[common], help="offered-load sweep")
    s.add_argument("--topology", action="append", required=True)
    s.add_argument("--routing", action="append", choices=(R.MINIMAL, R.VALIANT, R.UGAL))
    s.add_argument("--pattern", action="append", choices=S.PATTERNS)
    s.add_argument("--loads", type=_floats, default=[0.1, 0.3, 0.5, 0.7])
    s.add_argument("--baseline", help="topology for speedup columns, e.g. df:12")
    s.add_argument("--baseline-routing", choices=(R.MINIMAL, R.VALIANT, R.UGAL),
                   help="routing for normalized columns")
    d = S.SimConfig()
    s.add_argument("--concentration", type=int, default=d.concentration)
    s.add_argument("--buffer-bytes", type=int, default=d.buffer_bytes)
    s.add_argument("--packet-bytes", type=int, default=d.packet_bytes)
    s.add_argument("--message-bytes", type=int, default=d.message_bytes)
    s.add_argument("--bandwidth", type=float, default=d.link_bandwidth, help="bytes/ns")
    s.add_argument("--link-latency", type=float, default=d.link_latency)
    s.add_argument("--switch-latency", type=float, default=d.switch_latency)
    s.add_argument("--threshold", type=float, default=d.ugal_threshold)
    s.add_argument("--duration", type=float, default=d.duration)
    s.add_argument("--warmup", type=float, default=d.warmup)
    s.set_defaults(func=cmd_simulate)

    y = sub.add_parser("layout", parents=[common], help="machine-room embedding")
    source(y)
    y.add_argument("--cutoff", type=float, default=L.CostModel.electrical_cutoff_m,
                   help="longest electrical link (m)")
    y.add_argument("--budget", type=int, default=20, help="random starts")
    y.add_argument("--switch-latency", type=float, default=100.0)
    y.add_argument("--hops-only", action="store_true", help="charge hops, not hops+1, switch traversals")
    y.add_argument("--latency-sweep", type=_floats)
    y.add_argument("--bisection", action="store_true", help="estimate bisection for mW per Gb/s")
    y.add_argument("--restarts", type=int, default=8)
    y.set_defaults(func=cmd_layout)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate":
        args.routing = args.routing or [R.MINIMAL]
        args.pattern = args.pattern or ["random"]
    if args.command in ("failures", "layout") and not (args.spec or args.edges):
        print(f"error: {args.command} needs --spec or --edges", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
