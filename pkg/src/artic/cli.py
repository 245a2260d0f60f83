"""Command-line entry point: ``artic gen|estimate|eval|ablate``.

Exit codes: 0 success, 1 other estimation errors, 2 numerical failure,
64 usage error, 66 missing/unreadable input.
"""

import argparse
import os
import sys
import time
from pathlib import Path

from . import io
from .direct import OptimizerConfig, optimize
from .errors import ArticError, FormatError, NumericalFailureError, PLYParseError
from .geometry import MotionKind
from .metrics import METHODS, BenchmarkConfig, MetricRow, run_benchmark
from .report import export_overlay, export_trace
from .search import SearchConfig, search
from .synth import TEMPLATES, DegradeConfig, ablation_suite, make_suite

EX_OK, EX_FAIL, EX_NUMERIC, EX_USAGE, EX_NOINPUT = 0, 1, 2, 64, 66


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("expected non-negative numbers")
    return vals


def _names(choices):
    def parse(text):
        vals = [x.strip() for x in text.split(",") if x.strip()]
        bad = [v for v in vals if v not in choices]
        if not vals or bad:
            raise argparse.ArgumentTypeError(f"choose from {', '.join(choices)}")
        return vals
    return parse


def _positive(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser():
    p = _Parser(prog="artic", description="Articulation axis estimation from point clouds.")
    p.add_argument("--threads", type=int, help="worker threads (overrides ARTIC_THREADS)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic suite")
    g.add_argument("--template", type=_names(TEMPLATES + ("all",)), default=["all"],
                   help="comma-separated template names or 'all'")
    g.add_argument("--count", type=_positive, default=1, help="objects per template")
    g.add_argument("--frames", type=_positive, default=10)
    g.add_argument("--points", type=_positive, default=2048, help="points per part")
    g.add_argument("--jitter", type=float, default=0.0, help="noise std, fraction of diagonal")
    g.add_argument("--dropout", type=float, default=0.0)
    g.add_argument("--outliers", type=float, default=0.0)
    g.add_argument("--hinge-offset", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--ascii", action="store_true", help="write ASCII PLY")
    g.add_argument("--out", required=True, type=Path)

    e = sub.add_parser("estimate", help="estimate the joint of one sequence")
    e.add_argument("manifest", type=Path, help="manifest.json or its directory")
    e.add_argument("--method", choices=("algo", "direct", "both"), default="algo")
    e.add_argument("--kind", choices=("revolute", "prismatic", "auto"), default="auto")
    e.add_argument("--seed-from-algo", action="store_true")
    e.add_argument("--config", type=Path, help="JSON optimizer/search settings")
    e.add_argument("--seed", type=int, help="optimizer restart seed")
    e.add_argument("--out", type=Path, help="report JSON (default: stdout)")
    e.add_argument("--overlay", type=Path, help="colored PLY with the axes")
    e.add_argument("--trace", type=Path, help="CSV loss trace of the optimizer")
    e.add_argument("--timings", action="store_true", help="include wall-clock times")

    v = sub.add_parser("eval", help="benchmark methods over a suite directory")
    v.add_argument("--suite", required=True, type=Path)
    v.add_argument("--methods", type=_names(METHODS), default=list(METHODS))
    v.add_argument("--kind", choices=("gt", "auto"), default="gt")
    v.add_argument("--config", type=Path)
    v.add_argument("--csv", type=Path)
    v.add_argument("--json", type=Path)
    v.add_argument("--timings", action="store_true")

    a = sub.add_parser("ablate", help="compare the two methods over a noise grid")
    a.add_argument("--noise-grid", type=_floats, default=[0.0, 0.005, 0.01, 0.02])
    a.add_argument("--seeds", type=_positive, default=20, help="objects per noise level")
    a.add_argument("--dropout", type=float, default=0.5)
    a.add_argument("--outliers", type=float, default=0.05)
    a.add_argument("--templates", type=_names(TEMPLATES), default=list(TEMPLATES))
    a.add_argument("--points", type=_positive, default=2048)
    a.add_argument("--frames", type=_positive, default=10)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--config", type=Path)
    a.add_argument("--out", required=True, type=Path)
    a.add_argument("--timings", action="store_true")
    return p


def load_config(path, seed=None, seed_from_algo=None):
    """Search and optimizer settings from a JSON file.

    The file holds either optimizer keys at top level, or ``"search"``
    and ``"optimizer"`` objects.
    """
    search_cfg, opt = {}, {}
    if path is not None:
        data = io.load_json(path)
        if not isinstance(data, dict):
            raise FormatError(f"{path}: config must be a JSON object")
        if set(data) <= {"search", "optimizer"}:
            search_cfg, opt = dict(data.get("search", {})), dict(data.get("optimizer", {}))
        else:
            opt = dict(data)
    if seed is not None:
        opt["seed"] = seed
    if seed_from_algo:
        opt["seed_from_algo"] = True
    try:
        unknown = set(search_cfg) - set(SearchConfig.__dataclass_fields__)
        if unknown:
            raise ArticError(f"unknown search settings: {sorted(unknown)}")
        return SearchConfig(**search_cfg), OptimizerConfig.from_dict(opt)
    except (TypeError, ArticError) as exc:
        raise UsageError(f"invalid config: {exc}") from None


def cmd_gen(args):
    names = TEMPLATES if "all" in args.template else tuple(args.template)
    try:
        deg = DegradeConfig(args.jitter, args.dropout, args.outliers, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    seeds = range(args.seed, args.seed + args.count)
    suite = make_suite(names, seeds, deg, points_per_part=args.points,
                       frames=args.frames, hinge_offset=args.hinge_offset)
    args.out.mkdir(parents=True, exist_ok=True)
    index = []
    for item in suite:
        meta = {"object_id": item.object_id, "template": item.template.name,
                "diagonal": item.diagonal, "template_params": item.template.params(),
                "degradation": deg.to_dict(), "points_per_part": args.points}
        io.save_sequence(args.out / item.object_id, item.seq, item.gt,
                         item.template.gt_profile, meta, binary=not args.ascii)
        index.append(f"{item.object_id}/manifest.json")
    io.dump_json({"format_version": io.SUITE_VERSION, "objects": index},
                 args.out / "suite.json")
    print(f"wrote {len(index)} objects to {args.out}")
    return EX_OK


def cmd_estimate(args):
    if args.seed_from_algo and args.method == "algo":
        raise UsageError("--seed-from-algo needs --method direct or both")
    if args.trace is not None and args.method == "algo":
        raise UsageError("--trace needs --method direct or both")
    search_cfg, opt = load_config(args.config, args.seed, args.seed_from_algo)
    seq, gt, _, meta = io.load_sequence(args.manifest)
    kinds = (tuple(MotionKind) if args.kind == "auto" else (MotionKind(args.kind),))
    methods = ("algo", "direct") if args.method == "both" else (args.method,)
    results, timings = {}, {}
    for method in methods:
        start = time.perf_counter()
        if method == "algo":
            rep = search(seq, kinds=kinds, config=search_cfg)
            results["algo"] = {"best": rep.best, "ranked": rep.ranked}
        else:
            best, trace = None, None
            for kind in kinds:
                hyp, tr = optimize(seq, kind, opt)
                if best is None or hyp.residual < best.residual:
                    best, trace = hyp, tr
            results["direct"] = {"best": best, "trace": trace}
        timings[method] = time.perf_counter() - start
    config = {"method": args.method, "kind": args.kind,
              "search": search_cfg.to_dict(), "optimizer": opt.to_dict()}
    record = io.report_record(results, config, source=str(args.manifest),
                              timings=timings if args.timings else None)
    if args.out is None:
        import json

        print(json.dumps(record, indent=2))
    else:
        io.ensure_parent(args.out)
        io.dump_json(record, args.out)
    if args.overlay is not None:
        io.ensure_parent(args.overlay)
        pred = results[methods[0]]["best"].axis
        export_overlay(seq, pred, gt, args.overlay)
    if args.trace is not None:
        io.ensure_parent(args.trace)
        export_trace(results["direct"]["trace"], args.trace)
    return EX_OK


def _print_table(rows, means, out=sys.stdout):
    print(f"{'object':<20}{'method':<8}{'MAE deg':>10}{'MPE':>10}{'line':>10}", file=out)
    for r in rows:
        if r.ok:
            print(f"{r.object_id:<20}{r.method:<8}{r.mae_deg:>10.4f}"
                  f"{r.mpe:>10.4f}{r.line_distance:>10.4f}", file=out)
        else:
            print(f"{r.object_id:<20}{r.method:<8}  {r.error}", file=out)
    for m, v in means.items():
        if v["n"]:
            print(f"mean {m}: MAE {v['mae_deg']:.4f} deg, MPE {v['mpe']:.4f} "
                  f"(n={v['n']}, failures={v['failures']})", file=out)
        else:
            print(f"mean {m}: no successful rows (failures={v['failures']})", file=out)


def _write_tables(result, csv_path, json_path, extra=None):
    if csv_path is not None:
        io.ensure_parent(csv_path)
        io.write_rows_csv(csv_path, result.rows, MetricRow.FIELDS)
    if json_path is not None:
        io.ensure_parent(json_path)
        io.dump_json(io.metrics_record(result, extra), json_path)


def cmd_eval(args):
    search_cfg, opt = load_config(args.config)
    manifests = io.find_manifests(args.suite)
    if not manifests:
        raise FileNotFoundError(f"no manifest.json files under {args.suite}")
    items = []
    for path in manifests:
        seq, gt, mags, meta = io.load_sequence(path)
        if gt is None:
            raise FormatError(f"{path}: no ground-truth axis to evaluate against")
        oid = meta.get("object_id", path.parent.name)
        items.append(_LoadedItem(oid, seq, gt, float(meta.get("diagonal", seq.diagonal))))
    cfg = BenchmarkConfig(kind=args.kind, search=search_cfg, optimizer=opt)
    result = run_benchmark(items, args.methods, cfg, timings=args.timings)
    _print_table(result.rows, result.means)
    _write_tables(result, args.csv, args.json)
    return EX_OK


class _LoadedItem:
    def __init__(self, object_id, seq, gt, diagonal):
        self.object_id, self.seq, self.gt, self.diagonal = object_id, seq, gt, diagonal


def cmd_ablate(args):
    search_cfg, opt = load_config(args.config)
    try:
        DegradeConfig(0.0, args.dropout, args.outliers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg = BenchmarkConfig(kind="gt", search=search_cfg, optimizer=opt)
    args.out.mkdir(parents=True, exist_ok=True)
    levels, all_rows = [], []
    for noise in args.noise_grid:
        suite = ablation_suite(noise, args.seeds, args.templates, args.dropout,
                               args.outliers, args.points, args.frames, args.seed)
        result = run_benchmark(suite, METHODS, cfg, timings=args.timings)
        tag = f"jitter_{noise:g}"
        _write_tables(result, args.out / f"{tag}.csv", None)
        for r in result.rows:
            all_rows.append(dict(r.to_dict(), jitter=noise))
        levels.append({"jitter": noise, "means": result.means})
        print(f"jitter {noise:g}:")
        _print_table([], result.means)
    summary = ablation_summary(levels)
    summary.update({
        "format_version": io.SUITE_VERSION,
        "conventions": io.conventions(),
        "config": {"noise_grid": args.noise_grid, "objects_per_level": args.seeds,
                   "dropout": args.dropout, "outliers": args.outliers,
                   "templates": list(args.templates), "points_per_part": args.points,
                   "frames": args.frames, "seed": args.seed, "benchmark": cfg.to_dict()},
    })
    io.dump_json(summary, args.out / "summary.json")
    io.write_rows_csv(args.out / "rows.csv", all_rows, ("jitter",) + MetricRow.FIELDS)
    (args.out / "table.md").write_text(ablation_table(summary), encoding="utf-8")
    print(ablation_table(summary), end="")
    return EX_OK


def ablation_summary(levels):
    """Overall means per method and the Algo <= Direct ordering checks."""
    overall = {}
    for m in METHODS:
        maes = [lv["means"][m]["mae_deg"] for lv in levels if lv["means"][m]["n"]]
        mpes = [lv["means"][m]["mpe"] for lv in levels if lv["means"][m]["n"]]
        overall[m] = {"mae_deg": sum(maes) / len(maes) if maes else None,
                      "mpe": sum(mpes) / len(mpes) if mpes else None}
    a, d = overall["algo"], overall["direct"]
    ok = None not in (a["mae_deg"], d["mae_deg"])
    return {
        "levels": levels,
        "overall": overall,
        "ordering": {
            "mae_algo_lt_direct": ok and a["mae_deg"] < d["mae_deg"],
            "mpe_algo_le_direct": ok and a["mpe"] <= d["mpe"],
        },
    }


def ablation_table(summary):
    lines = ["| jitter | MAE algo | MAE direct | MPE algo | MPE direct |",
             "|---|---|---|---|---|"]

    def fmt(x):
        return "n/a" if x is None else f"{x:.4f}"

    for lv in summary["levels"]:
        a, d = lv["means"]["algo"], lv["means"]["direct"]
        lines.append(f"| {lv['jitter']:g} | {fmt(a['mae_deg'])} | {fmt(d['mae_deg'])} "
                     f"| {fmt(a['mpe'])} | {fmt(d['mpe'])} |")
    o = summary["overall"]
    lines.append(f"| mean | {fmt(o['algo']['mae_deg'])} | {fmt(o['direct']['mae_deg'])} "
                 f"| {fmt(o['algo']['mpe'])} | {fmt(o['direct']['mpe'])} |")
    return "\n".join(lines) + "\n"


COMMANDS = {"gen": cmd_gen, "estimate": cmd_estimate, "eval": cmd_eval, "ablate": cmd_ablate}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    saved = os.environ.get("ARTIC_THREADS")
    if args.threads is not None:
        os.environ["ARTIC_THREADS"] = str(args.threads)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"artic: usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except (OSError, PLYParseError, FormatError) as exc:
        print(f"artic: cannot read input: {exc}", file=sys.stderr)
        return EX_NOINPUT
    except NumericalFailureError as exc:
        print(f"artic: numerical failure: {exc}", file=sys.stderr)
        return EX_NUMERIC
    except ArticError as exc:
        print(f"artic: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EX_FAIL
    finally:
        if saved is None:
            os.environ.pop("ARTIC_THREADS", None)
        else:
            os.environ["ARTIC_THREADS"] = saved


if __name__ == "__main__":
    sys.exit(main())
