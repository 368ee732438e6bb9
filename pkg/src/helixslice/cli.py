"""Command-line surface.

Subcommands mirror the two branches of the pipeline: ``generate`` synthesizes
scans, ``cluster`` runs either the conventional 3D route or the turn-split 2D
route, ``sequence-label`` is the no-clustering shortcut for sequence-depending
scans, ``evaluate`` scores verticality, ``threshold`` sweeps k for the
threshold number, and ``export-plot`` dumps x,y,z,label rows for external
plotting.

Exit codes: 0 success, 1 usage error, 2 data/contract error; diagnostics go
to stderr.  All angles are radians unless --degrees is given, which converts
t/phi columns on ingest.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace

from . import cloudio, pipeline, verticality
from .clustering import KMedoidsConfig
from .cloudio import SCHEMA_VERSION, FileFormatError
from .geometry import HelixParams, PointCloud, scan_flexible, scan_sequential
from .pipeline import LabeledCloud, MethodInfo
from .verticality import Scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_geometry_flags(p: argparse.ArgumentParser):
    d = HelixParams()
    p.add_argument("--a", type=float, default=d.footprint_a, help="footprint semi-axis X (mm)")
    p.add_argument("--b", type=float, default=d.footprint_b, help="footprint semi-axis Y (mm)")
    p.add_argument("--pitch", type=float, default=d.pitch, help="Z rise per turn (mm)")
    p.add_argument("--turns", type=float, default=d.turns, help="number of turns")
    p.add_argument("--tube-a", type=float, default=d.tube_a, help="tube semi-axis, horizontal (mm)")
    p.add_argument("--tube-b", type=float, default=d.tube_b, help="tube semi-axis, binormal (mm)")


def _params(args) -> HelixParams:
    return HelixParams(args.a, args.b, args.pitch, args.turns, args.tube_a, args.tube_b)


def build_parser() -> _Parser:
    top = _Parser(prog="helixslice",
                  description="Vertical clustering of elliptical helical point clouds")
    sub = top.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a scan",
                       description="Synthesize a labeled helical scan to CSV.")
    _add_geometry_flags(g)
    g.add_argument("--mode", choices=["sequential", "flexible"], required=True)
    g.add_argument("--sections", type=int, default=72, help="cross-sections per turn (sequential)")
    g.add_argument("--per-section", type=int, default=50, help="points per cross-section (sequential)")
    g.add_argument("--points", type=int, default=3600, help="total points (flexible)")
    g.add_argument("--noise", type=float, default=0.05, help="isotropic noise sigma (mm)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    c = sub.add_parser("cluster", help="cluster a cloud (3D baseline or turn-split 2D)")
    _add_geometry_flags(c)
    c.add_argument("--algo", choices=["kmedoids", "som"], required=True)
    c.add_argument("--features", choices=["xy", "xyz"], default="xy")
    c.add_argument("--k", type=int, required=True, help="clusters per turn")
    c.add_argument("--split", choices=["model", "zslab", "truth", "none"], default="model")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--alpha", type=float, default=verticality.DEFAULT_ALPHA)
    c.add_argument("--topology", choices=["auto", "ring", "grid"], default="auto")
    c.add_argument("--restarts", type=int, default=5, help="k-medoids restarts")
    c.add_argument("--epochs", type=int, default=50, help="SOM training epochs")
    c.add_argument("--degrees", action="store_true", help="t/phi columns of --in are degrees")
    c.add_argument("--in", dest="infile", required=True)
    c.add_argument("--out", help="labeled cloud CSV")
    c.add_argument("--report", help="YAML run report")

    s = sub.add_parser("sequence-label", help="label a sequential scan by index")
    s.add_argument("--per-section", type=int, required=True)
    s.add_argument("--degrees", action="store_true")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--out", required=True)

    e = sub.add_parser("evaluate", help="verticality report for a labeled cloud")
    e.add_argument("--alpha", type=float, default=verticality.DEFAULT_ALPHA)
    e.add_argument("--k-per-turn", type=int, default=None,
                   help="clusters per turn used to produce the labels (default: max label + 1)")
    e.add_argument("--degrees", action="store_true")
    e.add_argument("--in", dest="infile", required=True)
    e.add_argument("--report", required=True)

    t = sub.add_parser("threshold", help="search the threshold cluster number")
    _add_geometry_flags(t)
    t.add_argument("--algo", choices=["kmedoids", "som"], required=True)
    t.add_argument("--features", choices=["xy", "xyz"], required=True)
    t.add_argument("--split", choices=["model", "zslab", "truth", "none"], default=None,
                   help="default: model for xy, none for xyz")
    t.add_argument("--mode", choices=["sequential", "flexible"], default="flexible")
    t.add_argument("--points", type=int, default=3600)
    t.add_argument("--sections", type=int, default=72)
    t.add_argument("--per-section", type=int, default=50)
    t.add_argument("--noise", type=float, default=0.05)
    t.add_argument("--topology", choices=["auto", "ring", "grid"], default="auto")
    t.add_argument("--restarts", type=int, default=2, help="k-medoids restarts per fit")
    t.add_argument("--k-min", type=int, required=True)
    t.add_argument("--k-max", type=int, required=True)
    t.add_argument("--step", type=int, default=1)
    t.add_argument("--trials", type=int, default=5)
    t.add_argument("--rho", type=float, default=0.6)
    t.add_argument("--alpha", type=float, default=verticality.DEFAULT_ALPHA)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--workers", type=int, default=1,
                   help="processes for parallel trials (results identical)")
    t.add_argument("--report", required=True)

    x = sub.add_parser("export-plot", help="dump x,y,z,label CSV for plotting")
    x.add_argument("--degrees", action="store_true")
    x.add_argument("--in", dest="infile", required=True)
    x.add_argument("--out", required=True)
    return top


# ---------------------------------------------------------------------------
# Handlers
# ---------------------------------------------------------------------------

def _verticality_dict(rep) -> dict:
    return {
        "k": rep.k,
        "nonempty": rep.nonempty,
        "max_span": rep.max_span,
        "alpha": rep.alpha,
        "vertical": rep.vertical,
        "purity": rep.purity,
        "per_cluster_span": list(rep.per_cluster_span),
    }


def _cmd_generate(args, parser) -> int:
    p = _params(args)
    if args.mode == "sequential":
        if args.sections < 1 or args.per_section < 1:
            parser.error("--sections and --per-section must be >= 1")
        cloud = scan_sequential(p, args.sections, args.per_section, args.noise, args.seed)
    else:
        if args.points < 1:
            parser.error("--points must be >= 1")
        cloud = scan_flexible(p, args.points, args.noise, args.seed)
    cloudio.write_cloud(cloud, args.out)
    print(f"wrote {len(cloud)} points to {args.out}", file=sys.stderr)
    return EXIT_OK


def _cluster_scenario(args) -> dict:
    return {
        "input": args.infile,
        "algo": args.algo,
        "features": args.features,
        "k": args.k,
        "split": args.split,
        "seed": args.seed,
        "alpha": args.alpha,
        "topology": args.topology,
        "restarts": args.restarts,
        "epochs": args.epochs,
        "degrees": bool(args.degrees),
        "helix": {"a": args.a, "b": args.b, "pitch": args.pitch, "turns": args.turns,
                  "tube_a": args.tube_a, "tube_b": args.tube_b},
    }


def _run_cluster(scn: dict) -> tuple[LabeledCloud, dict]:
    """Shared by the cluster handler and report replay."""
    t0 = time.perf_counter()
    cloud, _ = cloudio.read_cloud(scn["input"], degrees=scn["degrees"])
    p = HelixParams(scn["helix"]["a"], scn["helix"]["b"], scn["helix"]["pitch"],
                    scn["helix"]["turns"], scn["helix"]["tube_a"], scn["helix"]["tube_b"])
    k = scn["k"]
    km_cfg = KMedoidsConfig(k=k, restarts=scn["restarts"])
    topology = scn["topology"]
    if topology == "auto":
        topology = "ring" if scn["features"] == "xy" else "grid"
    som_cfg = replace(pipeline.som_config_for(k, topology), epochs=scn["epochs"])
    if scn["features"] == "xyz" and scn["split"] == "none":
        lc = pipeline.baseline_cluster3d(cloud, scn["algo"], k, seed=scn["seed"],
                                         kmedoids_cfg=km_cfg, som_cfg=som_cfg)
    else:
        lc = pipeline.vertical_cluster(cloud, p, scn["algo"], k,
                                       split_method=scn["split"], seed=scn["seed"],
                                       kmedoids_cfg=km_cfg, som_cfg=som_cfg,
                                       features=scn["features"])
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "cluster",
        "scenario": dict(scn),
        "clustering": {
            "k_per_turn": lc.k_per_turn,
            "n_points": len(cloud),
            "turn_groups": len(lc.results),
            "cost": sum(r.cost for r in lc.results),
            "empty_clusters": sum(r.empty_clusters for r in lc.results),
            "sizes": [int(s) for r in lc.results for s in r.sizes],
        },
        "verticality": (_verticality_dict(verticality.verticality_report(lc, scn["alpha"]))
                        if cloud.has_truth else None),
        "timing_seconds": time.perf_counter() - t0,
    }
    return lc, report


def _cmd_cluster(args, parser) -> int:
    if args.k < 1:
        parser.error("--k must be >= 1")
    if args.restarts < 1:
        parser.error("--restarts must be >= 1")
    if args.epochs < 0:
        parser.error("--epochs must be >= 0")
    if args.alpha < 1:
        parser.error("--alpha must be >= 1")
    lc, report = _run_cluster(_cluster_scenario(args))
    if args.out:
        cloudio.write_cloud(lc, args.out)
    if args.report:
        cloudio.write_report(report, args.report)
    v = report["verticality"]
    verdict = "n/a (no truth)" if v is None else f"vertical={v['vertical']} max_span={v['max_span']:.4f}"
    print(f"clustered {report['clustering']['n_points']} points into "
          f"{lc.k_per_turn} clusters/turn x {report['clustering']['turn_groups']} turns; {verdict}",
          file=sys.stderr)
    return EXIT_OK


def _cmd_sequence_label(args, parser) -> int:
    if args.per_section < 1:
        parser.error("--per-section must be >= 1")
    cloud, _ = cloudio.read_cloud(args.infile, degrees=args.degrees)
    lc = pipeline.sequence_label(cloud, args.per_section)
    cloudio.write_cloud(lc, args.out)
    print(f"labeled {len(cloud)} points into {lc.k_per_turn} sections", file=sys.stderr)
    return EXIT_OK


def _evaluate_scenario(args) -> dict:
    return {"input": args.infile, "alpha": args.alpha,
            "k_per_turn": args.k_per_turn, "degrees": bool(args.degrees)}


def _run_evaluate(scn: dict) -> dict:
    t0 = time.perf_counter()
    cloud, labels = cloudio.read_cloud(scn["input"], degrees=scn["degrees"])
    if labels is None:
        raise ValueError("evaluate needs a labeled cloud (no label column found)")
    k = scn["k_per_turn"] if scn["k_per_turn"] else int(labels.max()) + 1
    lc = LabeledCloud(cloud, labels, k, MethodInfo("external", "xyz", "none"))
    rep = verticality.verticality_report(lc, scn["alpha"])
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "evaluate",
        "scenario": dict(scn),
        "verticality": _verticality_dict(rep),
        "timing_seconds": time.perf_counter() - t0,
    }


def _cmd_evaluate(args, parser) -> int:
    if args.alpha < 1:
        parser.error("--alpha must be >= 1")
    if args.k_per_turn is not None and args.k_per_turn < 1:
        parser.error("--k-per-turn must be >= 1")
    report = _run_evaluate(_evaluate_scenario(args))
    cloudio.write_report(report, args.report)
    v = report["verticality"]
    print(f"k={v['k']} nonempty={v['nonempty']} max_span={v['max_span']:.4f} "
          f"vertical={v['vertical']} purity={v['purity']:.3f}", file=sys.stderr)
    return EXIT_OK


def _threshold_scenario(args) -> dict:
    split = args.split
    if split is None:
        split = "model" if args.features == "xy" else "none"
    return {
        "algo": args.algo, "features": args.features, "split": split,
        "mode": args.mode, "points": args.points,
        "sections": args.sections, "per_section": args.per_section,
        "noise": args.noise, "topology": args.topology, "restarts": args.restarts,
        "k_min": args.k_min, "k_max": args.k_max, "step": args.step,
        "trials": args.trials, "rho": args.rho, "alpha": args.alpha, "seed": args.seed,
        "workers": args.workers,
        "helix": {"a": args.a, "b": args.b, "pitch": args.pitch, "turns": args.turns,
                  "tube_a": args.tube_a, "tube_b": args.tube_b},
    }


def _run_threshold(scn: dict) -> dict:
    t0 = time.perf_counter()
    p = HelixParams(scn["helix"]["a"], scn["helix"]["b"], scn["helix"]["pitch"],
                    scn["helix"]["turns"], scn["helix"]["tube_a"], scn["helix"]["tube_b"])
    scenario = Scenario(
        params=p, scan_mode=scn["mode"], n_points=scn["points"],
        sections_per_turn=scn["sections"], points_per_section=scn["per_section"],
        noise_sigma=scn["noise"], algo=scn["algo"], features=scn["features"],
        split=scn["split"], som_topology=scn["topology"], seed=scn["seed"],
        kmedoids_restarts=scn["restarts"],
    )
    grid = list(range(scn["k_min"], scn["k_max"] + 1, scn["step"]))
    res = verticality.threshold_search(scenario, grid, trials=scn["trials"],
                                       rho=scn["rho"], alpha=scn["alpha"],
                                       workers=int(scn.get("workers", 1)))
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "threshold",
        "scenario": dict(scn),
        "result": {
            "grid": res.grid,
            "verdicts": res.verdicts,
            "error_counts": res.error_counts,
            "mean_max_span": res.mean_max_span,
            "threshold": res.threshold,
            "first_fail": res.first_fail,
        },
        "timing_seconds": time.perf_counter() - t0,
    }


def _cmd_threshold(args, parser) -> int:
    if args.k_min < 1 or args.k_max < args.k_min or args.step < 1:
        parser.error("need 1 <= k-min <= k-max and step >= 1")
    if args.trials < 1:
        parser.error("--trials must be >= 1")
    if not (0 < args.rho <= 1):
        parser.error("--rho must be in (0, 1]")
    if args.alpha < 1:
        parser.error("--alpha must be >= 1")
    if args.restarts < 1:
        parser.error("--restarts must be >= 1")
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    report = _run_threshold(_threshold_scenario(args))
    cloudio.write_report(report, args.report)
    r = report["result"]
    print(f"threshold={r['threshold']} first_fail={r['first_fail']} "
          f"verdicts={dict(zip(r['grid'], r['verdicts']))}", file=sys.stderr)
    return EXIT_OK


def _cmd_export_plot(args, parser) -> int:
    cloud, labels = cloudio.read_cloud(args.infile, degrees=args.degrees)
    if labels is None:
        raise ValueError("export-plot needs a labeled cloud (no label column found)")
    bare = PointCloud(cloud.xyz, provenance=cloud.provenance)
    lc = LabeledCloud(bare, labels, int(labels.max()) + 1, MethodInfo("external", "xyz", "none"))
    cloudio.write_cloud(lc, args.out)
    print(f"wrote {len(bare)} x,y,z,label rows to {args.out}", file=sys.stderr)
    return EXIT_OK


def replay_report(path) -> dict:
    """Re-execute the scenario a report embeds; returns the regenerated
    report (all non-timing fields must reproduce)."""
    rep = cloudio.read_report(path)
    kind = rep.get("kind")
    if kind == "cluster":
        return _run_cluster(rep["scenario"])[1]
    if kind == "evaluate":
        return _run_evaluate(rep["scenario"])
    if kind == "threshold":
        return _run_threshold(rep["scenario"])
    raise ValueError(f"cannot replay report of kind {kind!r}")


_HANDLERS = {
    "generate": _cmd_generate,
    "cluster": _cmd_cluster,
    "sequence-label": _cmd_sequence_label,
    "evaluate": _cmd_evaluate,
    "threshold": _cmd_threshold,
    "export-plot": _cmd_export_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _HANDLERS[args.command](args, parser)
    except SystemExit as e:       # parser.error inside a handler
        return int(e.code or 0)
    except (FileFormatError, ValueError, OSError) as e:
        print(f"helixslice {args.command}: error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
