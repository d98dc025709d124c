"""Command-line experiment runner.

Subcommands:
  gen       write a seeded synthetic multi-season benchmark (schema + CSVs)
  run       run configured methods over the target stream and compare them
  seasons   evaluate each source season's model on the target season
  features  rank feature categories of one season's model by log10 LR

Report commands render PNG figures next to their CSV outputs unless
``--no-plots`` is given.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .data_model import load_schema, load_season_csv, write_schema, write_season_csv
from .ensemble import write_weight_trajectory
from .evaluation import write_metrics_csv, write_metrics_json, write_records_csv
from .experiment import (
    load_config,
    load_experiment_data,
    run_methods,
    season_reports,
)
from .naive_bayes import fit_batch
from .synth import DriftSpec, generate


def _print_verbose(args: argparse.Namespace, message: str) -> None:
    if getattr(args, "verbose", False):
        print(message)


def cmd_gen(args: argparse.Namespace) -> int:
    spec = DriftSpec(
        n_features=args.features,
        alphabet_size=args.alphabet_size,
        n_sources=args.sources,
        instances_per_season=args.per_season,
        prevalence=args.prevalence,
        drift_rate=args.drift,
        class_separation=args.class_separation,
        seed=args.seed,
        outlier_season=args.outlier_season,
        start_year=args.start_year,
    )
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    schema, seasons = generate(spec)

    written = []
    schema_path = out / "schema.json"
    write_schema(schema, schema_path)
    written.append(schema_path)
    for season in seasons:
        path = out / f"{season.season_id}.csv"
        write_season_csv(season, path)
        written.append(path)

    manifest = {
        "seed": spec.seed,
        "n_sources": spec.n_sources,
        "instances_per_season": spec.instances_per_season,
        "prevalence": spec.prevalence,
        "drift_rate": spec.drift_rate,
        "outlier_season": spec.outlier_season,
        "target_season": seasons[-1].season_id,
        "files": [p.name for p in written],
    }
    manifest_path = out / "gen_manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    written.append(manifest_path)
    for p in written:
        print(f"wrote {p}")
    return 0


def _write_figures(args: argparse.Namespace) -> bool:
    return not getattr(args, "no_plots", False)


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.output_dir is not None:
        config = dataclasses.replace(config, output_dir=Path(args.output_dir))
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    schema, sources, target = load_experiment_data(config)
    _print_verbose(
        args,
        f"loaded {len(sources)} source seasons + target {target.season_id} "
        f"({len(target)} instances, {target.n_pos} positives)",
    )
    reports, runs = run_methods(schema, sources, target, config)

    written = []
    metrics_json = out / "metrics.json"
    write_metrics_json(reports, metrics_json)
    written.append(metrics_json)
    metrics_csv = out / "metrics.csv"
    write_metrics_csv(reports, metrics_csv)
    written.append(metrics_csv)
    for kind in config.methods:
        records_path = out / f"records_{kind}.csv"
        write_records_csv(runs[kind].records, records_path)
        written.append(records_path)
    if "msaw" in runs and runs["msaw"].trajectory:
        weights_path = out / "weights_msaw.csv"
        write_weight_trajectory(runs["msaw"].trajectory, weights_path)
        written.append(weights_path)

    if _write_figures(args):
        from . import plots

        metrics_png = out / "metrics.png"
        plots.plot_method_aurocs(reports, metrics_png)
        written.append(metrics_png)
        if "msaw" in runs and runs["msaw"].trajectory:
            weights_png = out / "weights_msaw.png"
            plots.plot_weight_trajectory(runs["msaw"].trajectory, weights_png)
            written.append(weights_png)

    manifest = {
        "seed": config.seed,
        "target_season": target.season_id,
        "methods": list(config.methods),
        "msaw": {
            "alpha": config.msaw.alpha,
            "beta": config.msaw.beta,
            "decision_threshold": config.msaw.decision_threshold,
        },
        "smoothing": config.smoothing,
        "outputs": [p.name for p in written],
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    header = f"{'method':<22} {'AUROC':>8} {'n_pos':>7} {'n_neg':>8} {'z_vs_msaw':>10} {'p_vs_msaw':>10}"
    print(header)
    print("-" * len(header))
    for r in reports:
        z, p = r.delong_vs.get("msaw", (None, None))
        z_txt = f"{z:>10.3f}" if z is not None else f"{'-':>10}"
        p_txt = f"{p:>10.4f}" if p is not None else f"{'-':>10}"
        print(
            f"{r.method_name:<22} {r.auroc:>8.4f} {r.n_pos:>7} {r.n_neg:>8} {z_txt} {p_txt}"
        )
    print(f"\nwrote {len(written) + 1} files under {out}")
    return 0


def cmd_seasons(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = Path(args.output_dir) if args.output_dir is not None else Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    schema, sources, target = load_experiment_data(config)
    reports = season_reports(schema, sources, target, config.smoothing)

    seasons_csv = out / "seasons.csv"
    with seasons_csv.open("w", encoding="utf-8", newline="") as fh:
        fh.write("season,auroc,n_pos,n_neg\n")
        for r in reports:
            fh.write(f"{r.method_name},{r.auroc!r},{r.n_pos},{r.n_neg}\n")

    if _write_figures(args):
        from . import plots

        plots.plot_season_aurocs(
            [r.method_name for r in reports],
            [r.auroc for r in reports],
            out / "seasons.png",
        )

    print(f"{'season':<12} {'AUROC':>8}")
    for r in reports:
        print(f"{r.method_name:<12} {r.auroc:>8.4f}")
    print(f"\nwrote {seasons_csv}")
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    if args.top_k < 1:
        raise ValueError(f"--top-k must be >= 1, got {args.top_k}")
    config = load_config(args.config)
    out = Path(args.output_dir) if args.output_dir is not None else Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    schema = load_schema(config.schema_path)
    season_path = Path(config.data_dir) / f"{args.season}.csv"
    if not season_path.exists():
        raise ValueError(f"unknown season {args.season!r}: {season_path} is missing")
    season = load_season_csv(season_path, schema, args.season)
    model = fit_batch(schema, season, config.smoothing)
    stats = model.feature_report(
        category_filter=args.category, min_p_pos=args.min_p_pos
    )[: args.top_k]

    features_csv = out / f"features_{args.season}.csv"
    with features_csv.open("w", encoding="utf-8", newline="") as fh:
        fh.write("feature,category,p_given_pos,p_given_neg,log10_lr\n")
        for s in stats:
            fh.write(
                f"{s.feature},{s.category},{s.p_given_pos!r},{s.p_given_neg!r},{s.log10_lr!r}\n"
            )

    if _write_figures(args):
        from . import plots

        plots.plot_feature_stats(stats, out / f"features_{args.season}.png")

    print(f"{'feature':<12} {'cat':<6} {'P(v|pos)':>10} {'P(v|neg)':>10} {'log10 LR':>9}")
    for s in stats:
        print(
            f"{s.feature:<12} {s.category:<6} {s.p_given_pos:>10.4f} "
            f"{s.p_given_neg:>10.4f} {s.log10_lr:>9.3f}"
        )
    print(f"\nwrote {features_csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msaw",
        description="Online multi-source transfer learning over seasonal streams.",
    )
    parser.add_argument("--verbose", action="store_true", help="chatty progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic seasonal benchmark")
    gen.add_argument("--sources", type=int, default=8, help="number of source seasons")
    gen.add_argument("--per-season", type=int, default=20_000, help="instances per season")
    gen.add_argument("--features", type=int, default=30)
    gen.add_argument("--alphabet-size", type=int, default=3)
    gen.add_argument("--prevalence", type=float, default=0.002)
    gen.add_argument("--drift", type=float, default=0.03, help="per-season TV drift step")
    gen.add_argument(
        "--class-separation",
        type=float,
        default=0.20,
        help="per-feature TV distance between class conditionals",
    )
    gen.add_argument("--seed", type=int, default=7)
    gen.add_argument(
        "--outlier-season",
        type=int,
        default=None,
        help="0-based source index sampled from the target's distributions",
    )
    gen.add_argument("--start-year", type=int, default=2011)
    gen.add_argument("-o", "--output-dir", default="data", help="output directory")
    gen.set_defaults(handler=cmd_gen)

    run = sub.add_parser("run", help="run and compare methods on the target stream")
    run.add_argument("--config", required=True, help="experiment config JSON")
    run.add_argument("-o", "--output-dir", default=None, help="override config output_dir")
    run.add_argument(
        "--seed", type=int, default=None, help="override the seed recorded in the manifest"
    )
    run.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    run.set_defaults(handler=cmd_run)

    seasons = sub.add_parser("seasons", help="per-season static evaluation on the target")
    seasons.add_argument("--config", required=True)
    seasons.add_argument("-o", "--output-dir", default=None)
    seasons.add_argument("--no-plots", action="store_true")
    seasons.set_defaults(handler=cmd_seasons)

    features = sub.add_parser("features", help="rank one season's feature categories")
    features.add_argument("--config", required=True)
    features.add_argument("--season", required=True, help="season id to train on")
    features.add_argument("--top-k", type=int, default=13)
    features.add_argument(
        "--category", default=None, help="restrict to one category code (e.g. P)"
    )
    features.add_argument(
        "--min-p-pos",
        type=float,
        default=0.01,
        help="minimum smoothed P(value|positive) for a row to be reported",
    )
    features.add_argument("-o", "--output-dir", default=None)
    features.add_argument("--no-plots", action="store_true")
    features.set_defaults(handler=cmd_features)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
