"""Command-line entry points over the config-driven pipelines.

Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 consistency-check failure (compare --check).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .dataio import format_records, generate_synthetic_dataset, summarize_records
from .estimators import write_samples_csv
from .harness import (
    ConfigError,
    load_config,
    prepare_pipeline,
    reproduce_figure2,
    run_comparison_pipeline,
    run_consistency_checks,
    write_comparison_outputs,
)
from .partitioning import rldg_partition, write_partition_csv

logger = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clusterexp",
        description="Simulate and compare cluster-randomized experiments under interference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("gen-data", "generate a synthetic bid log plus summary statistics"),
        ("partition", "build the bipartite graph and run the restreamed greedy partitioner"),
        ("simulate", "Monte-Carlo expectations of the estimator under each clustering"),
        ("compare", "full two-clustering comparison incl. the two-stage design"),
        ("figure2", "cut-ratio trajectories per restreaming pass"),
        ("figure3", "estimator distributions behind the comparison plots"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to a JSON config")
        cmd.add_argument("--seed", type=int, default=None, help="override the master seed")
        cmd.add_argument("--replications", type=int, default=None, help="override replication count")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--format", choices=("csv", "json"), default="csv", help="sample/figure output format")
        if name == "compare":
            cmd.add_argument("--check", action="store_true", help="exit 3 if consistency checks fail")
    return parser


def _resolve(args) -> tuple:
    config = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.replications is not None:
        if args.replications < 2:
            raise ConfigError(["--replications must be >= 2"])
        config = dataclasses.replace(config, replications=args.replications)
    out_dir = Path(args.out or config.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    return config, out_dir


def _write_rows(rows: list[dict], path_base: Path, fmt: str, columns: list[str]) -> Path:
    if fmt == "json":
        path = path_base.with_suffix(".json")
        path.write_text(json.dumps(rows, sort_keys=True, indent=2) + "\n")
        return path
    path = path_base.with_suffix(".csv")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    return path


def _cmd_gen_data(config, out_dir: Path, args) -> int:
    if config.dataset.generator is None:
        raise ConfigError(["gen-data requires a dataset.generator block"])
    seed = config.dataset.seed
    if seed is None:
        seed = np.random.SeedSequence(config.seed).spawn(1)[0]
    records = generate_synthetic_dataset(config.dataset.generator, seed)
    (out_dir / "records.txt").write_text(format_records(records))
    summary = summarize_records(records)
    (out_dir / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(f"wrote {len(records)} records to {out_dir / 'records.txt'}")
    return 0


def _cmd_partition(config, out_dir: Path, args) -> int:
    from .harness import _load_records, _metric_graph  # shared assembly helpers

    spec = config.clustering_1
    if spec.method != "rldg":
        raise ConfigError(["partition requires clustering_1.method == 'rldg'"])
    ss_dataset = np.random.SeedSequence(config.seed).spawn(1)[0]
    records = _load_records(config, ss_dataset)
    graph = _metric_graph(records, {}, spec.metric)
    capacity = int(np.ceil(spec.slack * graph.n_left / spec.k))
    state, cut = rldg_partition(
        graph, spec.k, capacities=capacity, n_passes=spec.passes, variant="weighted_bipartite"
    )
    write_partition_csv(state, graph, out_dir / "partition.csv")
    rows = [{"pass": i + 1, "cut_ratio": c} for i, c in enumerate(cut.history)]
    _write_rows(rows, out_dir / "cut_history", args.format, ["pass", "cut_ratio"])
    print(f"final weighted cut ratio {cut.weighted_cut_ratio:.4f} ({len(cut.history)} passes)")
    return 0


def _cmd_simulate(config, out_dir: Path, args) -> int:
    from .designs import cbr_sampler
    from .estimators import monte_carlo_expectation

    data = prepare_pipeline(config)
    _, _, _, _, ss_mc1, ss_mc2, _, _ = np.random.SeedSequence(config.seed).spawn(8)
    scale = data.unit_scale
    summary = {"tte": data.tte * scale, "direction": data.direction}
    rows = []
    for name, clustering, seed in (
        ("clustering_1", data.clusterings[0], ss_mc1),
        ("clustering_2", data.clusterings[1], ss_mc2),
    ):
        result = monte_carlo_expectation(
            cbr_sampler(clustering, clustering.n_clusters // 2),
            data.model,
            config.replications,
            seed,
        )
        summary[name] = {"mean": result.mean * scale, "stderr": result.stderr * scale}
        rows.extend(
            {"replicate": i, "arm": f"direct_{name[-1]}", "tau_hat": tau * scale, "sigma_hat": float("nan")}
            for i, tau in enumerate(result.samples)
        )
    (out_dir / "simulate_summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    _write_rows(rows, out_dir / "simulate_samples", args.format, ["replicate", "arm", "tau_hat", "sigma_hat"])
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


def _cmd_compare(config, out_dir: Path, args) -> int:
    report = run_comparison_pipeline(config)
    paths = write_comparison_outputs(report, out_dir, fmt=args.format)
    print(f"report written to {paths['report']}")
    if getattr(args, "check", False):
        failures = run_consistency_checks(report)
        if failures:
            for failure in failures:
                print(f"CHECK FAILED: {failure}", file=sys.stderr)
            return 3
        print("all consistency checks passed")
    return 0


def _cmd_figure2(config, out_dir: Path, args) -> int:
    rows = reproduce_figure2(config)
    path = _write_rows(rows, out_dir / "figure2", args.format, ["k", "pass", "cut_ratio", "kind"])
    print(f"wrote {path}")
    return 0


def _cmd_figure3(config, out_dir: Path, args) -> int:
    report = run_comparison_pipeline(config)
    scale = report.unit_scale
    meta = {
        "tte": report.tte,
        "direction": report.direction,
        "direct": report.direct,
        "eoe": report.eoe,
    }
    (out_dir / "figure3_meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    scaled = [
        (rep, arm, tau * scale, sigma * scale * scale)
        for rep, arm, tau, sigma in report.samples
    ]
    if args.format == "json":
        rows = [
            {"replicate": rep, "arm": arm, "tau_hat": tau, "sigma_hat": sigma}
            for rep, arm, tau, sigma in scaled
        ]
        (out_dir / "figure3_samples.json").write_text(json.dumps(rows, sort_keys=True, indent=2) + "\n")
    else:
        write_samples_csv(out_dir / "figure3_samples.csv", scaled)
    print(f"wrote figure3 artifacts to {out_dir}")
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "partition": _cmd_partition,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "figure2": _cmd_figure2,
    "figure3": _cmd_figure3,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        config, out_dir = _resolve(args)
        return _COMMANDS[args.command](config, out_dir, args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logger.exception("run failed")
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
