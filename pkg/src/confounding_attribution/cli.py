"""Command-line driver: ``dgp``, ``attribute``, ``benchmark`` and ``metrics`` subcommands."""
import argparse
import json
import logging
import re
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from confounding_attribution.bias_game import GameHandle, build_game
from confounding_attribution.config import (
    SCHEMA_VERSION,
    BenchmarkConfig,
    RunConfig,
    apply_overrides,
    read_json,
)
from confounding_attribution.data import Dataset, write_csv, write_roles
from confounding_attribution.dgp import curth_ablation_spec, generate, spec_from_dict, spec_to_dict
from confounding_attribution.exceptions import (
    ConfoundingAttributionError,
    InconsistentWidth,
    MissingRuns,
)
from confounding_attribution.metrics import (
    attribution_metric_factory,
    feature_drop_pehe,
    rank_stability,
    stability_frame,
)
from confounding_attribution.shapley import Attribution, EstimatorConfig, estimate_shapley_values
from confounding_attribution.shapley.io import (
    attribution_to_dict,
    local_frame,
    read_attribution_csv,
    write_attribution_csv,
)
from confounding_attribution.type import Method
from confounding_attribution.utils import multiproc
from confounding_attribution.utils.multiproc import default_workers, parallelize

logger = logging.getLogger(__name__)

EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3


def _int_list(raw: str) -> List[int]:
    return [int(v) for v in raw.split(",") if v.strip()]


def _str_list(raw: str) -> List[str]:
    return [v.strip() for v in raw.split(",") if v.strip()]


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        "confounding-attribution",
        description="Attribute confounding bias to covariates with Shapley values.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Log warnings only, no progress bars")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # dgp
    dgp = subparsers.add_parser("dgp", help="Generate a synthetic dataset and its role sidecar")
    dgp.add_argument("--config", type=Path, help="JSON file holding a `dgp` block")
    dgp.add_argument("--kind", type=str, help="Generator kind (curth, cancellation, ...)")
    dgp.add_argument("--preset", type=str, help="Named preset, e.g. curth4 or actg")
    dgp.add_argument("--n", type=int, help="Sample size")
    dgp.add_argument("--seed", type=int, help="Generator seed")
    dgp.add_argument("--output-dir", type=str, help="Folder for dataset.csv and roles.csv")

    # attribute
    attribute = subparsers.add_parser("attribute", help="Run the bias game and a Shapley estimator")
    attribute.add_argument("--config", type=Path, help="JSON run configuration")
    attribute.add_argument("--csv", type=str, help="Dataset CSV (replaces the config's source)")
    attribute.add_argument("--treatment-col", type=str, help="Treatment column of --csv")
    attribute.add_argument("--outcome-col", type=str, help="Outcome column of --csv")
    attribute.add_argument("--roles", type=str, help="Optional name,role sidecar for --csv")
    attribute.add_argument("--preset", type=str, help="Curth preset to generate instead of a CSV")
    attribute.add_argument("--impute", choices=["median"], help="Fill missing covariate cells")
    attribute.add_argument("--standardize", action="store_true", default=None, help="Standardize covariates")
    attribute.add_argument("--method", choices=sorted(m.value for m in Method), help="Shapley estimator")
    attribute.add_argument("--budget", type=int, help="Coalition budget, anchors included")
    attribute.add_argument("--seeds", type=_int_list, help="Comma-separated seeds")
    attribute.add_argument("--seed-target", choices=["both", "estimator", "dataset"], help="What the seeds vary")
    attribute.add_argument("--backend", type=str, help="Regression backend")
    attribute.add_argument("--value-mode", choices=["signed", "absolute", "squared"], help="Coalition value mode")
    attribute.add_argument("--cross-fit-folds", type=int, help="Cross-fit nuisance regressions over K folds")
    attribute.add_argument("--local", action="store_true", default=None, help="Also write local attributions (exact only)")
    attribute.add_argument("--output-dir", type=str, help="Folder for run outputs")
    attribute.add_argument("--emit-config", action="store_true", help="Print the resolved config and exit")

    # benchmark
    benchmark = subparsers.add_parser("benchmark", help="Budget x dimension x estimator x seed grid")
    benchmark.add_argument("--config", type=Path, help="JSON benchmark configuration")
    benchmark.add_argument("--dimensions", type=_int_list, help="Comma-separated covariate counts")
    benchmark.add_argument("--budgets", type=_int_list, help="Comma-separated coalition budgets")
    benchmark.add_argument("--methods", type=_str_list, help="Comma-separated estimators")
    benchmark.add_argument("--seeds", type=_int_list, help="Comma-separated seeds")
    benchmark.add_argument("--n", type=int, help="Sample size of every generated dataset")
    benchmark.add_argument("--output-dir", type=str, help="Folder for metrics.csv")
    benchmark.add_argument("--emit-config", action="store_true", help="Print the resolved config and exit")

    # metrics
    metrics = subparsers.add_parser("metrics", help="Stability reports over stored attribution runs")
    metrics.add_argument("inputs", nargs="+", type=Path, help="Attribution CSVs or folders holding them")
    metrics.add_argument("--output-dir", type=Path, default=Path("metrics"), help="Folder for reports")

    return parser.parse_args(argv)


@contextmanager
def tracked_outputs() -> Iterator[List[Path]]:
    """Collect written paths; remove them again if the block fails."""
    written: List[Path] = []
    try:
        yield written
    except BaseException:
        for path in reversed(written):
            if path.is_file():
                path.unlink()
            elif path.is_dir() and not any(path.iterdir()):
                path.rmdir()
        raise


def _make_dir(path: Path, written: List[Path]) -> Path:
    if not path.exists():
        path.mkdir(parents=True)
        written.append(path)
    return path


def _write_json(block: Dict[str, Any], path: Path, written: List[Path]) -> None:
    written.append(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(block, f, indent=2, default=str)


###############
##### dgp #####
###############
def cmd_dgp(args: argparse.Namespace) -> None:
    block = read_json(args.config)
    output_dir = Path(args.output_dir or block.get("output_dir", "data"))
    dgp_block = dict(block.get("dgp", {}))
    apply_overrides(
        dgp_block, [("kind", args.kind), ("preset", args.preset), ("n", args.n), ("seed", args.seed)]
    )
    if args.preset is not None and args.kind is None and "kind" not in dgp_block:
        dgp_block["kind"] = "semisynth" if args.preset.startswith("actg") else "curth"

    ds = generate(spec_from_dict(dgp_block))
    with tracked_outputs() as written:
        _make_dir(output_dir, written)
        written.append(output_dir / "dataset.csv")
        write_csv(ds, output_dir / "dataset.csv")
        written.append(output_dir / "roles.csv")
        write_roles(ds, output_dir / "roles.csv")
        _write_json(
            {"schema_version": SCHEMA_VERSION, "dgp": spec_to_dict(spec_from_dict(dgp_block))},
            output_dir / "dgp.json",
            written,
        )

    n_untreated, n_treated = ds.arm_sizes
    print(f"n={ds.n} p={ds.p} treated={n_treated} untreated={n_untreated}")
    logger.info(f"Wrote dataset to {(output_dir / 'dataset.csv').as_posix()}")


#####################
##### attribute #####
#####################
def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    block = read_json(args.config)
    data = block.setdefault("data", {})
    if args.csv is not None:
        data.pop("dgp", None)
        data["csv"] = args.csv
    if args.preset is not None:
        data.pop("csv", None)
        data["dgp"] = {"kind": "curth", "preset": args.preset}
    apply_overrides(
        block,
        [
            ("data.treatment_col", args.treatment_col),
            ("data.outcome_col", args.outcome_col),
            ("data.roles", args.roles),
            ("data.impute", args.impute),
            ("data.standardize", args.standardize),
            ("estimator.method", args.method),
            ("estimator.budget", args.budget),
            ("backend.kind", args.backend),
            ("seeds", args.seeds),
            ("seed_target", args.seed_target),
            ("value_mode", args.value_mode),
            ("cross_fit_folds", args.cross_fit_folds),
            ("local", args.local),
            ("output_dir", args.output_dir),
        ],
    )
    return RunConfig.from_dict(block)


def run_attribution(
    ds: Dataset, cfg: RunConfig, seed: int, n_workers: Optional[int] = 1
) -> Tuple[Attribution, GameHandle, float]:
    """Build the game on ``ds`` and run the configured estimator; returns wall time in ms."""
    start = time.perf_counter()
    game = build_game(
        ds,
        cfg.backend.build(),
        value_mode=cfg.value_mode,
        cross_fit_folds=cfg.cross_fit_folds,
        seed=seed,
    )
    est_cfg = cfg.estimator.build(cfg.estimator_seed(seed), n_workers=n_workers)
    attribution = estimate_shapley_values(
        game, ds.p, est_cfg, local_fn=game.local if cfg.local else None
    )
    wall_time_ms = (time.perf_counter() - start) * 1000
    if attribution.method_label == "exact-fallback":
        logger.info(f"Budget {est_cfg.budget} >= 2^{ds.p}; enumerated every coalition")
    return attribution, game, wall_time_ms


def _write_run(
    out_dir: Path,
    ds: Dataset,
    cfg: RunConfig,
    seed: int,
    attribution: Attribution,
    game: GameHandle,
    wall_time_ms: float,
    written: List[Path],
) -> None:
    _make_dir(out_dir, written)
    written.append(out_dir / "attributions.csv")
    write_attribution_csv(attribution, ds.names, out_dir / "attributions.csv")
    written.append(out_dir / "coalitions.jsonl")
    game.write_coalition_log(out_dir / "coalitions.jsonl")

    if attribution.local_phi is not None:
        written.append(out_dir / "local_attributions.csv")
        local_frame(attribution, ds.names, ds.x).to_csv(
            out_dir / "local_attributions.csv", index=False, float_format="%.17g"
        )
    if cfg.feature_drop is not None:
        drop = feature_drop_pehe(
            ds,
            attribution.phi,
            cfg.feature_drop.k_values,
            strategies=cfg.feature_drop.strategies,
            backend=cfg.backend.build(),
            test_fraction=cfg.feature_drop.test_fraction,
            seed=seed,
        )
        written.append(out_dir / "feature_drop.csv")
        drop.to_csv(out_dir / "feature_drop.csv", index=False, float_format="%.17g")

    n_untreated, n_treated = ds.arm_sizes
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "seed": seed,
        "dataset": {"n": ds.n, "p": ds.p, "treated": n_treated, "untreated": n_untreated},
        "method": attribution.method_label,
        "eval_count": game.eval_counter,
        "wall_time_ms": wall_time_ms,
        "efficiency_gap": attribution.efficiency_gap,
        "attribution": attribution_to_dict(attribution, ds.names),
    }
    _write_json(manifest, out_dir / "manifest.json", written)


def cmd_attribute(args: argparse.Namespace) -> None:
    cfg = resolve_run_config(args)
    if args.emit_config:
        print(json.dumps(cfg.to_dict(), indent=2))
        return

    output_dir = Path(cfg.output_dir)
    n_workers = default_workers()
    with tracked_outputs() as written:
        _make_dir(output_dir, written)
        for seed in cfg.seeds:
            ds = cfg.data.load(cfg.dataset_seed(seed))
            attribution, game, wall_time_ms = run_attribution(ds, cfg, seed, n_workers)
            out_dir = output_dir / f"seed_{seed:04d}"
            _write_run(out_dir, ds, cfg, seed, attribution, game, wall_time_ms, written)
            logger.info(
                f"seed={seed}: method={attribution.method_label}, eval_count={game.eval_counter}, "
                f"efficiency_gap={attribution.efficiency_gap:.3g} -> {out_dir.as_posix()}"
            )


#####################
##### benchmark #####
#####################
def resolve_benchmark_config(args: argparse.Namespace) -> BenchmarkConfig:
    block = read_json(args.config)
    apply_overrides(
        block,
        [
            ("dimensions", args.dimensions),
            ("budgets", args.budgets),
            ("methods", args.methods),
            ("seeds", args.seeds),
            ("n", args.n),
            ("output_dir", args.output_dir),
        ],
    )
    return BenchmarkConfig.from_dict(block)


def _benchmark_cell(cell: Tuple[int, int], cfg: BenchmarkConfig) -> List[Dict[str, Any]]:
    """All budgets and estimators for one (dimension, seed) dataset."""
    p, seed = cell
    ds = generate(curth_ablation_spec(p, cfg.confounder_share, n=cfg.n, seed=seed))
    game = build_game(ds, cfg.backend.build(), value_mode=cfg.value_mode, seed=seed)
    metrics = {
        name: attribution_metric_factory(name, ds.confounders)
        for name in ("confounder_mass", "confounder_recovery")
    }

    rows = []
    for budget in cfg.budgets:
        for method in cfg.methods:
            est_cfg = EstimatorConfig(method=Method(method), budget=budget, seed=seed)
            attribution = estimate_shapley_values(game, p, est_cfg)
            for name, metric in metrics.items():
                rows.append(
                    {
                        "experiment_id": f"p{p}_B{budget}_{method}",
                        "seed": seed,
                        "metric": name,
                        "value": metric(attribution.phi),
                        "p": p,
                        "budget": budget,
                        "method": method,
                    }
                )
    return rows


def cmd_benchmark(args: argparse.Namespace) -> None:
    cfg = resolve_benchmark_config(args)
    if args.emit_config:
        print(json.dumps(cfg.to_dict(), indent=2))
        return

    start = time.perf_counter()
    cells = [(p, seed) for p in cfg.dimensions for seed in cfg.seeds]
    results = parallelize(
        _benchmark_cell, cells, n_workers=min(default_workers(), len(cells)), desc="Benchmark", cfg=cfg
    )
    frame = pd.DataFrame([row for rows in results for row in rows])

    output_dir = Path(cfg.output_dir)
    with tracked_outputs() as written:
        _make_dir(output_dir, written)
        written.append(output_dir / "metrics.csv")
        frame.to_csv(output_dir / "metrics.csv", index=False, float_format="%.17g")
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "config": cfg.to_dict(),
            "n_rows": len(frame),
            "wall_time_ms": (time.perf_counter() - start) * 1000,
        }
        _write_json(manifest, output_dir / "manifest.json", written)
    logger.info(f"Wrote {len(frame)} metric rows to {(output_dir / 'metrics.csv').as_posix()}")


###################
##### metrics #####
###################
def _natural_key(name: str):
    return [int(part) if part.isdigit() else part for part in re.split(r"(\d+)", name)]


def collect_runs(inputs: Sequence[Path]) -> List[Path]:
    """Attribution CSVs named directly or found (recursively) under folders."""
    files: List[Path] = []
    for path in inputs:
        if path.is_dir():
            files.extend(sorted(path.rglob("attributions.csv")))
        elif path.is_file():
            files.append(path)
        else:
            raise MissingRuns(f"{path.as_posix()} does not exist.")
    if not files:
        raise MissingRuns(f"No attributions.csv found under {[p.as_posix() for p in inputs]}.")
    return files


def _covariate_order(run: Path, phi: pd.Series) -> List[str]:
    manifest = run.parent / "manifest.json"
    if manifest.exists():
        with open(manifest, encoding="utf-8") as f:
            covariates = json.load(f).get("attribution", {}).get("covariates")
        if covariates:
            return list(covariates)
    return sorted(phi.index, key=_natural_key)


def cmd_metrics(args: argparse.Namespace) -> None:
    runs = collect_runs(args.inputs)
    if len(runs) < 2:
        raise MissingRuns(f"Stability reports need at least 2 runs, found {len(runs)}.")

    series = [read_attribution_csv(run) for run in runs]
    widths = {len(s) for s in series}
    if len(widths) != 1:
        raise InconsistentWidth(f"Runs have different numbers of covariates: {sorted(widths)}.")
    names = _covariate_order(runs[0], series[0])
    if any(set(s.index) != set(names) for s in series):
        raise InconsistentWidth("Runs attribute different covariates.")
    phis = [s.reindex(names).to_numpy() for s in series]
    run_ids = [run.parent.as_posix() for run in runs]

    table = rank_stability(phis, names)
    long = stability_frame(phis, names, run_ids)
    summary = (
        long.groupby("covariate", sort=False)
        .agg(mean_phi=("phi", "mean"), sd_phi=("phi", "std"), mean_abs_phi=("abs_phi", "mean"), mean_rank=("rank", "mean"))
        .reset_index()
    )

    output_dir = args.output_dir
    with tracked_outputs() as written:
        _make_dir(output_dir, written)
        written.append(output_dir / "rank_stability.csv")
        table.to_frame().to_csv(output_dir / "rank_stability.csv")
        written.append(output_dir / "stability.csv")
        long.to_csv(output_dir / "stability.csv", index=False, float_format="%.17g")
        written.append(output_dir / "summary.csv")
        summary.to_csv(output_dir / "summary.csv", index=False, float_format="%.17g")
        _write_json(
            {
                "schema_version": SCHEMA_VERSION,
                "runs": run_ids,
                "n_runs": table.n_runs,
                "covariates": names,
                "rank_counts": np.asarray(table.counts).tolist(),
            },
            output_dir / "report.json",
            written,
        )
    logger.info(f"Aggregated {len(runs)} runs into {output_dir.as_posix()}")


COMMANDS = {
    "dgp": cmd_dgp,
    "attribute": cmd_attribute,
    "benchmark": cmd_benchmark,
    "metrics": cmd_metrics,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level)
    multiproc.SHOW_PROGRESS = not args.quiet

    try:
        COMMANDS[args.command](args)
    except ConfoundingAttributionError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_CONFIG_ERROR
    except OSError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_IO_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
