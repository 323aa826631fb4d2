"""Command-line surface: analyze / train / explore / report / generate.

Exit statuses: 0 success, 1 validation error, 2 runtime error. Every
command drops a run_manifest.json with the parameters needed to
reproduce it; all other output files are byte-stable for a fixed seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import EvalPoint, cost_model_for, evaluate_system, pareto_front
from .head import TrainConfig, head_cost_mflops, init_head, save_head, train_head
from .losses import PENALTY_MAX, LossConfig, WeightingScheme, WeightingSpec
from .nsga2 import MoeaConfig, Nsga2Result, run_nsga2
from .oracle import analysis_report, oracle_relabel
from .scenario import (
    Scenario,
    ScenarioError,
    SyntheticSpec,
    generate_synthetic,
    load_scenario,
    split_scenario,
    validate_scenario,
    write_scenario,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _write_run_manifest(out_dir: Path, command: str, params: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "parameters": params,
        "toolkit_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    (out_dir / "run_manifest.json").write_text(json.dumps(manifest, indent=2))


def _load(scenario_path: str) -> Scenario:
    scenario = load_scenario(scenario_path)
    if not scenario.splits:
        scenario = split_scenario(scenario)
    return scenario


def _write_points_csv(path: Path, points: list[EvalPoint]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tag", "accuracy", "mflops_per_image"])
        for p in points:
            writer.writerow([p.tag, repr(p.accuracy), repr(p.mflops_per_image)])


def _read_points_csv(path: Path) -> list[EvalPoint]:
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            EvalPoint(
                accuracy=float(row["accuracy"]),
                mflops_per_image=float(row["mflops_per_image"]),
                tag=row["tag"],
            )
            for row in reader
        ]


def cmd_analyze(args) -> int:
    scenario = _load(args.scenario)
    report = analysis_report(scenario.correctness, scenario.costs)
    report["scenario"] = scenario.name
    report["model_names"] = [m.name for m in scenario.models]
    out_dir = Path(args.out_dir)
    _write_run_manifest(out_dir, "analyze", {"scenario": args.scenario})
    out_path = out_dir / "analysis.json"
    out_path.write_text(json.dumps(report, indent=2))
    print(out_path)
    return EXIT_OK


def _parse_penalties(text: str, k: int) -> np.ndarray:
    values = [float(v) for v in text.split(",")]
    p = np.zeros((k, k))
    if len(values) == k * (k - 1):
        it = iter(values)
        for i in range(k):
            for j in range(k):
                if i != j:
                    p[i, j] = next(it)
    elif len(values) == k * k:
        p = np.array(values).reshape(k, k)
        if np.any(np.diag(p) != 0):
            raise ScenarioError("penalty diagonal must be 0")
    else:
        raise ScenarioError(
            f"need {k * (k - 1)} off-diagonal or {k * k} full penalties, got {len(values)}"
        )
    if np.any(p < 0) or np.any(p > PENALTY_MAX):
        raise ScenarioError(f"penalty out of range [0,{PENALTY_MAX:g}]")
    return p


def cmd_train(args) -> int:
    scenario = _load(args.scenario)
    k = scenario.num_models
    penalties = _parse_penalties(args.penalties, k)
    weighting = WeightingSpec(scheme=WeightingScheme[args.scheme.upper()], beta=args.ens_beta)

    train_idx = scenario.split_indices("train")
    labels = oracle_relabel(scenario.correctness[train_idx])
    counts = np.maximum(np.bincount(labels, minlength=k), 1)
    cfg_loss = LossConfig.from_counts(penalties, counts, weighting)
    cfg_train = TrainConfig(seed=args.seed)

    head0 = init_head(scenario.feature_dim, k, args.seed)
    head, history = train_head(head0, scenario.features[train_idx], labels, cfg_loss, cfg_train)
    cost = cost_model_for(scenario, head_cost_mflops(scenario.feature_dim, k))
    point = evaluate_system(head, scenario, args.fitness_split, cost, tag="trained")

    out_dir = Path(args.out_dir)
    _write_run_manifest(
        out_dir,
        "train",
        {
            "scenario": args.scenario,
            "penalties": args.penalties,
            "scheme": args.scheme,
            "seed": args.seed,
            "fitness_split": args.fitness_split,
            "ens_beta": args.ens_beta,
        },
    )
    save_head(head, out_dir / "head.json")
    metrics = {
        "accuracy": point.accuracy,
        "mflops_per_image": point.mflops_per_image,
        "train_loss": list(history.loss),
        "train_accuracy": list(history.train_accuracy),
    }
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2))
    print(f"accuracy={point.accuracy:.4f} mflops={point.mflops_per_image:.4f}")
    return EXIT_OK


def _baseline_points(scenario: Scenario) -> list[EvalPoint]:
    acc = scenario.correctness.mean(axis=0)
    return [
        EvalPoint(accuracy=float(acc[i]), mflops_per_image=m.cost_mflops, tag=m.name)
        for i, m in enumerate(scenario.models)
    ]


def _write_gnuplot(path: Path, series: dict[str, list[EvalPoint]]) -> None:
    with path.open("w") as fh:
        for name, points in series.items():
            fh.write(f'# series "{name}": mflops_per_image accuracy tag\n')
            for p in sorted(points, key=lambda q: q.mflops_per_image):
                fh.write(f"{p.mflops_per_image!r} {p.accuracy!r} {p.tag}\n")
            fh.write("\n\n")


def cmd_explore(args) -> int:
    scenario = _load(args.scenario)
    k = scenario.num_models
    moea = MoeaConfig(
        population=args.pop,
        generations=args.gens,
        penalty_step=args.penalty_step,
        ens_beta=args.ens_beta,
        seed=args.seed,
    )
    train_cfg = TrainConfig(seed=args.seed, epochs=args.train_epochs)
    result = run_nsga2(
        scenario, moea, train_cfg, fitness_split=args.fitness_split, workers=args.workers
    )

    out_dir = Path(args.out_dir)
    _write_run_manifest(
        out_dir,
        "explore",
        {
            "scenario": args.scenario,
            "seed": args.seed,
            "pop": args.pop,
            "gens": args.gens,
            "fitness_split": args.fitness_split,
            "penalty_step": args.penalty_step,
            "ens_beta": args.ens_beta,
            "train_epochs": args.train_epochs,
            "workers": args.workers,
        },
    )
    _write_archive(out_dir, result, k)
    explored = [
        EvalPoint(accuracy=r["accuracy"], mflops_per_image=r["mflops"], tag="")
        for r in result.transcript
    ]
    _write_gnuplot(
        out_dir / "front_plot.dat",
        {
            "sota_baselines": _baseline_points(scenario),
            "explored": explored,
            "archive_front": [e.point for e in result.archive],
        },
    )
    with (out_dir / "hypervolume.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "hypervolume"])
        for generation, hv in enumerate(result.hypervolume_log):
            writer.writerow([generation, repr(hv)])
    print(out_dir / "archive.csv")
    return EXIT_OK


def _write_archive(out_dir: Path, result: Nsga2Result, k: int) -> None:
    _write_points_csv(out_dir / "archive.csv", [e.point for e in result.archive])
    decoded = [
        {
            "tag": e.point.tag,
            "accuracy": e.point.accuracy,
            "mflops_per_image": e.point.mflops_per_image,
            "penalties_row_major": e.penalties.ravel().tolist(),
            "weighting_scheme": e.scheme.name,
        }
        for e in result.archive
    ]
    (out_dir / "archive_config.json").write_text(json.dumps(decoded, indent=2))
    with (out_dir / "transcript.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        gene_cols = [f"gene{j}" for j in range(k * k + 1)]
        writer.writerow(
            ["generation", "individual", *gene_cols, "accuracy", "mflops", "rank", "crowding"]
        )
        for row in result.transcript:
            writer.writerow(
                [
                    row["generation"],
                    row["individual"],
                    *[repr(g) for g in row["genome"]],
                    repr(row["accuracy"]),
                    repr(row["mflops"]),
                    row["rank"],
                    repr(row["crowding"]),
                ]
            )


def cmd_report(args) -> int:
    in_path = Path(args.front)
    if in_path.suffix == ".json":
        rows = json.loads(in_path.read_text())
        points = [
            EvalPoint(accuracy=r["accuracy"], mflops_per_image=r["mflops_per_image"], tag=r["tag"])
            for r in rows
        ]
    else:
        points = _read_points_csv(in_path)

    out_path = Path(args.out) if args.out else None
    if args.format == "csv":
        target = out_path or in_path.with_suffix(".out.csv")
        _write_points_csv(target, points)
    elif args.format == "json":
        target = out_path or in_path.with_suffix(".out.json")
        target.write_text(
            json.dumps(
                [
                    {"tag": p.tag, "accuracy": p.accuracy, "mflops_per_image": p.mflops_per_image}
                    for p in points
                ],
                indent=2,
            )
        )
    else:  # gnuplot
        target = out_path or in_path.with_suffix(".out.dat")
        _write_gnuplot(target, {"front": points})
    print(target)
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = SyntheticSpec(
        num_samples=args.samples,
        num_models=args.models,
        feature_dim=args.dim,
        costs=tuple(float(c) for c in args.costs.split(",")),
        cluster_separation=args.separation,
        noise_rate=args.noise,
        seed=args.seed,
    )
    scenario = generate_synthetic(spec)
    scenario = split_scenario(scenario, seed=args.seed)
    manifest = write_scenario(scenario, args.out_dir)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    _write_run_manifest(Path(args.out_dir), "generate", params)
    print(manifest)
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    report = validate_scenario(scenario)
    for w in report.warnings:
        print(f"warning: {w}")
    print(f"ok: {scenario.name} ({scenario.num_samples} samples, {scenario.num_models} models)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dispatchkit",
        description="Train input dispatchers over pre-trained model pools and "
        "explore accuracy/operations trade-offs with NSGA-II.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--scenario", required=True, help="path to scenario manifest JSON")
        p.add_argument("--out-dir", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("analyze", help="ideal-dispatcher analysis report")
    add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="train one dispatcher configuration")
    add_common(p)
    p.add_argument("--penalties", required=True, help="comma-separated off-diagonal penalties")
    p.add_argument("--scheme", default="INS", choices=["INS", "ISNS", "ENS", "ins", "isns", "ens"])
    p.add_argument("--ens-beta", type=float, default=0.999)
    p.add_argument("--fitness-split", default="test", choices=["test", "val"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explore", help="NSGA-II penalty/weighting exploration")
    add_common(p)
    p.add_argument("--pop", type=int, default=50)
    p.add_argument("--gens", type=int, default=50)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--penalty-step", type=float, default=0.5)
    p.add_argument("--ens-beta", type=float, default=0.999)
    p.add_argument("--train-epochs", type=int, default=20)
    p.add_argument("--fitness-split", default="test", choices=["test", "val"])
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("report", help="convert a front file between formats")
    p.add_argument("--front", required=True)
    p.add_argument("--format", required=True, choices=["csv", "json", "gnuplot"])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("generate", help="write a synthetic scenario bundle")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--models", type=int, default=3)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--costs", default="5,15,40")
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="validate a scenario bundle")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
