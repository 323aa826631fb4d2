#!/usr/bin/env python3
"""End-to-end desk-scale experiment on a planted trade-off scenario.

Generates a synthetic scenario where the cheap model handles 70% of the
inputs, the mid model 90% and the expensive one 97%, then runs the
NSGA-II exploration and prints the archive front next to the
single-model baselines.
"""

import argparse
from pathlib import Path

from dispatchkit.cli import main as cli_main
from dispatchkit.scenario import SyntheticSpec, generate_synthetic, split_scenario, write_scenario


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="out/planted")
    parser.add_argument("--samples", type=int, default=5000)
    parser.add_argument("--pop", type=int, default=20)
    parser.add_argument("--gens", type=int, default=20)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    spec = SyntheticSpec(
        num_samples=args.samples,
        num_models=3,
        feature_dim=16,
        costs=(5.0, 15.0, 40.0),
        cluster_separation=6.0,
        noise_rate=0.0,
        seed=args.seed,
        tier_fractions=(0.70, 0.20, 0.07),
        hopeless_rate=0.03,
    )
    scenario = split_scenario(generate_synthetic(spec), seed=args.seed)
    out_dir = Path(args.out_dir)
    manifest = write_scenario(scenario, out_dir / "scenario")

    rc = cli_main(
        [
            "explore",
            "--scenario", str(manifest),
            "--out-dir", str(out_dir / "exploration"),
            "--seed", str(args.seed),
            "--pop", str(args.pop),
            "--gens", str(args.gens),
            "--workers", str(args.workers),
        ]
    )
    if rc != 0:
        raise SystemExit(rc)
    print((out_dir / "exploration" / "archive.csv").read_text())


if __name__ == "__main__":
    main()
