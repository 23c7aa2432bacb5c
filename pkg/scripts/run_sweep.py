#!/usr/bin/env python3
"""Run a noise sweep on the admission-control environment.

Perturbs the environment into a twin at each noise level, trains in the
twin by exact dynamic programming, deploys against the unperturbed real
model, and writes per-trial regret with its certified bounds to CSV plus
a trend summary JSON.

Examples:
    python scripts/run_sweep.py --mode reward --out reward.csv
    python scripts/run_sweep.py --mode transition --levels 10 --max-noise 0.45 --trials 30
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from twinmdp import AdmissionConfig, ExperimentSpec
from twinmdp.experiment import run_and_write
from twinmdp.serialize import load_admission_config


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mode", choices=["reward", "transition"], required=True)
    parser.add_argument("--levels", type=int, default=10, help="number of noise levels")
    parser.add_argument("--max-noise", type=float, default=None,
                        help="largest noise level (default 0.9 reward / 0.45 transition)")
    parser.add_argument("--trials", type=int, default=30, help="trials per level")
    parser.add_argument("--gamma", type=float, default=0.9)
    parser.add_argument("--config", default=None, help="admission config file (defaults built in)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--bsm-cap", type=int, default=16)
    parser.add_argument("--out", default=None, help="CSV path (default <mode>_sweep.csv)")
    args = parser.parse_args()

    max_noise = args.max_noise if args.max_noise is not None else (0.9 if args.mode == "reward" else 0.45)
    if args.levels < 2:
        grid = (max_noise,)
    else:
        grid = tuple(round(max_noise * i / (args.levels - 1), 12) for i in range(args.levels))
    cfg = load_admission_config(args.config) if args.config else AdmissionConfig()
    out = args.out or f"{args.mode}_sweep.csv"
    spec = ExperimentSpec(
        mode=f"{args.mode}_sweep",
        base_env=cfg,
        noise_grid=grid,
        trials_per_level=args.trials,
        gamma_override=args.gamma,
        output_path=out,
    )
    summary = run_and_write(spec, base_seed=args.seed, bsm_cap=args.bsm_cap)
    print(json.dumps({k: v for k, v in summary.items() if k != "levels"}, indent=2))
    print(f"wrote {out} and {Path(out).with_suffix('.summary.json')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
