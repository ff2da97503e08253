#!/usr/bin/env python3
"""Length-scale sweep studies on the 1-d and 2-d benchmark fixtures.

Runs the greedy sweep for one iteration per configuration and writes the
per-length-scale traces (EI maximizer and its true objective value), then
prints the winning length-scale of each study.

Examples:
    python3 scripts/sweep_study.py --out results/sweep1d
    python3 scripts/sweep_study.py --dim 2 --thetas 64 --iterations 2 --out results/sweep2d
"""

import argparse

from egokit.bench import RunConfig, emit_sweep_trace, read_best_curve


def main():
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--dim", type=int, default=1, choices=(1, 2))
    parser.add_argument("--functions", nargs="+",
                        default=["sphere", "ackley"],
                        choices=["sphere", "ackley", "rastrigin"])
    parser.add_argument("--iterations", type=int, default=1)
    parser.add_argument("--thetas", type=int, default=None,
                        help="grid size; default 200 values of step 0.1 from 0.01")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results/sweep")
    args = parser.parse_args()

    for function in args.functions:
        config = RunConfig(
            algorithm="greedy-sweep",
            function=function,
            dimension=args.dim,
            init_size=4 if args.dim == 1 else 5,
            budget=args.iterations,
            repetitions=1,
            base_seed=args.seed,
            theta_min=0.01,
            theta_step=0.1,
            theta_count=args.thetas if args.thetas else 200,
            output_path=f"{args.out}_{function}_d{args.dim}",
        )
        paths = emit_sweep_trace(config)
        first = paths[0].read_text().strip().splitlines()[1:]
        rows = [line.split(",") for line in first]
        best = min(rows, key=lambda r: float(r[-2]))
        print(f"{function} d={args.dim}: {len(paths)} trace file(s); "
              f"iteration 1 winner theta={best[0]} with f={best[-2]}")
        curve_file = config.output_path + f"/{config.prefix}_rep00.csv"
        idx, bests = read_best_curve(curve_file)
        print(f"  best-so-far after {idx[-1]} recorded evaluations: {bests[-1]:.6g}")


if __name__ == "__main__":
    main()
