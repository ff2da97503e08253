#!/usr/bin/env python3
"""Head-to-head benchmark of ensemble EGO against classical ML-tuned EGO.

Reproduces the desk-scale protocol: d=5 over [-5, 5]^5, initial design of
3*d points shared between algorithms per seed, 15*d iterations for the
ensemble (8 repetitions) versus a 70*d evaluation budget for EGO
(5 repetitions).  Writes per-repetition and median CSVs per algorithm and
function, then prints the final medians.

This takes roughly 20 minutes per function on a laptop-class CPU.

Example:
    python3 scripts/compare_ego_variants.py --functions sphere --out results/compare
"""

import argparse

from egokit.bench import RunConfig, run_benchmark


def final_median(aggregate_path):
    return float(aggregate_path.read_text().strip().splitlines()[-1].split(",")[1])


def main():
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--functions", nargs="+",
                        default=["sphere", "ackley", "rastrigin"],
                        choices=["sphere", "ackley", "rastrigin"])
    parser.add_argument("--dim", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results/compare")
    args = parser.parse_args()

    for function in args.functions:
        finals = {}
        for algorithm in ("ensemble", "ego"):
            config = RunConfig(
                algorithm=algorithm,
                function=function,
                dimension=args.dim,
                base_seed=args.seed,
                output_path=f"{args.out}/{function}",
            )
            result = run_benchmark(config)
            if result["failures"]:
                raise SystemExit(f"{algorithm} on {function}: "
                                 f"repetitions failed: {result['failures']}")
            finals[algorithm] = final_median(result["aggregate"])
            print(f"{function} {algorithm}: final median best "
                  f"{finals[algorithm]:.6g} ({result['aggregate']})")
        ratio = finals["ensemble"] / finals["ego"] if finals["ego"] else float("inf")
        print(f"{function}: ensemble/ego final median ratio = {ratio:.3g}")


if __name__ == "__main__":
    main()
