"""Compare the sparrow-style optimizer with the plain PSO baseline on
box-constrained benchmarks under an equal population/iteration budget.

    python scripts/benchmark_optimizers.py [--dim 10] [--iters 200] [--seeds 20]
"""

import argparse

import numpy as np

from hsikelm import pso, ssa


def sphere(x):
    return float(np.sum(x * x))


def rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def rastrigin(x):
    return float(10.0 * x.size + np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x)))


BENCHMARKS = {
    "sphere": (sphere, (-5.0, 5.0)),
    "rosenbrock": (rosenbrock, (-5.0, 5.0)),
    "rastrigin": (rastrigin, (-5.12, 5.12)),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dim", type=int, default=10)
    parser.add_argument("--pop", type=int, default=30)
    parser.add_argument("--iters", type=int, default=200)
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--csv", default=None, help="optional per-run CSV output path")
    args = parser.parse_args()

    rows = []
    print(f"{'benchmark':<12} {'optimizer':<6} {'median':>12} {'best':>12} {'worst':>12}")
    for name, (fn, (lo, hi)) in BENCHMARKS.items():
        lower, upper = np.full(args.dim, lo), np.full(args.dim, hi)
        for label, run in (
            ("ssa", lambda s: ssa.optimize(fn, ssa.SsaConfig(
                lower=lower, upper=upper, pop_size=args.pop, max_iter=args.iters, seed=s)).best_fit),
            ("pso", lambda s: pso.pso_minimize(fn, pso.PsoConfig(
                lower=lower, upper=upper, pop_size=args.pop, max_iter=args.iters, seed=s)).best_fit),
        ):
            finals = [run(seed) for seed in range(args.seeds)]
            print(f"{name:<12} {label:<6} {np.median(finals):>12.3e} "
                  f"{min(finals):>12.3e} {max(finals):>12.3e}")
            rows.extend((name, label, seed, value) for seed, value in enumerate(finals))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("benchmark,optimizer,seed,final_fitness\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
        print(f"wrote {args.csv}")


if __name__ == "__main__":
    main()
