"""Time the compiled kernels against the pure-Python twin.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-N wall time per kernel and backend, plus the speed-up.
"""

import argparse
import timeit

import numpy as np

from reins import ModelBundle, _backend
from reins.riccati import agent_coefficients


def cases(bundle):
    coeffs = agent_coefficients("insurer", bundle)
    t = np.linspace(0.0, bundle.market.T, bundle.solver.ode_steps + 1)
    p = bundle.insurer
    etas = np.linspace(0.05, 3.0, 200).tolist()
    return {
        "riccati_backward (10k steps)": lambda k: k.riccati_backward(t, *coeffs, 1e8),
        "solve_retention (200 loadings)": lambda k: [
            k.solve_retention(e, p.alpha, p.gamma, p.beta, 1e-12, 1e-13) for e in etas
        ],
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = {name: _backend.load(name) for name in _backend.available()}
    print(f"backends: {', '.join(backends)}")
    for label, fn in cases(ModelBundle()).items():
        times = {name: min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for name, k in backends.items()}
        row = "  ".join(f"{name} {1e3 * t:9.3f} ms" for name, t in times.items())
        if len(times) == 2:
            row += f"  speed-up {times['python'] / times['compiled']:6.1f}x"
        print(f"{label:32s} {row}")


if __name__ == "__main__":
    main()
