"""Throughput of the compiled simulation kernel against the pure-Python fallback.

Both kernels consume identical random streams, so the run also confirms that
their terminal states agree bit for bit.

    python benchmarks/bench_kernel.py [--paths N] [--example LABEL] [--horizon T]
"""

import argparse
import time

import numpy as np

from bcdcp import backend, config, simulator


def timed(model, horizon, paths, seed, burn, name):
    t0 = time.perf_counter()
    term, _ = simulator.simulate_terminal_states(model, horizon, paths, seed, burn_in=burn, backend_name=name)
    return term, time.perf_counter() - t0


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--example", default="5.2-fgm", choices=config.EXAMPLES)
    p.add_argument("--paths", type=int, default=20)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--burn-in", type=float, default=5.0,
                   help="common warm-up (the default per-line warm-up makes the Python kernel very slow)")
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args(argv)

    if backend._compiled is None:
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
    model = config.load_example(args.example).model
    burn = args.burn_in if model.is_stationary() else 0.0
    events = simulator.simulate_path(model, args.horizon + burn, args.seed, record="full")
    per_path = len(events.events)

    fast, t_fast = timed(model, args.horizon, args.paths, args.seed, burn, "compiled")
    slow, t_slow = timed(model, args.horizon, args.paths, args.seed, burn, "python")
    print(f"example {args.example}: {args.paths} paths, horizon {args.horizon}, warm-up {burn}")
    print(f"  roughly {per_path} events per path")
    print(f"  compiled: {t_fast:9.4f} s   ({t_fast / args.paths * 1e3:.3f} ms/path)")
    print(f"  python:   {t_slow:9.4f} s   ({t_slow / args.paths * 1e3:.3f} ms/path)")
    print(f"  speed-up: {t_slow / t_fast:9.1f}x")
    print(f"  identical terminal states: {np.array_equal(fast, slow)}")


if __name__ == "__main__":
    main()
