"""Compare the compiled and pure-Python packet engines.

Runs shortened versions of both built-in experiments on each available
backend, checks that the metric tables match exactly, and reports
wall time and event throughput.

    python3 benchmarks/bench_backends.py [--seconds 2] [--repeat 3]
"""
import argparse
import statistics
import time

from residuenet._backend import ENGINES
from residuenet.scenario import builtin_scenario, metric_tables, run_experiment


def shortened(name, seconds):
    sc = builtin_scenario(name)
    scale = seconds / sc.duration
    sc.duration = seconds
    sc.migrations = [type(m)(m.flow, m.at * scale, m.cores) for m in sc.migrations]
    return sc


def bench(name, backend, seconds, repeat):
    times, res = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = run_experiment(shortened(name, seconds), backend=backend)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seconds", type=float, default=2.0, help="simulated seconds per run")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = sorted(ENGINES)
    if "compiled" not in backends:
        print("compiled engine not built; only the Python engine is available")
    print(f"{'scenario':<18} {'backend':<9} {'wall s':>8} {'events':>11} {'Mev/s':>7} {'speedup':>8}")
    for name in ("fig_b_migration", "fig_cd_isolation"):
        results = {b: bench(name, b, args.seconds, args.repeat) for b in backends}
        base = results["python"][0]
        tables = set()
        for b, (secs, res) in results.items():
            ev = res.sim.counters()["events"]
            print(f"{name:<18} {b:<9} {secs:8.3f} {ev:11d} {ev / secs / 1e6:7.2f} {base / secs:7.1f}x")
            tables.add(repr(metric_tables(res.sim, res.controller)))
        print(f"{'':<18} outputs identical across backends: {len(tables) == 1}")


if __name__ == "__main__":
    main()
