"""Command-line entry point: ``residuenet run|validate|builtin``.

Exit status: 0 success, 1 scenario validation error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import ScenarioError
from .scenario import BUILTINS, builtin_scenario, parse_scenario, run_experiment

log = logging.getLogger("residuenet")


def _load(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _summary(result):
    c = result.sim.counters()
    print(f"backend={result.sim.backend} generated={c['generated']} delivered={c['delivered']} "
          f"droptail={c['droptail']} unmatched={c['unmatched']} misroute={c['misroute']} "
          f"in_flight={c['in_flight']}")
    for m in result.controller.migrations:
        a = m.action
        print(f"migration {a.flow} at {a.decided_at:.6f}s: {a.old_path.label()} "
              f"(route {a.old_route}) -> {a.new_path.label()} (route {a.new_route}), "
              f"dropped {m.dropped_during_window}")
    for name, path in result.files.items():
        print(f"wrote {path}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--backend", choices=("auto", "compiled", "python"), default=None,
                        help="packet engine (default: RESIDUENET_BACKEND or auto)")
    p = argparse.ArgumentParser(prog="residuenet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", parents=[common], help="run a scenario file")
    r.add_argument("--scenario", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--duration", type=float)

    v = sub.add_parser("validate", parents=[common], help="parse and validate a scenario file")
    v.add_argument("--scenario", required=True)

    b = sub.add_parser("builtin", parents=[common], help="run a built-in experiment")
    b.add_argument("name", choices=BUILTINS)
    b.add_argument("--out", required=True)
    b.add_argument("--rate-mbps", type=float, help="elephant rate for fig_b_migration")
    b.add_argument("--blackhole-ms", type=float, default=0.0,
                   help="emulate a non-atomic source rule swap of this length")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    backend = None if args.backend in (None, "auto") else args.backend
    try:
        if args.cmd == "validate":
            sc = _load(args.scenario)
            print(f"ok: {len(sc.topology.nodes)} nodes, {len(sc.topology.links)} links, "
                  f"{len(sc.flows)} flows")
            return 0
        if args.cmd == "run":
            sc = _load(args.scenario)
            if args.seed is not None:
                sc.seed = args.seed
            if args.duration is not None:
                if args.duration <= 0:
                    raise ScenarioError([(None, "--duration must be > 0")])
                sc.duration = args.duration
        else:
            if args.rate_mbps is not None and args.name != "fig_b_migration":
                raise ScenarioError([(None, "--rate-mbps only applies to fig_b_migration")])
            sc = builtin_scenario(args.name, rate_mbps=args.rate_mbps,
                                  blackhole=args.blackhole_ms / 1000.0)
        _summary(run_experiment(sc, args.out, backend=backend))
        return 0
    except ScenarioError as e:
        for line in e.format_lines():
            print(f"{getattr(args, 'scenario', args.cmd)}: {line}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - CLI boundary
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
