"""Command-line entry point: verify, solve, regions, simulate, monitor."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .modelformat import ModelError, ParseError, export_region_graph_dot, load_model, result_dict
from .monitor import Broken, ClearSoFar, PendingFrom, ViolatedAt, check_prefix_direct, run_from_json, run_to_json
from .regions import build_region_graph, region_bound, region_count

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2


class CliError(Exception):
    pass


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from exc
    try:
        return load_model(text)
    except ParseError as exc:
        raise CliError(f"{path}:{exc}") from exc
    except ModelError as exc:
        raise CliError("\n".join(f"{path}: {v}" for v in exc.violations)) from exc


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_verify(args, out) -> int:
    from .verification import verify

    bundle = _load(args.model)
    verdict = verify(bundle, args.mode)
    if args.json:
        out.write(json.dumps(result_dict(verdict), indent=2, sort_keys=True) + "\n")
    else:
        out.write(f"{args.mode}: {'holds' if verdict.holds else 'violated'}\n")
        w = verdict.first_witness()
        if w is not None:
            out.write(f"dimension {w.dimension + 1}, odd minimum {w.min_priority}\n")
            out.write("prefix:\n" + "".join(f"  {r}\n" for r in w.prefix_regions()))
            out.write("cycle:\n" + "".join(f"  {r}\n" for r in w.cycle.regions))
            if w.back is not None:
                out.write("return:\n" + "".join(f"  {r}\n" for r in w.back.regions))
    return EXIT_OK if verdict.holds else EXIT_NEGATIVE


def cmd_solve(args, out) -> int:
    from .windowgame import solve

    bundle = _load(args.model)
    sol = solve(bundle, args.mode)
    data = result_dict(sol)
    if args.strategy:
        _write(args.strategy, json.dumps(data.get("strategy"), indent=1) + "\n")
    if args.json:
        data.pop("strategy", None)
        out.write(json.dumps(data, indent=2, sort_keys=True) + "\n")
    else:
        out.write(f"{args.mode}: initial region {'winning' if sol.initial_winning else 'losing'}\n")
        out.write(f"lambda bound: {sol.lambda_bound}\n")
        out.write(f"winning regions: {len(sol.winning_regions)}\n")
        if args.mode == "indirect":
            out.write(f"iterations: {len(sol.layers)}\n")
        for r in sorted(x.encode() for x in sol.winning_regions):
            out.write(f"  {r}\n")
    return EXIT_OK if sol.initial_winning else EXIT_NEGATIVE


def cmd_regions(args, out) -> int:
    bundle = _load(args.model)
    a = bundle.automaton
    if args.count:
        out.write(f"{region_count(a)}\n")
        return EXIT_OK
    graph = build_region_graph(a)
    if args.dot:
        _write(args.dot, export_region_graph_dot(graph))
    out.write(f"clock regions: {region_count(a)} (bound {region_bound(a)})\n")
    out.write(f"reachable state regions: {len(graph.vertices)}\n")
    out.write(f"edges: {len(graph.edges)}\n")
    return EXIT_OK


def _load_strategy(path: str, game):
    from .strategy import MealyTable

    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        data = json.loads(text)
    except (OSError, ValueError) as exc:
        raise CliError(f"{path}: cannot read strategy ({exc})") from exc
    if not isinstance(data, dict) or not ("rows" in data or "layers" in data):
        raise CliError(f"{path}: not a strategy table")
    if "layers" in data:
        from .strategy import LayeredMealy

        layers = []
        for layer in data["layers"]:
            table = MealyTable(layer["machine"], game)
            layers.append((frozenset(layer["regions"]), table))
        return _EncodedLayers(LayeredMealy(layers))
    return MealyTable(data, game)


class _EncodedLayers:
    """Layered table keyed by region encodings."""

    def __init__(self, inner):
        self.inner = inner
        self.table = inner.table

    def initial(self):
        return self.inner.initial()

    def step(self, mem, region):
        m, k = mem
        e = next((i for i, (w, _) in enumerate(self.inner.layers) if region.encode() in w), None)
        if e is None:
            from .strategy import LosingRegionError

            raise LosingRegionError(f"region {region.encode()} lies outside every layer")
        machine = self.inner.layers[e][1]
        if e != k:
            m = machine.initial()
        m2, move, key = machine.step(m, region)
        return (m2, e), move, key


def _summary(run, priorities, lam, out):
    verdicts = check_prefix_direct(run, priorities, lam)
    worst = EXIT_OK
    for k, v in enumerate(verdicts, start=1):
        if isinstance(v, ViolatedAt):
            out.write(f"dimension {k}: violated (window from state {v.index} open for {lam} or more)\n")
            worst = EXIT_NEGATIVE
        elif isinstance(v, PendingFrom):
            out.write(f"dimension {k}: pending (window from state {v.index} still open)\n")
        else:
            out.write(f"dimension {k}: clear\n")
    return worst


def cmd_simulate(args, out) -> int:
    from .strategy import LosingRegionError, RandomAdversary, simulate
    from .windowgame import lambda_bound

    bundle = _load(args.model)
    strategy = _load_strategy(args.strategy, bundle.game)
    try:
        run = simulate(bundle.game, strategy, RandomAdversary(args.seed), Fraction(args.horizon))
    except LosingRegionError as exc:
        raise CliError(str(exc)) from exc
    if args.trace:
        _write(args.trace, run_to_json(run) + "\n")
    lam = lambda_bound(bundle.automaton, bundle.priorities)
    out.write(f"moves: {len(run.moves)}, elapsed: {run.states[-1].valuation['gamma']}, "
              f"player 1 blamed: {sum(run.blame)}\n")
    out.write(f"monitor at lambda {lam}:\n")
    return _summary(run, bundle.priorities, lam, out)


def cmd_monitor(args, out) -> int:
    bundle = _load(args.model)
    try:
        with open(args.trace, encoding="utf-8") as fh:
            run = run_from_json(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"{args.trace}: cannot read trace ({exc})") from exc
    lam = Fraction(args.lam)
    if lam <= 0:
        raise CliError("lambda must be positive")
    return _summary(run, bundle.priorities, lam, out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tawindow", description="Bounded window objectives on timed automata and games.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check a bounded window objective on all time-divergent paths")
    v.add_argument("model")
    v.add_argument("--mode", choices=["direct", "indirect"], default="direct")
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("solve", help="solve the bounded window game")
    s.add_argument("model")
    s.add_argument("--mode", choices=["direct", "indirect"], default="direct")
    s.add_argument("--strategy", metavar="OUT")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("regions", help="region graph statistics")
    r.add_argument("model")
    r.add_argument("--dot", metavar="OUT")
    r.add_argument("--count", action="store_true", help="print the number of clock regions only")
    r.set_defaults(func=cmd_regions)

    m = sub.add_parser("simulate", help="play a strategy table against a random opponent")
    m.add_argument("model")
    m.add_argument("--strategy", required=True)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--horizon", required=True)
    m.add_argument("--trace", metavar="OUT")
    m.set_defaults(func=cmd_simulate)

    t = sub.add_parser("monitor", help="window verdicts on a recorded run")
    t.add_argument("model")
    t.add_argument("--trace", required=True)
    t.add_argument("--lambda", dest="lam", required=True)
    t.set_defaults(func=cmd_monitor)
    return p


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except CliError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_ERROR
    except (ValueError, ArithmeticError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
