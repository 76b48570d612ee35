"""Command-line interface: solve games, benchmark backends, inspect games.

Exit codes: 0 success, 2 usage error, 3 data error (unloadable or invalid
game, bad file), 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import games, metrics, solvers
from .decision_process import extract_decision_process
from .kernels import WORKERS_ENV, parallel_backend, serial_backend

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


class UsageError(Exception):
    pass


def _load_game_source(source: str, seed: int) -> games.Game:
    """Game from a built-in name, a generator spec, or a file path.

    Generator specs look like ``random:depth=6,branching=3,merge=0.5``;
    the generator seed comes from --seed.
    """
    if source in games.BUILTIN_GAMES:
        return games.BUILTIN_GAMES[source]()
    if source.startswith("random:"):
        params = {}
        for part in source[len("random:"):].split(","):
            if not part:
                continue
            key, _, value = part.partition("=")
            params[key.strip()] = value.strip()
        try:
            return games.random_game(
                depth=int(params.pop("depth")),
                branching=int(params.pop("branching")),
                infoset_merge_rate=float(params.pop("merge", 0.0)),
                seed=int(params.pop("seed", seed)),
                **({"max_nodes": int(params.pop("max_nodes"))}
                   if "max_nodes" in params else {}))
        except KeyError as exc:
            raise UsageError(f"generator spec is missing {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad generator spec {source!r}: {exc}") from exc
    if os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            return games.load_game(fh.read())
    raise games.GameError(
        f"unknown game source {source!r}: not a built-in name "
        f"({', '.join(sorted(set(games.BUILTIN_GAMES)))}), not a file, "
        f"and not a random: spec")


def _make_backend(args) -> "serial_backend":
    if args.backend == "serial":
        return serial_backend()
    return parallel_backend(args.workers)


def _parse_checkpoints(text: str | None, iterations: int | None) -> list[int]:
    if text:
        try:
            points = sorted({int(p) for p in text.split(",") if p.strip()})
        except ValueError as exc:
            raise UsageError(f"bad checkpoint list {text!r}") from exc
        if not points or any(p <= 0 for p in points):
            raise UsageError("checkpoints must be positive iteration indices")
        return points
    if iterations:
        # Default: about a dozen log-spaced checkpoints up to the budget.
        raw = np.unique(np.geomspace(1, iterations, num=12).astype(int))
        return [int(p) for p in raw]
    return [2 ** k for k in range(31)]


def _behavioral_lines(proc, x: np.ndarray, player: int) -> list[str]:
    """Strategy-file lines: one JSON object per sequence, behaviorally
    normalized (uniform at decision points the average never reaches)."""
    lines = []
    for j in range(proc.num_decisions):
        first = int(proc.dp_first_seq[j])
        n = int(proc.dp_num_actions[j])
        parent_mass = x[int(proc.dp_parent_seq[j])]
        for a in range(n):
            prob = x[first + a] / parent_mass if parent_mass > 0 else 1.0 / n
            lines.append(json.dumps({
                "player": player,
                "sequence": proc.seq_label(first + a),
                "prob": prob,
            }))
    return lines


def cmd_solve(args) -> int:
    if args.iters is None and args.seconds is None:
        raise UsageError("a budget is required: --iters and/or --seconds")
    if (args.iters is not None and args.iters <= 0) or \
            (args.seconds is not None and args.seconds <= 0):
        raise UsageError("budget must be positive")

    game = _load_game_source(args.game, args.seed)
    config = solvers.SolverConfig(variant=args.variant, alpha=args.alpha,
                                  beta=args.beta, gamma=args.gamma,
                                  mode=args.mode)
    backend = _make_backend(args)
    checkpoints = _parse_checkpoints(args.checkpoints, args.iters)

    result = solvers.run(game, config, iterations=args.iters,
                         seconds=args.seconds, checkpoints=checkpoints,
                         backend=backend)

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(metrics.records_to_csv(result.records))

    strategy_path = args.strategy_out or _sibling(args.out, ".strategy.jsonl")
    with open(strategy_path, "w", encoding="utf-8") as fh:
        for player in (1, 2):
            proc = result.bundle.procs[player - 1]
            for line in _behavioral_lines(proc, result.average[player - 1], player):
                fh.write(line + "\n")

    final = result.records[-1]
    value = metrics.expected_value(result.bundle.payoff, *result.average)
    print(f"solved {game.name}: variant={config.variant} mode={config.mode} "
          f"iterations={result.iterations} exploitability={final.exploitability:.6e} "
          f"value={value:.6f} work={final.work} csv={args.out} "
          f"strategy={strategy_path}")
    return EXIT_OK


def _sibling(path: str, suffix: str) -> str:
    stem, ext = os.path.splitext(path)
    return stem + suffix


_BENCH_HEADER = ("nodes", "backend", "workers", "mean_seconds",
                 "stderr_seconds", "work_per_iteration", "state_bytes")


def _bench_game_for_size(target: int, seed: int) -> games.Game:
    """Synthetic game whose combined decision-process size is near target.

    Depth is kept odd so the deepest internal layer is a decision layer,
    which makes the decision processes roughly as large as the game tree.
    """
    depth = 3
    while (2 ** (depth + 1) - 1) < target and depth < 23:
        depth += 2
    return games.random_game(depth=depth, branching=2, seed=seed,
                             max_nodes=max(games.DEFAULT_NODE_BUDGET,
                                           2 ** (depth + 1)))


def cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"bad size list {args.sizes!r}") from exc
    backends = [b.strip() for b in args.backends.split(",") if b.strip()]
    if not sizes or any(s <= 0 for s in sizes):
        raise UsageError("the sweep needs at least one positive size")
    if not backends or any(b not in ("serial", "parallel") for b in backends):
        raise UsageError("backends must be a list drawn from serial,parallel")
    if args.measure < 8:
        raise UsageError("bench needs at least 8 measured iterations")

    config = solvers.SolverConfig(variant=args.variant)
    rows = []
    for size in sizes:
        game = _bench_game_for_size(size, args.seed)
        bundle = solvers.build_bundle(game)
        for kind in backends:
            backend = serial_backend() if kind == "serial" \
                else parallel_backend(args.workers)
            bench = solvers.benchmark_iterations(
                bundle, config, backend, warmup=args.warmup,
                measured=args.measure)
            rows.append([bench.proc_nodes, kind, backend.workers,
                         repr(bench.mean_seconds), repr(bench.stderr_seconds),
                         bench.work_per_iteration, bench.state_bytes])
            print(f"|P|={bench.proc_nodes:>9d} {kind:>8s}[{backend.workers}] "
                  f"{bench.mean_seconds * 1e3:9.3f} ms/iter "
                  f"(+/- {bench.stderr_seconds * 1e3:.3f}) "
                  f"work/iter={bench.work_per_iteration}")

    lines = [",".join(_BENCH_HEADER)]
    lines += [",".join(str(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_info(args) -> int:
    game = _load_game_source(args.game, args.seed)
    report = games.validate_game(game)
    report.raise_if_failed()
    terminals = len(game.terminal_ids())
    print(f"game: {game.name}")
    print(f"game tree nodes: {game.num_nodes}")
    print(f"terminal nodes: {terminals}")
    for player in (1, 2):
        proc = extract_decision_process(game, player)
        print(f"player {player}: nodes={proc.num_nodes} "
              f"decision_points={proc.num_decisions} "
              f"sequences={proc.num_seqs} height={proc.height} "
              f"degree={proc.degree}")
        if args.dump:
            print(proc.dump())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqcfr",
        description="Solve two-player zero-sum games with the CFR family "
                    "expressed as sparse linear algebra.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--game", required=True,
                       help="built-in name, game file path, or "
                            "random:depth=D,branching=B,merge=M spec")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--backend", choices=("serial", "parallel"),
                       default="serial")
        p.add_argument("--workers", type=int, default=None,
                       help=f"parallel worker count (default: ${WORKERS_ENV} "
                            "or the machine core count)")

    p_solve = sub.add_parser("solve", help="run a solver and log convergence")
    common(p_solve)
    p_solve.add_argument("--variant",
                         choices=("cfr", "cfr+", "dcfr", "pcfr", "pcfr+"),
                         default="cfr")
    p_solve.add_argument("--alpha", type=float, default=1.5)
    p_solve.add_argument("--beta", type=float, default=0.0)
    p_solve.add_argument("--gamma", type=float, default=None)
    p_solve.add_argument("--mode", choices=("sim", "alt"), default=None)
    p_solve.add_argument("--iters", type=int, default=None)
    p_solve.add_argument("--seconds", type=float, default=None)
    p_solve.add_argument("--checkpoints", default=None,
                         help="comma-separated iteration indices")
    p_solve.add_argument("--out", default="solve.csv")
    p_solve.add_argument("--strategy-out", default=None)
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench",
                             help="time solver iterations across game sizes "
                                  "and backends")
    p_bench.add_argument("--sizes", required=True,
                         help="comma-separated target decision-process sizes")
    p_bench.add_argument("--backends", default="serial,parallel")
    p_bench.add_argument("--variant",
                         choices=("cfr", "cfr+", "dcfr", "pcfr", "pcfr+"),
                         default="cfr")
    p_bench.add_argument("--warmup", type=int, default=2)
    p_bench.add_argument("--measure", type=int, default=8)
    p_bench.add_argument("--workers", type=int, default=None)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", default=None)
    p_bench.set_defaults(func=cmd_bench)

    p_info = sub.add_parser("info", help="print game and per-player sizes")
    common(p_info)
    p_info.add_argument("--dump", action="store_true",
                        help="dump each player's decision process, one line "
                             "per node (debug format, not a stable interface)")
    p_info.set_defaults(func=cmd_info)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except games.GameError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
