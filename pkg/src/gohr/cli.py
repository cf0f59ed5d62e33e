"""Command-line front door.

Thin argument handling over the core package: every subcommand parses
flags, calls the corresponding module, and prints results.  Exit codes:
0 success, 1 runtime failure, 2 configuration/validation failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .boards import GenParams, load_boards
from .cgs import SessionConfig, serve_stdio, serve_tcp
from .engine import run_episode, oracle_policy
from .errors import (
    BoardFormatError,
    ConfigError,
    GohrError,
    InfeasibleParams,
    LexError,
    ParseError,
    ValidationError,
)
from .experiment import (
    analyze_directory,
    load_config,
    run_experiment,
    run_from_manifest,
)
from .rules import DEFAULT_FEATURES, FeatureSet, load_rule
from .seeding import derive_rng

CONFIG_ERRORS = (ParseError, ValidationError, LexError, ConfigError,
                 InfeasibleParams, BoardFormatError, FileNotFoundError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GohrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gohr",
        description="Game of Hidden Rules: play, serve, train, analyze.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-rule",
                       help="parse rule files and report diagnostics")
    p.add_argument("rules", nargs="+", metavar="RULE")
    _add_feature_flags(p)
    p.set_defaults(func=cmd_validate_rule)

    p = sub.add_parser("play-oracle",
                       help="smoke-test a rule by clearing boards with a "
                            "legal-move oracle (or sweep a remote service)")
    p.add_argument("--rule", required=True)
    _add_board_flags(p)
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--url", help="play against a running HTTP service "
                                 "instead of the in-process engine")
    _add_feature_flags(p)
    p.set_defaults(func=cmd_play_oracle)

    p = sub.add_parser("serve", help="run the captive game server")
    p.add_argument("--rule", required=True)
    _add_board_flags(p)
    p.add_argument("--episodes", type=int, default=None,
                   help="maximum episodes per session")
    p.add_argument("--horizon", type=int, default=100)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--stdio", action="store_true",
                       help="one session over standard input/output")
    group.add_argument("--tcp", metavar="HOST:PORT",
                       help="line protocol, one session per connection")
    group.add_argument("--http", metavar="HOST:PORT",
                       help="HTTP + WebSocket service")
    p.add_argument("--transcript-dir")
    _add_feature_flags(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("train", help="run learning trials for one rule")
    p.add_argument("--rule", required=True)
    p.add_argument("--out", required=True)
    _add_board_flags(p)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None,
                   help="learning rate")
    p.add_argument("--target-every", type=int, default=None,
                   help="episodes between target-weight refreshes")
    p.add_argument("--save-weights", action="store_true")
    p.add_argument("--transcripts", action="store_true")
    _add_feature_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("analyze", help="rebuild analysis tables from records")
    p.add_argument("--input", required=True, help="experiment directory")
    p.add_argument("--out", default=None)
    p.add_argument("--bootstraps", type=int, default=50_000)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("plot", help="render curves and TCE box plots")
    p.add_argument("--input", required=True,
                   help="directory holding the analysis tables")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("run", help="run a full experiment from a config file")
    p.add_argument("--config")
    p.add_argument("--from-manifest", dest="from_manifest",
                   help="reproduce an experiment from its manifest")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    return parser


def _add_feature_flags(parser) -> None:
    parser.add_argument("--shapes", help="comma-separated shape names")
    parser.add_argument("--colors", help="comma-separated color names")


def _add_board_flags(parser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--board", help="board file (curriculum, in order)")
    group.add_argument("--gen", metavar="SPEC",
                       help="min_pieces,max_pieces,min_colors,max_colors,"
                            "min_shapes,max_shapes (default 9,9,4,4,4,4)")
    parser.add_argument("--seed", type=int, default=0)


def _features(args) -> FeatureSet:
    if not getattr(args, "shapes", None) and not getattr(args, "colors", None):
        return DEFAULT_FEATURES
    shapes = tuple((args.shapes or ",".join(DEFAULT_FEATURES.shapes)).split(","))
    colors = tuple((args.colors or ",".join(DEFAULT_FEATURES.colors)).split(","))
    return FeatureSet(shapes=shapes, colors=colors)


def _gen_params(spec: str | None, seed: int) -> GenParams:
    if spec is None:
        return GenParams(seed=seed)
    parts = spec.split(",")
    if len(parts) != 6:
        raise ConfigError(f"--gen wants 6 comma-separated integers, got {spec!r}")
    try:
        values = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"--gen wants integers, got {spec!r}") from None
    return GenParams(*values, seed=seed)


def _session_config(args, features) -> SessionConfig:
    rule = load_rule(args.rule, features)
    boards = load_boards(args.board, features) if args.board else None
    gen = None if boards is not None else _gen_params(args.gen, args.seed)
    if gen is not None:
        gen.validate(features)
    return SessionConfig(
        rule=rule,
        rule_name=Path(args.rule).stem,
        features=features,
        gen_params=gen,
        boards=boards,
        horizon=args.horizon if getattr(args, "horizon", None) else None,
        max_episodes=getattr(args, "episodes", None),
        seed=args.seed,
        transcript_dir=getattr(args, "transcript_dir", None),
    )


# --- subcommands ---------------------------------------------------------------

def cmd_validate_rule(args) -> int:
    features = _features(args)
    failures = 0
    for path in args.rules:
        try:
            spec = load_rule(path, features)
        except CONFIG_ERRORS as exc:
            print(f"FAIL {path}: {exc}")
            failures += 1
            continue
        atoms = sum(len(line.atoms) for line in spec.lines)
        print(f"OK   {path}: {len(spec.lines)} line(s), {atoms} atom(s)")
    return 2 if failures else 0


def cmd_play_oracle(args) -> int:
    if args.url:
        return _play_remote(args)
    features = _features(args)
    rule = load_rule(args.rule, features)
    if args.board:
        boards = load_boards(args.board, features)
    else:
        params = _gen_params(args.gen, args.seed)
        rng = derive_rng(args.seed, "play-oracle")
        from .boards import generate_board
        boards = [generate_board(params, features, rng)
                  for _ in range(args.episodes)]
    for i in range(min(args.episodes, len(boards))):
        result = run_episode(rule, boards[i].copy(), oracle_policy,
                             args.horizon, features)
        print(f"episode {i}: cleared={result.cleared} "
              f"moves={result.moves_used} errors={result.error_count}")
    return 0


def _play_remote(args) -> int:
    """Thin HTTP client: clear episodes by sweeping moves until accepted."""
    import httpx

    base = args.url.rstrip("/")
    with httpx.Client(base_url=base, timeout=30.0) as client:
        session = client.post("/sessions").raise_for_status().json()
        sid = session["session_id"]
        for episode in range(args.episodes):
            if episode > 0:
                session = client.post(
                    f"/sessions/{sid}/episodes").raise_for_status().json()
            moves = errors = 0
            while not session["episode_over"] and moves < args.horizon:
                board = session["board"]
                if not board:
                    break
                accepted = False
                for piece in board:
                    for bucket in range(4):
                        response = client.post(
                            f"/sessions/{sid}/moves",
                            json={"row": piece["row"], "col": piece["col"],
                                  "bucket": bucket}).raise_for_status().json()
                        moves += 1
                        errors += response["reward"] < 0
                        if response["verdict"] == 0 or response["episode_over"]:
                            accepted = True
                            session = response
                            break
                    if accepted:
                        break
                if not accepted:  # no move accepted for any piece: stuck
                    session = client.get(
                        f"/sessions/{sid}").raise_for_status().json()
                    break
            cleared = not session["board"]
            print(f"episode {episode}: cleared={cleared} "
                  f"moves={moves} errors={errors}")
        client.delete(f"/sessions/{sid}")
    return 0


def cmd_serve(args) -> int:
    features = _features(args)
    config = _session_config(args, features)
    if args.stdio:
        serve_stdio(config)
        return 0
    if args.tcp:
        host, port = _endpoint(args.tcp)
        server = serve_tcp(config, host, port)
        print(f"listening on {host}:{port}", file=sys.stderr)
        server.serve_forever()
        return 0
    host, port = _endpoint(args.http)
    import uvicorn

    from .service.app import create_app
    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")
    return 0


def _endpoint(spec: str) -> tuple[str, int]:
    host, _, port = spec.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"endpoint must be HOST:PORT, got {spec!r}")
    return host, int(port)


def cmd_train(args) -> int:
    from .agent import Hyperparams, save_weights, train_trial
    from .analysis import EpisodeRecord
    from .experiment import _write_trial_outputs, trial_seed, write_records
    from .featurizer import FeatureLayout

    features = _features(args)
    rule = load_rule(args.rule, features)
    rule_name = Path(args.rule).stem
    boards = load_boards(args.board, features) if args.board else None
    params = _gen_params(args.gen, args.seed)
    hyper = Hyperparams(episodes=args.episodes, horizon=args.horizon,
                        trials=args.trials).with_overrides(
        gamma=args.gamma, learning_rate=args.alpha,
        target_update_episodes=args.target_every)

    outdir = Path(args.out) / rule_name
    outdir.mkdir(parents=True, exist_ok=True)
    records = []
    for t in range(args.trials):
        seed = trial_seed(args.seed, rule_name, t)
        result = train_trial(rule, params, hyper, seed, features, trial=t,
                             keep_transcripts=args.transcripts, boards=boards)
        records.extend(
            EpisodeRecord(trial=t, episode=e, errors=err, cleared=clr,
                          moves=mv)
            for e, (err, mv, clr) in enumerate(
                zip(result.episode_errors, result.episode_moves,
                    result.episode_cleared)))
        _write_trial_outputs(outdir, result)
        if args.save_weights:
            save_weights(outdir / f"weights_trial_{t:03d}.npz", result.theta,
                         FeatureLayout.for_features(features))
        print(f"trial {t}: total errors {sum(result.episode_errors)}")
    write_records(outdir / "records.csv", records)
    return 0


def cmd_analyze(args) -> int:
    target = analyze_directory(args.input, args.out, args.bootstraps,
                               args.confidence, args.seed)
    print(f"analysis written to {target}")
    return 0


def cmd_plot(args) -> int:
    import csv

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    indir = Path(args.input)
    if (indir / "analysis").is_dir():
        indir = indir / "analysis"
    outdir = Path(args.out) if args.out else indir
    outdir.mkdir(parents=True, exist_ok=True)

    medians: dict[str, list[tuple[int, float, float, float]]] = {}
    with (indir / "median_curves.csv").open(newline="") as fh:
        for row in csv.DictReader(fh):
            medians.setdefault(row["rule"], []).append(
                (int(row["episode"]), float(row["median"]),
                 float(row["ci_low"]), float(row["ci_high"])))
    fig, ax = plt.subplots(figsize=(8, 5))
    for rule, rows in sorted(medians.items()):
        rows.sort()
        episodes = [r[0] for r in rows]
        ax.plot(episodes, [r[1] for r in rows], label=rule)
        ax.fill_between(episodes, [r[2] for r in rows], [r[3] for r in rows],
                        alpha=0.25)
    ax.set_xlabel("episode")
    ax.set_ylabel("median cumulated errors")
    ax.legend()
    fig.tight_layout()
    fig.savefig(outdir / "median_curves.png", dpi=120)
    plt.close(fig)

    tce: dict[str, list[float]] = {}
    with (indir / "tce.csv").open(newline="") as fh:
        for row in csv.DictReader(fh):
            tce.setdefault(row["rule"], []).append(float(row["tce"]))
    fig, ax = plt.subplots(figsize=(8, 5))
    rules = sorted(tce)
    ax.boxplot([tce[r] for r in rules], tick_labels=rules)
    ax.set_ylabel("terminal cumulated error")
    fig.tight_layout()
    fig.savefig(outdir / "tce_boxplot.png", dpi=120)
    plt.close(fig)

    print(f"plots written to {outdir}")
    return 0


def cmd_run(args) -> int:
    if bool(args.config) == bool(args.from_manifest):
        raise ConfigError("provide exactly one of --config or --from-manifest")
    if args.from_manifest:
        if not args.out:
            raise ConfigError("--from-manifest requires --out")
        outdir = run_from_manifest(args.from_manifest, args.out,
                                   jobs=args.jobs)
    else:
        config = load_config(args.config, seed=args.seed, jobs=args.jobs)
        outdir = Path(args.out) if args.out else Path("runs") / Path(
            args.config).stem
        outdir = run_experiment(config, outdir)
    print(f"experiment written to {outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
