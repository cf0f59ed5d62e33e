"""Experiment orchestration: rules x trials, persistence, reproduction.

An experiment directory is a pure function of its manifest: the manifest
embeds the resolved configuration (including full rule texts and any
board file contents) plus every derived trial seed, so ``--from-manifest``
regenerates byte-identical curve tables.  Nothing under the output
directory carries timestamps.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .agent import Hyperparams, TrialResult, train_trial
from .analysis import EpisodeRecord, export_tables
from .boards import GenParams, parse_boards
from .errors import ConfigError, GohrError
from .rules import DEFAULT_FEATURES, FeatureSet, parse_rule
from .seeding import derive_seed

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"


@dataclass
class ExperimentConfig:
    rules: list  # [(name, rule text)]
    features: FeatureSet = DEFAULT_FEATURES
    gen_params: GenParams | None = None
    boards_text: str | None = None  # board file contents (curriculum mode)
    trials: int = 100
    episodes: int = 200
    horizon: int = 100
    hyper: Hyperparams = field(default_factory=Hyperparams)
    seed: int = 0
    bootstraps: int = 50_000
    confidence: float = 0.95
    save_transcripts: bool = True
    jobs: int = 1

    def __post_init__(self):
        if not self.rules:
            raise ConfigError("experiment needs at least one rule")
        if self.trials < 1 or self.episodes < 1:
            raise ConfigError("trials and episodes must be >= 1")
        if (self.gen_params is None) == (self.boards_text is None):
            raise ConfigError(
                "exactly one board source (gen or board file) is required")
        names = [name for name, _ in self.rules]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate rule names: {names}")
        # parse early so config errors surface before any work happens
        for name, text in self.rules:
            parse_rule(text, self.features, source_name=name)
        if self.boards_text is not None:
            parse_boards(self.boards_text, self.features)
        self.hyper = Hyperparams(
            **{**_hyper_dict(self.hyper),
               "episodes": self.episodes, "horizon": self.horizon})


def _hyper_dict(hyper: Hyperparams) -> dict:
    return {
        "buffer_size": hyper.buffer_size,
        "batch_size": hyper.batch_size,
        "horizon": hyper.horizon,
        "episodes": hyper.episodes,
        "trials": hyper.trials,
        "epsilon_start": hyper.epsilon_start,
        "epsilon_min": hyper.epsilon_min,
        "epsilon_decay_moves": hyper.epsilon_decay_moves,
        "gamma": hyper.gamma,
        "learning_rate": hyper.learning_rate,
        "target_update_episodes": hyper.target_update_episodes,
        "literal_terminal_indicator": hyper.literal_terminal_indicator,
    }


def config_to_dict(config: ExperimentConfig) -> dict:
    return {
        "rules": [{"name": n, "text": t} for n, t in config.rules],
        "features": {"shapes": list(config.features.shapes),
                     "colors": list(config.features.colors)},
        "gen_params": None if config.gen_params is None else {
            "min_pieces": config.gen_params.min_pieces,
            "max_pieces": config.gen_params.max_pieces,
            "min_colors": config.gen_params.min_colors,
            "max_colors": config.gen_params.max_colors,
            "min_shapes": config.gen_params.min_shapes,
            "max_shapes": config.gen_params.max_shapes,
        },
        "boards_text": config.boards_text,
        "trials": config.trials,
        "episodes": config.episodes,
        "horizon": config.horizon,
        "agent": _hyper_dict(config.hyper),
        "seed": config.seed,
        "bootstraps": config.bootstraps,
        "confidence": config.confidence,
        "save_transcripts": config.save_transcripts,
    }


def config_from_dict(data: dict, jobs: int = 1) -> ExperimentConfig:
    gen = data.get("gen_params")
    agent = dict(data.get("agent") or {})
    agent.pop("episodes", None)
    agent.pop("horizon", None)
    return ExperimentConfig(
        rules=[(r["name"], r["text"]) for r in data["rules"]],
        features=FeatureSet(shapes=tuple(data["features"]["shapes"]),
                            colors=tuple(data["features"]["colors"])),
        gen_params=None if gen is None else GenParams(**gen),
        boards_text=data.get("boards_text"),
        trials=data["trials"],
        episodes=data["episodes"],
        horizon=data["horizon"],
        hyper=Hyperparams(**agent) if agent else Hyperparams(),
        seed=data["seed"],
        bootstraps=data.get("bootstraps", 50_000),
        confidence=data.get("confidence", 0.95),
        save_transcripts=data.get("save_transcripts", True),
        jobs=jobs,
    )


def load_config(path, seed: int | None = None, jobs: int = 1) -> ExperimentConfig:
    """Read the YAML experiment config; flags passed here override file keys."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"bad config file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a mapping")

    base = path.parent
    rule_paths = raw.get("rules") or []
    if not rule_paths:
        raise ConfigError("config key 'rules' must list at least one file")
    rules = []
    for rp in rule_paths:
        rp = Path(rp)
        full = rp if rp.is_absolute() else base / rp
        if not full.exists():
            raise ConfigError(f"rule file not found: {full}")
        rules.append((full.stem, full.read_text(encoding="utf-8")))

    features = DEFAULT_FEATURES
    if "features" in raw:
        features = FeatureSet(shapes=tuple(raw["features"]["shapes"]),
                              colors=tuple(raw["features"]["colors"]))

    board = raw.get("board") or {}
    gen_params = None
    boards_text = None
    if "gen" in board:
        gen_params = GenParams(**board["gen"])
    if "file" in board:
        bp = Path(board["file"])
        full = bp if bp.is_absolute() else base / bp
        if not full.exists():
            raise ConfigError(f"board file not found: {full}")
        boards_text = full.read_text(encoding="utf-8")

    agent = dict(raw.get("agent") or {})
    agent.pop("episodes", None)
    agent.pop("horizon", None)

    return ExperimentConfig(
        rules=rules,
        features=features,
        gen_params=gen_params,
        boards_text=boards_text,
        trials=int(raw.get("trials", 100)),
        episodes=int(raw.get("episodes", 200)),
        horizon=int(raw.get("horizon", 100)),
        hyper=Hyperparams(**agent) if agent else Hyperparams(),
        seed=int(raw["seed"]) if seed is None else seed,
        bootstraps=int(raw.get("bootstraps", 50_000)),
        confidence=float(raw.get("confidence", 0.95)),
        save_transcripts=bool(raw.get("save_transcripts", True)),
        jobs=jobs,
    )


def trial_seed(master_seed: int, rule_name: str, trial: int) -> int:
    return derive_seed(master_seed, rule_name, trial)


def _run_cell(args) -> TrialResult:
    rule_text, features_tuple, gen_dict, boards_text, hyper_dict, seed, \
        trial, keep_transcripts = args
    features = FeatureSet(shapes=tuple(features_tuple[0]),
                          colors=tuple(features_tuple[1]))
    rule = parse_rule(rule_text, features)
    params = GenParams(**gen_dict) if gen_dict is not None else GenParams()
    boards = (parse_boards(boards_text, features)
              if boards_text is not None else None)
    return train_trial(rule, params, Hyperparams(**hyper_dict), seed,
                       features, trial=trial,
                       keep_transcripts=keep_transcripts, boards=boards)


def run_experiment(config: ExperimentConfig, outdir) -> Path:
    """Run every rule x trial cell, persist records, run the analysis.

    A failing cell is recorded in the manifest and does not stop the
    others.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    config_dict = config_to_dict(config)
    canonical = json.dumps(config_dict, sort_keys=True)
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "package_version": __version__,
        "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
        "config": config_dict,
        "cells": [],
    }

    gen_dict = config_dict["gen_params"]
    features_tuple = (list(config.features.shapes), list(config.features.colors))
    hyper_dict = _hyper_dict(config.hyper)

    jobs = []
    for name, text in config.rules:
        for t in range(config.trials):
            seed = trial_seed(config.seed, name, t)
            jobs.append((name, t, seed,
                         (text, features_tuple, gen_dict, config.boards_text,
                          hyper_dict, seed, t, config.save_transcripts)))

    results: dict[tuple[str, int], TrialResult | Exception] = {}
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = {(name, t): pool.submit(_run_cell, args)
                       for name, t, _, args in jobs}
            for key, future in futures.items():
                try:
                    results[key] = future.result()
                except GohrError as exc:
                    results[key] = exc
    else:
        for name, t, _, args in jobs:
            try:
                results[(name, t)] = _run_cell(args)
            except GohrError as exc:
                results[(name, t)] = exc

    records_by_rule: dict[str, list[EpisodeRecord]] = {}
    for name, t, seed, _ in jobs:
        outcome = results[(name, t)]
        cell = {"rule": name, "trial": t, "seed": seed}
        if isinstance(outcome, Exception):
            cell["status"] = "error"
            cell["error"] = str(outcome)
        else:
            cell["status"] = "ok"
            records_by_rule.setdefault(name, []).extend(
                EpisodeRecord(trial=t, episode=e, errors=err, cleared=clr,
                              moves=mv)
                for e, (err, mv, clr) in enumerate(
                    zip(outcome.episode_errors, outcome.episode_moves,
                        outcome.episode_cleared)))
            _write_trial_outputs(outdir / name, outcome)
        manifest["cells"].append(cell)

    for name in records_by_rule:
        write_records(outdir / name / "records.csv", records_by_rule[name])

    if records_by_rule:
        export_tables(records_by_rule, outdir / "analysis",
                      bootstraps=config.bootstraps,
                      confidence=config.confidence, seed=config.seed)

    (outdir / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return outdir


def _write_trial_outputs(rule_dir: Path, result: TrialResult) -> None:
    if result.transcripts is None:
        return
    tdir = rule_dir / "transcripts"
    tdir.mkdir(parents=True, exist_ok=True)
    path = tdir / f"trial_{result.trial:03d}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "move_index", "row", "col", "bucket",
                    "verdict", "reason", "reward"])
        for episode, transcript in enumerate(result.transcripts):
            for i, (move, judgment) in enumerate(transcript, start=1):
                w.writerow([episode, i, move.row, move.col, move.bucket,
                            judgment.verdict.value, judgment.reason.value,
                            judgment.reward])


def write_records(path, records: list[EpisodeRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda r: (r.trial, r.episode))
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "episode", "errors", "cleared", "moves"])
        for r in ordered:
            w.writerow([r.trial, r.episode, r.errors, int(r.cleared), r.moves])


def read_records(path) -> list[EpisodeRecord]:
    records = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(EpisodeRecord(
                trial=int(row["trial"]), episode=int(row["episode"]),
                errors=int(row["errors"]), cleared=bool(int(row["cleared"])),
                moves=int(row["moves"])))
    return records


def analyze_directory(indir, outdir=None, bootstraps: int = 50_000,
                      confidence: float = 0.95, seed: int = 0) -> Path:
    """Re-run the analysis exports over an experiment's records."""
    indir = Path(indir)
    records_by_rule = {}
    for records_file in sorted(indir.glob("*/records.csv")):
        records_by_rule[records_file.parent.name] = read_records(records_file)
    if not records_by_rule:
        raise ConfigError(f"no */records.csv found under {indir}")
    target = Path(outdir) if outdir is not None else indir / "analysis"
    export_tables(records_by_rule, target, bootstraps=bootstraps,
                  confidence=confidence, seed=seed)
    return target


def run_from_manifest(manifest_path, outdir, jobs: int = 1) -> Path:
    """Reproduce an experiment directory from its manifest alone."""
    data = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    if data.get("manifest_version") != MANIFEST_VERSION:
        raise ConfigError(
            f"unsupported manifest version {data.get('manifest_version')}")
    config = config_from_dict(data["config"], jobs=jobs)
    return run_experiment(config, outdir)
