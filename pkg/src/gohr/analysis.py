"""Difficulty metrics: cumulated-error curves, TCE, rank tests, exports.

The point-metric for a learning run is its Terminal Cumulated Error: the
running total of rejected moves after the final episode.  Two rules are
compared with a one-sided Mann-Whitney U test over their TCE samples
(ties count 0.5); U normalized by the number of pairs is the ease ratio.
Median curves carry percentile-bootstrap confidence intervals.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .seeding import make_rng

# Exact Mann-Whitney enumeration is used when both samples are smaller
# than this; larger samples use the tie-corrected normal approximation.
EXACT_TEST_LIMIT = 8


@dataclass(frozen=True)
class EpisodeRecord:
    trial: int
    episode: int  # 0-based, contiguous within a trial
    errors: int  # rejected moves in this episode
    cleared: bool
    moves: int

    def __post_init__(self):
        if not 0 <= self.errors <= self.moves:
            raise ValidationError(
                f"error count {self.errors} outside 0..moves ({self.moves})")


@dataclass(frozen=True)
class LearningCurve:
    trial: int
    cumulated: tuple  # running error total per episode

    @property
    def tce(self) -> int:
        return self.cumulated[-1]


def cumulate(records: list[EpisodeRecord]) -> LearningCurve:
    """Prefix-sum one trial's episode errors into its learning curve."""
    if not records:
        raise ValidationError("no episode records")
    trials = {r.trial for r in records}
    if len(trials) != 1:
        raise ValidationError(f"records span multiple trials: {sorted(trials)}")
    ordered = sorted(records, key=lambda r: r.episode)
    for i, record in enumerate(ordered):
        if record.episode != i:
            raise ValidationError(
                f"gap in episode indices: expected {i}, found {record.episode}")
    return LearningCurve(
        trial=ordered[0].trial,
        cumulated=tuple(np.cumsum([r.errors for r in ordered]).tolist()),
    )


def curve_matrix(curves: list[LearningCurve]) -> np.ndarray:
    if not curves:
        raise ValidationError("no curves")
    lengths = {len(c.cumulated) for c in curves}
    if len(lengths) != 1:
        raise ValidationError(f"curves have unequal lengths: {sorted(lengths)}")
    return np.array([c.cumulated for c in curves], dtype=np.float64)


def median_curve(curves: list[LearningCurve], bootstraps: int = 50_000,
                 confidence: float = 0.95, seed: int = 0
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-episode median with a percentile-bootstrap confidence band.

    Bootstrap replicates resample whole trials with replacement; the band
    spans the (1-confidence)/2 tails of the replicate medians.
    """
    if bootstraps < 1:
        raise ValidationError("bootstraps must be >= 1")
    if not 0 < confidence < 1:
        raise ValidationError("confidence must be in (0, 1)")
    data = curve_matrix(curves)  # (trials, episodes)
    # canonical row order makes the band exactly permutation-invariant
    # (resample indices are drawn once and bind to row positions)
    data = data[np.lexsort(data.T[::-1])]
    n_trials, n_episodes = data.shape
    median = np.median(data, axis=0)
    rng = make_rng(seed)
    resample = rng.integers(0, n_trials, size=(bootstraps, n_trials))
    lo_q = 100.0 * (1.0 - confidence) / 2.0
    hi_q = 100.0 - lo_q
    lo = np.empty(n_episodes)
    hi = np.empty(n_episodes)
    for e in range(n_episodes):
        boot_medians = np.median(data[:, e][resample], axis=1)
        lo[e], hi[e] = np.percentile(boot_medians, [lo_q, hi_q])
    return median, lo, hi


# --- Mann-Whitney U ------------------------------------------------------------

def u_statistic(a, b) -> float:
    """Pairwise count of a-values exceeding b-values, ties counting 0.5."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValidationError("samples must be non-empty")
    gt = (a[:, None] > b[None, :]).sum()
    eq = (a[:, None] == b[None, :]).sum()
    return float(gt) + 0.5 * float(eq)


def exact_p(a, b) -> float:
    """One-sided p by full enumeration of label assignments (handles ties)."""
    a = list(map(float, a))
    b = list(map(float, b))
    u_obs = u_statistic(a, b)
    pooled = np.array(a + b, dtype=np.float64)
    n = len(a)
    total = 0
    at_least = 0
    for picks in combinations(range(len(pooled)), n):
        mask = np.zeros(len(pooled), dtype=bool)
        mask[list(picks)] = True
        u = u_statistic(pooled[mask], pooled[~mask])
        total += 1
        # tolerance guards float .5 sums; U values are multiples of 0.5
        if u >= u_obs - 1e-9:
            at_least += 1
    return at_least / total


def normal_p(a, b) -> float:
    """One-sided p via the normal approximation, tie-corrected variance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    u = u_statistic(a, b)
    n_a, n_b = len(a), len(b)
    n = n_a + n_b
    mean = n_a * n_b / 2.0
    _, counts = np.unique(np.concatenate([a, b]), return_counts=True)
    tie_term = float(((counts ** 3) - counts).sum()) / (n * (n - 1.0)) if n > 1 else 0.0
    var = n_a * n_b / 12.0 * ((n + 1.0) - tie_term)
    if var <= 0.0:
        return 1.0 if u <= mean else 0.0
    z = (u - mean - 0.5) / math.sqrt(var)  # continuity-corrected
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(a, b) -> tuple[float, float]:
    """U statistic and one-sided p for the alternative "a exceeds b".

    Small samples (both below EXACT_TEST_LIMIT) get the exact enumeration
    p; larger ones the tie-corrected normal approximation.
    """
    u = u_statistic(a, b)
    if max(len(a), len(b)) < EXACT_TEST_LIMIT:
        return u, exact_p(a, b)
    return u, normal_p(a, b)


def ease_ratio(a, b) -> float:
    """Fraction of (a, b) run pairs where a exceeded b, ties half-weighted."""
    return u_statistic(a, b) / (len(a) * len(b))


# --- exports ---------------------------------------------------------------------

LEADERBOARD_FORMAT_VERSION = 1


def export_tables(records_by_rule: dict, outdir,
                  bootstraps: int = 50_000, confidence: float = 0.95,
                  seed: int = 0) -> list[Path]:
    """Write the analysis artifact set for one experiment.

    ``records_by_rule`` maps rule name -> list of EpisodeRecord (all
    trials).  Outputs, all deterministic for fixed inputs: curves.csv,
    tce.csv, pairwise.csv, median_curves.csv, leaderboard.json.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rules = sorted(records_by_rule)
    curves_by_rule = {}
    records_sorted = {}
    for rule in rules:
        by_trial: dict[int, list[EpisodeRecord]] = {}
        for record in records_by_rule[rule]:
            by_trial.setdefault(record.trial, []).append(record)
        curves_by_rule[rule] = [cumulate(by_trial[t]) for t in sorted(by_trial)]
        records_sorted[rule] = {
            t: sorted(by_trial[t], key=lambda r: r.episode)
            for t in sorted(by_trial)
        }

    written = []

    path = outdir / "curves.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rule", "trial", "episode", "errors", "cumulated"])
        for rule in rules:
            for trial, recs in records_sorted[rule].items():
                running = 0
                for r in recs:
                    running += r.errors
                    w.writerow([rule, trial, r.episode, r.errors, running])
    written.append(path)

    path = outdir / "tce.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rule", "trial", "tce"])
        for rule in rules:
            for curve in curves_by_rule[rule]:
                w.writerow([rule, curve.trial, curve.tce])
    written.append(path)

    path = outdir / "pairwise.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rule_a", "rule_b", "u", "p_a_harder", "ease_ratio_a_over_b"])
        for rule_a in rules:
            tce_a = [c.tce for c in curves_by_rule[rule_a]]
            for rule_b in rules:
                tce_b = [c.tce for c in curves_by_rule[rule_b]]
                u, p = mann_whitney_u(tce_a, tce_b)
                w.writerow([rule_a, rule_b, repr(u), repr(p),
                            repr(ease_ratio(tce_a, tce_b))])
    written.append(path)

    path = outdir / "median_curves.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rule", "episode", "median", "ci_low", "ci_high"])
        for rule in rules:
            med, lo, hi = median_curve(curves_by_rule[rule], bootstraps,
                                       confidence, seed)
            for e in range(len(med)):
                w.writerow([rule, e, repr(float(med[e])), repr(float(lo[e])),
                            repr(float(hi[e]))])
    written.append(path)

    path = outdir / "leaderboard.json"
    entries = []
    for rule in rules:
        tces = np.array([c.tce for c in curves_by_rule[rule]], dtype=np.float64)
        episodes = len(curves_by_rule[rule][0].cumulated)
        entries.append({
            "rule": rule,
            "trials": len(tces),
            "episodes": episodes,
            "tce": {
                "min": float(tces.min()),
                "q1": float(np.percentile(tces, 25)),
                "median": float(np.median(tces)),
                "q3": float(np.percentile(tces, 75)),
                "max": float(tces.max()),
                "mean": float(tces.mean()),
            },
        })
    payload = {
        "format_version": LEADERBOARD_FORMAT_VERSION,
        "bootstrap": {"resamples": bootstraps, "confidence": confidence,
                      "seed": seed},
        "entries": entries,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    written.append(path)

    return written
