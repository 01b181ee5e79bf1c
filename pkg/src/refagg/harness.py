"""Accuracy sweeps and timing benchmarks for the efficiency strategies.

Accuracy is measured the way approximate MBR methods are usually judged:
how often a method places the exact (standard MBR) winner within its top
``k`` hypotheses.
"""
from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from .engine import (CandidateSet, FeatureCache, SelectionReport, Strategy, prepare, select,
                     select_standard)
from .errors import InvalidStrategyError, RefaggError, SegmentError
from .metrics import Metric

DEFAULT_ALPHABET = "abcdefghijklmnopqrstuvwxyz"
SWEEP_METHODS = ("partial", "nbys", "aggregate", "agg2fine", "cross")


def synthetic_sentence(rng: np.random.Generator, alphabet: str = DEFAULT_ALPHABET,
                       min_words: int = 10, max_words: int = 40,
                       min_word_len: int = 1, max_word_len: int = 8) -> str:
    """Space-separated words of uniform random characters; word and sentence
    lengths are uniform over the given inclusive ranges."""
    if not 1 <= min_words <= max_words or not 1 <= min_word_len <= max_word_len:
        raise ValueError(f"bad length ranges: words {min_words}..{max_words}, "
                         f"word length {min_word_len}..{max_word_len}")
    chars = np.array(list(alphabet))
    n_words = int(rng.integers(min_words, max_words + 1))
    lens = rng.integers(min_word_len, max_word_len + 1, size=n_words)
    return " ".join("".join(rng.choice(chars, size=int(k))) for k in lens)


def synthetic_segment(seg_id: str, n: int, m: Optional[int] = None, seed: int = 0,
                      **sentence_kw) -> CandidateSet:
    """Random segment; with ``m`` unset (or equal to ``n``) the hypotheses double as references."""
    rng = np.random.default_rng(seed)
    hyps = [synthetic_sentence(rng, **sentence_kw) for _ in range(n)]
    if m is None or m == n:
        return CandidateSet(seg_id, "", hyps)
    refs = [synthetic_sentence(rng, **sentence_kw) for _ in range(m)]
    return CandidateSet(seg_id, "", hyps, refs)


def synthetic_dataset(segments: int, n: int, seed: int = 0, **sentence_kw) -> List[CandidateSet]:
    return [synthetic_segment(f"seg{i}", n, seed=seed ^ i, **sentence_kw) for i in range(segments)]


def topk_accuracy(baseline: SelectionReport, candidate: SelectionReport, k: int) -> bool:
    """True if the baseline's selection is among the candidate's first ``k`` ranks."""
    if baseline.id != candidate.id:
        raise ValueError(f"segment mismatch: {baseline.id!r} vs {candidate.id!r}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return baseline.selected_index in candidate.ranking[:k].tolist()


def default_s_values(m: int) -> List[int]:
    """``m`` followed by the powers of two below it, down to 1."""
    out = [m]
    p = 1 << (m.bit_length() - 1)
    if p == m:
        p >>= 1
    while p >= 1:
        out.append(p)
        p >>= 1
    return out


@dataclass
class SweepPoint:
    s: int
    accuracy: float
    mean_metric_calls: float
    mean_wall_nanos: float


@dataclass
class AccuracyReport:
    method: str
    metric: str
    k: int
    segments: int
    points: List[SweepPoint] = field(default_factory=list)

    def to_record(self) -> dict:
        return {"method": self.method, "metric": self.metric, "k": self.k,
                "segments": self.segments,
                "points": [{"s": p.s, "accuracy": p.accuracy,
                            "mean_metric_calls": p.mean_metric_calls,
                            "mean_wall_nanos": p.mean_wall_nanos} for p in self.points]}


def _method_strategy(method: str, s: int, m: int) -> Strategy:
    name, _, arg = method.partition(":")
    if name == "partial":
        return Strategy("partial", s=s)
    if name == "nbys":
        return Strategy("n_by_s", s=s)
    if name == "aggregate":
        return Strategy("aggregate")
    if name == "agg2fine":
        return Strategy("coarse_to_fine", T=int(arg or 20), proxy=Strategy("partial", s=s))
    if name == "cross":
        return Strategy("partial", s=s)
    raise InvalidStrategyError(f"unknown sweep method {method!r}")


def run_sweep(dataset: Sequence[CandidateSet], metric: Metric, methods: Iterable[str],
              s_values: Optional[Sequence[int]] = None, k_values: Sequence[int] = (1, 20),
              seed: int = 0, metrics: Optional[Mapping[str, Metric]] = None,
              timing: bool = False) -> List[AccuracyReport]:
    """Top-k accuracy of each method against standard MBR, for each ``s``.

    Methods: ``partial``, ``nbys``, ``aggregate`` (single point at s=1),
    ``agg2fine[:T]`` (partial aggregation with ``s`` groups as the pruning
    proxy) and ``cross:METRIC`` (rank with another metric, scored against
    this metric's standard MBR).  Segment ``i`` uses seed ``seed ^ i``.
    With ``timing`` off wall times are reported as 0 so output is reproducible.
    """
    if not dataset:
        raise ValueError("sweep needs at least one segment")
    methods = list(methods)
    min_m = min(c.m for c in dataset)
    s_values = sorted(set(s_values or default_s_values(min_m)), reverse=True)
    if s_values[-1] < 1 or s_values[0] > min_m:
        raise InvalidStrategyError(f"s values must lie in 1..{min_m}")

    caches: List[FeatureCache] = [prepare(c, metric) for c in dataset]
    baselines = [select_standard(c, metric, cache=cache) for c, cache in zip(dataset, caches)]

    reports = []
    for method in methods:
        name, _, arg = method.partition(":")
        run_metric = metric
        if name == "cross":
            if not metrics or arg not in metrics:
                raise InvalidStrategyError(f"cross method needs a known metric, got {arg!r}")
            run_metric = metrics[arg]
        points_s = [1] if name == "aggregate" else s_values
        hits: Dict[int, List[int]] = {k: [] for k in k_values}
        per_s = []
        for s in points_s:
            strategy = _method_strategy(method, s, min_m)
            calls, walls = [], []
            counts = {k: 0 for k in k_values}
            for i, (cands, cache, base) in enumerate(zip(dataset, caches, baselines)):
                rep = select(cands, run_metric, strategy, seed=seed ^ i, cache=cache, metrics=metrics)
                calls.append(rep.stats.metric_calls)
                walls.append(rep.stats.wall_nanos if timing else 0)
                for k in k_values:
                    counts[k] += topk_accuracy(base, rep, k)
            per_s.append((s, counts, float(np.mean(calls)), float(np.mean(walls))))
        for k in k_values:
            rep = AccuracyReport(method, metric.name, k, len(dataset))
            for s, counts, c, w in per_s:
                rep.points.append(SweepPoint(s, counts[k] / len(dataset), c, w))
            reports.append(rep)
    return reports


def write_reports(reports: Sequence[AccuracyReport], fh) -> None:
    for rep in reports:
        fh.write(json.dumps(rep.to_record(), sort_keys=True) + "\n")


def format_table(reports: Sequence[AccuracyReport]) -> str:
    """One row per (method, s), one accuracy column per k."""
    by_method: Dict[str, List[AccuracyReport]] = {}
    for rep in reports:
        by_method.setdefault(rep.method, []).append(rep)
    lines = []
    for method, reps in by_method.items():
        reps = sorted(reps, key=lambda r: r.k)
        header = f"{'method':<16}{'s':>8}" + "".join(f"{'top-' + str(r.k):>10}" for r in reps) \
            + f"{'calls':>14}"
        lines.append(header)
        for j, point in enumerate(reps[0].points):
            row = f"{method:<16}{point.s:>8}"
            row += "".join(f"{r.points[j].accuracy:>10.3f}" for r in reps)
            row += f"{point.mean_metric_calls:>14.1f}"
            lines.append(row)
        lines.append("")
    return "\n".join(lines)


@dataclass
class BenchRow:
    strategy: str
    metric_calls: List[int]
    wall_nanos: List[int]

    @property
    def median_nanos(self) -> float:
        return statistics.median(self.wall_nanos)


def bench_utility(cands: CandidateSet, metric: Metric, strategies: Sequence[Strategy],
                  repetitions: int = 5, seed: int = 0) -> List[BenchRow]:
    """Time utility estimation for each strategy on one segment.

    Features are extracted once up front and shared, so the timings cover
    scoring and aggregation only.
    """
    cache = prepare(cands, metric)
    rows = []
    for strategy in strategies:
        row = BenchRow(str(strategy), [], [])
        for _ in range(repetitions):
            rep = select(cands, metric, strategy, seed=seed, cache=cache)
            row.metric_calls.append(rep.stats.metric_calls)
            row.wall_nanos.append(rep.stats.wall_nanos)
        rows.append(row)
    return rows


def format_bench(rows: Sequence[BenchRow]) -> str:
    base = rows[0].median_nanos if rows else 1.0
    lines = [f"{'strategy':<24}{'metric calls':>14}{'median ms':>12}{'speedup':>10}"]
    for r in rows:
        lines.append(f"{r.strategy:<24}{r.metric_calls[0]:>14}{r.median_nanos / 1e6:>12.2f}"
                     f"{base / max(r.median_nanos, 1):>9.1f}x")
    return "\n".join(lines)
