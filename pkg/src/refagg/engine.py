"""Hypothesis selection under the different utility-estimation strategies.

Every strategy materialises a utility for each hypothesis and a full
ranking.  Ties go to the lowest hypothesis index.  ``stats.metric_calls``
counts (hypothesis, reference) scoring evaluations exactly:

===================  ===============
standard             n * m
aggregate            n
partial(s)           n * s
n_by_s(s)            n * s
coarse_to_fine(T)    proxy + T * m
===================  ===============
"""
from __future__ import annotations

import contextlib
import time
from dataclasses import dataclass, field, asdict
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import InvalidStrategyError, SegmentError
from .metrics import Metric


@dataclass
class CandidateSet:
    id: str
    source: str
    hypotheses: List[str]
    references: Optional[List[str]] = None

    def __post_init__(self):
        if self.references is None:
            self.references = list(self.hypotheses)
        if not self.hypotheses:
            raise ValueError(f"segment {self.id!r} has no hypotheses")
        if not self.references:
            raise ValueError(f"segment {self.id!r} has no references")

    @property
    def n(self) -> int:
        return len(self.hypotheses)

    @property
    def m(self) -> int:
        return len(self.references)


@dataclass(frozen=True)
class Strategy:
    kind: str
    s: Optional[int] = None
    T: Optional[int] = None
    proxy: Optional["Strategy"] = None
    proxy_metric: Optional[str] = None

    KINDS = ("standard", "aggregate", "partial", "n_by_s", "aggregate_to_fine", "coarse_to_fine")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidStrategyError(f"unknown strategy {self.kind!r}")
        if self.kind in ("partial", "n_by_s") and (self.s is None or self.s < 1):
            raise InvalidStrategyError(f"{self.kind} needs s >= 1, got {self.s}")
        if self.kind in ("aggregate_to_fine", "coarse_to_fine") and (self.T is None or self.T < 1):
            raise InvalidStrategyError(f"{self.kind} needs T >= 1, got {self.T}")
        if self.kind == "coarse_to_fine" and self.proxy is None:
            raise InvalidStrategyError("coarse_to_fine needs a proxy strategy")
        if self.proxy is not None and self.proxy.kind in ("aggregate_to_fine", "coarse_to_fine"):
            raise InvalidStrategyError("proxy strategy cannot itself be coarse-to-fine")

    def __str__(self):
        if self.kind in ("standard", "aggregate"):
            return self.kind
        if self.kind == "partial":
            return f"partial:{self.s}"
        if self.kind == "n_by_s":
            return f"nbys:{self.s}"
        if self.kind == "aggregate_to_fine":
            return f"agg2fine:{self.T}"
        out = f"coarse2fine:{self.T}:{self.proxy_metric or '-'}"
        if self.proxy.kind != "standard":
            out += f":{self.proxy}"
        return out


def parse_strategy(text: str) -> Strategy:
    """Parse ``standard``, ``aggregate``, ``partial:S``, ``nbys:S``, ``agg2fine:T``
    or ``coarse2fine:T:METRIC[:PROXY]`` where PROXY is any non-pruning strategy."""
    parts = text.strip().split(":")
    head = parts[0]

    def _int(tok, what):
        try:
            return int(tok)
        except ValueError:
            raise InvalidStrategyError(f"{text!r}: {what} must be an integer, got {tok!r}") from None

    if head in ("standard", "aggregate") and len(parts) == 1:
        return Strategy(head)
    if head in ("partial", "nbys") and len(parts) == 2:
        return Strategy("partial" if head == "partial" else "n_by_s", s=_int(parts[1], "s"))
    if head == "agg2fine" and len(parts) == 2:
        return Strategy("aggregate_to_fine", T=_int(parts[1], "T"))
    if head == "coarse2fine" and len(parts) >= 3:
        proxy = parse_strategy(":".join(parts[3:])) if len(parts) > 3 else Strategy("standard")
        metric = None if parts[2] in ("", "-") else parts[2]
        return Strategy("coarse_to_fine", T=_int(parts[1], "T"), proxy=proxy, proxy_metric=metric)
    raise InvalidStrategyError(f"cannot parse strategy {text!r}")


@dataclass
class Stats:
    metric_calls: int = 0
    aggregation_ops: int = 0
    wall_nanos: int = 0
    feature_nanos: int = 0

    def add(self, other: "Stats") -> None:
        self.metric_calls += other.metric_calls
        self.aggregation_ops += other.aggregation_ops
        self.wall_nanos += other.wall_nanos
        self.feature_nanos += other.feature_nanos


@dataclass
class SelectionReport:
    id: str
    strategy: str
    metric: str
    utilities: np.ndarray
    ranking: np.ndarray
    stats: Stats = field(default_factory=Stats)
    survivors: Optional[np.ndarray] = None

    @property
    def selected_index(self) -> int:
        return int(self.ranking[0])

    def to_record(self, cands: CandidateSet, emit_utilities=False, timing=True) -> dict:
        stats = asdict(self.stats)
        if not timing:
            stats["wall_nanos"] = 0
            stats["feature_nanos"] = 0
        rec = {"id": self.id, "selected": cands.hypotheses[self.selected_index],
               "selected_index": self.selected_index, "strategy": self.strategy}
        if emit_utilities:
            rec["utilities"] = [float(u) for u in self.utilities]
        rec["stats"] = stats
        return rec


class _Features:
    """Feature batch for the distinct texts of one segment under one metric."""

    def __init__(self, cands: CandidateSet, metric: Metric):
        self.metric = metric
        texts: Dict[str, int] = {}
        for t in list(cands.hypotheses) + list(cands.references):
            texts.setdefault(t, len(texts))
        t0 = time.perf_counter_ns()
        self.feats = metric.featurize(list(texts), cands.source)
        self.nanos = time.perf_counter_ns() - t0
        self.hyp_rows = np.array([texts[t] for t in cands.hypotheses], dtype=np.int64)
        self.ref_rows = np.array([texts[t] for t in cands.references], dtype=np.int64)


FeatureCache = Dict[tuple, _Features]


def _key(cands, metric):
    return cands.id, id(metric), hash((tuple(cands.hypotheses), tuple(cands.references)))


def prepare(cands: CandidateSet, metric: Metric, cache: Optional[FeatureCache] = None) -> FeatureCache:
    """Extract features for ``cands`` under ``metric`` into ``cache``.

    Passing the returned cache to the select functions lets several
    strategies (or both phases of coarse-to-fine) reuse one extraction.
    """
    if cache is None:
        cache = {}
    key = _key(cands, metric)
    if key not in cache:
        cache[key] = _Features(cands, metric)
    return cache


def _features(cands, metric, cache, stats: Stats) -> _Features:
    key = _key(cands, metric)
    if cache is not None and key in cache:
        return cache[key]
    f = _Features(cands, metric)
    stats.feature_nanos += f.nanos
    if cache is not None:
        cache[key] = f
    return f


@contextlib.contextmanager
def _segment_errors(cands):
    try:
        yield
    except (SegmentError, InvalidStrategyError):
        raise
    except Exception as e:
        raise SegmentError(cands.id, f"{type(e).__name__}: {e}") from e


def _ref_weights(cands, weights) -> Optional[np.ndarray]:
    if weights is None:
        return None
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (cands.m,):
        raise ValueError(f"expected {cands.m} reference weights, got {w.shape}")
    if np.any(w < 0) or not w.sum() > 0:
        raise ValueError("reference weights must be non-negative with a positive sum")
    return w


def _rank(utilities: np.ndarray) -> np.ndarray:
    # stable sort on negated utilities: equal values keep ascending index order
    return np.argsort(-utilities, kind="stable")


def _means(mat, weights):
    if weights is None:
        return _kernels.row_means(np.ascontiguousarray(mat))
    return _kernels.weighted_row_means(np.ascontiguousarray(mat), weights)


def _report(cands, metric, strategy, utilities, stats, t0):
    stats.wall_nanos += time.perf_counter_ns() - t0
    return SelectionReport(cands.id, strategy, metric.name, utilities, _rank(utilities), stats)


def select_standard(cands: CandidateSet, metric: Metric, weights=None,
                    cache: Optional[FeatureCache] = None) -> SelectionReport:
    """Mean utility of each hypothesis against every reference."""
    stats = Stats()
    with _segment_errors(cands):
        w = _ref_weights(cands, weights)
        f = _features(cands, metric, cache, stats)
        t0 = time.perf_counter_ns()
        mat = metric.score_block(f.feats, f.hyp_rows, f.feats, f.ref_rows)
        stats.metric_calls += mat.size
        return _report(cands, metric, "standard", _means(mat, w), stats, t0)


def _score_groups(cands, metric, f, groups, stats):
    aggs = metric.aggregate(f.feats, groups)
    stats.aggregation_ops += sum(len(rows) for rows, _ in groups)
    mat = metric.score_block(f.feats, f.hyp_rows, aggs, np.arange(len(groups)))
    stats.metric_calls += mat.size
    return mat


def _group(f, idx, w):
    rows = f.ref_rows[idx]
    gw = np.ones(len(idx)) if w is None else w[idx]
    return rows, gw / gw.sum()


def select_aggregate(cands: CandidateSet, metric: Metric, weights=None,
                     cache: Optional[FeatureCache] = None) -> SelectionReport:
    """Score each hypothesis once against the mean of all references."""
    stats = Stats()
    with _segment_errors(cands):
        w = _ref_weights(cands, weights)
        f = _features(cands, metric, cache, stats)
        t0 = time.perf_counter_ns()
        mat = _score_groups(cands, metric, f, [_group(f, np.arange(cands.m), w)], stats)
        return _report(cands, metric, "aggregate", mat[:, 0].copy(), stats, t0)


def _check_s(cands, s):
    if not 1 <= s <= cands.m:
        raise InvalidStrategyError(f"segment {cands.id!r}: s={s} outside 1..{cands.m}")


def partition_references(m: int, s: int, seed: int) -> List[np.ndarray]:
    """Randomly split ``range(m)`` into ``s`` groups whose sizes differ by at most one.

    Membership is random; each group is sorted and groups are ordered by their
    first member, so that s=m and s=1 accumulate in plain reference order.
    """
    if not 1 <= s <= m:
        raise InvalidStrategyError(f"s={s} outside 1..{m}")
    perm = np.random.default_rng(seed).permutation(m)
    groups = [np.sort(g) for g in np.array_split(perm, s)]
    groups.sort(key=lambda g: g[0])
    return groups


def select_partial(cands: CandidateSet, metric: Metric, s: int, seed: int = 0, weights=None,
                   cache: Optional[FeatureCache] = None) -> SelectionReport:
    """Average utility against ``s`` aggregates of disjoint random reference groups."""
    _check_s(cands, s)
    stats = Stats()
    with _segment_errors(cands):
        w = _ref_weights(cands, weights)
        f = _features(cands, metric, cache, stats)
        t0 = time.perf_counter_ns()
        groups = [_group(f, idx, w) for idx in partition_references(cands.m, s, seed)]
        mat = _score_groups(cands, metric, f, groups, stats)
        return _report(cands, metric, f"partial:{s}", _means(mat, None), stats, t0)


def sample_references(m: int, s: int, seed: int) -> np.ndarray:
    """``s`` distinct reference indices drawn without replacement, in ascending order."""
    if not 1 <= s <= m:
        raise InvalidStrategyError(f"s={s} outside 1..{m}")
    return np.sort(np.random.default_rng(seed).choice(m, size=s, replace=False))


def select_n_by_s(cands: CandidateSet, metric: Metric, s: int, seed: int = 0, weights=None,
                  cache: Optional[FeatureCache] = None) -> SelectionReport:
    """Pairwise utility against a random subset of ``s`` references."""
    _check_s(cands, s)
    stats = Stats()
    with _segment_errors(cands):
        w = _ref_weights(cands, weights)
        f = _features(cands, metric, cache, stats)
        t0 = time.perf_counter_ns()
        idx = sample_references(cands.m, s, seed)
        mat = metric.score_block(f.feats, f.hyp_rows, f.feats, f.ref_rows[idx])
        stats.metric_calls += mat.size
        return _report(cands, metric, f"nbys:{s}", _means(mat, None if w is None else w[idx]), stats, t0)


def select_coarse_to_fine(cands: CandidateSet, proxy_strategy: Strategy, target_metric: Metric,
                          T: int, proxy_metric: Optional[Metric] = None, seed: int = 0,
                          weights=None, cache: Optional[FeatureCache] = None,
                          label: Optional[str] = None) -> SelectionReport:
    """Keep the top ``T`` hypotheses under a proxy utility, then rerank them with
    standard pairwise utility over all references.

    Survivors come first in the ranking, ordered by the target utility; the
    pruned hypotheses follow in proxy order and keep their proxy utilities.
    """
    if not 1 <= T <= cands.n:
        raise InvalidStrategyError(f"segment {cands.id!r}: T={T} outside 1..{cands.n}")
    if cache is None:
        cache = {}
    proxy_metric = proxy_metric or target_metric
    proxy = select(cands, proxy_metric, proxy_strategy, seed=seed, weights=weights, cache=cache)
    stats = Stats()
    stats.add(proxy.stats)
    with _segment_errors(cands):
        w = _ref_weights(cands, weights)
        f = _features(cands, target_metric, cache, stats)
        t0 = time.perf_counter_ns()
        survivors = np.sort(proxy.ranking[:T])
        mat = target_metric.score_block(f.feats, f.hyp_rows[survivors], f.feats, f.ref_rows)
        stats.metric_calls += mat.size
        fine = _means(mat, w)
        utilities = proxy.utilities.astype(np.float64, copy=True)
        utilities[survivors] = fine
        keep = np.zeros(cands.n, dtype=bool)
        keep[survivors] = True
        ranking = np.concatenate([survivors[_rank(fine)], proxy.ranking[~keep[proxy.ranking]]])
        stats.wall_nanos += time.perf_counter_ns() - t0
    name = label or (f"agg2fine:{T}" if proxy_strategy.kind == "aggregate" and proxy_metric is target_metric
                     else f"coarse2fine:{T}:{proxy_metric.name}:{proxy_strategy}")
    return SelectionReport(cands.id, name, target_metric.name, utilities, ranking, stats, survivors)


def select(cands: CandidateSet, metric: Metric, strategy: Strategy, seed: int = 0, weights=None,
           cache: Optional[FeatureCache] = None,
           metrics: Optional[Mapping[str, Metric]] = None) -> SelectionReport:
    """Run ``strategy`` on one segment.  ``metrics`` resolves coarse-to-fine proxy metric names."""
    kind = strategy.kind
    if kind == "standard":
        return select_standard(cands, metric, weights, cache)
    if kind == "aggregate":
        return select_aggregate(cands, metric, weights, cache)
    if kind == "partial":
        return select_partial(cands, metric, strategy.s, seed, weights, cache)
    if kind == "n_by_s":
        return select_n_by_s(cands, metric, strategy.s, seed, weights, cache)
    if kind == "aggregate_to_fine":
        return select_coarse_to_fine(cands, Strategy("aggregate"), metric, strategy.T,
                                     seed=seed, weights=weights, cache=cache, label=str(strategy))
    proxy_metric = metric
    if strategy.proxy_metric is not None:
        if not metrics or strategy.proxy_metric not in metrics:
            raise InvalidStrategyError(f"unknown proxy metric {strategy.proxy_metric!r}")
        proxy_metric = metrics[strategy.proxy_metric]
    return select_coarse_to_fine(cands, strategy.proxy, metric, strategy.T, proxy_metric,
                                 seed=seed, weights=weights, cache=cache, label=str(strategy))


def dedup_references(cands: CandidateSet) -> Tuple[CandidateSet, List[int]]:
    """Collapse repeated references into unique ones with integer multiplicities."""
    counts: Dict[str, int] = {}
    for r in cands.references:
        counts[r] = counts.get(r, 0) + 1
    uniq = CandidateSet(cands.id, cands.source, list(cands.hypotheses), list(counts))
    return uniq, list(counts.values())
