"""Slow, literal reference implementations used to cross-check the fast paths.

Nothing here shares code with :mod:`refagg.ngram_bag`, :mod:`refagg.chrf`
or the compiled kernels.
"""
from __future__ import annotations

import random
from collections import Counter
from fractions import Fraction
from dataclasses import dataclass
from typing import Callable, List, Sequence

MIXED_ALPHABET = "abcdeABC" + "абвгдЖ" + "日本語" + "0123" + " \t.,"


def random_text(rng: random.Random, max_len: int, alphabet: str = MIXED_ALPHABET) -> str:
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, max_len)))


def _grams(text: str, order: int, strip_whitespace: bool = True) -> List[str]:
    if strip_whitespace:
        text = "".join(text.split())
    return [text[j:j + order] for j in range(len(text) - order + 1)]


def brute_overlap(hyp: str, ref: str, max_order: int) -> List[int]:
    """Per-order multiset intersection size by explicit matching and removal."""
    out = []
    for i in range(1, max_order + 1):
        pool = _grams(ref, i)
        matched = 0
        for g in _grams(hyp, i):
            if g in pool:
                pool.remove(g)
                matched += 1
        out.append(matched)
    return out


def naive_chrf(hyp: str, ref: str, beta: float = 2.0, max_order: int = 6,
               effective_order: bool = True, scale: float = 100.0) -> float:
    if not "".join(hyp.split()) and not "".join(ref.split()):
        return scale
    precisions, recalls = [], []
    for i in range(1, max_order + 1):
        h = Counter(_grams(hyp, i))
        r = Counter(_grams(ref, i))
        nh = sum(h.values())
        nr = sum(r.values())
        if nh == 0 and nr == 0:
            if effective_order:
                continue
            precisions.append(0.0)
            recalls.append(0.0)
            continue
        if nh == 0 or nr == 0:
            precisions.append(0.0)
            recalls.append(0.0)
            continue
        common = sum((h & r).values())
        precisions.append(common / nh)
        recalls.append(common / nr)
    if not precisions:
        return 0.0
    p = sum(precisions) / len(precisions)
    r = sum(recalls) / len(recalls)
    if p == 0 and r == 0:
        return 0.0
    return scale * ((1 + beta ** 2) * p * r / (beta ** 2 * p + r))


def exact_aggregate_chrf(hyp: str, refs: Sequence[str], beta: Fraction = Fraction(2),
                         max_order: int = 6, scale: int = 100) -> Fraction:
    """ChrF against the mean reference bag, in exact rational arithmetic
    (effective-order rules as in :func:`naive_chrf`)."""
    if not "".join(hyp.split()) and not any("".join(r.split()) for r in refs):
        return Fraction(scale)
    m = len(refs)
    precisions, recalls = [], []
    for i in range(1, max_order + 1):
        h = Counter(_grams(hyp, i))
        mean = Counter()
        for r in refs:
            for g, c in Counter(_grams(r, i)).items():
                mean[g] += Fraction(c, m)
        nh = sum(h.values())
        nr = sum(mean.values())
        if nh == 0 and nr == 0:
            continue
        if nh == 0 or nr == 0:
            precisions.append(Fraction(0))
            recalls.append(Fraction(0))
            continue
        common = sum(min(c, mean[g]) for g, c in h.items())
        precisions.append(common / nh)
        recalls.append(common / nr)
    if not precisions:
        return Fraction(0)
    p = sum(precisions) / len(precisions)
    r = sum(recalls) / len(recalls)
    if p == 0 and r == 0:
        return Fraction(0)
    return scale * (1 + beta ** 2) * p * r / (beta ** 2 * p + r)


def naive_mbr_utilities(hyps: Sequence[str], refs: Sequence[str],
                        metric: Callable[[str, str], float]) -> List[float]:
    utilities = []
    for h in hyps:
        total = 0.0
        for r in refs:
            total += metric(h, r)
        utilities.append(total / len(refs))
    return utilities


def naive_dot(a: Sequence[float], b: Sequence[float]) -> float:
    return sum(x * y for x, y in zip(a, b))


@dataclass
class SuiteResult:
    name: str
    instances: int
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


def run_oracle_checks(seed: int = 0, instances: int = 2000, fault: bool = False,
                      tolerance: float = 1e-9) -> List[SuiteResult]:
    """Compare the fast implementations against the naive ones on random inputs.

    ``fault`` perturbs every fast-path value, as a negative control.
    """
    import numpy as np

    from .chrf import ChrfParams, chrf_score
    from .engine import CandidateSet, select_aggregate, select_partial, select_standard
    from .metrics import ChrfMetric
    from .ngram_bag import extract, overlap

    bump = 1e-6 if fault else 0.0
    rng = random.Random(seed)
    results = []

    dev = 0.0
    for _ in range(instances):
        a = random_text(rng, 12, "abcd")
        b = random_text(rng, 12, "abcd")
        fast = overlap(extract(a, 6), extract(b, 6))
        dev = max(dev, max(abs(x + bump - y) for x, y in zip(fast, brute_overlap(a, b, 6))))
    results.append(SuiteResult("ngram_overlap", instances, dev, tolerance))

    dev = 0.0
    params = ChrfParams()
    for _ in range(instances):
        a = random_text(rng, 40)
        b = random_text(rng, 40)
        fast = chrf_score(extract(a, 6), extract(b, 6), params) + bump
        dev = max(dev, abs(fast - naive_chrf(a, b)))
    results.append(SuiteResult("chrf_score", instances, dev, tolerance))

    metric = ChrfMetric(ChrfParams())
    segments = max(1, instances // 20)
    dev = 0.0
    for k in range(segments):
        hyps = [random_text(rng, 6, "abc ") for _ in range(rng.randint(1, 8))]
        refs = [random_text(rng, 6, "abc ") for _ in range(rng.randint(1, 8))]
        rep = select_standard(CandidateSet(str(k), "", hyps, refs), metric)
        naive = naive_mbr_utilities(hyps, refs, naive_chrf)
        dev = max(dev, max(abs(u + bump - v) for u, v in zip(rep.utilities, naive)))
    results.append(SuiteResult("mbr_standard", segments, dev, tolerance))

    dev = 0.0
    for k in range(segments):
        hyps = [random_text(rng, 20, "abcdef ") for _ in range(rng.randint(1, 16))]
        refs = [random_text(rng, 20, "abcdef ") for _ in range(rng.randint(1, 16))]
        cands = CandidateSet(str(k), "", hyps, refs)
        std = select_standard(cands, metric).utilities
        agg = select_aggregate(cands, metric).utilities
        full = select_partial(cands, metric, cands.m, seed + k).utilities
        one = select_partial(cands, metric, 1, seed + k).utilities
        dev = max(dev, float(np.max(np.abs(full + bump - std))), float(np.max(np.abs(one - agg))))
    results.append(SuiteResult("partial_fixed_points", segments, dev, tolerance))
    return results
