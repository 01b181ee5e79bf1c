"""ChrF scoring over n-gram bags (plain or aggregate)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import IncompatibleConfigError
from .ngram_bag import NGramBag, overlap

CHRF_ORDER = 6
CHRF_BETA = 2.0


@dataclass(frozen=True)
class ChrfParams:
    beta: float = CHRF_BETA
    max_order: int = CHRF_ORDER
    effective_order: bool = True
    scale: float = 100.0
    strip_whitespace: bool = True

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.max_order < 1:
            raise ValueError(f"max_order must be >= 1, got {self.max_order}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


def f_from_stats(matches: Sequence[float], hyp_totals: Sequence[float],
                 ref_totals: Sequence[float], beta: float, effective_order: bool,
                 scale: float) -> float:
    """Combine per-order match/total statistics into an F-score.

    An order where only one side has n-grams contributes zero precision and
    recall.  With ``effective_order`` an order where both sides are empty is
    left out of the averages.
    """
    prec = 0.0
    rec = 0.0
    used = 0
    for m, ht, rt in zip(matches, hyp_totals, ref_totals):
        if ht == 0.0 and rt == 0.0:
            if effective_order:
                continue
        elif ht > 0.0 and rt > 0.0:
            prec += m / ht
            rec += m / rt
        used += 1
    if hyp_totals[0] == 0.0 and ref_totals[0] == 0.0:
        return scale
    if used == 0:
        return 0.0
    prec /= used
    rec /= used
    if prec == 0.0 and rec == 0.0:
        return 0.0
    b2 = beta * beta
    return scale * ((1.0 + b2) * prec * rec / (b2 * prec + rec))


def chrf_score(hyp: NGramBag, ref: NGramBag, params: ChrfParams = ChrfParams()) -> float:
    """ChrF_beta of one hypothesis bag against one (possibly aggregate) reference bag."""
    if hyp.max_order != params.max_order or ref.max_order != params.max_order:
        raise IncompatibleConfigError(
            f"bags of order {hyp.max_order}/{ref.max_order} scored with max_order={params.max_order}")
    return f_from_stats(overlap(hyp, ref), hyp.totals, ref.totals,
                        params.beta, params.effective_order, params.scale)


def pairwise_mean_chrf(hyp: NGramBag, refs: Sequence[NGramBag],
                       params: ChrfParams = ChrfParams()) -> float:
    """Mean sentence-level ChrF against each reference separately."""
    if not refs:
        raise ValueError("pairwise_mean_chrf needs at least one reference")
    total = 0.0
    for ref in refs:
        total += chrf_score(hyp, ref, params)
    return total / len(refs)


def aggregate_chrf(hyp: NGramBag, agg_ref: NGramBag, params: ChrfParams = ChrfParams()) -> float:
    """ChrF against an aggregate reference bag; same contract as :func:`chrf_score`."""
    return chrf_score(hyp, agg_ref, params)
