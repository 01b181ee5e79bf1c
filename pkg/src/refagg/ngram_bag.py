"""Character n-gram bags and the arithmetic used by ChrF and reference aggregation.

A bag maps each n-gram (grouped by order) to a non-negative count.  Raw bags
extracted from text hold integer counts; aggregate bags produced by
:func:`weighted_sum` hold fractional ones.  Both are stored as floats.
"""
from __future__ import annotations

from collections import Counter
from typing import Dict, Iterable, List, Sequence, Tuple

from .errors import IncompatibleConfigError


class NGramBag:
    """Immutable sparse bag of character n-grams of orders ``1..max_order``."""

    __slots__ = ("max_order", "_counts", "_totals")

    def __init__(self, max_order: int, counts: Sequence[Dict[str, float]]):
        if max_order < 1:
            raise ValueError(f"max_order must be >= 1, got {max_order}")
        if len(counts) != max_order:
            raise ValueError(f"expected {max_order} per-order maps, got {len(counts)}")
        cleaned = []
        for i, table in enumerate(counts, start=1):
            sub = {}
            for gram, c in table.items():
                if len(gram) != i:
                    raise ValueError(f"n-gram {gram!r} stored under order {i}")
                if c < 0:
                    raise ValueError(f"negative count for {gram!r}")
                if c > 0:
                    sub[gram] = float(c)
            cleaned.append(sub)
        self.max_order = max_order
        self._counts: Tuple[Dict[str, float], ...] = tuple(cleaned)
        self._totals: Tuple[float, ...] = tuple(float(sum(t.values())) for t in cleaned)

    @property
    def totals(self) -> Tuple[float, ...]:
        """Per-order sum of counts, index 0 is order 1."""
        return self._totals

    def order(self, i: int) -> Dict[str, float]:
        """Read-only view of the order-``i`` sub-bag (1-based)."""
        return dict(self._counts[i - 1])

    def _order(self, i: int) -> Dict[str, float]:
        return self._counts[i - 1]

    def get(self, gram: str) -> float:
        if not 1 <= len(gram) <= self.max_order:
            return 0.0
        return self._counts[len(gram) - 1].get(gram, 0.0)

    def items(self) -> Iterable[Tuple[str, float]]:
        for table in self._counts:
            yield from table.items()

    def __len__(self):
        return sum(len(t) for t in self._counts)

    def is_empty(self) -> bool:
        return not any(self._counts)

    def __eq__(self, other):
        if not isinstance(other, NGramBag):
            return NotImplemented
        return self.max_order == other.max_order and self._counts == other._counts

    def __repr__(self):
        body = ", ".join(f"{i + 1}: {dict(t)}" for i, t in enumerate(self._counts))
        return f"NGramBag(max_order={self.max_order}, {{{body}}})"


def preprocess(text: str, strip_whitespace: bool = True) -> str:
    if strip_whitespace:
        return "".join(ch for ch in text if not ch.isspace())
    return text


def extract(text: str, max_order: int = 6, strip_whitespace: bool = True) -> NGramBag:
    """Count every contiguous character n-gram of ``text`` up to ``max_order``.

    Counting is case-sensitive.  With ``strip_whitespace`` all Unicode
    whitespace is dropped first, so n-grams may span word boundaries.
    """
    if max_order < 1:
        raise ValueError(f"max_order must be >= 1, got {max_order}")
    chars = preprocess(text, strip_whitespace)
    counts = []
    for i in range(1, max_order + 1):
        counts.append(Counter(chars[j:j + i] for j in range(len(chars) - i + 1)))
    return NGramBag(max_order, counts)


def _check_orders(bags: Iterable[NGramBag]) -> int:
    orders = {b.max_order for b in bags}
    if len(orders) > 1:
        raise IncompatibleConfigError(f"bags have different max_order values: {sorted(orders)}")
    return orders.pop()


def weighted_sum(bags: Sequence[NGramBag], weights: Sequence[float]) -> NGramBag:
    """Return the bag whose counts are ``sum_k weights[k] * bags[k]``.

    Uniform weights ``1/m`` give the aggregate (mean) reference.
    """
    if len(bags) != len(weights):
        raise ValueError(f"{len(bags)} bags but {len(weights)} weights")
    if not bags:
        raise ValueError("weighted_sum needs at least one bag")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative")
    max_order = _check_orders(bags)
    out: List[Dict[str, float]] = [{} for _ in range(max_order)]
    for bag, w in zip(bags, weights):
        for i in range(max_order):
            acc = out[i]
            for gram, c in bag._counts[i].items():
                acc[gram] = acc.get(gram, 0.0) + w * c
    return NGramBag(max_order, out)


def overlap(hyp: NGramBag, ref: NGramBag) -> List[float]:
    """Per-order sum of ``min(hyp[g], ref[g])``.

    Iterates the smaller sub-bag of each order and probes the larger one.
    """
    if hyp.max_order != ref.max_order:
        raise IncompatibleConfigError(
            f"max_order mismatch: hyp={hyp.max_order}, ref={ref.max_order}")
    result = []
    for a, b in zip(hyp._counts, ref._counts):
        if len(a) > len(b):
            a, b = b, a
        total = 0.0
        for gram, c in a.items():
            other = b.get(gram)
            if other is not None:
                total += c if c < other else other
        result.append(total)
    return result
