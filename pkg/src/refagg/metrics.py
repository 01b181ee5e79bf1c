"""Utility-metric backends used by the MBR engine.

A backend turns the texts of one segment into a feature batch once, then
scores blocks of (hypothesis, reference) rows and builds aggregate
references as weighted means of reference rows.  The engine does all call
accounting; backends only compute.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import _kernels
from .chrf import ChrfParams
from .ngram_bag import extract

# (row indices into the feature batch, weights normalised to sum to 1)
Group = Tuple[np.ndarray, np.ndarray]


class Metric(ABC):
    name: str

    @abstractmethod
    def featurize(self, texts: Sequence[str], source: str):
        """Extract features for ``texts``; row ``i`` of the result is ``texts[i]``."""

    @abstractmethod
    def score_block(self, hyp_feats, hyp_rows, ref_feats, ref_rows) -> np.ndarray:
        """Matrix ``M[a, b] = metric(hyp_rows[a], ref_rows[b])``."""

    @abstractmethod
    def aggregate(self, feats, groups: Sequence[Group]):
        """One aggregate reference per group, returned as a new feature batch."""


@dataclass
class PackedBags:
    indptr: np.ndarray
    ids: np.ndarray
    counts: np.ndarray
    totals: np.ndarray
    id_order: np.ndarray

    def __len__(self):
        return self.totals.shape[0]


def _pack(rows_ids, rows_counts, id_order, max_order):
    lengths = [len(r) for r in rows_ids]
    indptr = np.zeros(len(rows_ids) + 1, dtype=np.int64)
    np.cumsum(lengths, out=indptr[1:])
    ids = np.concatenate(rows_ids).astype(np.int64) if rows_ids else np.zeros(0, np.int64)
    counts = np.concatenate(rows_counts).astype(np.float64) if rows_counts else np.zeros(0)
    totals = np.zeros((len(rows_ids), max_order))
    for r in range(len(rows_ids)):
        lo, hi = indptr[r], indptr[r + 1]
        if hi > lo:
            totals[r] = np.bincount(id_order[ids[lo:hi]] - 1, weights=counts[lo:hi],
                                    minlength=max_order)
    return PackedBags(indptr, ids, counts, totals, id_order)


class ChrfMetric(Metric):
    """ChrF backend; features are character n-gram bags packed into CSR arrays."""

    def __init__(self, params: ChrfParams = ChrfParams()):
        self.params = params
        self.name = "chrf"

    def featurize(self, texts, source=""):
        vocab: Dict[str, int] = {}
        orders: List[int] = []
        rows_ids, rows_counts = [], []
        for text in texts:
            bag = extract(text, self.params.max_order, self.params.strip_whitespace)
            ids, counts = [], []
            for gram, c in bag.items():
                g = vocab.get(gram)
                if g is None:
                    g = vocab[gram] = len(orders)
                    orders.append(len(gram))
                ids.append(g)
                counts.append(c)
            ids = np.asarray(ids, dtype=np.int64)
            order = np.argsort(ids, kind="stable")
            rows_ids.append(ids[order])
            rows_counts.append(np.asarray(counts, dtype=np.float64)[order])
        id_order = np.asarray(orders, dtype=np.int64)
        return _pack(rows_ids, rows_counts, id_order, self.params.max_order)

    def score_block(self, hyp_feats, hyp_rows, ref_feats, ref_rows):
        p = self.params
        hyp_rows = np.asarray(hyp_rows, dtype=np.int64)
        ref_rows = np.asarray(ref_rows, dtype=np.int64)
        args = (hyp_feats.indptr, hyp_feats.ids, hyp_feats.counts, hyp_feats.totals, hyp_rows,
                ref_feats.indptr, ref_feats.ids, ref_feats.counts, ref_feats.totals, ref_rows,
                hyp_feats.id_order)
        vocab_size = len(hyp_feats.id_order)
        hyp_entries = int(np.sum(hyp_feats.indptr[hyp_rows + 1] - hyp_feats.indptr[hyp_rows]))
        if len(ref_rows) * vocab_size <= 8 * hyp_entries:
            return _kernels.chrf_matrix_dense(*args, vocab_size, float(p.beta),
                                              bool(p.effective_order), float(p.scale))
        return _kernels.chrf_matrix(*args, float(p.beta), bool(p.effective_order), float(p.scale))

    def aggregate(self, feats, groups):
        rows_ids, rows_counts = [], []
        for rows, weights in groups:
            parts_ids, parts_w = [], []
            for r, w in zip(rows, weights):
                lo, hi = feats.indptr[r], feats.indptr[r + 1]
                parts_ids.append(feats.ids[lo:hi])
                parts_w.append(w * feats.counts[lo:hi])
            ids = np.concatenate(parts_ids)
            vals = np.concatenate(parts_w)
            vocab_size = len(feats.id_order)
            if 4 * len(ids) >= vocab_size:
                # dense accumulation is linear; cheaper than sorting once the group is large
                dense = np.bincount(ids, weights=vals, minlength=vocab_size)
                uniq = np.flatnonzero(dense)
                summed = dense[uniq]
            else:
                uniq, inverse = np.unique(ids, return_inverse=True)
                summed = np.bincount(inverse, weights=vals, minlength=len(uniq))
                keep = summed > 0
                uniq, summed = uniq[keep], summed[keep]
            rows_ids.append(uniq)
            rows_counts.append(summed)
        return _pack(rows_ids, rows_counts, feats.id_order, self.params.max_order)
