"""Embedding-based utility: averaged reference embeddings and simple scorers.

Sentence embeddings are read from a store file rather than computed by a
neural encoder.  Scorers map (hypothesis, reference, source) embeddings to a
scalar.  ``dot`` and ``bilinear`` are affine in the reference, so averaging
the references first gives exactly the mean pairwise score; ``cosine`` is
not, and there aggregation is an approximation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np

from .errors import IncompatibleConfigError, StoreFormatError
from .metrics import Metric

SCORER_KINDS = ("cosine_hyp_ref", "dot_hyp_ref", "bilinear")


class MissingEmbeddingError(KeyError):
    pass


@dataclass
class EmbeddingStore:
    dim: Optional[int] = None
    table: Dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self):
        return len(self.table)

    def add(self, text: str, vector) -> None:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.ndim != 1 or vec.size == 0:
            raise ValueError("embedding must be a non-empty 1-d vector")
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"non-finite value in embedding for {text!r}")
        if self.dim is None:
            self.dim = vec.size
        elif vec.size != self.dim:
            raise IncompatibleConfigError(f"expected dimension {self.dim}, got {vec.size}")
        if text in self.table:
            raise KeyError(f"duplicate text {text!r}")
        vec.setflags(write=False)
        self.table[text] = vec

    def lookup(self, text: str) -> np.ndarray:
        try:
            return self.table[text]
        except KeyError:
            raise MissingEmbeddingError(f"no embedding stored for text {text!r}") from None


def load_store(path) -> EmbeddingStore:
    """Read a line-delimited JSON file of ``{"text": ..., "vector": [...]}`` records."""
    path = Path(path)
    store = EmbeddingStore()
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise StoreFormatError(path, lineno, f"malformed JSON: {e.msg}") from None
            if not isinstance(rec, dict) or not isinstance(rec.get("text"), str) \
                    or not isinstance(rec.get("vector"), list):
                raise StoreFormatError(path, lineno, "record needs a string 'text' and a list 'vector'")
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in rec["vector"]):
                raise StoreFormatError(path, lineno, "vector entries must be numbers")
            try:
                store.add(rec["text"], rec["vector"])
            except IncompatibleConfigError as e:
                raise StoreFormatError(path, lineno, f"dimension mismatch: {e}") from None
            except KeyError:
                raise StoreFormatError(path, lineno, f"duplicate text {rec['text']!r}") from None
            except ValueError as e:
                raise StoreFormatError(path, lineno, str(e)) from None
    return store


@dataclass(frozen=True)
class ScorerSpec:
    kind: str
    matrix: Optional[np.ndarray] = None
    bias: float = 0.0

    def __post_init__(self):
        if self.kind not in SCORER_KINDS:
            raise ValueError(f"unknown scorer kind {self.kind!r}; expected one of {SCORER_KINDS}")
        if not np.isfinite(self.bias):
            raise ValueError("scorer bias must be finite")
        if self.kind == "bilinear":
            if self.matrix is None:
                raise ValueError("bilinear scorer needs a matrix")
            mat = np.asarray(self.matrix, dtype=np.float64)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError(f"bilinear matrix must be square, got shape {mat.shape}")
            if not np.all(np.isfinite(mat)):
                raise ValueError("bilinear matrix must be finite")
            object.__setattr__(self, "matrix", mat)

    def check_dim(self, dim: int) -> None:
        if self.kind == "bilinear" and self.matrix.shape[0] != dim:
            raise IncompatibleConfigError(
                f"bilinear matrix is {self.matrix.shape[0]}x{self.matrix.shape[1]}, embeddings have dim {dim}")


def load_scorer(path) -> ScorerSpec:
    with open(path, encoding="utf-8") as f:
        obj = json.load(f)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError(f"{path}: scorer file must be an object with a 'kind' field")
    return ScorerSpec(obj["kind"], obj.get("matrix"), float(obj.get("bias", 0.0)))


def _weighted_mean_rows(mat: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # shifted form keeps the mean of identical rows bit-exact
    base = mat[0]
    return base + (weights[:, None] * (mat - base)).sum(axis=0) / weights.sum()


def aggregate_embedding(refs: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise mean of the reference embeddings."""
    if len(refs) == 0:
        raise ValueError("aggregate_embedding needs at least one vector")
    dims = {np.shape(r) for r in refs}
    if len(dims) != 1:
        raise IncompatibleConfigError(f"embeddings of different shapes: {sorted(dims)}")
    mat = np.asarray(refs, dtype=np.float64)
    return _weighted_mean_rows(mat, np.ones(len(refs)))


def score(hyp, ref, src, scorer: ScorerSpec) -> float:
    hyp = np.asarray(hyp, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if hyp.shape != ref.shape:
        raise IncompatibleConfigError(f"hyp dim {hyp.shape} != ref dim {ref.shape}")
    scorer.check_dim(hyp.shape[0])
    if scorer.kind == "dot_hyp_ref":
        return float(hyp @ ref) + scorer.bias
    if scorer.kind == "bilinear":
        return float(hyp @ (scorer.matrix @ ref)) + scorer.bias
    nh = np.linalg.norm(hyp)
    nr = np.linalg.norm(ref)
    if nh == 0.0 or nr == 0.0:
        return 0.0
    return float(hyp @ ref) / (nh * nr)


@dataclass
class EmbeddingBatch:
    vectors: np.ndarray
    source: np.ndarray

    def __len__(self):
        return self.vectors.shape[0]


class EmbeddingMetric(Metric):
    def __init__(self, store: EmbeddingStore, scorer: ScorerSpec):
        if store.dim is not None:
            scorer.check_dim(store.dim)
        self.store = store
        self.scorer = scorer
        self.name = f"embedding:{scorer.kind}"

    def featurize(self, texts, source=""):
        if self.store.dim is None:
            raise MissingEmbeddingError("embedding store is empty")
        vectors = np.array([self.store.lookup(t) for t in texts], dtype=np.float64)
        return EmbeddingBatch(vectors.reshape(len(texts), self.store.dim), self.store.lookup(source))

    def score_block(self, hyp_feats, hyp_rows, ref_feats, ref_rows):
        h = hyp_feats.vectors[np.asarray(hyp_rows, dtype=np.int64)]
        r = ref_feats.vectors[np.asarray(ref_rows, dtype=np.int64)]
        kind = self.scorer.kind
        if kind == "dot_hyp_ref":
            return h @ r.T + self.scorer.bias
        if kind == "bilinear":
            return h @ (self.scorer.matrix @ r.T) + self.scorer.bias
        hn = np.linalg.norm(h, axis=1)
        rn = np.linalg.norm(r, axis=1)
        denom = np.outer(hn, rn)
        out = np.zeros(denom.shape)
        np.divide(h @ r.T, denom, out=out, where=denom != 0.0)
        return out

    def aggregate(self, feats, groups):
        rows = [_weighted_mean_rows(feats.vectors[np.asarray(r, dtype=np.int64)], np.asarray(w, dtype=np.float64))
                for r, w in groups]
        return EmbeddingBatch(np.array(rows).reshape(len(groups), feats.vectors.shape[1]), feats.source)
