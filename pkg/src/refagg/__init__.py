"""Minimum-Bayes-risk selection with reference aggregation."""
from .chrf import ChrfParams, aggregate_chrf, chrf_score, pairwise_mean_chrf
from .embedding import (EmbeddingMetric, EmbeddingStore, ScorerSpec, aggregate_embedding,
                        load_scorer, load_store, score)
from .engine import (CandidateSet, SelectionReport, Stats, Strategy, dedup_references,
                     parse_strategy, select, select_aggregate, select_coarse_to_fine,
                     select_n_by_s, select_partial, select_standard)
from .metrics import ChrfMetric, Metric
from .ngram_bag import NGramBag, extract, overlap, weighted_sum

__version__ = "0.1.0"
