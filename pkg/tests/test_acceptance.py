"""Exit criteria for the build, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary under "acceptance criteria".
"""
import contextlib
import io
import random
import statistics
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS
from refagg.chrf import ChrfParams, chrf_score
from refagg.embedding import EmbeddingMetric, EmbeddingStore, ScorerSpec, aggregate_embedding, score
from refagg.engine import (CandidateSet, Strategy, select, select_aggregate, select_coarse_to_fine,
                           select_n_by_s, select_partial, select_standard)
from refagg.harness import (bench_utility, run_sweep, synthetic_dataset, synthetic_segment,
                            write_reports)
from refagg.metrics import ChrfMetric
from refagg.ngram_bag import extract
from refagg.oracles import MIXED_ALPHABET, naive_chrf, random_text

TOL = 1e-9


class _Detail:
    text = ""


@contextlib.contextmanager
def criterion(num, title):
    detail = _Detail()
    try:
        yield detail
    except BaseException as e:
        ACCEPTANCE_RESULTS.append((num, title, "FAIL", detail.text or f"{type(e).__name__}: {e}"))
        raise
    ACCEPTANCE_RESULTS.append((num, title, "PASS", detail.text))


def _rand_cands(rng, seg, max_n=32, max_m=32, max_len=12, alphabet="abcde "):
    n, m = rng.randint(1, max_n), rng.randint(1, max_m)
    hyps = [random_text(rng, max_len, alphabet) for _ in range(n)]
    refs = [random_text(rng, max_len, alphabet) for _ in range(m)]
    return CandidateSet(seg, "", hyps, refs)


def test_1_chrf_oracle_equivalence():
    with criterion(1, "ChrF matches naive transcription on 10,000 pairs") as d:
        rng = random.Random(20240601)
        start = time.perf_counter()
        worst = 0.0
        pairs = 10_000
        for _ in range(pairs):
            a, b = random_text(rng, 40, MIXED_ALPHABET), random_text(rng, 40, MIXED_ALPHABET)
            worst = max(worst, abs(chrf_score(extract(a, 6), extract(b, 6)) - naive_chrf(a, b)))
        elapsed = time.perf_counter() - start
        d.text = f"pairs={pairs} max_dev={worst:.2e} runtime={elapsed:.1f}s"
        assert worst <= TOL
        assert elapsed < 60


def test_2_partial_aggregation_fixed_points():
    with criterion(2, "partial(s=m) == standard, partial(s=1) == aggregate") as d:
        metric = ChrfMetric()
        rng = random.Random(2)
        worst = 0.0
        for k in range(1000):
            cands = _rand_cands(rng, f"s{k}")
            std, agg = select_standard(cands, metric), select_aggregate(cands, metric)
            full = select_partial(cands, metric, cands.m, seed=k)
            one = select_partial(cands, metric, 1, seed=k)
            worst = max(worst, float(np.max(np.abs(full.utilities - std.utilities))),
                        float(np.max(np.abs(one.utilities - agg.utilities))))
            assert full.ranking.tolist() == std.ranking.tolist()
            assert one.ranking.tolist() == agg.ranking.tolist()
        d.text = f"instances=1000 max_dev={worst:.2e}"
        assert worst <= TOL


def _embedding_segment(rng, n, m, dim, identical=False):
    store = EmbeddingStore()
    hyps = [f"h{i}" for i in range(n)]
    refs = [f"r{i}" for i in range(m)]
    shared = rng.normal(size=dim)
    for t in hyps + ["src"]:
        store.add(t, rng.normal(size=dim))
    for t in refs:
        store.add(t, shared if identical else rng.normal(size=dim))
    return store, CandidateSet("e", "src", hyps, refs)


def test_3_exactness_cases_and_divergence(divergence):
    with criterion(3, "m=1 / identical references exact; stored divergence fixtures") as d:
        rng = random.Random(3)
        chrf = ChrfMetric()
        worst = 0.0
        for k in range(200):
            cands = _rand_cands(rng, f"x{k}", max_m=1)
            r = rng.choice(cands.references + cands.hypotheses)
            same = CandidateSet(f"y{k}", "", cands.hypotheses, [r] * rng.randint(1, 12))
            for c in (cands, same):
                worst = max(worst, float(np.max(np.abs(
                    select_aggregate(c, chrf).utilities - select_standard(c, chrf).utilities))))
        nrng = np.random.default_rng(3)
        for k in range(200):
            dim = int(nrng.integers(1, 65))
            for identical, m in ((False, 1), (True, int(nrng.integers(2, 10)))):
                store, cands = _embedding_segment(nrng, int(nrng.integers(1, 10)), m, dim, identical)
                for spec in (ScorerSpec("dot_hyp_ref", bias=0.3),
                             ScorerSpec("bilinear", nrng.normal(size=(dim, dim)), -1.0)):
                    metric = EmbeddingMetric(store, spec)
                    worst = max(worst, float(np.max(np.abs(
                        select_aggregate(cands, metric).utilities - select_standard(cands, metric).utilities))))
        assert worst <= TOL

        gaps = []
        for case in divergence["chrf"]:
            metric = ChrfMetric(ChrfParams(beta=case["beta"], max_order=case["max_order"]))
            cands = CandidateSet("div", "", [case["hyp"]], case["refs"])
            pw = select_standard(cands, metric).utilities[0]
            ag = select_aggregate(cands, metric).utilities[0]
            assert pw == pytest.approx(case["pairwise"], abs=TOL)
            assert ag == pytest.approx(case["aggregate"], abs=TOL)
            gaps.append(abs(pw - ag))
        for case in divergence["cosine"]:
            store = EmbeddingStore()
            store.add("h", case["hyp"])
            store.add("src", np.zeros(len(case["hyp"])))
            for i, r in enumerate(case["refs"]):
                store.add(f"r{i}", r)
            metric = EmbeddingMetric(store, ScorerSpec("cosine_hyp_ref"))
            cands = CandidateSet("cos", "src", ["h"], [f"r{i}" for i in range(len(case["refs"]))])
            pw = select_standard(cands, metric).utilities[0]
            ag = select_aggregate(cands, metric).utilities[0]
            assert pw == pytest.approx(case["pairwise"], abs=TOL)
            assert ag == pytest.approx(case["aggregate"], abs=TOL)
            gaps.append(abs(pw - ag))
        d.text = f"max_dev={worst:.2e} divergence_gaps={[round(float(g), 4) for g in gaps]}"
        assert min(gaps) > 1e-3


def test_4_linear_scorer_identity():
    with criterion(4, "dot/bilinear aggregate == mean pairwise on 1,000 instances") as d:
        rng = np.random.default_rng(4)
        worst = 0.0
        for k in range(1000):
            dim = int(rng.integers(1, 65))
            kind = "dot_hyp_ref" if k % 2 == 0 else "bilinear"
            spec = ScorerSpec(kind, rng.normal(size=(dim, dim)) if kind == "bilinear" else None,
                              float(rng.normal()))
            h, src = rng.normal(size=dim), rng.normal(size=dim)
            refs = list(rng.normal(size=(int(rng.integers(1, 17)), dim)))
            pairwise = sum(score(h, r, src, spec) for r in refs) / len(refs)
            agg = score(h, aggregate_embedding(refs), src, spec)
            worst = max(worst, abs(agg - pairwise))
        d.text = f"instances=1000 max_dev={worst:.2e}"
        assert worst <= TOL


def test_5_complexity_contract():
    with criterion(5, "metric calls n*m, n, n*s, n+T*m") as d:
        rng = random.Random(5)
        metric = ChrfMetric()
        checked = 0
        for k in range(200):
            cands = _rand_cands(rng, f"c{k}", max_n=24, max_m=24, max_len=8)
            n, m = cands.n, cands.m
            s, T = rng.randint(1, m), rng.randint(1, n)
            assert select_standard(cands, metric).stats.metric_calls == n * m
            assert select_aggregate(cands, metric).stats.metric_calls == n
            assert select_partial(cands, metric, s, k).stats.metric_calls == n * s
            assert select_n_by_s(cands, metric, s, k).stats.metric_calls == n * s
            assert select(cands, metric, Strategy("aggregate_to_fine", T=T)).stats.metric_calls == n + T * m
            checked += 1
        d.text = f"instances={checked} (5 strategies each)"


def test_6_scaled_timing_claim():
    with criterion(6, "aggregate ChrF >= 50x faster than pairwise at n=m=1024") as d:
        cands = synthetic_segment("bench", 1024, seed=6, min_words=10, max_words=40)
        rows = bench_utility(cands, ChrfMetric(), [Strategy("standard"), Strategy("aggregate")],
                             repetitions=5)
        std, agg = rows
        assert std.metric_calls == [1024 * 1024] * 5
        assert agg.metric_calls == [1024] * 5
        speedup = std.median_nanos / agg.median_nanos
        d.text = (f"standard={std.median_nanos / 1e9:.3f}s aggregate={agg.median_nanos / 1e9:.4f}s "
                  f"speedup={speedup:.0f}x (reduction {100 * (1 - 1 / speedup):.1f}%)")
        assert speedup >= 50


def test_7_coarse_to_fine_soundness():
    with criterion(7, "coarse-to-fine T=n exact; T=20 exact when proxy keeps the winner") as d:
        rng = random.Random(7)
        metric = ChrfMetric()
        for k in range(1000):
            cands = _rand_cands(rng, f"t{k}", max_len=10)
            full = select_coarse_to_fine(cands, Strategy("aggregate"), metric, cands.n)
            assert full.selected_index == select_standard(cands, metric).selected_index
        eligible = 0
        for k in range(1000):
            n = rng.randint(21, 40)
            hyps = [random_text(rng, 14, "abcdef ") for _ in range(n)]
            cands = CandidateSet(f"p{k}", "", hyps, [random_text(rng, 14, "abcdef ")
                                                      for _ in range(rng.randint(1, 32))])
            std = select_standard(cands, metric)
            proxy = select_aggregate(cands, metric)
            if std.selected_index not in proxy.ranking[:20].tolist():
                continue
            eligible += 1
            pruned = select_coarse_to_fine(cands, Strategy("aggregate"), metric, 20)
            assert pruned.selected_index == std.selected_index
        d.text = f"T=n instances=1000, T=20 eligible instances={eligible}/1000"
        assert eligible > 0


def test_8_sweep_fixed_points():
    with criterion(8, "sweep accuracy 1.000 at s=m for partial and N-by-S; reproducible") as d:
        metric = ChrfMetric()
        dataset = synthetic_dataset(50, 32, seed=8, min_words=3, max_words=12)

        def run():
            reports = run_sweep(dataset, metric, ["partial", "nbys"], k_values=(1, 20), seed=8)
            buf = io.StringIO()
            write_reports(reports, buf)
            return reports, buf.getvalue()

        reports, first = run()
        _, second = run()
        for rep in reports:
            top = rep.points[0]
            assert top.s == 32 and top.accuracy == 1.0, (rep.method, rep.k, top)
        assert first == second
        d.text = f"segments=50 reports={len(reports)} identical_bytes={first == second}"


def test_9_published_numbers_out_of_scope():
    with criterion(9, "published accuracy and quality figures not reproduced (need NMT samples, neural metrics)") as d:
        d.text = "informational; covered by criteria 1-8"
