import io

import numpy as np
import pytest

from refagg.engine import CandidateSet, SelectionReport, Strategy, select_standard
from refagg.harness import (bench_utility, default_s_values, format_table, run_sweep,
                            synthetic_dataset, synthetic_segment, topk_accuracy, write_reports)


def _report(seg, ranking):
    ranking = np.asarray(ranking)
    return SelectionReport(seg, "x", "m", np.zeros(len(ranking)), ranking)


def test_topk_examples():
    base = _report("a", [3, 0, 1, 2])
    assert topk_accuracy(base, base, 1)
    assert topk_accuracy(base, _report("a", [0, 1, 2, 3]), 4)
    ranking = list(range(30))
    ranking.remove(21)
    ranking.insert(20, 21)
    cand = _report("b", ranking)
    assert cand.ranking[20] == 21
    assert not topk_accuracy(_report("b", [21] + [i for i in range(30) if i != 21]), cand, 20)
    assert topk_accuracy(_report("b", [21] + [i for i in range(30) if i != 21]), cand, 21)
    with pytest.raises(ValueError):
        topk_accuracy(base, _report("z", [0]), 1)


def test_topk_monotone_in_k():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 30))
        base = _report("s", rng.permutation(n))
        cand = _report("s", rng.permutation(n))
        hits = [topk_accuracy(base, cand, k) for k in range(1, n + 2)]
        assert hits == sorted(hits)
        assert hits[n - 1]


def test_default_s_values():
    assert default_s_values(1024)[:3] == [1024, 512, 256] and default_s_values(1024)[-1] == 1
    assert default_s_values(12) == [12, 8, 4, 2, 1]
    assert default_s_values(1) == [1]


def test_synthetic_generator_is_seeded():
    a = synthetic_segment("a", 5, seed=3, min_words=2, max_words=4)
    b = synthetic_segment("a", 5, seed=3, min_words=2, max_words=4)
    assert a.hypotheses == b.hypotheses and a.references == a.hypotheses
    assert all(2 <= len(h.split()) <= 4 for h in a.hypotheses)
    c = synthetic_segment("c", 4, 6, seed=1, alphabet="xy")
    assert len(c.references) == 6 and set("".join(c.hypotheses)) <= set("xy ")


@pytest.fixture(scope="module")
def toy():
    return synthetic_dataset(8, 16, seed=5, min_words=3, max_words=8)


def test_sweep_fixed_points(toy, chrf):
    reports = run_sweep(toy, chrf, ["partial", "nbys"], k_values=(1, 5, 16), seed=2)
    for rep in reports:
        assert [p.s for p in rep.points] == [16, 8, 4, 2, 1]
        assert rep.points[0].accuracy == 1.0
        if rep.k == 16:
            assert all(p.accuracy == 1.0 for p in rep.points)
        assert all(0.0 <= p.accuracy <= 1.0 for p in rep.points)
        for p in rep.points:
            assert p.mean_metric_calls == 16 * p.s


def test_sweep_accuracy_monotone_in_k(toy, chrf):
    reports = run_sweep(toy, chrf, ["partial", "nbys"], k_values=(1, 2, 5), seed=2)
    for method in ("partial", "nbys"):
        reps = sorted((r for r in reports if r.method == method), key=lambda r: r.k)
        for j in range(len(reps[0].points)):
            accs = [r.points[j].accuracy for r in reps]
            assert accs == sorted(accs)


def test_sweep_other_methods(toy, chrf, chrf2):
    reports = run_sweep(toy, chrf, ["aggregate", "agg2fine:4", "cross:small"], k_values=(1,),
                        s_values=[16, 1], seed=0, metrics={"small": chrf2})
    by = {r.method: r for r in reports}
    assert [p.s for p in by["aggregate"].points] == [1]
    assert by["aggregate"].points[0].mean_metric_calls == 16
    assert [p.mean_metric_calls for p in by["agg2fine:4"].points] == [16 * 16 + 4 * 16, 16 + 4 * 16]
    assert by["agg2fine:4"].points[0].accuracy == 1.0


def test_sweep_is_reproducible(toy, chrf):
    def run():
        buf = io.StringIO()
        write_reports(run_sweep(toy, chrf, ["partial", "nbys"], seed=9), buf)
        return buf.getvalue()
    assert run() == run()


def test_sweep_table(toy, chrf):
    table = format_table(run_sweep(toy, chrf, ["partial"], k_values=(1, 20)))
    lines = table.splitlines()
    assert "top-1" in lines[0] and "top-20" in lines[0]
    assert lines[1].split()[:4] == ["partial", "16", "1.000", "1.000"]


def test_sweep_validation(chrf):
    with pytest.raises(ValueError):
        run_sweep([], chrf, ["partial"])
    with pytest.raises(Exception):
        run_sweep([CandidateSet("a", "", ["x", "y"])], chrf, ["partial"], s_values=[4])


def test_bench_counts(chrf):
    cands = synthetic_segment("b", 32, seed=0, min_words=2, max_words=5)
    rows = bench_utility(cands, chrf, [Strategy("standard"), Strategy("aggregate"),
                                       Strategy("partial", s=4)], repetitions=3)
    assert [r.metric_calls for r in rows] == [[1024] * 3, [32] * 3, [128] * 3]
    assert all(len(r.wall_nanos) == 3 and r.median_nanos > 0 for r in rows)
