"""Command-line front end: ``refagg {select,sweep,bench,oracle-check}``.

Input segments are JSON lines with ``id``, ``source``, ``hypotheses`` and an
optional ``references`` list (defaults to the hypotheses).  ``select`` writes
one JSON line per segment, in input order, with ``id``, ``selected``,
``selected_index``, ``strategy``, optional ``utilities`` and
``stats{metric_calls, aggregation_ops, wall_nanos, feature_nanos}``.
Timings are written as 0 unless ``--timing`` is given, so that repeated runs
produce identical files.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional

from .chrf import ChrfParams
from .embedding import EmbeddingMetric, load_scorer, load_store
from .engine import CandidateSet, Strategy, dedup_references, parse_strategy, select
from .errors import InvalidStrategyError, RefaggError
from .harness import (bench_utility, format_bench, format_table, run_sweep, synthetic_dataset,
                      synthetic_segment, write_reports)
from .metrics import ChrfMetric, Metric
from .oracles import run_oracle_checks

DEFAULT_SEED = 1234
logger = logging.getLogger("refagg")


class UsageError(Exception):
    pass


def read_segments(path) -> List[CandidateSet]:
    segments = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise RefaggError(f"{where}: malformed JSON: {e.msg}") from None
            if not isinstance(rec, dict):
                raise RefaggError(f"{where}: expected a JSON object")
            seg_id = rec.get("id")
            hyps = rec.get("hypotheses")
            refs = rec.get("references")
            if not isinstance(seg_id, str):
                raise RefaggError(f"{where}: 'id' must be a string")
            if seg_id in seen:
                raise RefaggError(f"{where}: duplicate segment id {seg_id!r}")
            if not isinstance(hyps, list) or not hyps or not all(isinstance(h, str) for h in hyps):
                raise RefaggError(f"{where}: segment {seg_id!r}: 'hypotheses' must be a non-empty list of strings")
            if refs is not None and (not isinstance(refs, list) or not refs
                                     or not all(isinstance(r, str) for r in refs)):
                raise RefaggError(f"{where}: segment {seg_id!r}: 'references' must be a non-empty list of strings")
            source = rec.get("source", "")
            if not isinstance(source, str):
                raise RefaggError(f"{where}: segment {seg_id!r}: 'source' must be a string")
            seen.add(seg_id)
            segments.append(CandidateSet(seg_id, source, hyps, refs))
    return segments


def build_metrics(args) -> Dict[str, Metric]:
    """All metrics the configuration makes available, keyed by name."""
    metrics: Dict[str, Metric] = {
        "chrf": ChrfMetric(ChrfParams(beta=args.beta, max_order=args.max_order))}
    if args.embeddings or args.scorer:
        if not (args.embeddings and args.scorer):
            raise UsageError("--embeddings and --scorer must be given together")
        metrics["embedding"] = EmbeddingMetric(load_store(args.embeddings), load_scorer(args.scorer))
    if args.metric not in metrics:
        raise UsageError(f"metric {args.metric!r} needs --embeddings and --scorer")
    return metrics


def _select_one(job):
    index, cands, metric_name, metrics, strategy, seed, dedup, emit_utilities, timing = job
    weights = None
    if dedup:
        cands_eff, weights = dedup_references(cands)
    else:
        cands_eff = cands
    rep = select(cands_eff, metrics[metric_name], strategy, seed=seed ^ index,
                 weights=weights, metrics=metrics)
    return rep.to_record(cands, emit_utilities=emit_utilities, timing=timing)


def _write_atomic(path, lines):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".refagg-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            for line in lines:
                f.write(line + "\n")
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def cmd_select(args) -> int:
    strategy = parse_strategy(args.strategy)
    metrics = build_metrics(args)
    segments = read_segments(args.input)
    jobs = [(i, c, args.metric, metrics, strategy, args.seed, args.dedup, args.emit_utilities,
             args.timing) for i, c in enumerate(segments)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            records = list(pool.map(_select_one, jobs))
    else:
        records = [_select_one(j) for j in jobs]
    lines = [json.dumps(r, ensure_ascii=False) for r in records]
    if args.output:
        _write_atomic(args.output, lines)
    else:
        sys.stdout.write("".join(line + "\n" for line in lines))
    return 0


def _int_list(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from None


def cmd_sweep(args) -> int:
    metrics = build_metrics(args)
    if args.input:
        dataset = read_segments(args.input)
    elif args.synthetic:
        try:
            segs, n = (int(x) for x in args.synthetic.split(":"))
        except ValueError:
            raise UsageError("--synthetic expects SEGMENTS:N") from None
        dataset = synthetic_dataset(segs, n, seed=args.seed, min_words=args.min_words,
                                    max_words=args.max_words)
    else:
        raise UsageError("sweep needs --input or --synthetic")
    methods = [m for m in args.methods.split(",") if m]
    reports = run_sweep(dataset, metrics[args.metric], methods, s_values=_int_list(args.s_values),
                        k_values=_int_list(args.k) or [1, 20], seed=args.seed, metrics=metrics,
                        timing=args.timing)
    if args.output:
        _write_atomic(args.output, [json.dumps(r.to_record(), sort_keys=True) for r in reports])
    print(format_table(reports))
    return 0


def cmd_bench(args) -> int:
    metrics = build_metrics(args)
    strategies = [parse_strategy(s) for s in args.strategies.split(",") if s]
    cands = synthetic_segment("bench", args.n, args.m, seed=args.seed, min_words=args.min_words,
                              max_words=args.max_words)
    rows = bench_utility(cands, metrics[args.metric], strategies, args.repetitions, seed=args.seed)
    if args.output:
        _write_atomic(args.output, [json.dumps({"strategy": r.strategy, "metric_calls": r.metric_calls,
                                                "wall_nanos": r.wall_nanos,
                                                "median_nanos": r.median_nanos}) for r in rows])
    print(format_bench(rows))
    return 0


def cmd_oracle_check(args) -> int:
    results = run_oracle_checks(seed=args.seed, instances=args.instances, fault=args.inject_fault)
    ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name:<22} instances={r.instances:<6} max_dev={r.max_deviation:.3e}")
        ok &= r.passed
    return 0 if ok else 1


def _add_common(p):
    p.add_argument("--metric", choices=("chrf", "embedding"), default="chrf")
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--max-order", type=int, default=6)
    p.add_argument("--embeddings", help="JSON-lines embedding store")
    p.add_argument("--scorer", help="JSON scorer spec")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--output")
    p.add_argument("--timing", action="store_true", help="record wall-clock times in the output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="refagg", description="MBR selection with reference aggregation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="pick one hypothesis per segment")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--strategy", default="standard")
    p.add_argument("--dedup", action="store_true", help="collapse duplicate references into weights")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--emit-utilities", action="store_true")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("sweep", help="top-k accuracy against standard MBR over effective references")
    _add_common(p)
    p.add_argument("--input")
    p.add_argument("--synthetic", help="SEGMENTS:N random dataset instead of --input")
    p.add_argument("--methods", default="partial,nbys")
    p.add_argument("--k", default="1,20")
    p.add_argument("--s-values")
    p.add_argument("--min-words", type=int, default=10)
    p.add_argument("--max-words", type=int, default=40)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="time utility estimation on a synthetic segment")
    _add_common(p)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--m", type=int)
    p.add_argument("--strategies", default="standard,aggregate")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--min-words", type=int, default=10)
    p.add_argument("--max-words", type=int, default=40)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle-check", help="compare fast paths against naive implementations")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--instances", type=int, default=2000)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (UsageError, InvalidStrategyError) as e:
        print(f"refagg: usage error: {e}", file=sys.stderr)
        return 2
    except (RefaggError, OSError, ValueError, KeyError) as e:
        print(f"refagg: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
