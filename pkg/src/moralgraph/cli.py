"""Pipeline command line: elicit, build-propagate, evaluate, analyze.

Each subcommand reads files, writes files into an output directory, and
records a manifest (input content hashes, computation-relevant config,
seed, versions). Runs with equal manifests produce byte-identical outputs,
so the human and model corpora travel through exactly the same code path.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import (
    compare_dimension_subgraphs,
    dimension_norm_comparison,
    divergence,
    overall_morality,
)
from .data_io import (
    DIMENSIONS,
    Report,
    parse_moral_lexicon,
    parse_norm_lexicon,
    parse_responses,
    load_embeddings,
    write_corpus,
    write_report,
)
from .elicitation import ElicitationConfig, elicit_corpus
from .evaluation import embedding_precision, evaluate_gmn, precision_at_k
from .graph import build_graph, compute_stats, write_graph
from .propagation import (
    ALPHA_GRID,
    PropagationConfig,
    propagate,
    read_moral_scores,
    seed_matrix,
    subtract_seeds,
    tune_alpha,
    write_moral_scores,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class ValidationError(Exception):
    """Bad flags or missing inputs, detected before any computation."""


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _require(path_str: str | None, flag: str) -> Path:
    if not path_str:
        raise ValidationError(f"{flag} is required")
    path = Path(path_str)
    if not path.is_file():
        raise ValidationError(f"{flag}: no such file: {path}")
    return path


def _write_manifest(out_dir: Path, subcommand: str, config: dict, inputs: list[Path], seed: int) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "seed": seed,
        "versions": {
            "moralgraph": __version__,
            "python": ".".join(map(str, sys.version_info[:3])),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    with (out_dir / "manifest.json").open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_json(payload: dict, path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_cues(path: Path) -> list[str]:
    cues = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            cues.append(line)
    if not cues:
        raise ValidationError(f"cue file {path} is empty")
    return cues


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_elicit(args) -> int:
    cues_path = _require(args.cues, "--cues")
    if not args.endpoint.startswith(("http://", "https://")):
        raise ValidationError(f"--endpoint must be an http(s) URL, got {args.endpoint!r}")
    cues = _read_cues(cues_path)
    config = ElicitationConfig(
        endpoint=args.endpoint,
        model=args.model,
        temperature=args.temperature,
        repeats_per_cue=args.repeats,
        timeout=args.timeout,
        max_retries=args.max_retries,
        max_concurrent=args.max_concurrent,
    )
    out = _out_dir(args)
    result = elicit_corpus(cues, config, checkpoint_path=out / "completions.jsonl")
    write_corpus(result.corpus, out / "corpus.csv")
    _write_json(
        {
            "completed": result.completed,
            "failed": result.failed,
            "malformed_rate": result.malformed_rate,
            "flagged_cues": sorted(result.flagged_cues),
            "cue_errors": dict(sorted(result.cue_errors.items())),
        },
        out / "elicitation_summary.json",
    )
    _write_manifest(
        out,
        "elicit",
        {
            "endpoint": args.endpoint,
            "model": args.model,
            "temperature": args.temperature,
            "repeats": args.repeats,
            "timeout": args.timeout,
            "max_retries": args.max_retries,
            "max_concurrent": args.max_concurrent,
        },
        [cues_path],
        args.seed,
    )
    if result.completed == 0:
        print("error: no completion succeeded; check --endpoint", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"elicited {result.completed} completions for {len(cues)} cues -> {out / 'corpus.csv'}")
    return EXIT_OK


def cmd_build_propagate(args) -> int:
    corpus_path = _require(args.corpus, "--corpus")
    mfd_path = _require(args.mfd, "--mfd")
    emfd_path = None
    if args.alpha is None:
        emfd_path = _require(args.emfd, "--emfd (required when --alpha is not fixed)")
    out = _out_dir(args)

    corpus = parse_responses(corpus_path, args.source)
    graph = build_graph(corpus, corpus.cues())
    seeds_lexicon = parse_moral_lexicon(mfd_path, "hard")
    f0 = seed_matrix(graph, seeds_lexicon)

    if args.alpha is not None:
        alpha = args.alpha
        selection_meta = {"mode": "fixed", "alpha": alpha}
    else:
        tuning = parse_moral_lexicon(emfd_path, "soft")
        grid = tuple(args.alpha_grid) if args.alpha_grid else ALPHA_GRID
        selection = tune_alpha(
            graph, f0, tuning, grid,
            PropagationConfig(grid[0], args.mode, args.max_iterations, args.tolerance),
        )
        alpha = selection.alpha
        selection_meta = {
            "mode": "tuned",
            "alpha": alpha,
            "grid": [[a, rho] for a, rho in selection.correlations],
        }

    config = PropagationConfig(alpha, args.mode, args.max_iterations, args.tolerance)
    result = propagate(graph, f0, config)
    final, _ = subtract_seeds(result.matrix, f0, args.seed_handling)

    write_moral_scores(final, out / "gmn.csv")
    write_graph(graph, out / "nodes.csv", out / "edges.csv")
    stats = compute_stats(graph)
    write_report(
        Report(("statistic", "value"), sorted(vars(stats).items())),
        out / "graph_stats.csv",
    )
    _write_json(
        {
            "alpha": result.alpha,
            "propagation_mode": result.mode,
            "iterations": result.iterations,
            "residual": result.residual,
            "seed_handling": args.seed_handling,
            "seeded_nodes": f0.seeded_count(),
            "alpha_selection": selection_meta,
            "nodes": len(graph.nodes),
            "corpus_row_errors": len(corpus.row_errors),
            "lexicon_row_errors": len(seeds_lexicon.row_errors),
        },
        out / "gmn_meta.json",
    )
    inputs = [corpus_path, mfd_path] + ([emfd_path] if emfd_path else [])
    _write_manifest(
        out,
        "build-propagate",
        {
            "source": args.source,
            "alpha": args.alpha,
            "alpha_grid": list(args.alpha_grid) if args.alpha_grid else None,
            "mode": args.mode,
            "max_iterations": args.max_iterations,
            "tolerance": args.tolerance,
            "seed_handling": args.seed_handling,
        },
        inputs,
        args.seed,
    )
    print(f"propagated {f0.seeded_count()} seeds over {len(graph.nodes)} nodes at alpha={alpha}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    gmn_path = _require(args.gmn, "--gmn")
    emfd_path = _require(args.emfd, "--emfd")
    corpus_paths = (args.candidate_corpus, args.reference_corpus)
    if any(corpus_paths) and not all(corpus_paths):
        raise ValidationError("--candidate-corpus and --reference-corpus go together")
    out = _out_dir(args)
    inputs = [gmn_path, emfd_path]

    matrix = read_moral_scores(gmn_path)
    gold = parse_moral_lexicon(emfd_path, "soft")
    mask = ~matrix.seed_mask if args.exclude_seeds else None
    report = evaluate_gmn(matrix, gold, mask)
    write_report(report.as_report(), out / "eval_report.csv")
    print(f"{'dimension':<12} {'n':>6} {'rho':>8} {'p':>10}")
    for row in report.rows:
        flag = " (low support)" if row.low_support else ""
        print(f"{row.dimension:<12} {row.n:>6} {row.rho:>8.3f} {row.p_value:>10.3g}{flag}")

    if args.candidate_corpus:
        cand_path = _require(args.candidate_corpus, "--candidate-corpus")
        ref_path = _require(args.reference_corpus, "--reference-corpus")
        cues_path = _require(args.cues, "--cues (required for precision)")
        inputs += [cand_path, ref_path, cues_path]
        candidate = parse_responses(cand_path, "llm")
        reference = parse_responses(ref_path, "human")
        cand_graph = build_graph(candidate, candidate.cues())
        ref_graph = build_graph(reference, reference.cues())
        cues = _read_cues(cues_path)
        curve = precision_at_k(cand_graph, ref_graph, cues, args.k, args.runs, args.seed)
        write_report(curve.as_report(), out / "precision.csv")
        _write_json(
            {
                "mean_strength_correlation": curve.mean_strength_correlation,
                "correlated_cues": curve.correlated_cues,
                "cues_used": curve.cues_used,
                "skipped_cues": sorted(curve.skipped_cues),
            },
            out / "precision_meta.json",
        )
        if args.embeddings:
            emb_path = _require(args.embeddings, "--embeddings")
            inputs.append(emb_path)
            table = load_embeddings(emb_path)
            baseline = embedding_precision(table, ref_graph, cues, args.k)
            write_report(baseline.as_report(), out / "embedding_precision.csv")

    _write_manifest(
        out,
        "evaluate",
        {
            "exclude_seeds": args.exclude_seeds,
            "k": args.k,
            "runs": args.runs,
            "with_precision": bool(args.candidate_corpus),
            "with_embeddings": bool(args.embeddings),
        },
        inputs,
        args.seed,
    )
    return EXIT_OK


def _ranking_report(ranking) -> Report:
    ranks = ranking.ranks()
    rows = [
        (
            word,
            float(ranking.overall[i]),
            float(ranking.normalized[i]),
            ranks[word],
            "|".join(ranking.dominant[i]),
        )
        for i, word in enumerate(ranking.words)
    ]
    return Report(("word", "overall", "normalized", "rank", "dominant"), rows)


def cmd_analyze(args) -> int:
    gmn_a = _require(args.gmn_a, "--gmn-a")
    gmn_b = _require(args.gmn_b, "--gmn-b")
    corpus_a_path = _require(args.corpus_a, "--corpus-a")
    corpus_b_path = _require(args.corpus_b, "--corpus-b")
    norm_paths = {}
    if args.arousal:
        norm_paths["arousal"] = _require(args.arousal, "--arousal")
    if args.concreteness:
        norm_paths["concreteness"] = _require(args.concreteness, "--concreteness")
    out = _out_dir(args)

    matrix_a = read_moral_scores(gmn_a)
    matrix_b = read_moral_scores(gmn_b)
    corpus_a = parse_responses(corpus_a_path, "human")
    corpus_b = parse_responses(corpus_b_path, "llm")
    graph_a = build_graph(corpus_a, corpus_a.cues())
    graph_b = build_graph(corpus_b, corpus_b.cues())

    ranking_a = overall_morality(matrix_a)
    ranking_b = overall_morality(matrix_b)
    write_report(_ranking_report(ranking_a), out / "ranking_a.csv")
    write_report(_ranking_report(ranking_b), out / "ranking_b.csv")

    a_over_b, b_over_a = divergence(ranking_a, ranking_b, args.divergence_n)
    div_rows = [
        (f"a_over_b:{i:03d}", r.word, "|".join(r.dominant), r.score_a, r.score_b, r.difference)
        for i, r in enumerate(a_over_b)
    ] + [
        (f"b_over_a:{i:03d}", r.word, "|".join(r.dominant), r.score_a, r.score_b, r.difference)
        for i, r in enumerate(b_over_a)
    ]
    write_report(
        Report(("direction", "word", "dominant_a", "score_a", "score_b", "difference"), div_rows),
        out / "divergence.csv",
    )

    norm_rows = []
    for kind, path in sorted(norm_paths.items()):
        lexicon = parse_norm_lexicon(path, kind)
        threshold = args.concreteness_threshold if kind == "concreteness" else None
        for row in dimension_norm_comparison(
            graph_a, graph_b, matrix_a, matrix_b, lexicon, threshold, args.top_n
        ):
            norm_rows.append(
                (
                    f"{kind}:{row.dimension}",
                    row.n_concepts_a,
                    row.n_concepts_b,
                    row.proportion.mean_a,
                    row.proportion.mean_b,
                    row.proportion.p_value,
                    int(row.proportion.significant),
                    row.weighted_mean.mean_a,
                    row.weighted_mean.mean_b,
                    row.weighted_mean.p_value,
                    int(row.weighted_mean.significant),
                )
            )
    if norm_rows:
        write_report(
            Report(
                (
                    "lexicon_dimension",
                    "n_a",
                    "n_b",
                    "proportion_a",
                    "proportion_b",
                    "proportion_p",
                    "proportion_significant",
                    "mean_a",
                    "mean_b",
                    "mean_p",
                    "mean_significant",
                ),
                norm_rows,
            ),
            out / "norm_comparison.csv",
        )

    sub_rows = []
    for label, matrix, graph in (("a", matrix_a, graph_a), ("b", matrix_b, graph_b)):
        for entry in compare_dimension_subgraphs(matrix, graph, args.top_n):
            for variant, stats in (("pruned", entry.pruned), ("non_pruned", entry.non_pruned)):
                sub_rows.append(
                    (
                        f"{entry.dimension}:{label}:{variant}",
                        int(entry.flagged),
                        stats.node_count,
                        stats.edge_count,
                        stats.density,
                        stats.avg_local_clustering,
                        stats.diameter,
                        stats.weighted_avg_edge,
                        stats.weighted_degree_centrality,
                    )
                )
    write_report(
        Report(
            (
                "dimension_graph_variant",
                "flagged",
                "nodes",
                "edges",
                "density",
                "avg_local_clustering",
                "diameter",
                "weighted_avg_edge",
                "weighted_degree_centrality",
            ),
            sub_rows,
        ),
        out / "subgraph_stats.csv",
    )

    inputs = [gmn_a, gmn_b, corpus_a_path, corpus_b_path] + sorted(norm_paths.values())
    _write_manifest(
        out,
        "analyze",
        {
            "top_n": args.top_n,
            "divergence_n": args.divergence_n,
            "concreteness_threshold": args.concreteness_threshold,
            "norm_lexicons": sorted(norm_paths),
        },
        inputs,
        args.seed,
    )
    print(f"analysis reports written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moralgraph",
        description="Word-association graphs, moral value propagation, and comparison reports.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("elicit", help="collect word associations from a chat endpoint")
    p.add_argument("--cues", required=True, help="text file, one cue per line")
    p.add_argument("--endpoint", required=True, help="chat-completion URL")
    p.add_argument("--model", required=True)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--repeats", type=int, default=100, help="trials per cue")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--max-concurrent", type=int, default=4)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_elicit)

    p = sub.add_parser("build-propagate", help="build a graph, seed it, and propagate")
    p.add_argument("--corpus", required=True, help="response CSV (cue,R1,R2,R3)")
    p.add_argument("--source", choices=("human", "llm"), default="human")
    p.add_argument("--mfd", required=True, help="hard seed lexicon CSV")
    p.add_argument("--emfd", help="soft lexicon CSV for alpha tuning")
    p.add_argument("--alpha", type=float, help="fix alpha and skip tuning")
    p.add_argument("--alpha-grid", type=float, nargs="+", help="candidate alphas for tuning")
    p.add_argument("--mode", choices=("closed_form", "iterative"), default="closed_form")
    p.add_argument("--max-iterations", type=int, default=1000)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--seed-handling", choices=("subtract", "exclude"), default="subtract")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_build_propagate)

    p = sub.add_parser("evaluate", help="correlate a moral network with gold; precision@k")
    p.add_argument("--gmn", required=True, help="propagated scores CSV")
    p.add_argument("--emfd", required=True, help="soft gold lexicon CSV")
    p.add_argument("--exclude-seeds", action="store_true", help="mask seeded rows instead of using subtracted values")
    p.add_argument("--candidate-corpus", help="corpus whose responses are scored")
    p.add_argument("--reference-corpus", help="corpus acting as ground truth")
    p.add_argument("--cues", help="cue subset file for precision@k")
    p.add_argument("--embeddings", help="embedding table for the nearest-neighbor baseline")
    p.add_argument("-K", "--k", type=int, default=10, dest="k")
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="rankings, divergence, norms, and subgraph structure")
    p.add_argument("--gmn-a", required=True)
    p.add_argument("--gmn-b", required=True)
    p.add_argument("--corpus-a", required=True)
    p.add_argument("--corpus-b", required=True)
    p.add_argument("--arousal", help="word,score lexicon on the 1-8 scale")
    p.add_argument("--concreteness", help="word,score lexicon on the 1-5 scale")
    p.add_argument("--concreteness-threshold", type=float, default=3.5)
    p.add_argument("--top-n", type=int, default=50)
    p.add_argument("--divergence-n", type=int, default=10)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
