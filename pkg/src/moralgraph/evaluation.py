"""Quantitative comparisons between graphs and against gold moral scores.

Rank (Spearman) correlation is used throughout: raw score scales differ
between sources, ranks do not.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
from scipy import stats

from .data_io import DIMENSIONS, EmbeddingTable, MoralLexicon, Report, normalize_token
from .graph import AssociationGraph, association_strength, response_set

if TYPE_CHECKING:
    from .propagation import MoralMatrix

MIN_STRENGTH_OVERLAP = 3  # shared response types needed for a per-cue correlation


def _average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties averaged."""
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind="mergesort")
    ranks = np.empty(arr.size)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Spearman rho with average-rank ties and a large-sample t p-value.

    Returns ``(nan, nan)`` when either input has zero variance. Requires
    equal lengths of at least 3.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.size < 3:
        raise ValueError("spearman needs two equal-length lists of at least 3 values")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt((rx * rx).sum() * (ry * ry).sum())
    if denom == 0:
        return float("nan"), float("nan")
    rho = float((rx * ry).sum() / denom)
    n = xs.size
    if 1.0 - rho * rho <= 0:
        return rho, 0.0
    t = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, float(2.0 * stats.t.sf(abs(t), n - 2))


def strength_correlation(
    candidate: AssociationGraph, reference: AssociationGraph, cue: str
) -> float | None:
    """Rank correlation of association strengths on the shared response types.

    Returns None (skipped) when fewer than 3 response types are shared or
    the correlation is degenerate.
    """
    cand = association_strength(candidate, cue)
    ref = association_strength(reference, cue)
    shared = sorted(set(cand) & set(ref))
    if len(shared) < MIN_STRENGTH_OVERLAP:
        return None
    rho, _ = spearman([cand[t] for t in shared], [ref[t] for t in shared])
    return None if np.isnan(rho) else rho


@dataclass
class PrecisionCurve:
    """Mean precision@k over cues, with spread over tie-shuffling runs."""

    ks: tuple[int, ...]
    mean: np.ndarray
    std: np.ndarray
    mean_strength_correlation: float
    correlated_cues: int
    cues_used: int
    skipped_cues: tuple[str, ...]

    def as_report(self) -> Report:
        rows = [
            (k, float(self.mean[i]), float(self.std[i])) for i, k in enumerate(self.ks)
        ]
        return Report(("k", "precision_mean", "precision_std"), rows)


def _ranking_with_ties(
    strengths: dict[str, float], rng: np.random.Generator | None
) -> list[str]:
    """Tokens by descending strength; ties lexicographic, or shuffled when rng given."""
    ordered = sorted(strengths.items(), key=lambda kv: (-kv[1], kv[0]))
    if rng is None:
        return [tok for tok, _ in ordered]
    ranking: list[str] = []
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and ordered[j + 1][1] == ordered[i][1]:
            j += 1
        group = [tok for tok, _ in ordered[i : j + 1]]
        if len(group) > 1:
            group = [group[g] for g in rng.permutation(len(group))]
        ranking.extend(group)
        i = j + 1
    return ranking


def precision_at_k(
    candidate: AssociationGraph,
    reference: AssociationGraph,
    cues: Iterable[str],
    k_max: int,
    runs: int = 50,
    seed: int = 0,
) -> PrecisionCurve:
    """Precision@k of the candidate's strength-ranked responses against the reference set.

    Per cue, precision@k = |top-k of candidate / reference response set| / k.
    The curve averages over cues; each resampling run re-shuffles the order
    within equal-strength tie groups, and the band is the standard
    deviation of the cue-averaged curve over runs. Cues missing from either
    vocabulary are skipped and reported.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    cue_list = []
    skipped = []
    for cue in cues:
        tok = normalize_token(cue)
        if tok in candidate.index and tok in reference.index:
            cue_list.append(tok)
        else:
            skipped.append(tok)
    if not cue_list:
        raise ValueError("no cue present in both graphs")

    per_cue = [
        (association_strength(candidate, cue), response_set(reference, cue))
        for cue in cue_list
    ]
    rng = np.random.default_rng(seed)
    run_curves = np.zeros((runs, k_max))
    for run in range(runs):
        cue_curves = np.zeros((len(cue_list), k_max))
        for ci, (strengths, ref_set) in enumerate(per_cue):
            ranking = _ranking_with_ties(strengths, rng)[:k_max]
            hits = np.zeros(k_max)
            running = 0
            for pos in range(k_max):
                if pos < len(ranking) and ranking[pos] in ref_set:
                    running += 1
                hits[pos] = running
            cue_curves[ci] = hits / np.arange(1, k_max + 1)
        run_curves[run] = cue_curves.mean(axis=0)

    correlations = [
        rho
        for cue in cue_list
        if (rho := strength_correlation(candidate, reference, cue)) is not None
    ]
    return PrecisionCurve(
        ks=tuple(range(1, k_max + 1)),
        mean=run_curves.mean(axis=0),
        std=run_curves.std(axis=0),
        mean_strength_correlation=float(np.mean(correlations)) if correlations else float("nan"),
        correlated_cues=len(correlations),
        cues_used=len(cue_list),
        skipped_cues=tuple(skipped),
    )


@dataclass
class EvalRow:
    dimension: str
    n: int
    rho: float
    p_value: float
    low_support: bool


@dataclass
class EvalReport:
    """Per-dimension and pooled correlation against a soft gold lexicon."""

    rows: list[EvalRow]

    def as_report(self) -> Report:
        return Report(
            ("dimension", "n", "rho", "p_value", "low_support"),
            [(r.dimension, r.n, r.rho, r.p_value, int(r.low_support)) for r in self.rows],
        )


def evaluate_gmn(
    matrix: "MoralMatrix", gold: MoralLexicon, eval_mask: np.ndarray | None = None
) -> EvalReport:
    """Spearman correlation of propagated scores against soft gold, per dimension.

    Pairs every unmasked vocabulary word having a gold value on a dimension;
    the ``all`` row pools the (word, dimension) pairs of all five. Dimensions
    with fewer than 10 pairs carry a low-support flag.
    """
    if gold.kind != "soft":
        raise ValueError("evaluation requires a soft lexicon")
    n_nodes = len(matrix.nodes)
    if eval_mask is None:
        eval_mask = np.ones(n_nodes, dtype=bool)
    index = {word: i for i, word in enumerate(matrix.nodes)}
    pairs: dict[int, tuple[list[float], list[float]]] = {d: ([], []) for d in range(5)}
    for word, vector in gold.entries.items():
        i = index.get(word)
        if i is None or not eval_mask[i]:
            continue
        for dim in range(5):
            if np.isnan(vector[dim]):
                continue
            pairs[dim][0].append(matrix.scores[i, dim])
            pairs[dim][1].append(vector[dim])
    rows = []
    pooled_pred: list[float] = []
    pooled_gold: list[float] = []
    for dim in range(5):
        predicted, expected = pairs[dim]
        pooled_pred.extend(predicted)
        pooled_gold.extend(expected)
        if len(predicted) >= 3:
            rho, p = spearman(predicted, expected)
        else:
            rho, p = float("nan"), float("nan")
        rows.append(EvalRow(DIMENSIONS[dim], len(predicted), rho, p, len(predicted) < 10))
    if len(pooled_pred) >= 3:
        rho, p = spearman(pooled_pred, pooled_gold)
    else:
        rho, p = float("nan"), float("nan")
    rows.append(EvalRow("all", len(pooled_pred), rho, p, len(pooled_pred) < 10))
    return EvalReport(rows)


def embedding_precision(
    table: EmbeddingTable,
    reference: AssociationGraph,
    cues: Iterable[str],
    k_max: int,
) -> PrecisionCurve:
    """Precision@k of cosine nearest neighbors against reference response sets.

    The baseline counterpart of :func:`precision_at_k`: the candidate
    ranking is the cue's nearest embedding neighbors. The per-cue
    correlation pairs neighbor similarities with reference strengths on
    the shared tokens. Deterministic, so the std band is zero.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    cue_list = []
    skipped = []
    for cue in cues:
        tok = normalize_token(cue)
        if tok in table.entries and tok in reference.index:
            cue_list.append(tok)
        else:
            skipped.append(tok)
    if not cue_list:
        raise ValueError("no cue present in both the table and the reference graph")
    curves = np.zeros((len(cue_list), k_max))
    correlations = []
    for ci, cue in enumerate(cue_list):
        ranking = embedding_neighbors(table, cue, k_max)
        ref_set = response_set(reference, cue)
        running = 0
        for pos in range(k_max):
            if pos < len(ranking) and ranking[pos] in ref_set:
                running += 1
            curves[ci, pos] = running / (pos + 1)
        ref_strengths = association_strength(reference, cue)
        target = table.entries[cue]
        shared = sorted(set(ranking) & set(ref_strengths))
        if len(shared) >= MIN_STRENGTH_OVERLAP:
            sims = []
            for tok in shared:
                vec = table.entries[tok]
                denom = np.linalg.norm(vec) * np.linalg.norm(target)
                sims.append(float(vec @ target / denom) if denom > 0 else 0.0)
            rho, _ = spearman(sims, [ref_strengths[t] for t in shared])
            if not np.isnan(rho):
                correlations.append(rho)
    mean = curves.mean(axis=0)
    return PrecisionCurve(
        ks=tuple(range(1, k_max + 1)),
        mean=mean,
        std=np.zeros(k_max),
        mean_strength_correlation=float(np.mean(correlations)) if correlations else float("nan"),
        correlated_cues=len(correlations),
        cues_used=len(cue_list),
        skipped_cues=tuple(skipped),
    )


def embedding_neighbors(table: EmbeddingTable, cue: str, k: int) -> list[str]:
    """Top-k tokens by cosine similarity to the cue, cue excluded.

    A k beyond the vocabulary ranks everything else; an absent cue raises.
    """
    cue = normalize_token(cue)
    if cue not in table.entries:
        raise KeyError(f"cue {cue!r} not in embedding table")
    target = table.entries[cue]
    target_norm = np.linalg.norm(target)
    scored = []
    for word, vector in table.entries.items():
        if word == cue:
            continue
        denom = target_norm * np.linalg.norm(vector)
        sim = float(vector @ target / denom) if denom > 0 else 0.0
        scored.append((-sim, word))
    scored.sort()
    return [word for _, word in scored[: max(k, 0)]]
