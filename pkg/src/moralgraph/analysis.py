"""Comparative analytics over propagated moral networks.

Covers overall-morality rankings, cross-network divergence lists, dominant
dimensions, emotionality / concreteness profiles of responses, and the
structure of per-dimension negative subgraphs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
from scipy import stats

from .data_io import DIMENSIONS, NormLexicon
from .graph import AssociationGraph, GraphStats, association_strength, compute_stats, extract_subgraph

if TYPE_CHECKING:
    from .propagation import MoralMatrix

SIGNIFICANCE_LEVEL = 0.05


def mad_normalize(values: Sequence[float]) -> tuple[np.ndarray, bool]:
    """Center by the median and scale by the median absolute deviation.

    No consistency constant is applied (it cancels in rank comparisons).
    A zero MAD yields all zeros and a degeneracy flag.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        raise ValueError("MAD normalization needs at least 2 values")
    median = np.median(arr)
    mad = np.median(np.abs(arr - median))
    if mad == 0:
        return np.zeros_like(arr), True
    return (arr - median) / mad, False


def dominant_dimension(row: Sequence[float]) -> tuple[str, ...]:
    """Labels holding the row maximum; ties return every tied label.

    A row where all five tie (e.g. all zeros) comes back with all five
    labels, which marks it indeterminate.
    """
    arr = np.asarray(row, dtype=np.float64)
    if arr.shape != (5,):
        raise ValueError("expected a 5-dimensional score row")
    top = arr.max()
    return tuple(DIMENSIONS[i] for i in range(5) if arr[i] == top)


@dataclass
class MoralityRanking:
    """Concepts ordered by MAD-normalized overall morality."""

    words: tuple[str, ...]
    overall: np.ndarray  # per-word sum over the five dimensions
    normalized: np.ndarray
    dominant: list[tuple[str, ...]]
    degenerate: bool  # all normalized scores collapsed to zero

    def _order(self, descending: bool) -> list[int]:
        sign = -1.0 if descending else 1.0
        return sorted(
            range(len(self.words)), key=lambda i: (sign * self.normalized[i], self.words[i])
        )

    def top_positive(self, n: int) -> list[str]:
        return [self.words[i] for i in self._order(descending=True)[:n]]

    def top_negative(self, n: int) -> list[str]:
        return [self.words[i] for i in self._order(descending=False)[:n]]

    def ranks(self) -> dict[str, int]:
        """1-based rank per word, most positive first."""
        return {self.words[i]: pos + 1 for pos, i in enumerate(self._order(descending=True))}


def overall_morality(matrix: "MoralMatrix") -> MoralityRanking:
    """Sum the five propagated dimensions per word and MAD-normalize the sums."""
    if len(matrix.nodes) == 0:
        raise ValueError("empty moral matrix")
    overall = matrix.scores.sum(axis=1)
    normalized, degenerate = mad_normalize(overall)
    dominant = [dominant_dimension(matrix.scores[i]) for i in range(len(matrix.nodes))]
    return MoralityRanking(matrix.nodes, overall, normalized, dominant, degenerate)


@dataclass
class DivergenceRow:
    word: str
    dominant: tuple[str, ...]  # dominant dimensions under the first ranking
    score_a: float
    score_b: float
    difference: float  # score_a - score_b


def divergence(
    ranking_a: MoralityRanking, ranking_b: MoralityRanking, top_n: int
) -> tuple[list[DivergenceRow], list[DivergenceRow]]:
    """Concepts rated most differently by two rankings, both directions.

    Returns (a over b, b over a), each the top_n by signed difference of
    normalized morality. The two rankings must cover the same vocabulary.
    """
    if set(ranking_a.words) != set(ranking_b.words):
        raise ValueError("rankings cover different vocabularies")
    index_b = {w: i for i, w in enumerate(ranking_b.words)}
    rows = []
    for i, word in enumerate(ranking_a.words):
        j = index_b[word]
        a, b = float(ranking_a.normalized[i]), float(ranking_b.normalized[j])
        rows.append(DivergenceRow(word, ranking_a.dominant[i], a, b, a - b))
    a_over_b = sorted(rows, key=lambda r: (-r.difference, r.word))[:top_n]
    b_over_a = sorted(rows, key=lambda r: (r.difference, r.word))[:top_n]
    return a_over_b, b_over_a


@dataclass
class ConceptNorms:
    concept: str
    response_types: int
    proportion: float  # % of distinct response types in the lexicon (above threshold if given)
    weighted_mean: float  # strength-weighted mean norm over in-lexicon responses; NaN if none


@dataclass
class LexiconAnalysis:
    kind: str
    threshold: float | None
    rows: list[ConceptNorms]

    def proportions(self) -> list[float]:
        return [r.proportion for r in self.rows]

    def weighted_means(self) -> list[float]:
        return [r.weighted_mean for r in self.rows if not np.isnan(r.weighted_mean)]


def lexicon_analysis(
    graph: AssociationGraph,
    concepts: Iterable[str],
    lexicon: NormLexicon,
    threshold: float | None = None,
) -> LexiconAnalysis:
    """Profile each concept's responses against a norm lexicon.

    The proportion counts distinct response types found in the lexicon
    (and scoring above the threshold when one is given) as a share of all
    distinct response types. The weighted mean renormalizes association
    strengths over in-lexicon responses, so out-of-lexicon mass does not
    deflate it; it is NaN when no response is in the lexicon.
    """
    rows = []
    for concept in concepts:
        strengths = association_strength(graph, concept)
        types = sorted(strengths)
        in_lexicon = [t for t in types if t in lexicon.entries]
        counted = (
            in_lexicon
            if threshold is None
            else [t for t in in_lexicon if lexicon.entries[t] > threshold]
        )
        proportion = 100.0 * len(counted) / len(types) if types else 0.0
        mass = sum(strengths[t] for t in in_lexicon)
        if mass > 0:
            weighted = sum(strengths[t] * lexicon.entries[t] for t in in_lexicon) / mass
        else:
            weighted = float("nan")
        rows.append(ConceptNorms(concept, len(types), proportion, weighted))
    return LexiconAnalysis(lexicon.kind, threshold, rows)


@dataclass
class GroupComparison:
    mean_a: float
    mean_b: float
    t_statistic: float
    p_value: float
    significant: bool


def compare_values(
    values_a: Sequence[float], values_b: Sequence[float], alpha: float = SIGNIFICANCE_LEVEL
) -> GroupComparison:
    """Welch two-sample t-test between per-concept value lists."""
    a = np.asarray([v for v in values_a if not np.isnan(v)], dtype=np.float64)
    b = np.asarray([v for v in values_b if not np.isnan(v)], dtype=np.float64)
    mean_a = float(a.mean()) if a.size else float("nan")
    mean_b = float(b.mean()) if b.size else float("nan")
    if a.size < 2 or b.size < 2:
        return GroupComparison(mean_a, mean_b, float("nan"), float("nan"), False)
    t_stat, p = stats.ttest_ind(a, b, equal_var=False)
    return GroupComparison(mean_a, mean_b, float(t_stat), float(p), bool(p < alpha))


@dataclass
class NormComparisonRow:
    dimension: str
    n_concepts_a: int
    n_concepts_b: int
    proportion: GroupComparison
    weighted_mean: GroupComparison


def top_negative_by_dimension(matrix: "MoralMatrix", dimension: int, top_n: int) -> list[str]:
    """The top_n most negative concepts on one dimension (ties by token)."""
    scores = matrix.scores[:, dimension]
    order = sorted(range(len(matrix.nodes)), key=lambda i: (scores[i], matrix.nodes[i]))
    return [matrix.nodes[i] for i in order[:top_n]]


def dimension_norm_comparison(
    graph_a: AssociationGraph,
    graph_b: AssociationGraph,
    matrix_a: "MoralMatrix",
    matrix_b: "MoralMatrix",
    lexicon: NormLexicon,
    threshold: float | None = None,
    top_n: int = 50,
) -> list[NormComparisonRow]:
    """Per-dimension norm comparison over each side's top negative concepts.

    The concept set per dimension is the union of the two networks' top_n
    most negative words, intersected with each graph's own vocabulary.
    Within a concept the norm is strength-weighted; across concepts the
    aggregation is an unweighted mean, compared by Welch t-test.
    """
    rows = []
    for dim, name in enumerate(DIMENSIONS):
        union = sorted(
            set(top_negative_by_dimension(matrix_a, dim, top_n))
            | set(top_negative_by_dimension(matrix_b, dim, top_n))
        )
        concepts_a = [c for c in union if c in graph_a.index]
        concepts_b = [c for c in union if c in graph_b.index]
        analysis_a = lexicon_analysis(graph_a, concepts_a, lexicon, threshold)
        analysis_b = lexicon_analysis(graph_b, concepts_b, lexicon, threshold)
        rows.append(
            NormComparisonRow(
                dimension=name,
                n_concepts_a=len(concepts_a),
                n_concepts_b=len(concepts_b),
                proportion=compare_values(analysis_a.proportions(), analysis_b.proportions()),
                weighted_mean=compare_values(
                    analysis_a.weighted_means(), analysis_b.weighted_means()
                ),
            )
        )
    return rows


@dataclass
class DimensionSubgraphs:
    dimension: str
    seeds: tuple[str, ...]
    flagged: bool  # fewer scored concepts than requested
    pruned: GraphStats
    non_pruned: GraphStats


def compare_dimension_subgraphs(
    matrix: "MoralMatrix", graph: AssociationGraph, top_n: int = 50
) -> list[DimensionSubgraphs]:
    """Structure of each dimension's most negative neighborhood.

    Per dimension the top_n most negative concepts seed two subgraphs: the
    induced ("pruned") one and the one extended by the seeds' neighbors
    ("non-pruned"); both get the full statistics treatment.
    """
    if matrix.nodes != graph.nodes:
        raise ValueError("moral matrix is not aligned to the graph")
    results = []
    for dim, name in enumerate(DIMENSIONS):
        flagged = top_n > len(matrix.nodes)
        seeds = top_negative_by_dimension(matrix, dim, min(top_n, len(matrix.nodes)))
        pruned = extract_subgraph(graph, seeds, pruned=True)
        non_pruned = extract_subgraph(graph, seeds, pruned=False)
        results.append(
            DimensionSubgraphs(
                dimension=name,
                seeds=tuple(seeds),
                flagged=flagged,
                pruned=compute_stats(pruned),
                non_pruned=compute_stats(non_pruned),
            )
        )
    return results
