"""Weighted word-association graphs and their statistics.

The node set is always the cue vocabulary; responses never become nodes.
Directed cue->response counts are retained for response-level analyses, and
the undirected weight matrix is their symmetrization W = C + C^T with a
forced zero diagonal (self-associations are dropped).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from .data_io import AssociationCorpus, FormatError, _format_cell, normalize_token

_CHUNK = 256  # rows per block in triangle / eccentricity passes


@dataclass(eq=False)
class AssociationGraph:
    """Cue vocabulary plus sparse directed counts and symmetric weights."""

    nodes: tuple[str, ...]
    counts: sp.csr_matrix  # directed cue -> response counts
    weights: sp.csr_matrix  # W = counts + counts.T, zero diagonal

    def __post_init__(self) -> None:
        self.index = {tok: i for i, tok in enumerate(self.nodes)}

    def __len__(self) -> int:
        return len(self.nodes)

    @classmethod
    def from_counts(cls, nodes: Iterable[str], counts: sp.spmatrix) -> "AssociationGraph":
        nodes = tuple(nodes)
        counts = sp.csr_matrix(counts, dtype=np.float64, shape=(len(nodes), len(nodes)))
        counts.setdiag(0.0)
        counts.eliminate_zeros()
        weights = (counts + counts.T).tocsr()
        return cls(nodes, counts, weights)

    def neighbors(self, token: str) -> list[str]:
        row = self.weights.getrow(self.index[token])
        return [self.nodes[j] for j in row.indices]


def build_graph(corpus: AssociationCorpus, vocabulary: Iterable[str]) -> AssociationGraph:
    """Count cue->response pairs over the corpus, restricted to the vocabulary.

    Responses outside the vocabulary are excluded from the graph (the corpus
    keeps them); a response equal to its cue is dropped so W stays
    hollow. Nodes are the sorted normalized vocabulary.
    """
    if not corpus.records:
        raise ValueError("cannot build a graph from an empty corpus")
    nodes = tuple(sorted({normalize_token(t) for t in vocabulary} - {""}))
    if not nodes:
        raise ValueError("vocabulary is empty")
    index = {tok: i for i, tok in enumerate(nodes)}
    rows: list[int] = []
    cols: list[int] = []
    for rec in corpus.records:
        ci = index.get(rec.cue)
        if ci is None:
            continue
        for resp in rec.responses:
            ri = index.get(resp)
            if ri is None or ri == ci:
                continue
            rows.append(ci)
            cols.append(ri)
    counts = sp.coo_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(len(nodes), len(nodes))
    ).tocsr()
    return AssociationGraph.from_counts(nodes, counts)


def association_strength(graph: AssociationGraph, cue: str) -> dict[str, float]:
    """Response token -> directed count / total directed responses for the cue.

    Strengths sum to 1 over the cue's in-vocabulary responses; a cue with no
    responses yields an empty map.
    """
    cue = normalize_token(cue)
    if cue not in graph.index:
        raise KeyError(f"cue {cue!r} not in vocabulary")
    row = graph.counts.getrow(graph.index[cue])
    total = row.sum()
    if total == 0:
        return {}
    return {graph.nodes[j]: v / total for j, v in zip(row.indices, row.data)}


def response_set(graph: AssociationGraph, cue: str) -> set[str]:
    """Tokens produced at least once as responses to the cue (in vocabulary)."""
    cue = normalize_token(cue)
    if cue not in graph.index:
        raise KeyError(f"cue {cue!r} not in vocabulary")
    row = graph.counts.getrow(graph.index[cue])
    return {graph.nodes[j] for j in row.indices}


@dataclass
class GraphStats:
    """Global statistics of one association graph.

    Unweighted quantities are computed on the binarized symmetric weights;
    connectivity means degree there. Local clustering of a node with degree
    below 2 is 0 and still enters the average. The diameter is the longest
    shortest path within the largest connected component, whose share of
    all nodes is ``diameter_coverage``. ``weighted_avg_edge`` is total edge
    weight over edge count, and ``weighted_degree_centrality`` is the mean
    node strength (sum of incident edge weights).
    """

    node_count: int
    edge_count: int
    density: float
    avg_local_clustering: float
    diameter: int
    diameter_coverage: float
    max_connectivity: int
    min_connectivity: int
    avg_connectivity: float
    sd_connectivity: float
    weighted_avg_edge: float
    weighted_degree_centrality: float


def _triangle_counts(adjacency: sp.csr_matrix) -> np.ndarray:
    """Triangles through each node, in row blocks to bound memory."""
    n = adjacency.shape[0]
    tri = np.zeros(n)
    for start in range(0, n, _CHUNK):
        block = adjacency[start : start + _CHUNK]
        paths = (block @ adjacency).multiply(block)
        tri[start : start + _CHUNK] = np.asarray(paths.sum(axis=1)).ravel() / 2.0
    return tri


def _largest_component(adjacency: sp.csr_matrix) -> np.ndarray:
    _, labels = connected_components(adjacency, directed=False)
    sizes = np.bincount(labels)
    return np.flatnonzero(labels == sizes.argmax())


def _diameter(adjacency: sp.csr_matrix, component: np.ndarray) -> int:
    if component.size <= 1:
        return 0
    sub = adjacency[np.ix_(component, component)].tocsr()
    longest = 0.0
    for start in range(0, component.size, _CHUNK):
        srcs = np.arange(start, min(start + _CHUNK, component.size))
        dist = dijkstra(sub, directed=False, unweighted=True, indices=srcs)
        longest = max(longest, dist.max())
    return int(longest)


def compute_stats(graph: AssociationGraph) -> GraphStats:
    """Compute every global statistic on the symmetrized graph."""
    n = len(graph.nodes)
    if n == 0:
        raise ValueError("graph has no nodes")
    adjacency = (graph.weights > 0).astype(np.int64).tocsr()
    degrees = np.asarray(adjacency.sum(axis=1)).ravel().astype(np.int64)
    edge_count = int(adjacency.nnz // 2)
    density = edge_count / (n * (n - 1) / 2.0) if n > 1 else 0.0

    tri = _triangle_counts(adjacency)
    possible = degrees * (degrees - 1) / 2.0
    local = np.divide(tri, possible, out=np.zeros(n), where=possible > 0)

    component = _largest_component(adjacency)
    strengths = np.asarray(graph.weights.sum(axis=1)).ravel()
    total_weight = graph.weights.sum() / 2.0

    return GraphStats(
        node_count=n,
        edge_count=edge_count,
        density=density,
        avg_local_clustering=float(local.mean()),
        diameter=_diameter(adjacency, component),
        diameter_coverage=component.size / n,
        max_connectivity=int(degrees.max()),
        min_connectivity=int(degrees.min()),
        avg_connectivity=float(degrees.mean()),
        sd_connectivity=float(degrees.std()),
        weighted_avg_edge=float(total_weight / edge_count) if edge_count else 0.0,
        weighted_degree_centrality=float(strengths.mean()),
    )


def extract_subgraph(
    graph: AssociationGraph, seeds: Iterable[str], pruned: bool
) -> AssociationGraph:
    """Induced subgraph on the seeds (pruned) or seeds plus their neighbors.

    Statistics of the result go through the same :func:`compute_stats`
    code path as the full graph.
    """
    seed_tokens = {normalize_token(t) for t in seeds}
    if not seed_tokens:
        raise ValueError("empty seed set")
    missing = seed_tokens - set(graph.index)
    if missing:
        raise ValueError(f"seeds not in vocabulary: {sorted(missing)[:5]}")
    keep = {graph.index[t] for t in seed_tokens}
    if not pruned:
        idx = np.fromiter(keep, dtype=np.int64)
        sub = graph.weights[idx]
        keep |= set(np.unique(sub.indices))
    order = np.array(sorted(keep), dtype=np.int64)
    nodes = tuple(graph.nodes[i] for i in order)
    counts = graph.counts[np.ix_(order, order)]
    return AssociationGraph.from_counts(nodes, counts)


def write_graph(graph: AssociationGraph, nodes_path: str | Path, edges_path: str | Path) -> None:
    """Serialize a graph as a node list plus a directed-count edge list.

    The edge list stores the directed cue->response counts (not W): the
    symmetric weights are reconstructed on load, so the round trip is
    lossless for strength-level analyses.
    """
    with Path(nodes_path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["token"])
        for tok in graph.nodes:
            writer.writerow([tok])
    coo = graph.counts.tocoo()
    with Path(edges_path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["token_a", "token_b", "weight"])
        order = np.lexsort((coo.col, coo.row))
        for k in order:
            writer.writerow(
                [graph.nodes[coo.row[k]], graph.nodes[coo.col[k]], _format_cell(coo.data[k])]
            )


def read_graph(nodes_path: str | Path, edges_path: str | Path) -> AssociationGraph:
    """Load a graph written by :func:`write_graph`."""
    with Path(nodes_path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["token"]:
            raise FormatError(f"{nodes_path}: expected header token")
        nodes = tuple(row[0] for row in reader if row)
    index = {tok: i for i, tok in enumerate(nodes)}
    rows: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    with Path(edges_path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["token_a", "token_b", "weight"]:
            raise FormatError(f"{edges_path}: expected header token_a,token_b,weight")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3 or row[0] not in index or row[1] not in index:
                raise FormatError(f"{edges_path}: bad edge at row {lineno}")
            rows.append(index[row[0]])
            cols.append(index[row[1]])
            data.append(float(row[2]))
    counts = sp.coo_matrix((data, (rows, cols)), shape=(len(nodes), len(nodes)))
    return AssociationGraph.from_counts(nodes, counts)
