"""Independent brute-force oracles and synthetic-instance generators.

Everything here recomputes results with plain Python loops (lists, dicts,
BFS by hand) so the vectorized library code is checked against a second,
unrelated path.
"""

from __future__ import annotations

from collections import Counter, deque

import numpy as np
import scipy.sparse as sp

from moralgraph.data_io import AssociationCorpus, MoralLexicon, ResponseRecord
from moralgraph.graph import AssociationGraph


def brute_force_stats(graph: AssociationGraph) -> dict:
    """Recompute every graph statistic with nested loops and hand BFS."""
    n = len(graph.nodes)
    W = graph.weights.toarray()
    adj = [[j for j in range(n) if W[i][j] > 0] for i in range(n)]
    edges = [(i, j) for i in range(n) for j in adj[i] if i < j]
    m = len(edges)
    degrees = [len(adj[i]) for i in range(n)]

    locals_ = []
    for i in range(n):
        d = degrees[i]
        if d < 2:
            locals_.append(0.0)
            continue
        nb = adj[i]
        links = sum(
            1
            for x in range(len(nb))
            for y in range(x + 1, len(nb))
            if W[nb[x]][nb[y]] > 0
        )
        locals_.append(2.0 * links / (d * (d - 1)))

    component = [-1] * n
    label = 0
    for start in range(n):
        if component[start] >= 0:
            continue
        stack = [start]
        component[start] = label
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if component[v] < 0:
                    component[v] = label
                    stack.append(v)
        label += 1
    sizes = Counter(component)
    largest = max(sizes, key=lambda c: (sizes[c], -c))
    members = [i for i in range(n) if component[i] == largest]

    diameter = 0
    for src in members:
        dist = {src: 0}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        diameter = max(diameter, max(dist.values()))

    mean_deg = sum(degrees) / n
    sd_deg = (sum((d - mean_deg) ** 2 for d in degrees) / n) ** 0.5
    total_weight = sum(W[i][j] for i, j in edges)
    strengths = [sum(W[i]) for i in range(n)]
    return {
        "node_count": n,
        "edge_count": m,
        "density": m / (n * (n - 1) / 2.0) if n > 1 else 0.0,
        "avg_local_clustering": sum(locals_) / n,
        "diameter": diameter,
        "diameter_coverage": len(members) / n,
        "max_connectivity": max(degrees),
        "min_connectivity": min(degrees),
        "avg_connectivity": mean_deg,
        "sd_connectivity": sd_deg,
        "weighted_avg_edge": total_weight / m if m else 0.0,
        "weighted_degree_centrality": sum(strengths) / n,
    }


def naive_precision_at_k(ranking: list[str], reference: set[str], k: int) -> float:
    return len(set(ranking[:k]) & reference) / k


def random_graph(
    rng: np.random.Generator,
    n: int,
    connected: bool = True,
    extra_edges: float = 1.5,
    integer_weights: bool = False,
) -> AssociationGraph:
    """Random directed-count graph; a spanning tree guarantees connectivity."""
    counts = np.zeros((n, n))

    def weight() -> float:
        return float(rng.integers(1, 10)) if integer_weights else float(rng.uniform(0.5, 5.0))

    if connected and n > 1:
        for v in range(1, n):
            u = int(rng.integers(0, v))
            counts[u, v] += weight()
    for _ in range(int(extra_edges * n)):
        i, j = rng.integers(0, n, size=2)
        if i != j:
            counts[i, j] += weight()
    nodes = [f"w{i:03d}" for i in range(n)]
    return AssociationGraph.from_counts(nodes, sp.csr_matrix(counts))


def random_seed_matrix(rng: np.random.Generator, graph: AssociationGraph):
    """Random F0 with {-1, 0, 1} rows on a random node subset."""
    from moralgraph.propagation import MoralMatrix

    n = len(graph.nodes)
    k = max(1, int(rng.integers(1, max(2, n // 3))))
    chosen = rng.choice(n, size=k, replace=False)
    scores = np.zeros((n, 5))
    mask = np.zeros(n, dtype=bool)
    for i in chosen:
        row = rng.integers(-1, 2, size=5).astype(float)
        if not row.any():
            row[int(rng.integers(0, 5))] = 1.0
        scores[i] = row
        mask[i] = True
    return MoralMatrix(graph.nodes, scores, mask)


COMMUNITY = ("vile", "filth", "rot", "grime", "muck", "slop", "scum", "stench")
BACKGROUND = tuple(
    f"plain{i:02d}" for i in range(20)
)


def planted_community_corpus() -> tuple[AssociationCorpus, list[str], MoralLexicon]:
    """A corpus with a dense community around one negative seed word.

    Community members respond heavily to one another; background words form
    a weak ring with one weak bridge into the community, so the graph is
    connected but the negative mass stays concentrated.
    """
    records: list[ResponseRecord] = []
    trial = 0

    def add(cue: str, responses: tuple[str, ...], times: int) -> None:
        nonlocal trial
        for _ in range(times):
            records.append(ResponseRecord(cue, responses, "human", trial))
            trial += 1

    members = list(COMMUNITY)
    for i, cue in enumerate(members):
        others = members[i + 1 :] + members[:i]
        for start in range(0, len(others) - 2, 3):
            add(cue, tuple(others[start : start + 3]), 4)

    background = list(BACKGROUND)
    for i, cue in enumerate(background):
        add(cue, (background[(i + 1) % len(background)],), 2)
        add(cue, (background[(i + 2) % len(background)],), 1)
    add(background[0], (members[0],), 1)

    lexicon = MoralLexicon(
        entries={members[0]: np.array([-1.0, 0.0, 0.0, 0.0, 0.0])}, kind="hard"
    )
    vocabulary = members + background
    return AssociationCorpus(records), vocabulary, lexicon
