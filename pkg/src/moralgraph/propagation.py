"""Seeding and propagation of five-dimensional moral values over a graph.

Scores spread through the symmetrically normalized weights
S = D^(-1/2) W D^(-1/2). Both modes converge to the same fixed point
X = (I - a S)^(-1) F0: the closed form solves that sparse linear system
column by column with conjugate gradients (the system is symmetric
positive definite because the spectral radius of aS is below 1), and the
iterative mode repeats X <- a S X + F0 until the max-norm change falls
under the tolerance. Rows of isolated nodes pass through unchanged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .data_io import DIMENSIONS, MoralLexicon, Report, read_report, write_report
from .evaluation import spearman
from .graph import AssociationGraph

log = logging.getLogger(__name__)

# Candidate grid for alpha tuning, 0.05 steps strictly inside (0, 1).
ALPHA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))


@dataclass
class MoralMatrix:
    """Per-node scores on the five moral dimensions, aligned to a graph."""

    nodes: tuple[str, ...]
    scores: np.ndarray  # (n, 5) float64
    seed_mask: np.ndarray  # (n,) bool, rows seeded in F0

    def seeded_count(self) -> int:
        return int(self.seed_mask.sum())


@dataclass
class PropagationConfig:
    alpha: float
    mode: str = "closed_form"  # or "iterative"
    max_iterations: int = 1000
    convergence_tolerance: float = 1e-8


@dataclass
class PropagationResult:
    matrix: MoralMatrix
    alpha: float
    mode: str
    iterations: int
    residual: float


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def seed_matrix(graph: AssociationGraph, lexicon: MoralLexicon) -> MoralMatrix:
    """Place hard lexicon vectors on matching vocabulary rows; zeros elsewhere."""
    if lexicon.kind != "hard":
        raise ValueError("seeding requires a hard lexicon")
    n = len(graph.nodes)
    scores = np.zeros((n, 5))
    mask = np.zeros(n, dtype=bool)
    missing = 0
    for word, vector in lexicon.entries.items():
        i = graph.index.get(word)
        if i is None:
            missing += 1
            continue
        scores[i] = vector
        mask[i] = True
    if not mask.any():
        raise ValueError("no lexicon word appears in the vocabulary; nothing to propagate")
    log.info("seeded %d nodes (%d lexicon words outside vocabulary)", mask.sum(), missing)
    return MoralMatrix(graph.nodes, scores, mask)


def normalized_operator(graph: AssociationGraph) -> sp.csr_matrix:
    """S = D^(-1/2) W D^(-1/2), with zero rows and columns for isolated nodes."""
    weights = graph.weights
    degree = np.asarray(weights.sum(axis=1)).ravel()
    inv_sqrt = np.zeros_like(degree)
    np.divide(1.0, np.sqrt(degree), out=inv_sqrt, where=degree > 0)
    scale = sp.diags(inv_sqrt)
    return (scale @ weights @ scale).tocsr()


def _check_alignment(graph: AssociationGraph, f0: MoralMatrix) -> None:
    if f0.nodes != graph.nodes or f0.scores.shape != (len(graph.nodes), 5):
        raise ValueError("moral matrix is not aligned to the graph")


def propagate(
    graph: AssociationGraph, f0: MoralMatrix, config: PropagationConfig
) -> PropagationResult:
    """Spread seed values over the whole graph.

    Returns the fixed point of X = a S X + F0, i.e. (I - a S)^(-1) F0, by
    sparse iteration or by a conjugate-gradient solve per dimension. A
    dense inverse is never formed.
    """
    if not 0.0 < config.alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {config.alpha}")
    _check_alignment(graph, f0)
    operator = normalized_operator(graph)
    if config.mode == "iterative":
        scores, iterations, residual = _propagate_iterative(operator, f0.scores, config)
    elif config.mode == "closed_form":
        scores, iterations, residual = _propagate_closed_form(operator, f0.scores, config)
    else:
        raise ValueError(f"unknown propagation mode {config.mode!r}")
    matrix = MoralMatrix(f0.nodes, scores, f0.seed_mask.copy())
    return PropagationResult(matrix, config.alpha, config.mode, iterations, residual)


def _propagate_iterative(
    operator: sp.csr_matrix, f0: np.ndarray, config: PropagationConfig
) -> tuple[np.ndarray, int, float]:
    current = f0.copy()
    for iteration in range(1, config.max_iterations + 1):
        updated = config.alpha * (operator @ current) + f0
        change = float(np.max(np.abs(updated - current)))
        current = updated
        if change < config.convergence_tolerance:
            return current, iteration, change
    raise ConvergenceError(
        f"no convergence after {config.max_iterations} iterations "
        f"(last change {change:.3e})",
        residual=change,
    )


def _propagate_closed_form(
    operator: sp.csr_matrix, f0: np.ndarray, config: PropagationConfig
) -> tuple[np.ndarray, int, float]:
    n = operator.shape[0]
    system = (sp.identity(n, format="csr") - config.alpha * operator).tocsr()
    scores = np.zeros_like(f0)
    iterations = 0
    residual = 0.0
    for dim in range(f0.shape[1]):
        column = f0[:, dim]
        if not column.any():
            continue
        steps = [0]
        solution, info = cg(
            system,
            column,
            rtol=config.convergence_tolerance,
            atol=0.0,
            maxiter=config.max_iterations,
            callback=lambda _x: steps.__setitem__(0, steps[0] + 1),
        )
        err = float(np.max(np.abs(system @ solution - column)))
        if info != 0:
            raise ConvergenceError(
                f"conjugate gradient failed on dimension {DIMENSIONS[dim]} "
                f"(info={info}, residual {err:.3e})",
                residual=err,
            )
        scores[:, dim] = solution
        iterations = max(iterations, steps[0])
        residual = max(residual, err)
    return scores, iterations, residual


def subtract_seeds(
    f_star: MoralMatrix, f0: MoralMatrix, mode: str = "subtract"
) -> tuple[MoralMatrix, np.ndarray]:
    """Remove the seeds' own initial values before evaluation.

    ``subtract`` replaces seeded rows by F* - F0 (default); ``exclude``
    leaves scores alone and instead returns an evaluation mask that drops
    seeded rows. The mask marks rows that downstream evaluation may use.
    """
    if f_star.nodes != f0.nodes or f_star.scores.shape != f0.scores.shape:
        raise ValueError("matrices are not aligned")
    scores = f_star.scores.copy()
    if mode == "subtract":
        scores[f0.seed_mask] -= f0.scores[f0.seed_mask]
        eval_mask = np.ones(len(f0.nodes), dtype=bool)
    elif mode == "exclude":
        eval_mask = ~f0.seed_mask
    else:
        raise ValueError(f"unknown seed handling mode {mode!r}")
    return MoralMatrix(f_star.nodes, scores, f0.seed_mask.copy()), eval_mask


@dataclass
class AlphaSelection:
    alpha: float
    correlations: list[tuple[float, float]]  # (candidate, mean Spearman rho)


def tune_alpha(
    graph: AssociationGraph,
    f0: MoralMatrix,
    tuning_lexicon: MoralLexicon,
    candidates: tuple[float, ...] = ALPHA_GRID,
    config: PropagationConfig | None = None,
) -> AlphaSelection:
    """Pick the alpha whose propagated scores best rank-correlate with soft gold values.

    For each candidate the mean Spearman rho over the five dimensions is
    computed on tuning words found in the vocabulary (raw propagated
    scores, no seed subtraction). Ties go to the smaller alpha.
    """
    if tuning_lexicon.kind != "soft":
        raise ValueError("alpha tuning requires a soft lexicon")
    if not candidates:
        raise ValueError("no alpha candidates given")
    base = config or PropagationConfig(alpha=candidates[0])
    tuning_rows = [
        (graph.index[word], vector)
        for word, vector in tuning_lexicon.entries.items()
        if word in graph.index
    ]
    if not tuning_rows:
        raise ValueError("no tuning word appears in the vocabulary")
    results: list[tuple[float, float]] = []
    for alpha in candidates:
        result = propagate(graph, f0, replace(base, alpha=alpha))
        rhos = []
        for dim in range(5):
            gold = []
            predicted = []
            for idx, vector in tuning_rows:
                if np.isnan(vector[dim]):
                    continue
                gold.append(vector[dim])
                predicted.append(result.matrix.scores[idx, dim])
            if len(gold) < 3:
                continue
            rho, _ = spearman(gold, predicted)
            if not np.isnan(rho):
                rhos.append(rho)
        results.append((alpha, float(np.mean(rhos)) if rhos else np.nan))
    valid = [(a, r) for a, r in results if not np.isnan(r)]
    if not valid:
        raise ValueError("no candidate produced a defined correlation")
    best = max(r for _, r in valid)
    chosen = min(a for a, r in valid if r == best)
    return AlphaSelection(chosen, results)


MORAL_SCORE_COLUMNS = ("word",) + DIMENSIONS + ("is_seed",)


def write_moral_scores(matrix: MoralMatrix, path, format: str = "csv") -> None:
    """Write the propagated network as ``word,care,...,sanctity,is_seed``."""
    rows = [
        (word, *matrix.scores[i], int(matrix.seed_mask[i]))
        for i, word in enumerate(matrix.nodes)
    ]
    write_report(Report(MORAL_SCORE_COLUMNS, rows), path, format)


def read_moral_scores(path, format: str = "csv") -> MoralMatrix:
    """Load a matrix written by :func:`write_moral_scores`."""
    report = read_report(path, format)
    if report.columns != MORAL_SCORE_COLUMNS:
        raise ValueError(f"{path}: expected columns {','.join(MORAL_SCORE_COLUMNS)}")
    nodes = tuple(str(row[0]) for row in report.rows)
    scores = np.array([[float(c) for c in row[1:6]] for row in report.rows])
    if scores.size == 0:
        scores = scores.reshape(0, 5)
    mask = np.array([bool(row[6]) for row in report.rows])
    return MoralMatrix(nodes, scores, mask)
