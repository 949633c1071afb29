"""Word-association graphs, moral value propagation, and comparative analysis.

Build weighted association graphs from human or model response corpora,
spread five-dimensional moral seed values through them with a normalized
random walk, and compare the resulting moral networks: gold correlations,
precision@k, rankings, divergences, emotionality, concreteness, and
subgraph structure.
"""

__version__ = "0.1.0"

from .analysis import (
    DimensionSubgraphs,
    DivergenceRow,
    GroupComparison,
    LexiconAnalysis,
    MoralityRanking,
    compare_dimension_subgraphs,
    compare_values,
    dimension_norm_comparison,
    divergence,
    dominant_dimension,
    lexicon_analysis,
    mad_normalize,
    overall_morality,
    top_negative_by_dimension,
)
from .data_io import (
    DIMENSIONS,
    AssociationCorpus,
    EmbeddingTable,
    FormatError,
    MoralLexicon,
    NormLexicon,
    Report,
    ResponseRecord,
    load_embeddings,
    normalize_token,
    parse_moral_lexicon,
    parse_norm_lexicon,
    parse_responses,
    read_report,
    write_corpus,
    write_report,
)
from .elicitation import (
    ASSOCIATION_INSTRUCTIONS,
    ElicitationConfig,
    ElicitationError,
    ElicitationResult,
    SweepResult,
    build_prompt,
    corpus_reliability,
    elicit_corpus,
    parse_completion,
    spearman_brown,
    split_half_reliability,
    sweep_temperature,
    variability,
)
from .evaluation import (
    EvalReport,
    PrecisionCurve,
    embedding_neighbors,
    embedding_precision,
    evaluate_gmn,
    precision_at_k,
    spearman,
    strength_correlation,
)
from .graph import (
    AssociationGraph,
    GraphStats,
    association_strength,
    build_graph,
    compute_stats,
    extract_subgraph,
    read_graph,
    response_set,
    write_graph,
)
from .propagation import (
    ALPHA_GRID,
    AlphaSelection,
    ConvergenceError,
    MoralMatrix,
    PropagationConfig,
    PropagationResult,
    normalized_operator,
    propagate,
    read_moral_scores,
    seed_matrix,
    subtract_seeds,
    tune_alpha,
    write_moral_scores,
)
