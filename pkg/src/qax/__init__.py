"""Cross-lingual extractive-QA dataset translation with span re-alignment."""

from .aligner import (
    AlignmentQuery,
    AlignmentResult,
    SimilarityWeights,
    align_answer,
)
from .pipeline import PipelineConfig, PipelineReport, run_pipeline
from .providers import EmbeddingVector, ProviderConfig, cosine_similarity, test_embedder
from .qa_metrics import EvalSummary, compute_em, compute_f1, evaluate_predictions
from .squad_format import (
    Answer,
    Article,
    Dataset,
    Paragraph,
    QA,
    parse_dataset,
    serialize_dataset,
    validate_dataset,
)
from .text_primitives import lcs_length, lcs_similarity, normalize_text, split_words

__version__ = "0.1.0"
