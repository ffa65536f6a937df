"""Crowd annotation platform inferring preposition supersense labels from
substitution and similarity proxy judgments."""

from .corpus import (
    Corpus,
    Instance,
    LabelInventory,
    SupersenseLabel,
    ingest_corpus,
    instances_of_preposition,
    marked_text,
    parse_label,
    render_label,
)
from .errors import PrepsenseError
from .retrieval import (
    Neighbor,
    NeighborBatch,
    RetrievalStrategy,
    dedup_merge,
    diversity_filter,
    merged_batch,
    retrieve_batch,
)
from .vectors import (
    MockTaggerProvider,
    ProbabilityVector,
    SplitAssignment,
    VectorStore,
    cosine_similarity,
    partition_jackknife,
    produce_vectors,
)

__version__ = "0.1.0"
