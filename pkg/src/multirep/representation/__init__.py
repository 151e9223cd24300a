"""
Representation layer for MultiRep.

Extracts the per-sentence representations from one encoder pass,
assembles instance and description embeddings, and exports them.
"""

from multirep.representation.export import (
    EmbeddingRow,
    embedding_header,
    read_embeddings_csv,
    rows_from_matrix,
    write_embeddings_csv,
)
from multirep.representation.extract import (
    RepSet,
    build_description_embedding,
    build_instance_embedding,
    description_repset,
    extract_at,
    extract_avg,
    extract_cls,
    extract_entity_markers,
    extract_mask,
    instance_repset,
    repset_from_vectors,
)
from multirep.representation.selector import (
    DESCRIPTION_COMPONENTS,
    DESCRIPTION_PARTNER,
    INSTANCE_COMPONENTS,
    UNITS,
    RepSelector,
    expand_tags,
)

__all__ = [
    # Selection
    "RepSelector",
    "INSTANCE_COMPONENTS",
    "DESCRIPTION_COMPONENTS",
    "DESCRIPTION_PARTNER",
    "UNITS",
    "expand_tags",
    # Extraction
    "RepSet",
    "extract_avg",
    "extract_at",
    "extract_cls",
    "extract_mask",
    "extract_entity_markers",
    "instance_repset",
    "description_repset",
    "repset_from_vectors",
    "build_instance_embedding",
    "build_description_embedding",
    # Export
    "EmbeddingRow",
    "embedding_header",
    "write_embeddings_csv",
    "read_embeddings_csv",
    "rows_from_matrix",
]
