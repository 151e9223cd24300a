"""
Corpus layer for MultiRep.

FewRel-format loading and saving, relation descriptions, disjoint
relation splits, and the synthetic desk-scale corpus.
"""

from multirep.corpus.fewrel import (
    dump_fewrel,
    load_descriptions_json,
    load_fewrel_json,
    parse_descriptions,
    parse_fewrel,
    save_descriptions_json,
    save_fewrel_json,
)
from multirep.corpus.models import (
    DatasetSplit,
    RelationDescription,
    RelationInstance,
    SplitRole,
    check_disjoint,
    split_relations,
)
from multirep.corpus.synthetic import SyntheticSpec, generate_synthetic

__all__ = [
    # Models
    "RelationInstance",
    "RelationDescription",
    "DatasetSplit",
    "SplitRole",
    "split_relations",
    "check_disjoint",
    # FewRel files
    "load_fewrel_json",
    "save_fewrel_json",
    "parse_fewrel",
    "dump_fewrel",
    "load_descriptions_json",
    "save_descriptions_json",
    "parse_descriptions",
    # Synthetic
    "SyntheticSpec",
    "generate_synthetic",
]
