"""Generative subgraph-based knowledge graph completion pipeline.

Submodules:
    kg        dataset loading, vocabularies, adjacency indexes, query derivation
    kernels   graph traversal primitives (compiled core with pure-Python fallback)
    subgraph  per-query negatives, neighbor triples, context paths, budgeted merge
    prompts   QA prompt composition and JSONL dataset emission
    client    generation backends (OpenAI-compatible HTTP endpoint, mock oracle)
    scoring   Hits@k, hallucination stats, failure export, reevaluation ledger
    cli       end-to-end pipeline commands
"""

__version__ = "0.1.0"

from gskgc.errors import GskgcError, ValidationError, DataError, EndpointError

__all__ = ["GskgcError", "ValidationError", "DataError", "EndpointError", "__version__"]
