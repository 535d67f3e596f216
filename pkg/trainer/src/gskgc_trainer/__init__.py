"""Low-rank-adapter instruction tuning for KGC QA datasets.

Consumes trainer JSONL ({"instruction", "input", "output"} per line), freezes
a small causal language model and trains rank-r adapter matrices on top of it,
with the loss masked to the answer tokens only.
"""

__version__ = "0.1.0"


class TrainerError(Exception):
    """Bad inputs: schema mismatches, empty datasets, invalid configs."""
