"""Scientific claim verification against research abstracts.

Pipeline stages: BM25 retrieval with a pluggable reranker, joint
label + rationale prediction from a single long-context encoding,
weakly-supervised claim generation, two-stage finetuning, and the
abstract-level / sentence-level evaluation protocols.
"""

__version__ = "0.1.0"
