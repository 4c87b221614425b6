"""Deterministic text analysis shared by retrieval and the model tokenizer.

One analyzer, versioned: lowercase, split on non-alphanumeric runs, drop
empty tokens. No stemming, no stopword removal -- those are the largest
silent source of divergence between retrieval implementations, so they are
deliberately left out.
"""

import re

ANALYZER_VERSION = "lower-alnum-v1"

_TOKEN_RE = re.compile(r"[0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Split text into lowercase alphanumeric tokens."""
    return _TOKEN_RE.findall(text.lower())
