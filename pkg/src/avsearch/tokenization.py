"""Canonical tokenizer used by the featurizer, the full-text index and the classifier."""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on any non-alphanumeric character, drop empty tokens.

    No stemming, no stopword removal.
    """
    return _TOKEN_RE.findall(text.lower())
