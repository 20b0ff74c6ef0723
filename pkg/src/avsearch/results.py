"""Ranked-result records shared by both retrieval backends."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .validation import ValidationError


class Backend(str, enum.Enum):
    EMBEDDING = "embedding"
    FULLTEXT = "fulltext"


@dataclass(frozen=True)
class RankedResult:
    clip_id: str
    score: float
    rank: int
    backend: Backend

    def __post_init__(self):
        if self.rank < 1:
            raise ValidationError(f"rank must be >= 1, got {self.rank}")


def check_result_list(results) -> None:
    """Assert the within-list invariants: ranks 1..n, non-increasing scores, unique ids."""
    for i, r in enumerate(results):
        if r.rank != i + 1:
            raise ValidationError(f"ranks must be 1..n, got {r.rank} at position {i}")
    scores = [r.score for r in results]
    if any(a < b for a, b in zip(scores, scores[1:])):
        raise ValidationError("scores must be non-increasing")
    ids = [r.clip_id for r in results]
    if len(set(ids)) != len(ids):
        raise ValidationError("clip_ids must be distinct within one result list")
