"""Retrieval evaluation: R@N, median rank, and the method-by-dataset comparison table."""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import router as router_mod
from .corpus import GroundTruthPair
from .validation import UnencodableQueryError, ValidationError, check_positive_int

RECALL_RANKS = (1, 5, 10)


@dataclass(frozen=True)
class QueryRanking:
    pair: GroundTruthPair
    rank: int  # corpus_size + 1 when the truth clip was not returned
    list_size: int
    found: bool


@dataclass(frozen=True)
class MetricReport:
    r_at: dict[int, float]
    mdr: float
    n_queries: int
    n_not_found: int

    def to_dict(self) -> dict:
        return {
            "r_at": {str(n): v for n, v in sorted(self.r_at.items())},
            "mdr": self.mdr,
            "n_queries": self.n_queries,
            "n_not_found": self.n_not_found,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricReport":
        return cls(
            r_at={int(n): v for n, v in data["r_at"].items()},
            mdr=data["mdr"],
            n_queries=data["n_queries"],
            n_not_found=data["n_not_found"],
        )


def rank_of_truth(results, truth_clip: str, corpus_size: int) -> int:
    """1-based rank of the truth clip; corpus_size + 1 when absent."""
    for result in results:
        if result.clip_id == truth_clip:
            return result.rank
    return corpus_size + 1


def recall_at_n(rankings, n: int) -> float:
    check_positive_int(n, "n")
    rankings = list(rankings)
    if not rankings:
        raise ValidationError("recall needs at least one ranking")
    return sum(r.rank <= n for r in rankings) / len(rankings)


def median_rank(rankings) -> float:
    ranks = sorted(r.rank for r in rankings)
    if not ranks:
        raise ValidationError("median rank needs at least one ranking")
    mid = len(ranks) // 2
    if len(ranks) % 2:
        return float(ranks[mid])
    return (ranks[mid - 1] + ranks[mid]) / 2.0


def summarize(rankings) -> MetricReport:
    rankings = list(rankings)
    return MetricReport(
        r_at={n: recall_at_n(rankings, n) for n in RECALL_RANKS},
        mdr=median_rank(rankings),
        n_queries=len(rankings),
        n_not_found=sum(not r.found for r in rankings),
    )


def run_eval(method, test_pairs, k: int | None = None) -> MetricReport:
    """Rank every test pair's query over the full corpus (k defaults to corpus size)."""
    corpus_size = method.corpus_size
    if k is None:
        k = corpus_size
    rankings = []
    for pair in test_pairs:
        try:
            results = router_mod.query(method, pair.query_text, k)
        except UnencodableQueryError:
            results = []
        rank = rank_of_truth(results, pair.clip_id, corpus_size)
        rankings.append(
            QueryRanking(pair=pair, rank=rank, list_size=len(results),
                         found=rank <= len(results))
        )
    return summarize(rankings)


@dataclass
class ComparisonTable:
    """method name -> test-set label -> MetricReport (the comparison-matrix shape)."""

    cells: dict[str, dict[str, MetricReport]]

    def to_dict(self) -> dict:
        return {
            method: {ds: report.to_dict() for ds, report in sorted(columns.items())}
            for method, columns in sorted(self.cells.items())
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ComparisonTable":
        return cls(cells={
            method: {ds: MetricReport.from_dict(rep) for ds, rep in columns.items()}
            for method, columns in data.items()
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def render_text(self) -> str:
        """Aligned table with one row per method and R@5 shown first per test set."""
        methods = sorted(self.cells)
        datasets = sorted({ds for cols in self.cells.values() for ds in cols})
        header = ["method"] + [
            f"{ds} {col}" for ds in datasets for col in ("R@5", "R@1", "R@10", "MdR")
        ]
        rows = [header]
        for method in methods:
            row = [method]
            for ds in datasets:
                report = self.cells[method].get(ds)
                if report is None:
                    row += ["-"] * 4
                else:
                    row += [
                        f"{report.r_at[5]:.3f}",
                        f"{report.r_at[1]:.3f}",
                        f"{report.r_at[10]:.3f}",
                        f"{report.mdr:.1f}",
                    ]
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = []
        for i, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def compare(methods: dict, test_sets: dict, k: int | None = None) -> ComparisonTable:
    """Evaluate every bound method against every test set."""
    if not methods or not test_sets:
        raise ValidationError("compare needs at least one method and one test set")
    cells: dict[str, dict[str, MetricReport]] = {}
    for name, method in methods.items():
        cells[name] = {
            ds_label: run_eval(method, pairs, k=k)
            for ds_label, pairs in test_sets.items()
        }
    return ComparisonTable(cells=cells)


@dataclass(frozen=True)
class OrderingAssertion:
    """R@5 ordering between two table cells, with an additive slack on the right side."""

    left_method: str
    left_dataset: str
    right_method: str
    right_dataset: str
    min_advantage: float = 0.0  # assert left >= right + min_advantage

    def check(self, table: ComparisonTable) -> str | None:
        left = table.cells[self.left_method][self.left_dataset].r_at[5]
        right = table.cells[self.right_method][self.right_dataset].r_at[5]
        if left >= right + self.min_advantage - 1e-12:
            return None
        return (
            f"R@5 ordering violated: {self.left_method}/{self.left_dataset} "
            f"({left:.3f}) < {self.right_method}/{self.right_dataset} "
            f"({right:.3f}) + {self.min_advantage:.2f}"
        )


def default_ordering_assertions(
    baseline: str = "baseline",
    customised: str = "customised",
    classifier_enhanced: str = "classifier",
    original: str = "original",
    mixed: str = "mixed",
) -> list[OrderingAssertion]:
    """The directional claims the engine is expected to reproduce on synthetic data."""
    return [
        OrderingAssertion(classifier_enhanced, mixed, baseline, mixed, 0.30),
        OrderingAssertion(customised, mixed, baseline, mixed, 0.0),
        OrderingAssertion(baseline, original, customised, original, -0.05),
    ]


def check_orderings(table: ComparisonTable, assertions=None) -> list[str]:
    """Return human-readable failures for every violated ordering (empty = all hold)."""
    assertions = assertions if assertions is not None else default_ordering_assertions()
    failures = []
    for assertion in assertions:
        message = assertion.check(table)
        if message:
            failures.append(message)
    return failures
