"""Listwise-deletion k-anonymity analysis.

Rows with any missing value on the quasi-identifier are removed first;
the survivors are partitioned into anonymity sets (groups sharing an
exact response pattern), whose size is k. A :class:`KProfile` gathers
the k histogram, deletion counts and sample-uniqueness proportions for
one quasi-identifier.

Candidate-month (``mob``) variables carry uncertainty rather than a
realized value and are rejected by every operation here; the
missing-tolerant counterpart in :mod:`panelrisk.matching` handles them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import KIND_MOB, Dataset

K_THRESHOLDS = (1, 5, 10)


@dataclass(frozen=True)
class QuasiIdentifier:
    """Ordered, duplicate-free list of variable names used as a matching key."""

    variables: tuple[str, ...]
    label: str = ""

    def __post_init__(self):
        variables = tuple(self.variables)
        object.__setattr__(self, "variables", variables)
        if not variables:
            raise ValueError("quasi-identifier needs at least one variable")
        if len(set(variables)) != len(variables):
            raise ValueError(f"duplicate variables in quasi-identifier {variables}")
        if not self.label:
            object.__setattr__(self, "label", " + ".join(variables))


@dataclass
class KProfile:
    """Anonymity-set statistics for one quasi-identifier.

    ``k_histogram`` maps set size to the number of sets of that size;
    ``respondents_k_le`` maps each threshold t to the number of
    respondents inside sets of size <= t. ``pr_su_new`` is the
    sample-unique share of the post-deletion rows, ``pr_su_full`` the
    share of the full sample of ``n_full`` rows.
    """

    qi: QuasiIdentifier
    n_full: int
    n_deleted: int
    n_remaining: int
    k_histogram: dict[int, int]
    respondents_k_le: dict[int, int] = field(default_factory=dict)

    @property
    def n_unique(self) -> int:
        return self.k_histogram.get(1, 0)

    @property
    def n_pairs(self) -> int:
        return self.k_histogram.get(2, 0)

    @property
    def pr_su_new(self) -> float:
        return self.n_unique / self.n_remaining if self.n_remaining else 0.0

    @property
    def pr_su_full(self) -> float:
        return self.n_unique / self.n_full if self.n_full else 0.0


def _check_qi(dataset: Dataset, qi: QuasiIdentifier) -> None:
    for name in qi.variables:
        if dataset.spec_of(name).kind == KIND_MOB:
            raise ValueError(
                f"variable {name!r} holds candidate birth months; exact-match "
                "anonymity sets are undefined over it")


def listwise_delete(dataset: Dataset, qi: QuasiIdentifier) -> tuple[Dataset, int]:
    """Drop every row with a missing cell on the quasi-identifier.

    Returns the surviving rows in their original order and the number of
    deleted rows.
    """
    _check_qi(dataset, qi)
    any_missing = np.zeros(dataset.n_rows, dtype=bool)
    for name in qi.variables:
        any_missing |= dataset.column(name).missing
    kept = np.flatnonzero(~any_missing)
    return dataset.subset_rows(kept), dataset.n_rows - len(kept)


def _code_matrix(dataset: Dataset, qi: QuasiIdentifier) -> np.ndarray:
    """Row-per-respondent integer matrix; only valid with no missing cells.

    Codes are dataset-local, so grouping by codes equals grouping by
    decoded values within one dataset.
    """
    for name in qi.variables:
        col = dataset.column(name)
        if col.missing.any():
            raise ValueError(f"missing cells on {name!r}; run listwise_delete first")
    return np.column_stack([dataset.column(n).values for n in qi.variables]) \
        if dataset.n_rows else np.empty((0, len(qi.variables)), dtype=np.int64)


def anonymity_sets(dataset: Dataset, qi: QuasiIdentifier) -> dict[tuple, list]:
    """Partition rows by exact response pattern on the quasi-identifier.

    Returns decoded pattern -> list of respondent ids, keyed in
    first-appearance order. The dataset must hold no missing cell on the
    quasi-identifier.
    """
    _check_qi(dataset, qi)
    for name in qi.variables:
        if dataset.column(name).missing.any():
            raise ValueError(f"missing cells on {name!r}; run listwise_delete first")
    blocks: dict[tuple, list] = {}
    for row in range(dataset.n_rows):
        pattern = dataset.pattern_at(row, qi.variables)
        blocks.setdefault(pattern, []).append(dataset.respondent_ids[row])
    return blocks


def k_values(dataset: Dataset, qi: QuasiIdentifier) -> np.ndarray:
    """Per-row anonymity-set size (requires no missing cells on the qi)."""
    _check_qi(dataset, qi)
    matrix = _code_matrix(dataset, qi)
    if not len(matrix):
        return np.zeros(0, dtype=np.int64)
    _, inverse, counts = np.unique(matrix, axis=0, return_inverse=True, return_counts=True)
    return counts[inverse]


def k_profile(dataset: Dataset, qi: QuasiIdentifier,
              n_full: int | None = None) -> KProfile:
    """Listwise-delete, then summarize the anonymity-set size distribution.

    ``n_full`` is the full-sample size used for the pr_su_full
    denominator; it defaults to the pre-deletion row count and must not
    be smaller than it.
    """
    if n_full is None:
        n_full = dataset.n_rows
    if n_full < dataset.n_rows:
        raise ValueError(f"n_full={n_full} is smaller than the dataset ({dataset.n_rows} rows)")
    surviving, n_deleted = listwise_delete(dataset, qi)
    sizes = k_values(surviving, qi)
    histogram: dict[int, int] = {}
    if len(sizes):
        unique_sizes, per_row = np.unique(sizes, return_counts=True)
        # per_row counts rows; each set of size s contributes s rows.
        histogram = {int(s): int(rows // s) for s, rows in zip(unique_sizes, per_row)}
    respondents_k_le = {t: int((sizes <= t).sum()) for t in K_THRESHOLDS}
    return KProfile(
        qi=qi,
        n_full=n_full,
        n_deleted=n_deleted,
        n_remaining=surviving.n_rows,
        k_histogram=histogram,
        respondents_k_le=respondents_k_le,
    )


def k_anonymity_audit(dataset: Dataset, qi: QuasiIdentifier,
                      k: int) -> tuple[bool, list[tuple[tuple, int]]]:
    """Check that every occurring pattern occurs at least k times.

    Returns (satisfied, violations) with violations as (pattern, count)
    sorted by pattern.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    blocks = anonymity_sets(dataset, qi)
    violations = sorted((pattern, len(ids)) for pattern, ids in blocks.items()
                        if len(ids) < k)
    return not violations, violations
