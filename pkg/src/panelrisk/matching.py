"""Missing-tolerant match counting.

For a probe respondent, a candidate row survives when, on every
quasi-identifier variable where the probe is observed, the candidate
either equals the probe value or is itself missing. Variables where the
probe is missing filter nothing. The count of survivors (always >= 1,
the probe matches itself) is the respondent's match count.

Candidate birth-month (``mob``) variables join in with their own rule:
the probe value is the first candidate month (missing when there is no
estimate) and a candidate row matches when its candidate set contains
the probe month or is empty.

Two implementations are provided. :func:`n_match_row` is the reference:
a literal one-row filter pass. :class:`MatchIndex` precomputes, per
(variable, value), the dense bit-per-row set of rows holding that value
or missing on that variable; a probe's count is then a word-wise
intersection of its observed values' row sets. Both produce identical
counts; the index is immutable once built and safe for concurrent
queries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anonymity import QuasiIdentifier
from .dataset import KIND_CATEGORICAL, KIND_MOB, CellValue, Column, Dataset

MATCH_THRESHOLDS = (1, 5, 10)

# Value groups at least this large get a precomputed dense row set;
# smaller groups are intersected row-by-row, which bounds index memory
# on high-cardinality variables (exact income and the like).
_DENSE_MIN = 64

_BIT = (np.uint64(1) << np.arange(64, dtype=np.uint64))


def _mask_to_words(mask: np.ndarray, n_words: int) -> np.ndarray:
    packed = np.packbits(mask, bitorder="little")
    buf = np.zeros(n_words * 8, dtype=np.uint8)
    buf[:len(packed)] = packed
    return buf.view(np.uint64)


def _words_to_int(words: np.ndarray) -> int:
    return int.from_bytes(words.view(np.uint8).tobytes(), "little")


def _probe_value(col: Column, row: int) -> CellValue:
    """Probe value for one cell: first mob candidate, else the decoded cell."""
    if col.missing[row]:
        return None
    if col.spec.kind == KIND_MOB:
        return int(col.values[row])
    if col.spec.kind == KIND_CATEGORICAL:
        return col.labels[col.values[row]]
    return int(col.values[row])


def _cell_match_mask(col: Column, value) -> np.ndarray:
    """Boolean mask of rows matching a non-missing probe value on one column."""
    if col.spec.kind == KIND_MOB:
        return (col.values == value) | (col.second == value) | col.missing
    if col.spec.kind == KIND_CATEGORICAL:
        try:
            code = col.labels.index(value)
        except ValueError:
            return col.missing.copy()
        return ((col.values == code) & ~col.missing) | col.missing
    return ((col.values == value) & ~col.missing) | col.missing


def n_match_row(dataset: Dataset, qi: QuasiIdentifier, respondent_id,
                require_observed_overlap: bool = False) -> int:
    """Match count of one respondent, by a literal filter pass.

    Starts from all rows; for each quasi-identifier variable where the
    probe is observed, keeps rows equal to the probe value or missing
    there; probe-missing variables keep everything. With
    ``require_observed_overlap``, candidate rows sharing no commonly
    observed quasi-identifier variable with the probe are dropped (the
    probe itself always stays).
    """
    row = dataset.row_position(respondent_id)
    keep = np.ones(dataset.n_rows, dtype=bool)
    for name in qi.variables:
        col = dataset.column(name)
        value = _probe_value(col, row)
        if value is None:
            continue
        keep &= _cell_match_mask(col, value)
    if require_observed_overlap:
        shares = np.zeros(dataset.n_rows, dtype=bool)
        for name in qi.variables:
            col = dataset.column(name)
            if not col.missing[row]:
                shares |= ~col.missing
        shares[row] = True
        keep &= shares
    return int(keep.sum())


@dataclass
class MatchProfile:
    """Per-respondent match counts and their summary for one quasi-identifier.

    ``at_most`` maps each threshold t to the number of respondents with
    count <= t (counts never drop below 1, so the t=1 entry is the
    exact-1 frequency). ``n2_equivalent`` is the count-2 row total
    halved, which may be fractional: matching is not an equivalence
    relation, but with no missing data this reduces to the number of
    anonymity-set pairs.
    """

    qi: QuasiIdentifier
    counts: np.ndarray
    at_most: dict[int, int]
    n1: int
    n2_equivalent: float

    @property
    def n_rows(self) -> int:
        return len(self.counts)

    @property
    def pr_su(self) -> float:
        return self.n1 / len(self.counts) if len(self.counts) else 0.0


def _profile(qi: QuasiIdentifier, counts: np.ndarray) -> MatchProfile:
    return MatchProfile(
        qi=qi,
        counts=counts,
        at_most={t: int((counts <= t).sum()) for t in MATCH_THRESHOLDS},
        n1=int((counts == 1).sum()),
        n2_equivalent=int((counts == 2).sum()) / 2,
    )


class MatchIndex:
    """Dense bit-per-row candidate sets, one per (variable, value).

    The row set for (v, u) holds every row whose cell on v equals u or
    is missing on v (for mob variables: whose candidate set contains u
    or is empty). Intersecting the sets of a probe's observed values
    reproduces the filter-pass match count exactly.
    """

    def __init__(self, dataset: Dataset, qi: QuasiIdentifier):
        self.qi = qi
        self.n_rows = dataset.n_rows
        self.n_words = max(1, -(-dataset.n_rows // 64))
        self._full_words = _mask_to_words(np.ones(self.n_rows, dtype=bool), self.n_words)
        self._miss_words: dict[str, np.ndarray] = {}
        self._observed_words: dict[str, np.ndarray] = {}
        # Per variable: value -> sorted row positions, and a dense row-set
        # (value rows | missing rows) for groups of _DENSE_MIN or more.
        self._groups: dict[str, dict] = {}
        self._dense: dict[str, dict] = {}
        self._int_cache: dict[tuple, int] = {}
        self._all_int = _words_to_int(self._full_words)
        for name in qi.variables:
            self._build_variable(dataset.column(name))

    def _build_variable(self, col: Column) -> None:
        name = col.spec.name
        miss_words = _mask_to_words(col.missing, self.n_words)
        self._miss_words[name] = miss_words
        self._observed_words[name] = _mask_to_words(~col.missing, self.n_words)
        groups: dict = {}
        if col.spec.kind == KIND_MOB:
            for month in range(1, 13):
                rows = np.flatnonzero((col.values == month) | (col.second == month))
                if len(rows):
                    groups[month] = rows
        else:
            observed = np.flatnonzero(~col.missing)
            values = col.values[observed]
            order = np.argsort(values, kind="stable")
            sorted_rows = observed[order]
            sorted_values = values[order]
            cuts = np.flatnonzero(np.diff(sorted_values)) + 1
            for chunk, rows in zip(np.split(sorted_values, cuts), np.split(sorted_rows, cuts)):
                if not len(chunk):
                    continue
                key = col.labels[chunk[0]] if col.spec.kind == KIND_CATEGORICAL \
                    else int(chunk[0])
                groups[key] = rows
        dense: dict = {}
        for key, rows in groups.items():
            if len(rows) >= _DENSE_MIN:
                mask = np.zeros(self.n_rows, dtype=bool)
                mask[rows] = True
                dense[key] = _mask_to_words(mask, self.n_words) | miss_words
        self._groups[name] = groups
        self._dense[name] = dense

    # -- set-level API (Python-int bitsets; bit i <-> row position i) --

    @property
    def all_rows(self) -> int:
        return self._all_int

    def wildcard_rows(self, variable: str) -> int:
        """Rows missing on the variable (they match every probe value)."""
        return _words_to_int(self._miss_words[variable])

    def observed_rows(self, variable: str) -> int:
        return _words_to_int(self._observed_words[variable])

    def rows_matching(self, variable: str, value) -> int:
        """Candidate row set for one (variable, value): equal-or-missing."""
        key = (variable, value)
        cached = self._int_cache.get(key)
        if cached is None:
            dense = self._dense[variable].get(value)
            if dense is not None:
                cached = _words_to_int(dense)
            else:
                cached = self.wildcard_rows(variable)
                for row in self._groups[variable].get(value, ()):
                    cached |= 1 << int(row)
            self._int_cache[key] = cached
        return cached

    def matching_rows(self, pattern) -> int:
        """Intersection over (variable, value) pairs; None values filter nothing."""
        acc = self.all_rows
        for variable, value in pattern:
            if value is None:
                continue
            acc &= self.rows_matching(variable, value)
        return acc

    def count_matches(self, pattern) -> int:
        return self.matching_rows(pattern).bit_count()

    # -- bulk path over the indexed dataset itself --

    def _row_plans(self, dataset: Dataset):
        """Per variable, a per-row handle: None when the probe is missing,
        else (dense_words | None, row_list, miss_words)."""
        plans = []
        for name in self.qi.variables:
            col = dataset.column(name)
            dense = self._dense[name]
            groups = self._groups[name]
            miss_words = self._miss_words[name]
            handles = {key: (dense.get(key), rows.tolist(), miss_words)
                       for key, rows in groups.items()}
            if col.spec.kind == KIND_CATEGORICAL:
                by_code = [handles.get(label) for label in col.labels]
                plan = [None if m else by_code[v]
                        for v, m in zip(col.values.tolist(), col.missing.tolist())]
            else:  # integer and mob probe on the raw first value
                plan = [None if m else handles.get(v)
                        for v, m in zip(col.values.tolist(), col.missing.tolist())]
            plans.append(plan)
        return plans

    def counts_for(self, dataset: Dataset,
                   require_observed_overlap: bool = False) -> np.ndarray:
        """Match count for every row of the dataset the index was built on."""
        n = dataset.n_rows
        counts = np.zeros(n, dtype=np.int64)
        if not n:
            return counts
        plans = self._row_plans(dataset)
        observed_words = [self._observed_words[name] for name in self.qi.variables]
        miss_flags = [dataset.column(name).missing for name in self.qi.variables]
        acc = np.empty(self.n_words, dtype=np.uint64)
        tmp = np.empty(self.n_words, dtype=np.uint64)
        for i in range(n):
            acc[:] = self._full_words
            for plan in plans:
                handle = plan[i]
                if handle is None:
                    continue
                dense, rows, miss_words = handle
                if dense is not None:
                    np.bitwise_and(acc, dense, out=acc)
                else:
                    np.bitwise_and(acc, miss_words, out=tmp)
                    for r in rows:
                        w = r >> 6
                        bit = _BIT[r & 63]
                        if acc[w] & bit:
                            tmp[w] |= bit
                    acc, tmp = tmp, acc
            if require_observed_overlap:
                tmp[:] = 0
                for words, miss in zip(observed_words, miss_flags):
                    if not miss[i]:
                        np.bitwise_or(tmp, words, out=tmp)
                tmp[i >> 6] |= _BIT[i & 63]
                np.bitwise_and(acc, tmp, out=acc)
            counts[i] = int(np.bitwise_count(acc).sum())
        return counts


def build_match_index(dataset: Dataset, qi: QuasiIdentifier) -> MatchIndex:
    """Single-pass index construction; the result is immutable."""
    return MatchIndex(dataset, qi)


def n_match_all(dataset: Dataset, qi: QuasiIdentifier,
                require_observed_overlap: bool = False,
                method: str = "indexed",
                index: MatchIndex | None = None) -> MatchProfile:
    """Match counts for every respondent, summarized as a MatchProfile.

    ``method`` picks the indexed fast path or the reference row-by-row
    scan; both return identical profiles. A prebuilt ``index`` over the
    same dataset and quasi-identifier may be reused.
    """
    if method == "indexed":
        if index is None:
            index = build_match_index(dataset, qi)
        counts = index.counts_for(dataset, require_observed_overlap)
    elif method == "scan":
        counts = np.fromiter(
            (n_match_row(dataset, qi, rid, require_observed_overlap)
             for rid in dataset.respondent_ids),
            dtype=np.int64, count=dataset.n_rows)
    else:
        raise ValueError(f"unknown method {method!r}; use 'indexed' or 'scan'")
    return _profile(qi, counts)
