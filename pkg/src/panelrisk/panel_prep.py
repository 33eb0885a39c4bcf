"""Longitudinal panel preparation.

Covers three steps that turn monthly background-variable waves into a
single analysis file:

* merge waves so each cell holds the most recent observed value,
* drop respondents who never contributed more than background data,
* estimate each respondent's month of birth from the calendar months in
  which their reported age changed.

All functions are pure over immutable inputs; per-respondent estimation
is independent across respondents.
"""

from __future__ import annotations

import os
import re
import csv
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dataset import (
    KIND_CATEGORICAL,
    KIND_MOB,
    Column,
    Dataset,
    VariableSpec,
    load_csv,
)

YearMonth = tuple[int, int]


class InconsistentAges(ValueError):
    """Reported ages cannot come from a single birthday (data noise)."""


@dataclass(frozen=True)
class BirthMonthEstimate:
    """0, 1 or 2 candidate calendar months, earlier candidate first.

    With two candidates they are cyclically adjacent (December precedes
    January); downstream consumers that need a single month take the
    first listed candidate.
    """

    candidates: tuple[int, ...] = ()

    def __post_init__(self):
        cands = tuple(self.candidates)
        object.__setattr__(self, "candidates", cands)
        if len(cands) > 2:
            raise ValueError("at most two candidate months")
        if any(not 1 <= m <= 12 for m in cands):
            raise ValueError(f"months must be 1..12, got {cands}")
        if len(cands) == 2 and cands[0] % 12 + 1 != cands[1]:
            raise ValueError(f"candidates {cands} are not cyclically adjacent")

    @property
    def first(self) -> int | None:
        """Earlier candidate, or None when there is no estimate."""
        return self.candidates[0] if self.candidates else None


@dataclass(frozen=True)
class WaveSeries:
    """Chronologically ordered (year-month, Dataset) waves sharing one schema."""

    waves: tuple[tuple[YearMonth, Dataset], ...]

    def __post_init__(self):
        object.__setattr__(self, "waves", tuple(self.waves))
        months = [m for m, _ in self.waves]
        if any(b <= a for a, b in zip(months, months[1:])):
            raise ValueError("wave months must be strictly increasing")
        if self.waves:
            schema = self.waves[0][1].schema
            for month, wave in self.waves[1:]:
                if wave.schema != schema:
                    raise ValueError(f"wave {month} does not share the series schema")


def _month_index(ym: YearMonth) -> int:
    return ym[0] * 12 + (ym[1] - 1)


def merge_waves(series: WaveSeries) -> Dataset:
    """Collapse a wave series to one row per respondent.

    Each cell takes the value from the latest wave where it was observed,
    and stays missing if never observed. Respondents appear in
    first-appearance order across waves.
    """
    if not series.waves:
        raise ValueError("merge_waves needs at least one wave")
    schema = series.waves[0][1].schema

    row_of: dict = {}
    ids: list = []
    for _, wave in series.waves:
        for rid in wave.respondent_ids:
            if rid not in row_of:
                row_of[rid] = len(ids)
                ids.append(rid)
    n = len(ids)

    columns: dict[str, Column] = {}
    for spec in schema:
        values = np.zeros(n, dtype=np.int64)
        missing = np.ones(n, dtype=bool)
        second = np.zeros(n, dtype=np.int64) if spec.kind == KIND_MOB else None
        labels: list[str] = []
        code_of: dict[str, int] = {}
        for _, wave in series.waves:
            col = wave.column(spec.name)
            target = np.fromiter((row_of[rid] for rid in wave.respondent_ids),
                                 dtype=np.intp, count=wave.n_rows)
            observed = ~col.missing
            rows = target[observed]
            if spec.kind == KIND_CATEGORICAL:
                translate = np.empty(len(col.labels), dtype=np.int64)
                for code, label in enumerate(col.labels):
                    merged = code_of.get(label)
                    if merged is None:
                        merged = len(labels)
                        code_of[label] = merged
                        labels.append(label)
                    translate[code] = merged
                values[rows] = translate[col.values[observed]]
            else:
                values[rows] = col.values[observed]
                if second is not None:
                    second[rows] = col.second[observed]
            missing[rows] = False
        columns[spec.name] = Column(
            spec, values, missing,
            labels if spec.kind == KIND_CATEGORICAL else None, second)
    return Dataset(schema, ids, columns)


def filter_background_only(merged: Dataset,
                           participation: Mapping[object, set]) -> tuple[Dataset, int]:
    """Keep respondents with background data and at least one study.

    A respondent survives the filter only with >=1 observed
    background-role cell and a non-empty study set in ``participation``
    (respondents absent from the map count as having no studies).
    Returns the filtered dataset and the number of removed respondents.
    """
    background = [s.name for s in merged.schema if s.role == "background"]
    has_background = np.zeros(merged.n_rows, dtype=bool)
    for name in background:
        has_background |= ~merged.column(name).missing
    keep = [i for i, rid in enumerate(merged.respondent_ids)
            if has_background[i] and participation.get(rid)]
    return merged.subset_rows(keep), merged.n_rows - len(keep)


def estimate_birth_month(
        age_by_wave: Sequence[tuple[YearMonth, int | None]]) -> BirthMonthEstimate:
    """Infer candidate birth months from a respondent's monthly age series.

    An age increase of exactly +1 between observations one calendar month
    apart marks a change month. Changes always observed in one month M
    leave two possibilities (the month before M, or M itself); changes
    observed in two adjacent months pin the earlier one as the birth
    month. Jumps across gaps of two or more months, or of two or more
    years, are ambiguous and contribute nothing.

    Raises :class:`InconsistentAges` on decreasing ages or change months
    that no single birthday can explain.
    """
    months = [_month_index(ym) for ym, _ in age_by_wave]
    if any(b <= a for a, b in zip(months, months[1:])):
        raise ValueError("age_by_wave must be in strictly increasing month order")

    observed = [(m, age) for m, (_, age) in zip(months, age_by_wave) if age is not None]
    change_months: set[int] = set()
    for (m1, a1), (m2, a2) in zip(observed, observed[1:]):
        if a2 < a1:
            raise InconsistentAges(f"age decreased from {a1} to {a2}")
        if a2 == a1 + 1 and m2 - m1 == 1:
            change_months.add(m2 % 12 + 1)

    if not change_months:
        return BirthMonthEstimate(())
    if len(change_months) == 1:
        month = change_months.pop()
        before = (month - 2) % 12 + 1
        return BirthMonthEstimate((before, month))
    if len(change_months) == 2:
        a, b = sorted(change_months)
        if a % 12 + 1 == b:
            return BirthMonthEstimate((a,))
        if b % 12 + 1 == a:  # December/January pair
            return BirthMonthEstimate((b,))
    raise InconsistentAges(f"change months {sorted(change_months)} do not fit one birthday")


def estimate_birth_months(series: WaveSeries, age_variable: str) -> dict:
    """Per-respondent estimates over a whole wave series.

    Respondents absent from a wave count as unobserved in that month.
    """
    merged_ids: list = []
    seen = set()
    for _, wave in series.waves:
        for rid in wave.respondent_ids:
            if rid not in seen:
                seen.add(rid)
                merged_ids.append(rid)

    per_wave: list[tuple[YearMonth, dict]] = []
    for month, wave in series.waves:
        col = wave.column(age_variable)
        ages = {rid: (None if col.missing[i] else int(col.values[i]))
                for i, rid in enumerate(wave.respondent_ids)}
        per_wave.append((month, ages))

    estimates = {}
    for rid in merged_ids:
        series_for_rid = [(month, ages.get(rid)) for month, ages in per_wave]
        try:
            estimates[rid] = estimate_birth_month(series_for_rid)
        except InconsistentAges as exc:
            raise InconsistentAges(f"respondent {rid!r}: {exc}") from None
    return estimates


def add_mob_column(dataset: Dataset, estimates: Mapping[object, BirthMonthEstimate],
                   name: str = "mob") -> Dataset:
    """Append a ``mob`` column; respondents without an estimate get ()."""
    first = np.zeros(dataset.n_rows, dtype=np.int64)
    second = np.zeros(dataset.n_rows, dtype=np.int64)
    missing = np.zeros(dataset.n_rows, dtype=bool)
    for i, rid in enumerate(dataset.respondent_ids):
        cands = estimates.get(rid, BirthMonthEstimate(())).candidates
        if not cands:
            missing[i] = True
        else:
            first[i] = cands[0]
            second[i] = cands[1] if len(cands) == 2 else 0
    spec = VariableSpec(name, KIND_MOB, role="derived")
    return dataset.with_column(Column(spec, first, missing, None, second))


_WAVE_NAME = re.compile(r"^(\d{4})-(\d{2})\.csv$")


def load_wave_directory(directory, schema: Sequence[VariableSpec],
                        id_column: str = "id") -> WaveSeries:
    """Read a directory of ``<YYYY-MM>.csv`` wave files into a WaveSeries."""
    waves = []
    for entry in sorted(os.listdir(directory)):
        if not entry.endswith(".csv"):
            continue
        match = _WAVE_NAME.match(entry)
        if not match:
            raise ValueError(f"wave file {entry!r} is not named <YYYY-MM>.csv")
        month = (int(match.group(1)), int(match.group(2)))
        if not 1 <= month[1] <= 12:
            raise ValueError(f"wave file {entry!r} has month outside 01..12")
        waves.append((month, load_csv(os.path.join(directory, entry), schema, id_column)))
    waves.sort(key=lambda item: item[0])
    return WaveSeries(tuple(waves))


def load_participation(path) -> dict:
    """Read a two-column CSV (respondent id, study id) into id -> study set."""
    participation: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        for line_no, row in enumerate(reader, start=2):
            if len(row) < 2 or not row[0] or not row[1]:
                raise ValueError(f"{path}, line {line_no}: expected respondent id and study id")
            participation.setdefault(row[0], set()).add(row[1])
    return participation
