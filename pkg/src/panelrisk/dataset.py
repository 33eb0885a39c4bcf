"""Typed in-memory tabular data model with first-class missing values.

A :class:`Dataset` is a rectangular respondent-by-variable grid. Three
variable kinds are supported:

* ``integer`` -- signed whole numbers (year of birth, income in whole
  currency units). Decoded cell value: ``int`` or ``None`` when missing.
* ``categorical`` -- small integer codes mapped through a per-variable
  label dictionary built in first-appearance order. Decoded cell value:
  the label ``str`` or ``None``. Codes are dataset-local; anything that
  compares cells across independently loaded datasets must compare
  labels, never codes.
* ``mob`` -- a candidate-month set for an estimated month of birth:
  0, 1 or 2 calendar months. Decoded cell value: a tuple of months,
  ``()`` meaning no estimate. Serialized as ``""``, ``"6"`` or ``"5/6"``.

Datasets are immutable after construction (backing arrays are marked
read-only), so any number of threads may read them concurrently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

KIND_CATEGORICAL = "categorical"
KIND_INTEGER = "integer"
KIND_MOB = "mob"
KINDS = (KIND_CATEGORICAL, KIND_INTEGER, KIND_MOB)

ROLES = ("background", "study", "derived")

#: Decoded cell values: int (integer), str (categorical label),
#: tuple[int, ...] (mob candidates) or None (missing).
CellValue = int | str | tuple | None


@dataclass(frozen=True)
class VariableSpec:
    """Declares one variable: its name, kind, role and missing encoding."""

    name: str
    kind: str
    role: str = "background"
    missing_tokens: tuple[str, ...] = ("",)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r} for {self.name!r}")
        if self.role not in ROLES:
            raise ValueError(f"unknown variable role {self.role!r} for {self.name!r}")
        object.__setattr__(self, "missing_tokens", tuple(self.missing_tokens))


def encode_mob(candidates: Sequence[int]) -> str:
    """Serialize a candidate-month tuple: () -> "", (6,) -> "6", (5, 6) -> "5/6"."""
    return "/".join(str(m) for m in candidates)


def parse_mob(token: str) -> tuple[int, ...]:
    """Inverse of :func:`encode_mob`. Raises ValueError on malformed input."""
    token = token.strip()
    if not token:
        return ()
    parts = tuple(int(p) for p in token.split("/"))
    if len(parts) > 2 or any(not 1 <= m <= 12 for m in parts):
        raise ValueError(f"invalid month-of-birth candidates {token!r}")
    return parts


class Column:
    """Immutable storage for one variable across all respondents.

    ``values`` holds integer values or categorical codes; ``missing`` is a
    boolean mask. For ``mob`` columns ``values``/``second`` hold the first
    and second candidate month (0 = absent) and ``missing`` marks empty
    estimates.
    """

    __slots__ = ("spec", "values", "missing", "second", "labels")

    def __init__(self, spec: VariableSpec, values: np.ndarray, missing: np.ndarray,
                 labels: list[str] | None = None, second: np.ndarray | None = None):
        if spec.kind == KIND_CATEGORICAL and labels is None:
            raise ValueError(f"categorical column {spec.name!r} needs a label dictionary")
        if spec.kind == KIND_MOB and second is None:
            second = np.zeros(len(values), dtype=np.int64)
        self.spec = spec
        self.values = np.ascontiguousarray(values, dtype=np.int64)
        self.missing = np.ascontiguousarray(missing, dtype=bool)
        self.second = None if second is None else np.ascontiguousarray(second, dtype=np.int64)
        self.labels = labels
        if len(self.values) != len(self.missing):
            raise ValueError(f"column {spec.name!r} is ragged")
        for arr in (self.values, self.missing, self.second):
            if arr is not None:
                arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.values)

    def decode(self, row: int) -> CellValue:
        """Decoded value at a row position (None / () when missing)."""
        if self.spec.kind == KIND_MOB:
            if self.missing[row]:
                return ()
            first = int(self.values[row])
            second = int(self.second[row])
            return (first,) if second == 0 else (first, second)
        if self.missing[row]:
            return None
        if self.spec.kind == KIND_CATEGORICAL:
            return self.labels[self.values[row]]
        return int(self.values[row])

    def decoded(self) -> list[CellValue]:
        """Decoded values for all rows."""
        return [self.decode(i) for i in range(len(self))]

    def take(self, positions: np.ndarray) -> "Column":
        second = None if self.second is None else self.second[positions]
        return Column(self.spec, self.values[positions], self.missing[positions],
                      self.labels, second)


class Dataset:
    """Rectangular table of respondents by variables.

    Respondent ids are unique and keep their order through every
    operation; columns are aligned with that order.
    """

    def __init__(self, schema: Sequence[VariableSpec], respondent_ids: Sequence,
                 columns: dict[str, Column]):
        names = [spec.name for spec in schema]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names in schema")
        if len(set(respondent_ids)) != len(respondent_ids):
            raise ValueError("respondent ids are not unique")
        self.schema = list(schema)
        self.respondent_ids = list(respondent_ids)
        self.columns = columns
        for name in names:
            if name not in columns:
                raise ValueError(f"schema variable {name!r} has no column")
            if len(columns[name]) != len(self.respondent_ids):
                raise ValueError(f"column {name!r} is not rectangular")
        self._row_of = {rid: i for i, rid in enumerate(self.respondent_ids)}

    @property
    def n_rows(self) -> int:
        return len(self.respondent_ids)

    @property
    def variable_names(self) -> list[str]:
        return [spec.name for spec in self.schema]

    def __len__(self) -> int:
        return self.n_rows

    def spec_of(self, name: str) -> VariableSpec:
        return self.column(name).spec

    def column(self, name: str) -> Column:
        try:
            return self.columns[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def row_position(self, respondent_id) -> int:
        try:
            return self._row_of[respondent_id]
        except KeyError:
            raise KeyError(f"unknown respondent id {respondent_id!r}") from None

    def cell(self, respondent_id, name: str) -> CellValue:
        """Decoded cell for a respondent id and variable name."""
        return self.column(name).decode(self.row_position(respondent_id))

    def cell_at(self, row: int, name: str) -> CellValue:
        """Decoded cell by row position."""
        return self.column(name).decode(row)

    def pattern_at(self, row: int, variables: Sequence[str]) -> tuple:
        """Decoded response pattern of one row on the given variables."""
        return tuple(self.column(v).decode(row) for v in variables)

    def rows(self, variables: Sequence[str] | None = None) -> Iterator[tuple]:
        names = self.variable_names if variables is None else list(variables)
        cols = [self.column(n) for n in names]
        for i in range(self.n_rows):
            yield tuple(c.decode(i) for c in cols)

    def subset_rows(self, positions: Sequence[int]) -> "Dataset":
        """New Dataset keeping only the given row positions, in that order."""
        positions = np.asarray(positions, dtype=np.intp)
        ids = [self.respondent_ids[i] for i in positions]
        cols = {name: col.take(positions) for name, col in self.columns.items()}
        return Dataset(self.schema, ids, cols)

    def with_column(self, column: Column) -> "Dataset":
        """New Dataset with one extra column appended to the schema."""
        if column.spec.name in self.columns:
            raise ValueError(f"variable {column.spec.name!r} already exists")
        if len(column) != self.n_rows:
            raise ValueError(f"column {column.spec.name!r} is not rectangular")
        cols = dict(self.columns)
        cols[column.spec.name] = column
        return Dataset(self.schema + [column.spec], self.respondent_ids, cols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.respondent_ids != other.respondent_ids:
            return False
        if [(s.name, s.kind) for s in self.schema] != [(s.name, s.kind) for s in other.schema]:
            return False
        return all(self.column(n).decoded() == other.column(n).decoded()
                   for n in self.variable_names)

    def __repr__(self) -> str:
        return f"Dataset({self.n_rows} respondents x {len(self.schema)} variables)"


@dataclass
class _ColumnBuilder:
    spec: VariableSpec
    values: list[int] = field(default_factory=list)
    missing: list[bool] = field(default_factory=list)
    second: list[int] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    code_of: dict[str, int] = field(default_factory=dict)

    def add(self, raw: str, location: str) -> None:
        spec = self.spec
        if raw in spec.missing_tokens:
            self.values.append(0)
            self.missing.append(True)
            self.second.append(0)
            return
        self.missing.append(False)
        if spec.kind == KIND_INTEGER:
            try:
                self.values.append(int(raw))
            except ValueError:
                raise ValueError(
                    f"{location}: invalid integer {raw!r} in column {spec.name!r}"
                ) from None
            self.second.append(0)
        elif spec.kind == KIND_MOB:
            try:
                cands = parse_mob(raw)
            except ValueError as exc:
                raise ValueError(f"{location}: {exc}") from None
            if not cands:
                # Blank-equivalent token: an empty estimate.
                self.missing[-1] = True
                self.values.append(0)
                self.second.append(0)
            else:
                self.values.append(cands[0])
                self.second.append(cands[1] if len(cands) == 2 else 0)
        else:
            code = self.code_of.get(raw)
            if code is None:
                code = len(self.labels)
                self.code_of[raw] = code
                self.labels.append(raw)
            self.values.append(code)
            self.second.append(0)

    def build(self) -> Column:
        second = np.array(self.second, dtype=np.int64) if self.spec.kind == KIND_MOB else None
        return Column(self.spec,
                      np.array(self.values, dtype=np.int64),
                      np.array(self.missing, dtype=bool),
                      self.labels if self.spec.kind == KIND_CATEGORICAL else None,
                      second)


def load_csv(path, schema: Sequence[VariableSpec], id_column: str = "id") -> Dataset:
    """Read a UTF-8, RFC-4180-style CSV into a Dataset.

    The header must contain every schema variable; extra columns are
    ignored. Any cell whose raw string is in its variable's
    ``missing_tokens`` decodes as missing. Categorical dictionaries are
    built in first-appearance order. When ``id_column`` is absent,
    sequential ids 1..n are assigned.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        position = {name: i for i, name in enumerate(header)}
        for spec in schema:
            if spec.name not in position:
                raise ValueError(f"{path}: column {spec.name!r} not found in header")
        id_pos = position.get(id_column)
        builders = [(_ColumnBuilder(spec), position[spec.name]) for spec in schema]
        ids: list = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) < len(header):
                raise ValueError(f"{path}, line {line_no}: expected {len(header)} fields, "
                                 f"got {len(row)}")
            ids.append(row[id_pos] if id_pos is not None else str(len(ids) + 1))
            for builder, pos in builders:
                builder.add(row[pos], f"{path}, line {line_no}")
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate values in id column {id_column!r}")
    columns = {b.spec.name: b.build() for b, _ in builders}
    return Dataset(list(schema), ids, columns)


def write_csv(dataset: Dataset, path_or_file, id_column: str = "id") -> None:
    """Serialize a Dataset; missing cells use each variable's first missing token.

    ``path_or_file`` is a path or an open text stream.
    """
    if hasattr(path_or_file, "write"):
        _write_csv(dataset, path_or_file, id_column)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            _write_csv(dataset, fh, id_column)


def _write_csv(dataset: Dataset, fh, id_column: str) -> None:
    cols = [dataset.column(n) for n in dataset.variable_names]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow([id_column] + dataset.variable_names)
    for i, rid in enumerate(dataset.respondent_ids):
        record = [rid]
        for col in cols:
            value = col.decode(i)
            if value is None:
                record.append(col.spec.missing_tokens[0])
            elif col.spec.kind == KIND_MOB:
                record.append(encode_mob(value))
            else:
                record.append(str(value))
        writer.writerow(record)


def project(dataset: Dataset, variables: Iterable[str]) -> Dataset:
    """Dataset restricted to the given columns; respondents and order kept.

    Accepts any iterable of variable names (a QuasiIdentifier's
    ``variables`` included); an empty iterable yields a zero-column
    Dataset.
    """
    names = list(variables)
    schema = [dataset.spec_of(n) for n in names]
    columns = {n: dataset.columns[n] for n in names}
    return Dataset(schema, dataset.respondent_ids, columns)
