import pathlib

import numpy as np
import pytest

from panelrisk import Dataset, QuasiIdentifier, VariableSpec, load_csv
from panelrisk.dataset import Column

DATA_DIR = pathlib.Path(__file__).parent / "data"

SIX_SCHEMA = [
    VariableSpec("age", "integer", missing_tokens=("", ".")),
    VariableSpec("gender", "categorical", missing_tokens=("", ".")),
]


@pytest.fixture
def six_respondents() -> Dataset:
    """Six rows on (age, gender) with one missing cell in rows 3 and 4.

    Hand-derived facts used across tests: listwise deletion drops rows
    3 and 4; surviving anonymity-set sizes are (1, 1, 2, 2); literal
    match counts are (3, 1, 5, 3, 3, 3); with the observed-overlap
    restriction they become (3, 1, 4, 2, 3, 3).
    """
    return load_csv(DATA_DIR / "six_respondents.csv", SIX_SCHEMA)


@pytest.fixture
def age_gender() -> QuasiIdentifier:
    return QuasiIdentifier(("age", "gender"))


def make_dataset(columns: dict, ids=None) -> Dataset:
    """Build a Dataset from {name: (kind, decoded cell list)}.

    Decoded cells use None for missing (scalar kinds) and tuples for
    mob candidates, mirroring Dataset.cell output.
    """
    schema = []
    cols = {}
    n = None
    for name, (kind, cells) in columns.items():
        n = len(cells) if n is None else n
        assert len(cells) == n
        spec = VariableSpec(name, kind)
        schema.append(spec)
        if kind == "mob":
            first = np.array([c[0] if c else 0 for c in cells], dtype=np.int64)
            second = np.array([c[1] if c and len(c) == 2 else 0 for c in cells],
                              dtype=np.int64)
            missing = np.array([not c for c in cells], dtype=bool)
            cols[name] = Column(spec, first, missing, None, second)
        elif kind == "integer":
            missing = np.array([c is None for c in cells], dtype=bool)
            values = np.array([0 if c is None else c for c in cells], dtype=np.int64)
            cols[name] = Column(spec, values, missing)
        else:
            labels = []
            code_of = {}
            codes = []
            missing = np.array([c is None for c in cells], dtype=bool)
            for c in cells:
                if c is None:
                    codes.append(0)
                    continue
                if c not in code_of:
                    code_of[c] = len(labels)
                    labels.append(c)
                codes.append(code_of[c])
            cols[name] = Column(spec, np.array(codes, dtype=np.int64), missing, labels)
    ids = list(range(1, n + 1)) if ids is None else ids
    return Dataset(schema, ids, cols)


def random_dataset(rng: np.random.Generator, max_rows: int = 200, max_vars: int = 6,
                   max_missing: float = 0.5, with_mob: bool = False):
    """Random small dataset plus a quasi-identifier over all its variables."""
    n = int(rng.integers(1, max_rows + 1))
    n_vars = int(rng.integers(1, max_vars + 1))
    columns = {}
    for j in range(n_vars):
        rate = float(rng.uniform(0.0, max_missing))
        miss = rng.random(n) < rate
        if with_mob and j == n_vars - 1:
            cells = []
            for i in range(n):
                if miss[i]:
                    cells.append(())
                elif rng.random() < 0.5:
                    cells.append((int(rng.integers(1, 13)),))
                else:
                    first = int(rng.integers(1, 13))
                    cells.append((first, first % 12 + 1))
            columns[f"v{j}"] = ("mob", cells)
        elif rng.random() < 0.5:
            domain = int(rng.integers(2, 9))
            cells = [None if miss[i] else f"c{rng.integers(0, domain)}" for i in range(n)]
            columns[f"v{j}"] = ("categorical", cells)
        else:
            domain = int(rng.integers(2, 13))
            cells = [None if miss[i] else int(rng.integers(0, domain)) for i in range(n)]
            columns[f"v{j}"] = ("integer", cells)
    dataset = make_dataset(columns)
    return dataset, QuasiIdentifier(tuple(columns))


def brute_force_match_counts(dataset: Dataset, qi: QuasiIdentifier,
                             require_observed_overlap: bool = False) -> list[int]:
    """Independent re-statement of the matching rule, pure Python.

    Works from decoded cells only; kept free of the library's index and
    scan machinery on purpose.
    """
    kinds = [dataset.spec_of(name).kind for name in qi.variables]
    rows = [dataset.pattern_at(i, qi.variables) for i in range(dataset.n_rows)]
    counts = []
    for r, probe in enumerate(rows):
        total = 0
        for s, candidate in enumerate(rows):
            matches = True
            shares_observed = r == s
            for kind, j, cell in zip(kinds, probe, candidate):
                if kind == "mob":
                    j = j[0] if j else None
                if j is None:
                    continue
                if kind == "mob":
                    if cell and j not in cell:
                        matches = False
                        break
                    if cell:
                        shares_observed = True
                else:
                    if cell is not None and cell != j:
                        matches = False
                        break
                    if cell is not None:
                        shares_observed = True
            if matches and (not require_observed_overlap or shares_observed):
                total += 1
        counts.append(total)
    return counts
