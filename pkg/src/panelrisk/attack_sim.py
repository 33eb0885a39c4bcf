"""Synthetic population and linking-attack simulation.

Backs the correct-match probability estimator with an experiment: draw
a population with known pattern frequencies, release a Bernoulli sample
of it, then let an adversary who picks random population members look
for unique matches in the sample. The fraction of unique matches that
hit the right person is the empirical counterpart of the estimator,
which is computed from the sample alone and never sees the ground
truth.

The adversary's probe pattern is always fully observed (a linking
dataset is assumed to know its own values); sample cells may be blanked
to exercise the missing-tolerant matching rule, in which case blanked
cells match any probe value.

Replicates split the random stream by seed derivation, so results do
not depend on scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .anonymity import QuasiIdentifier, k_profile
from .dataset import KIND_CATEGORICAL, Column, Dataset, VariableSpec
from .matching import MatchIndex, n_match_all
from .risk import ThetaEstimate, theta_from_k, theta_from_match

WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class VariableDistribution:
    """A categorical variable with label probabilities."""

    name: str
    labels: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.labels) != len(self.weights) or not self.labels:
            raise ValueError(f"variable {self.name!r}: labels and weights must "
                             "be non-empty and the same length")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"variable {self.name!r}: duplicate labels")
        if any(w < 0 for w in self.weights):
            raise ValueError(f"variable {self.name!r}: negative weight")
        if abs(sum(self.weights) - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"variable {self.name!r}: weights sum to "
                             f"{sum(self.weights)}, not 1")

    @classmethod
    def uniform(cls, name: str, n_categories: int) -> "VariableDistribution":
        labels = tuple(f"{name}_{i}" for i in range(n_categories))
        return cls(name, labels, (1.0 / n_categories,) * n_categories)


@dataclass(frozen=True)
class PopulationSpec:
    """Size, independent variable distributions and the generation seed."""

    size: int
    variables: tuple[VariableDistribution, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if self.size < 1:
            raise ValueError("population size must be at least 1")
        if not self.variables:
            raise ValueError("at least one variable is required")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")


@dataclass
class AttackResult:
    """Outcome of one simulated attack against one disclosed sample."""

    draws: int
    unique_matches: int
    correct_unique_matches: int
    empirical_theta: float | None
    predicted_theta: ThetaEstimate

    def __post_init__(self):
        if not 0 <= self.correct_unique_matches <= self.unique_matches <= self.draws:
            raise ValueError("inconsistent attack counts")


def gen_population(spec: PopulationSpec) -> Dataset:
    """Draw the population: independent categorical cells, no missing data."""
    rng = np.random.default_rng(spec.seed)
    no_missing = np.zeros(spec.size, dtype=bool)
    columns = {}
    schema = []
    for dist in spec.variables:
        codes = rng.choice(len(dist.labels), size=spec.size, p=dist.weights)
        var = VariableSpec(dist.name, KIND_CATEGORICAL)
        schema.append(var)
        columns[dist.name] = Column(var, codes.astype(np.int64), no_missing,
                                    list(dist.labels))
    return Dataset(schema, list(range(spec.size)), columns)


def sample_disclosed(population: Dataset, pi: float,
                     missing_rate: float | Mapping[str, float],
                     seed) -> tuple[Dataset, dict]:
    """Bernoulli-sample the population and blank cells at the missing rate.

    Returns the disclosed sample (fresh respondent ids) and the inclusion
    map population id -> sample id, the ground truth that the matcher
    never sees.
    """
    if not 0 < pi <= 1:
        raise ValueError(f"sampling fraction must be in (0, 1], got {pi}")
    rates = {spec.name: (missing_rate.get(spec.name, 0.0)
                         if isinstance(missing_rate, Mapping) else float(missing_rate))
             for spec in population.schema}
    for name, rate in rates.items():
        if not 0 <= rate < 1:
            raise ValueError(f"missing rate for {name!r} must be in [0, 1), got {rate}")

    rng = np.random.default_rng(seed)
    positions = np.flatnonzero(rng.random(population.n_rows) < pi)
    n_sample = len(positions)
    columns = {}
    for spec in population.schema:
        col = population.column(spec.name)
        missing = col.missing[positions].copy()
        rate = rates[spec.name]
        if rate > 0:
            missing |= rng.random(n_sample) < rate
        second = None if col.second is None else col.second[positions]
        columns[spec.name] = Column(spec, col.values[positions], missing,
                                    col.labels, second)
    sample = Dataset(population.schema, list(range(n_sample)), columns)
    inclusion = {population.respondent_ids[p]: i for i, p in enumerate(positions)}
    return sample, inclusion


def journalist_attack(population: Dataset, sample: Dataset, inclusion: Mapping,
                      qi: QuasiIdentifier, draws: int, seed) -> AttackResult:
    """Match random population members against the sample and keep score.

    A draw scores a unique match when exactly one sample row matches the
    member's pattern under the missing-tolerant rule, and a correct one
    when that row really is the drawn member. The predicted estimate
    comes from the sample alone: from anonymity sets when the sample is
    fully observed, from match counts otherwise.
    """
    if draws < 1:
        raise ValueError("draws must be positive")
    for name in qi.variables:
        if population.column(name).missing.any():
            raise ValueError(f"population is missing values on {name!r}; "
                             "probe patterns must be fully observed")

    probe_values = {}
    for name in qi.variables:
        col = population.column(name)
        if col.spec.kind == KIND_CATEGORICAL:
            probe_values[name] = [col.labels[c] for c in col.values.tolist()]
        else:
            probe_values[name] = col.values.tolist()

    index = MatchIndex(sample, qi)
    rng = np.random.default_rng(seed)
    units = rng.integers(0, population.n_rows, size=draws)
    names = list(qi.variables)
    unique_matches = 0
    correct = 0
    for unit in units.tolist():
        rows = index.matching_rows((name, probe_values[name][unit]) for name in names)
        if rows.bit_count() == 1:
            unique_matches += 1
            sample_row = rows.bit_length() - 1
            if inclusion.get(population.respondent_ids[unit]) == \
                    sample.respondent_ids[sample_row]:
                correct += 1

    sample_missing = any(sample.column(n).missing.any() for n in qi.variables)
    if sample_missing:
        predicted = theta_from_match(n_match_all(sample, qi), sample.n_rows,
                                     population.n_rows)
    elif sample.n_rows == 0:
        predicted = ThetaEstimate(None, 0, 0, 0.0, False)
    else:
        predicted = theta_from_k(k_profile(sample, qi), population.n_rows)

    return AttackResult(
        draws=draws,
        unique_matches=unique_matches,
        correct_unique_matches=correct,
        empirical_theta=correct / unique_matches if unique_matches else None,
        predicted_theta=predicted,
    )


def run_attack_replicates(spec: PopulationSpec, qi: QuasiIdentifier, pi: float,
                          missing_rate: float | Mapping[str, float], draws: int,
                          replicates: int, seed: int,
                          threads: int = 1) -> list[AttackResult]:
    """Independent disclosed samples and attacks against one population.

    Each replicate gets its own derived seeds, so the result list is the
    same no matter how many worker threads run it.
    """
    if replicates < 1:
        raise ValueError("replicates must be positive")
    population = gen_population(spec)
    children = np.random.SeedSequence(seed).spawn(replicates)

    def one(child) -> AttackResult:
        sample_seq, attack_seq = child.spawn(2)
        sample, inclusion = sample_disclosed(population, pi, missing_rate, sample_seq)
        return journalist_attack(population, sample, inclusion, qi, draws, attack_seq)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, children))
    return [one(child) for child in children]


@dataclass
class AttackSummary:
    """Pooled counts across replicates, next to the mean prediction."""

    replicates: int
    draws: int
    unique_matches: int
    correct_unique_matches: int
    empirical_theta: float | None
    mean_predicted_theta: float | None


def summarize_attacks(results: Sequence[AttackResult]) -> AttackSummary:
    unique = sum(r.unique_matches for r in results)
    correct = sum(r.correct_unique_matches for r in results)
    predicted = [r.predicted_theta.value for r in results
                 if r.predicted_theta.value is not None]
    return AttackSummary(
        replicates=len(results),
        draws=sum(r.draws for r in results),
        unique_matches=unique,
        correct_unique_matches=correct,
        empirical_theta=correct / unique if unique else None,
        mean_predicted_theta=sum(predicted) / len(predicted) if predicted else None,
    )
