import math

import numpy as np
import pytest

from panelrisk import (
    PopulationSpec,
    QuasiIdentifier,
    VariableDistribution,
    gen_population,
    journalist_attack,
    run_attack_replicates,
    sample_disclosed,
    summarize_attacks,
)


def _spec(size=2000, variables=None, seed=1):
    if variables is None:
        variables = (VariableDistribution.uniform("v0", 4),
                     VariableDistribution.uniform("v1", 4))
    return PopulationSpec(size, tuple(variables), seed)


def test_distribution_validation():
    with pytest.raises(ValueError, match="sum"):
        VariableDistribution("v", ("a", "b"), (0.6, 0.5))
    with pytest.raises(ValueError, match="negative"):
        VariableDistribution("v", ("a", "b"), (1.5, -0.5))
    with pytest.raises(ValueError, match="length"):
        VariableDistribution("v", ("a", "b"), (1.0,))
    with pytest.raises(ValueError, match="duplicate"):
        VariableDistribution("v", ("a", "a"), (0.5, 0.5))
    ok = VariableDistribution("v", ("a", "b"), (0.5 + 1e-12, 0.5))
    assert ok.labels == ("a", "b")


def test_population_spec_validation():
    with pytest.raises(ValueError, match="size"):
        _spec(size=0)
    with pytest.raises(ValueError, match="variable"):
        PopulationSpec(10, (), 1)


def test_gen_population_degenerate_weight():
    spec = _spec(variables=(VariableDistribution("v", ("only",), (1.0,)),), size=50)
    population = gen_population(spec)
    assert {population.cell_at(i, "v") for i in range(50)} == {"only"}


def test_gen_population_single_row():
    population = gen_population(_spec(size=1))
    assert population.n_rows == 1


def test_gen_population_frequencies_within_3_sigma():
    n = 10_000
    spec = _spec(size=n, variables=(
        VariableDistribution("a", ("0", "1"), (0.5, 0.5)),
        VariableDistribution("b", ("0", "1"), (0.5, 0.5))), seed=42)
    population = gen_population(spec)
    sigma = math.sqrt(n * 0.25)
    for name in ("a", "b"):
        ones = sum(population.cell_at(i, name) == "1" for i in range(n))
        assert abs(ones - n * 0.5) <= 3 * sigma


def test_gen_population_deterministic():
    assert gen_population(_spec(seed=9)) == gen_population(_spec(seed=9))


def test_sample_everything():
    population = gen_population(_spec(size=100))
    sample, inclusion = sample_disclosed(population, 1.0, 0.0, seed=3)
    assert sample.n_rows == 100
    assert len(inclusion) == 100
    for pop_id, sample_id in inclusion.items():
        for name in population.variable_names:
            assert sample.cell(sample_id, name) == population.cell(pop_id, name)


def test_sample_size_within_3_sigma():
    population = gen_population(_spec(size=50_000))
    sample, _ = sample_disclosed(population, 0.1, 0.0, seed=4)
    sigma = math.sqrt(50_000 * 0.1 * 0.9)
    assert abs(sample.n_rows - 5_000) <= 3 * sigma


def test_sample_blanking_rate_within_3_sigma():
    population = gen_population(_spec(size=20_000))
    sample, _ = sample_disclosed(population, 1.0, {"v0": 0.5}, seed=5)
    blanked = int(sample.column("v0").missing.sum())
    sigma = math.sqrt(20_000 * 0.25)
    assert abs(blanked - 10_000) <= 3 * sigma
    assert not sample.column("v1").missing.any()


def test_sample_parameter_validation():
    population = gen_population(_spec(size=10))
    with pytest.raises(ValueError, match="fraction"):
        sample_disclosed(population, 0.0, 0.0, 1)
    with pytest.raises(ValueError, match="missing rate"):
        sample_disclosed(population, 0.5, 1.0, 1)


def test_attack_census_unique_patterns_always_correct():
    # Distinct pattern per member and a census sample: every draw is a
    # correct unique match.
    labels = tuple(str(i) for i in range(30))
    spec = PopulationSpec(30, (VariableDistribution("v", labels, (1 / 30,) * 30),), 6)
    population = gen_population(spec)
    # Weights are uniform but draws may collide; force distinct cells instead.
    from panelrisk.dataset import Column, Dataset, VariableSpec
    var = VariableSpec("v", "categorical")
    column = Column(var, np.arange(30, dtype=np.int64), np.zeros(30, dtype=bool),
                    list(labels))
    population = Dataset([var], list(range(30)), {"v": column})
    sample, inclusion = sample_disclosed(population, 1.0, 0.0, seed=7)
    result = journalist_attack(population, sample, inclusion,
                               QuasiIdentifier(("v",)), draws=500, seed=8)
    assert result.unique_matches == 500
    assert result.empirical_theta == 1.0


def test_attack_identical_rows_never_unique():
    from panelrisk.dataset import Column, Dataset, VariableSpec
    var = VariableSpec("v", "categorical")
    column = Column(var, np.zeros(2, dtype=np.int64), np.zeros(2, dtype=bool), ["same"])
    population = Dataset([var], [0, 1], {"v": column})
    sample, inclusion = sample_disclosed(population, 1.0, 0.0, seed=9)
    result = journalist_attack(population, sample, inclusion,
                               QuasiIdentifier(("v",)), draws=200, seed=10)
    assert result.unique_matches == 0
    assert result.empirical_theta is None


def test_attack_deterministic_per_seed():
    spec = _spec(size=3000, variables=(VariableDistribution.uniform("v0", 25),
                                       VariableDistribution.uniform("v1", 25)))
    population = gen_population(spec)
    sample, inclusion = sample_disclosed(population, 0.3, 0.2, seed=11)
    qi = QuasiIdentifier(("v0", "v1"))
    first = journalist_attack(population, sample, inclusion, qi, 5000, seed=12)
    second = journalist_attack(population, sample, inclusion, qi, 5000, seed=12)
    assert first == second


def test_attack_census_sample_unique_probe_is_always_correct():
    # pi = 1, no blanking: a sample-unique probe can only hit itself.
    spec = _spec(size=500, variables=(VariableDistribution.uniform("v0", 40),
                                      VariableDistribution.uniform("v1", 40)))
    population = gen_population(spec)
    sample, inclusion = sample_disclosed(population, 1.0, 0.0, seed=14)
    result = journalist_attack(population, sample, inclusion,
                               QuasiIdentifier(("v0", "v1")), draws=2000, seed=15)
    assert result.unique_matches > 0
    assert result.empirical_theta == 1.0


def test_attack_counts_are_consistent():
    population = gen_population(_spec(size=2000))
    sample, inclusion = sample_disclosed(population, 0.2, 0.1, seed=16)
    result = journalist_attack(population, sample, inclusion,
                               QuasiIdentifier(("v0", "v1")), draws=1000, seed=17)
    assert 0 <= result.correct_unique_matches <= result.unique_matches <= result.draws


def test_attack_requires_positive_draws():
    population = gen_population(_spec(size=10))
    sample, inclusion = sample_disclosed(population, 1.0, 0.0, seed=1)
    with pytest.raises(ValueError, match="draws must be positive"):
        journalist_attack(population, sample, inclusion,
                          QuasiIdentifier(("v0",)), draws=0, seed=1)


def test_attack_rejects_missing_probe_values():
    from panelrisk.dataset import Column, Dataset, VariableSpec
    var = VariableSpec("v", "integer")
    column = Column(var, np.zeros(3, dtype=np.int64), np.array([False, True, False]))
    population = Dataset([var], [0, 1, 2], {"v": column})
    sample, inclusion = sample_disclosed(population, 1.0, 0.0, seed=2)
    with pytest.raises(ValueError, match="fully observed"):
        journalist_attack(population, sample, inclusion,
                          QuasiIdentifier(("v",)), draws=10, seed=3)


def test_predicted_theta_uses_match_counts_when_blanked():
    population = gen_population(_spec(size=4000))
    qi = QuasiIdentifier(("v0", "v1"))
    clean, incl_clean = sample_disclosed(population, 0.2, 0.0, seed=18)
    blanked, incl_blanked = sample_disclosed(population, 0.2, 0.3, seed=18)
    clean_result = journalist_attack(population, clean, incl_clean, qi, 100, seed=19)
    blanked_result = journalist_attack(population, blanked, incl_blanked, qi, 100, seed=19)
    # Same realized sample size, so pi agrees; the blanked sample must
    # have used the missing-tolerant counts (never more uniques).
    assert blanked_result.predicted_theta.n1 <= clean_result.predicted_theta.n1


def test_replicates_deterministic_and_thread_invariant():
    spec = _spec(size=1500)
    qi = QuasiIdentifier(("v0", "v1"))
    serial = run_attack_replicates(spec, qi, 0.3, 0.0, draws=400, replicates=4,
                                   seed=21, threads=1)
    threaded = run_attack_replicates(spec, qi, 0.3, 0.0, draws=400, replicates=4,
                                     seed=21, threads=4)
    assert serial == threaded
    summary = summarize_attacks(serial)
    assert summary.replicates == 4
    assert summary.draws == 1600
    assert summary.unique_matches == sum(r.unique_matches for r in serial)


def test_summary_handles_no_uniques():
    from panelrisk.attack_sim import AttackResult
    from panelrisk.risk import ThetaEstimate
    results = [AttackResult(10, 0, 0, None, ThetaEstimate(None, 0, 0, 0.0, False))]
    summary = summarize_attacks(results)
    assert summary.empirical_theta is None
    assert summary.mean_predicted_theta is None
