"""Re-identification risk assessment for survey panel microdata.

The toolkit prepares longitudinal panel files, audits k-anonymity under
listwise deletion, counts missing-tolerant matches, estimates the
probability that a unique match is correct, and validates that estimate
with a linking-attack simulator.
"""

from .anonymity import (
    KProfile,
    QuasiIdentifier,
    anonymity_sets,
    k_anonymity_audit,
    k_profile,
    k_values,
    listwise_delete,
)
from .attack_sim import (
    AttackResult,
    AttackSummary,
    PopulationSpec,
    VariableDistribution,
    gen_population,
    journalist_attack,
    run_attack_replicates,
    sample_disclosed,
    summarize_attacks,
)
from .dataset import (
    Column,
    Dataset,
    VariableSpec,
    load_csv,
    project,
    write_csv,
)
from .matching import (
    MatchIndex,
    MatchProfile,
    build_match_index,
    n_match_all,
    n_match_row,
)
from .panel_prep import (
    BirthMonthEstimate,
    InconsistentAges,
    WaveSeries,
    add_mob_column,
    estimate_birth_month,
    estimate_birth_months,
    filter_background_only,
    load_participation,
    load_wave_directory,
    merge_waves,
)
from .risk import (
    ListwiseRecord,
    MatchRecord,
    RiskReport,
    ThetaEstimate,
    risk_report,
    theta,
    theta_from_k,
    theta_from_match,
)

__version__ = "0.1.0"

__all__ = [
    "AttackResult",
    "AttackSummary",
    "BirthMonthEstimate",
    "Column",
    "Dataset",
    "InconsistentAges",
    "KProfile",
    "ListwiseRecord",
    "MatchIndex",
    "MatchProfile",
    "MatchRecord",
    "PopulationSpec",
    "QuasiIdentifier",
    "RiskReport",
    "ThetaEstimate",
    "VariableDistribution",
    "VariableSpec",
    "WaveSeries",
    "add_mob_column",
    "anonymity_sets",
    "build_match_index",
    "estimate_birth_month",
    "estimate_birth_months",
    "filter_background_only",
    "gen_population",
    "journalist_attack",
    "k_anonymity_audit",
    "k_profile",
    "k_values",
    "listwise_delete",
    "load_csv",
    "load_participation",
    "load_wave_directory",
    "merge_waves",
    "n_match_all",
    "n_match_row",
    "project",
    "risk_report",
    "run_attack_replicates",
    "sample_disclosed",
    "summarize_attacks",
    "theta",
    "theta_from_k",
    "theta_from_match",
    "write_csv",
]
