"""Correct-match probability and risk report assembly.

The headline quantity is theta, the probability that a unique match
between a random population member and the disclosed sample is the
right person. It is estimated from the sample alone as

    theta = n1*pi / (n1*pi + 2*(1 - pi)*n2)

with n1 the number of sample-unique patterns, n2 the number of pattern
pairs, and pi the sampling fraction n/N. Degenerate estimates (0 or 1
out of tiny counts) are kept but flagged unreliable so report renderers
can blank them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .anonymity import KProfile, QuasiIdentifier, k_profile
from .dataset import KIND_MOB, Dataset
from .matching import MatchProfile, n_match_all

DEFAULT_RELIABILITY_MIN_N1 = 10


@dataclass(frozen=True)
class ThetaEstimate:
    """Point estimate with the counts behind it.

    ``value`` is None when the estimator is undefined (both counts
    zero). ``reliable`` is False for undefined values, for n1 below the
    configured floor, and for degenerate 0/1 values produced by an empty
    count rather than by pi = 1.
    """

    value: float | None
    n1: int
    n2: float
    pi: float
    reliable: bool


def theta(n1: int, n2: float, pi: float,
          reliability_min_n1: int = DEFAULT_RELIABILITY_MIN_N1) -> ThetaEstimate:
    """Evaluate the estimator for given uniques, pairs and sampling fraction."""
    if not 0 < pi <= 1:
        raise ValueError(f"sampling fraction must be in (0, 1], got {pi}")
    if n1 < 0 or n2 < 0:
        raise ValueError("counts must be nonnegative")
    denominator = n1 * pi + 2 * (1 - pi) * n2
    if denominator <= 0:
        return ThetaEstimate(None, n1, n2, pi, False)
    value = n1 * pi / denominator
    reliable = n1 >= reliability_min_n1
    if value == 0.0:
        reliable = False
    if value == 1.0 and pi < 1:
        # A "certain" match read off n2 = 0 says more about sparse counts
        # than about the data; pi = 1 is the one honest way to reach 1.
        reliable = False
    return ThetaEstimate(value, n1, n2, pi, reliable)


def _undefined(n1: int, n2: float) -> ThetaEstimate:
    return ThetaEstimate(None, n1, n2, 0.0, False)


def theta_from_k(profile: KProfile, population_size: int,
                 reliability_min_n1: int = DEFAULT_RELIABILITY_MIN_N1) -> ThetaEstimate:
    """Estimate from an anonymity-set profile; pi uses the post-deletion n."""
    if population_size < profile.n_remaining:
        raise ValueError("population size is smaller than the sample")
    if profile.n_remaining == 0:
        return _undefined(0, 0)
    return theta(profile.n_unique, profile.n_pairs,
                 profile.n_remaining / population_size, reliability_min_n1)


def theta_from_match(profile: MatchProfile, n_full: int, population_size: int,
                     reliability_min_n1: int = DEFAULT_RELIABILITY_MIN_N1) -> ThetaEstimate:
    """Estimate from a match-count profile; pi uses the full sample size."""
    if population_size < n_full:
        raise ValueError("population size is smaller than the sample")
    if n_full == 0:
        return _undefined(profile.n1, profile.n2_equivalent)
    return theta(profile.n1, profile.n2_equivalent,
                 n_full / population_size, reliability_min_n1)


@dataclass
class ListwiseRecord:
    """One listwise-deletion report row."""

    qi_label: str
    n_deleted: int
    n_remaining: int
    respondents_k_le: dict[int, int]
    pr_su_new: float
    pr_su_full: float
    theta: ThetaEstimate


@dataclass
class MatchRecord:
    """One match-count report row."""

    qi_label: str
    at_most: dict[int, int]
    pr_su: float
    theta: ThetaEstimate


@dataclass
class RiskReport:
    """All requested (quasi-identifier, method) records plus run metadata.

    Quasi-identifiers containing a candidate-month variable get no
    listwise record: exact-match anonymity sets are undefined over
    candidate sets, so only the match-count method covers them.
    """

    listwise: list[ListwiseRecord]
    n_match: list[MatchRecord]
    n_full: int
    population_size: int


METHODS = ("listwise", "n_match")


def risk_report(dataset: Dataset, qis: list[QuasiIdentifier], population_size: int,
                n_full: int | None = None, methods=METHODS,
                reliability_min_n1: int = DEFAULT_RELIABILITY_MIN_N1,
                require_observed_overlap: bool = False) -> RiskReport:
    """Run the requested methods over every quasi-identifier, in order."""
    if not qis:
        raise ValueError("at least one quasi-identifier is required")
    methods = tuple(methods)
    unknown = [m for m in methods if m not in METHODS]
    if unknown or not methods:
        raise ValueError(f"methods must be a non-empty subset of {METHODS}, got {methods}")
    if n_full is None:
        n_full = dataset.n_rows
    if population_size < n_full:
        raise ValueError("population size is smaller than n_full")

    listwise_records: list[ListwiseRecord] = []
    match_records: list[MatchRecord] = []
    for qi in qis:
        has_mob = any(dataset.spec_of(v).kind == KIND_MOB for v in qi.variables)
        if "listwise" in methods and not has_mob:
            profile = k_profile(dataset, qi, n_full)
            listwise_records.append(ListwiseRecord(
                qi_label=qi.label,
                n_deleted=profile.n_deleted,
                n_remaining=profile.n_remaining,
                respondents_k_le=dict(profile.respondents_k_le),
                pr_su_new=profile.pr_su_new,
                pr_su_full=profile.pr_su_full,
                theta=theta_from_k(profile, population_size, reliability_min_n1),
            ))
        if "n_match" in methods:
            profile = n_match_all(dataset, qi,
                                  require_observed_overlap=require_observed_overlap)
            match_records.append(MatchRecord(
                qi_label=qi.label,
                at_most=dict(profile.at_most),
                pr_su=profile.pr_su,
                theta=theta_from_match(profile, n_full, population_size,
                                       reliability_min_n1),
            ))
    return RiskReport(listwise_records, match_records, n_full, population_size)
