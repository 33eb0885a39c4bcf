"""Command-line entry point, JSON run configuration and report rendering.

Subcommands:

* ``prep`` -- merge monthly wave CSVs, drop background-only
  respondents, estimate month of birth, write the prepared CSV.
* ``assess`` -- compute the risk report for configured
  quasi-identifiers (text, json or csv).
* ``simulate`` -- run the linking-attack simulation and compare the
  empirical correct-match rate with the estimator.
* ``oracle`` -- recompute match counts with the reference scan and
  check them against the indexed path.

Exit codes: 0 success, 1 runtime failure (I/O, bad data), 2 usage or
configuration error. Machine-readable output is byte-stable for a fixed
seed.
"""

from __future__ import annotations

import argparse
import json
import sys

from .anonymity import QuasiIdentifier
from .attack_sim import (
    AttackResult,
    AttackSummary,
    PopulationSpec,
    VariableDistribution,
    run_attack_replicates,
    summarize_attacks,
)
from .dataset import Dataset, VariableSpec, load_csv, write_csv
from .matching import n_match_all
from .panel_prep import (
    add_mob_column,
    estimate_birth_months,
    filter_background_only,
    load_participation,
    load_wave_directory,
    merge_waves,
)
from .risk import (
    DEFAULT_RELIABILITY_MIN_N1,
    RiskReport,
    ThetaEstimate,
    risk_report,
)

UNRELIABLE_MARK = "-"


class ConfigError(ValueError):
    """Configuration problem; reported with exit status 2."""


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return config


def _parse_schema(config: dict) -> list[VariableSpec]:
    entries = config.get("schema")
    if not entries:
        raise ConfigError("config needs a non-empty 'schema' list")
    specs = []
    for entry in entries:
        try:
            specs.append(VariableSpec(
                name=entry["name"],
                kind=entry.get("kind", "categorical"),
                role=entry.get("role", "background"),
                missing_tokens=tuple(entry.get("missing_tokens", [""])),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad schema entry {entry!r}: {exc}") from None
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate variable names in schema")
    return specs


def _parse_qis(config: dict, known_variables: set[str]) -> list[QuasiIdentifier]:
    entries = config.get("quasi_identifiers")
    if not entries:
        raise ConfigError("config needs a non-empty 'quasi_identifiers' list")
    qis = []
    for entry in entries:
        variables = entry.get("variables") if isinstance(entry, dict) else entry
        label = entry.get("label", "") if isinstance(entry, dict) else ""
        if not variables:
            raise ConfigError(f"quasi-identifier {entry!r} names no variables")
        for name in variables:
            if name not in known_variables:
                raise ConfigError(f"quasi-identifier variable {name!r} is not in the schema")
        try:
            qis.append(QuasiIdentifier(tuple(variables), label))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return qis


def _input_section(config: dict) -> dict:
    section = config.get("input")
    if not isinstance(section, dict):
        raise ConfigError("config needs an 'input' object")
    return section


def _positive_int(config: dict, key: str, default=None):
    value = config.get(key, default)
    if value is None:
        return None
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"'{key}' must be a positive integer, got {value!r}")
    return value


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- rendering ----------------------------------------------------------

def _fmt_proportion(value: float) -> str:
    return f"{value:.4f}"


def _fmt_theta(estimate: ThetaEstimate) -> str:
    if not estimate.reliable or estimate.value is None:
        return UNRELIABLE_MARK
    return f"{estimate.value:.4f}"


def _theta_dict(estimate: ThetaEstimate) -> dict:
    return {
        "value": estimate.value,
        "n1": estimate.n1,
        "n2": estimate.n2,
        "pi": estimate.pi,
        "reliable": estimate.reliable,
    }


def report_to_dict(report: RiskReport) -> dict:
    return {
        "n_full": report.n_full,
        "population_size": report.population_size,
        "listwise": [
            {
                "quasi_identifier": rec.qi_label,
                "n_deleted": rec.n_deleted,
                "n": rec.n_remaining,
                "k_le": {str(t): c for t, c in rec.respondents_k_le.items()},
                "pr_su_new": rec.pr_su_new,
                "pr_su_full": rec.pr_su_full,
                "theta": _theta_dict(rec.theta),
            }
            for rec in report.listwise
        ],
        "n_match": [
            {
                "quasi_identifier": rec.qi_label,
                "n_match_le": {str(t): c for t, c in rec.at_most.items()},
                "pr_su": rec.pr_su,
                "theta": _theta_dict(rec.theta),
            }
            for rec in report.n_match
        ],
    }


def _render_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    lines = []
    for cells in [headers] + rows:
        padded = [cells[0].ljust(widths[0])]
        padded += [cell.rjust(w) for cell, w in zip(cells[1:], widths[1:])]
        lines.append("  ".join(padded).rstrip())
    lines.insert(1, "-" * max(len(line) for line in lines))
    return "\n".join(lines)


def report_to_text(report: RiskReport) -> str:
    sections = []
    if report.listwise:
        headers = ["Quasi-Identifier", "n_deleted", "n", "k = 1", "k ≤ 5",
                   "k ≤ 10", "Pr(SU)_new", "Pr(SU)_full", "θ"]
        rows = [[rec.qi_label, str(rec.n_deleted), str(rec.n_remaining),
                 str(rec.respondents_k_le[1]), str(rec.respondents_k_le[5]),
                 str(rec.respondents_k_le[10]), _fmt_proportion(rec.pr_su_new),
                 _fmt_proportion(rec.pr_su_full), _fmt_theta(rec.theta)]
                for rec in report.listwise]
        sections.append("Listwise deletion\n" + _render_table(headers, rows))
    if report.n_match:
        headers = ["Quasi-identifier", "n_match = 1", "n_match ≤ 5",
                   "n_match ≤ 10", "Pr(SU)", "θ"]
        rows = [[rec.qi_label, str(rec.at_most[1]), str(rec.at_most[5]),
                 str(rec.at_most[10]), _fmt_proportion(rec.pr_su),
                 _fmt_theta(rec.theta)]
                for rec in report.n_match]
        sections.append("Number of matches\n" + _render_table(headers, rows))
    meta = f"n_full = {report.n_full}, N = {report.population_size}"
    return "\n\n".join(sections + [meta]) + "\n"


def report_to_csv(report: RiskReport) -> str:
    import csv as _csv
    import io
    buffer = io.StringIO()
    writer = _csv.writer(buffer, lineterminator="\n")
    writer.writerow(["method", "quasi_identifier", "n_deleted", "n",
                     "le_1", "le_5", "le_10", "pr_su_new", "pr_su_full", "pr_su",
                     "theta", "theta_reliable", "n1", "n2", "pi"])
    for rec in report.listwise:
        writer.writerow(["listwise", rec.qi_label, rec.n_deleted, rec.n_remaining,
                         rec.respondents_k_le[1], rec.respondents_k_le[5],
                         rec.respondents_k_le[10],
                         _fmt_proportion(rec.pr_su_new), _fmt_proportion(rec.pr_su_full),
                         "", _fmt_theta(rec.theta), rec.theta.reliable,
                         rec.theta.n1, rec.theta.n2, rec.theta.pi])
    for rec in report.n_match:
        writer.writerow(["n_match", rec.qi_label, "", "",
                         rec.at_most[1], rec.at_most[5], rec.at_most[10],
                         "", "", _fmt_proportion(rec.pr_su),
                         _fmt_theta(rec.theta), rec.theta.reliable,
                         rec.theta.n1, rec.theta.n2, rec.theta.pi])
    return buffer.getvalue()


def _attack_result_dict(result: AttackResult) -> dict:
    return {
        "draws": result.draws,
        "unique_matches": result.unique_matches,
        "correct_unique_matches": result.correct_unique_matches,
        "empirical_theta": result.empirical_theta,
        "predicted_theta": _theta_dict(result.predicted_theta),
    }


def _attack_summary_dict(summary: AttackSummary) -> dict:
    return {
        "replicates": summary.replicates,
        "draws": summary.draws,
        "unique_matches": summary.unique_matches,
        "correct_unique_matches": summary.correct_unique_matches,
        "empirical_theta": summary.empirical_theta,
        "mean_predicted_theta": summary.mean_predicted_theta,
    }


# -- subcommands --------------------------------------------------------

def cmd_prep(config: dict, args) -> int:
    section = _input_section(config)
    waves_dir = section.get("waves_dir")
    participation_path = section.get("participation")
    if not waves_dir or not participation_path:
        raise ConfigError("prep needs input.waves_dir and input.participation")
    id_column = section.get("id_column", "id")
    age_variable = section.get("age_variable", "age")
    mob_variable = section.get("mob_variable", "mob_candidates")
    schema = _parse_schema(config)
    if age_variable not in {s.name for s in schema}:
        raise ConfigError(f"age variable {age_variable!r} is not in the schema")

    series = load_wave_directory(waves_dir, schema, id_column)
    if not series.waves:
        raise ValueError(f"no wave files found in {waves_dir}")
    merged = merge_waves(series)
    participation = load_participation(participation_path)
    filtered, n_removed = filter_background_only(merged, participation)
    estimates = estimate_birth_months(series, age_variable)
    prepared = add_mob_column(filtered, estimates, mob_variable)

    print(f"removed {n_removed} background-only respondents, kept {prepared.n_rows}",
          file=sys.stderr)
    if prepared.n_rows == 0:
        print("warning: no respondents survived the participation filter",
              file=sys.stderr)
    write_csv(prepared, args.output or sys.stdout, id_column)
    return 0


def _load_assess_dataset(config: dict) -> Dataset:
    section = _input_section(config)
    csv_path = section.get("csv")
    if not csv_path:
        raise ConfigError("assess needs input.csv")
    schema = _parse_schema(config)
    return load_csv(csv_path, schema, section.get("id_column", "id"))


def cmd_assess(config: dict, args) -> int:
    dataset = _load_assess_dataset(config)
    qis = _parse_qis(config, set(dataset.variable_names))
    population_size = _positive_int(config, "population_size")
    if population_size is None:
        raise ConfigError("config needs 'population_size'")
    n_full = _positive_int(config, "n_full")
    methods = tuple(config.get("methods", ["listwise", "n_match"]))
    reliability = config.get("reliability_min_n1", DEFAULT_RELIABILITY_MIN_N1)
    overlap = bool(config.get("require_observed_overlap", False))
    effective_n_full = n_full if n_full is not None else dataset.n_rows
    if population_size < effective_n_full:
        raise ConfigError(f"population_size {population_size} is smaller than "
                          f"n_full {effective_n_full}")
    try:
        report = risk_report(dataset, qis, population_size, n_full, methods,
                             reliability, overlap)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    fmt = args.format or config.get("format", "text")
    if fmt == "json":
        rendered = json.dumps(report_to_dict(report), indent=2) + "\n"
    elif fmt == "csv":
        rendered = report_to_csv(report)
    elif fmt == "text":
        rendered = report_to_text(report)
    else:
        raise ConfigError(f"unknown format {fmt!r}; use text, json or csv")
    _emit(rendered, args.output)
    return 0


def _parse_population(section: dict, default_seed: int) -> PopulationSpec:
    try:
        size = section["size"]
        raw_variables = section["variables"]
    except (KeyError, TypeError):
        raise ConfigError("simulation.population needs 'size' and 'variables'") from None
    variables = []
    for entry in raw_variables:
        try:
            if "categories" in entry:
                variables.append(VariableDistribution.uniform(
                    entry["name"], entry["categories"]))
            else:
                variables.append(VariableDistribution(
                    entry["name"], tuple(entry["labels"]), tuple(entry["weights"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad population variable {entry!r}: {exc}") from None
    try:
        return PopulationSpec(size, tuple(variables), section.get("seed", default_seed))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_simulate(config: dict, args) -> int:
    section = config.get("simulation")
    if not isinstance(section, dict):
        raise ConfigError("config needs a 'simulation' object")
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    population_spec = _parse_population(section.get("population", {}), seed)
    variable_names = {v.name for v in population_spec.variables}

    qi_names = section.get("quasi_identifier")
    if not qi_names:
        raise ConfigError("simulation needs a 'quasi_identifier' variable list")
    for name in qi_names:
        if name not in variable_names:
            raise ConfigError(f"quasi-identifier variable {name!r} is not in the population")
    qi = QuasiIdentifier(tuple(qi_names))

    pi = section.get("pi")
    if not isinstance(pi, (int, float)) or not 0 < pi <= 1:
        raise ConfigError(f"simulation.pi must be in (0, 1], got {pi!r}")
    missing_rate = section.get("missing_rate", 0.0)
    draws = section.get("draws", 0)
    if not isinstance(draws, int) or draws < 1:
        raise ConfigError("draws must be positive")
    replicates = section.get("replicates", 1)
    if not isinstance(replicates, int) or replicates < 1:
        raise ConfigError("replicates must be positive")

    try:
        results = run_attack_replicates(population_spec, qi, pi, missing_rate,
                                        draws, replicates, seed,
                                        threads=args.threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    payload = {
        "config": {
            "population_size": population_spec.size,
            "quasi_identifier": list(qi.variables),
            "pi": pi,
            "missing_rate": missing_rate,
            "draws_per_replicate": draws,
            "replicates": replicates,
            "seed": seed,
        },
        "replicates": [_attack_result_dict(r) for r in results],
        "aggregate": _attack_summary_dict(summarize_attacks(results)),
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.output)
    return 0


def cmd_oracle(config: dict, args) -> int:
    dataset = _load_assess_dataset(config)
    qis = _parse_qis(config, set(dataset.variable_names))
    overlap = bool(config.get("require_observed_overlap", False))
    checks = []
    all_agree = True
    for qi in qis:
        reference = n_match_all(dataset, qi, overlap, method="scan")
        indexed = n_match_all(dataset, qi, overlap, method="indexed")
        agree = bool((reference.counts == indexed.counts).all())
        all_agree &= agree
        checks.append({
            "quasi_identifier": qi.label,
            "agree": agree,
            "n_rows": int(reference.n_rows),
            "n_match_le": {str(t): c for t, c in reference.at_most.items()},
            "pr_su": reference.pr_su,
            "counts": reference.counts.tolist(),
        })
    _emit(json.dumps({"checks": checks, "all_agree": all_agree}, indent=2) + "\n",
          args.output)
    return 0 if all_agree else 1


# -- argument parsing ----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="panelrisk",
        description="Re-identification risk assessment for survey panel microdata.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the JSON run config")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed (simulate)")
    common.add_argument("--output", default=None,
                        help="write output to this path instead of stdout")
    common.add_argument("--format", choices=["text", "json", "csv"], default=None,
                        help="report format (assess)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for simulation replicates")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("prep", parents=[common],
                          help="merge waves, filter respondents, estimate month of birth")
    subparsers.add_parser("assess", parents=[common],
                          help="compute the risk report")
    subparsers.add_parser("simulate", parents=[common],
                          help="run the linking-attack simulation")
    subparsers.add_parser("oracle", parents=[common],
                          help="cross-check indexed match counts against the reference scan")
    return parser


_COMMANDS = {
    "prep": cmd_prep,
    "assess": cmd_assess,
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        config = _load_config(args.config)
        return _COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
