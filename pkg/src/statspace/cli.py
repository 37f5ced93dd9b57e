"""Command-line pipeline: fit, scores, teams, similar, regress, scree.

Every subcommand reads CSV inputs, runs the corresponding library calls, and
writes plot-ready data files into the output directory. Outputs are
deterministic: identical inputs and configuration produce byte-identical
files. Numeric cells use shortest round-trip decimal form except in the
human-readable regression table.

Exit codes: 0 success, 2 usage error, 3 data/validation error, 4 numerical
error. Failures also emit one machine-parseable JSON line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import ingest, pca, regression, scoring, similarity
from .errors import (
    DataError,
    NumericalError,
    ParameterError,
    StatspaceError,
    UsageError,
)

SCHEMA_KEY = "schema"
FLAG_KEYS = (
    "input",
    "model",
    "min_games",
    "k",
    "components",
    "top",
    "query",
    "membership",
    "winpct",
    "weights",
    "out",
    "format",
)
CONFIG_ONLY_KEYS = ("column_mode", "excluded_column_patterns", SCHEMA_KEY)

DEFAULT_K = 4
DEFAULT_TOP = 5
SCREE_COMPONENTS = 10


@dataclass
class RunConfig:
    """Resolved settings for one subcommand invocation."""

    input_paths: dict[str, Path]
    filter: ingest.FilterPolicy
    k: int
    components_for_sdi: set[int] | None
    output_dir: Path
    output_format: str
    schema: tuple[str, ...] = ingest.DEFAULT_SCHEMA
    query: str | None = None
    top: int = DEFAULT_TOP
    weights: dict[int, float] = field(default_factory=dict)

    def path(self, role: str) -> Path:
        try:
            return self.input_paths[role]
        except KeyError:
            raise UsageError(f"missing required input: --{role}") from None

    def existing_path(self, role: str) -> Path:
        path = self.path(role)
        if not path.exists():
            raise DataError(f"{role} file not found: {path}")
        return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statspace",
        description="Reduce per-player statistics to principal components, "
        "score players and teams, rank similarity, and regress outcomes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("fit", "fit a component model and write model + scree data"),
        ("scree", "write per-component variance data without saving a model"),
        ("scores", "project players onto a fitted model"),
        ("teams", "aggregate player scores into minutes-weighted team scores"),
        ("similar", "rank entities by statistical similarity to a query"),
        ("regress", "regress winning percentage on team component scores"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file supplying any flag (flags win)")
        p.add_argument("--input", help="players CSV")
        p.add_argument("--model", help="fitted model JSON (from `fit`)")
        p.add_argument("--min-games", type=int, dest="min_games")
        p.add_argument("--k", type=int, help=f"components to fit (default {DEFAULT_K})")
        p.add_argument(
            "--components",
            help="comma-separated 1-based component numbers, e.g. 1,2,3,4",
        )
        p.add_argument("--top", type=int, help=f"ranking size (default {DEFAULT_TOP})")
        p.add_argument("--query", help="entity id to rank similarity against")
        p.add_argument("--membership", help="player_id,team_code CSV")
        p.add_argument("--winpct", help="team_code,win_pct CSV")
        p.add_argument(
            "--weights",
            help="component weights like 2=0.17,4=0.09 (1-based numbers)",
        )
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=["csv", "json"], dest="format")
    return parser


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    config_path = Path(path)
    if not config_path.exists():
        raise UsageError(f"config file not found: {config_path}")
    try:
        raw = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {config_path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError(f"config file {config_path} must hold a JSON object")
    unknown = set(raw) - set(FLAG_KEYS) - set(CONFIG_ONLY_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return raw


def _parse_components(text: str) -> set[int]:
    try:
        numbers = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ParameterError(f"bad --components value: {text!r}") from None
    if not numbers or any(n < 1 for n in numbers):
        raise ParameterError("--components needs 1-based component numbers")
    return {n - 1 for n in numbers}


def _parse_weights(text: str) -> dict[int, float]:
    weights: dict[int, float] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            number, value = part.split("=")
            weights[int(number) - 1] = float(value)
        except ValueError:
            raise ParameterError(
                f"bad --weights entry {part!r}; expected like 2=0.17"
            ) from None
    if any(c < 0 for c in weights):
        raise ParameterError("--weights needs 1-based component numbers")
    return weights


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge CLI flags over config-file values over defaults."""
    config = _load_config_file(args.config)

    def merged(key, default=None):
        value = getattr(args, key, None)
        return value if value is not None else config.get(key, default)

    input_paths: dict[str, Path] = {}
    for role in ("input", "model", "membership", "winpct"):
        value = merged(role)
        if value is not None:
            input_paths["players" if role == "input" else role] = Path(value)

    out = merged("out")
    if out is None:
        raise UsageError("missing required flag: --out")

    components = merged("components")
    if isinstance(components, str):
        components = _parse_components(components)
    elif isinstance(components, list):
        components = {int(n) - 1 for n in components}

    weights = merged("weights")
    if isinstance(weights, str):
        weights = _parse_weights(weights)
    elif isinstance(weights, dict):
        weights = {int(n) - 1: float(v) for n, v in weights.items()}

    schema = config.get(SCHEMA_KEY, ingest.DEFAULT_SCHEMA)

    return RunConfig(
        input_paths=input_paths,
        filter=ingest.FilterPolicy(
            min_games=merged("min_games", 41),
            column_mode=config.get("column_mode", "all"),
            excluded_column_patterns=config.get("excluded_column_patterns", []),
        ),
        k=merged("k", DEFAULT_K),
        components_for_sdi=components,
        output_dir=Path(out),
        output_format=merged("format", "csv"),
        schema=tuple(schema),
        query=merged("query"),
        top=merged("top", DEFAULT_TOP),
        weights=weights or {},
    )


# ---------------------------------------------------------------------------
# Pipeline pieces
# ---------------------------------------------------------------------------


def _load_table(config: RunConfig) -> ingest.StatTable:
    path = config.existing_path("players")
    records = ingest.parse_csv(path, config.schema)
    records = ingest.apply_filter(records, config.filter)
    return ingest.build_table(records)


def _load_model(config: RunConfig) -> pca.PcaModel:
    return pca.load_model(config.existing_path("model"))


def _out_file(config: RunConfig, stem: str, suffix: str | None = None) -> Path:
    config.output_dir.mkdir(parents=True, exist_ok=True)
    return config.output_dir / f"{stem}.{suffix or config.output_format}"


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_scree(config: RunConfig, spectrum, total: float) -> Path:
    count = min(SCREE_COMPONENTS, len(spectrum))
    cumulative = 0.0
    rows = []
    for i in range(count):
        cumulative += float(spectrum[i])
        rows.append((i + 1, float(spectrum[i]), cumulative / total))
    path = _out_file(config, "scree")
    if config.output_format == "json":
        _write_json(
            path,
            [
                {"component": c, "variance": v, "cumulative_ratio": r}
                for c, v, r in rows
            ],
        )
    else:
        _write_csv(
            path,
            ["component", "variance", "cumulative_ratio"],
            [[c, _fmt(v), _fmt(r)] for c, v, r in rows],
        )
    return path


def cmd_fit(config: RunConfig) -> int:
    table = _load_table(config)
    params, standardized = pca.standardize(table, drop_constant=True)
    model = pca.fit_pca(standardized, config.k, params)
    pca.save_model(model, _out_file(config, "model", "json"))
    spectrum = pca.component_spectrum(standardized)
    _write_scree(config, spectrum, float(spectrum.sum()))
    return 0


def cmd_scree(config: RunConfig) -> int:
    table = _load_table(config)
    _, standardized = pca.standardize(table, drop_constant=True)
    spectrum = pca.component_spectrum(standardized)
    _write_scree(config, spectrum, float(spectrum.sum()))
    return 0


def _score_players(config: RunConfig) -> tuple[pca.PcaModel, ingest.StatTable, pca.ScoreSet]:
    model = _load_model(config)
    table = _load_table(config)
    kept = set(model.standardization.stat_names)
    if set(table.stat_names) != kept:
        # the fit may have dropped constant columns; align before projecting
        keep_idx = [j for j, s in enumerate(table.stat_names) if s in kept]
        table = ingest.StatTable(
            entity_ids=table.entity_ids,
            entity_names=table.entity_names,
            minutes=table.minutes,
            stat_names=[table.stat_names[j] for j in keep_idx],
            values=table.values[:, keep_idx],
        )
    return model, table, pca.transform(model, table)


def _pc_names(k: int) -> list[str]:
    return [f"PC{i + 1}" for i in range(k)]


def cmd_scores(config: RunConfig) -> int:
    model, table, scores = _score_players(config)
    path = _out_file(config, "scores")
    if config.output_format == "json":
        _write_json(
            path,
            [
                {
                    "entity_id": scores.entity_ids[i],
                    "entity_name": table.entity_names[i],
                    "minutes": scores.minutes[i],
                    "scores": scores.scores[i].tolist(),
                }
                for i in range(len(scores.entity_ids))
            ],
        )
    else:
        _write_csv(
            path,
            ["entity_id", "entity_name", "minutes", *_pc_names(model.k)],
            [
                [
                    scores.entity_ids[i],
                    table.entity_names[i],
                    _fmt(scores.minutes[i]),
                    *(_fmt(v) for v in scores.scores[i]),
                ]
                for i in range(len(scores.entity_ids))
            ],
        )
    return 0


def _team_rows(config: RunConfig) -> tuple[scoring.TeamScoreSet, list[float] | None]:
    _, _, scores = _score_players(config)
    membership = scoring.load_membership(config.existing_path("membership"))
    teams = scoring.team_scores(scores, membership)
    if "winpct" in config.input_paths:
        teams = scoring.with_win_pct(
            teams, scoring.load_win_pct(config.existing_path("winpct"))
        )
    weighted = (
        scoring.regression_weighted_score(teams, config.weights)
        if config.weights
        else None
    )
    return teams, weighted


def cmd_teams(config: RunConfig) -> int:
    teams, weighted = _team_rows(config)
    path = _out_file(config, "teams")
    if config.output_format == "json":
        doc = []
        for t, code in enumerate(teams.team_codes):
            entry = {
                "team_code": code,
                "total_minutes": teams.total_minutes[t],
                "scores": teams.scores[t].tolist(),
            }
            if teams.win_pct is not None:
                entry["win_pct"] = teams.win_pct[t]
            if weighted is not None:
                entry["weighted_score"] = weighted[t]
            doc.append(entry)
        _write_json(path, doc)
    else:
        header = ["team_code", "total_minutes", *_pc_names(teams.k)]
        if teams.win_pct is not None:
            header.append("win_pct")
        if weighted is not None:
            header.append("weighted_score")
        rows = []
        for t, code in enumerate(teams.team_codes):
            row = [
                code,
                _fmt(teams.total_minutes[t]),
                *(_fmt(v) for v in teams.scores[t]),
            ]
            if teams.win_pct is not None:
                row.append(_fmt(teams.win_pct[t]))
            if weighted is not None:
                row.append(_fmt(weighted[t]))
            rows.append(row)
        _write_csv(path, header, rows)
    return 0


def cmd_similar(config: RunConfig) -> int:
    model, table, scores = _score_players(config)
    if config.query is None:
        raise UsageError("missing required flag: --query")
    components = config.components_for_sdi
    if components is None:
        components = set(range(model.k))
    ranking = similarity.rank_similar(scores, config.query, config.top, components)
    names = dict(zip(table.entity_ids, table.entity_names))
    path = _out_file(config, "similar")
    if config.output_format == "json":
        path.write_text(similarity.ranking_to_json(ranking, names), encoding="utf-8")
    else:
        similarity.ranking_to_csv(ranking, names, path)
    return 0


def cmd_regress(config: RunConfig) -> int:
    teams, _ = _team_rows(config)
    if teams.win_pct is None:
        raise UsageError("regress requires --winpct")
    fit = regression.fit_ols(
        teams.scores,
        teams.win_pct,
        include_intercept=True,
        term_names=_pc_names(teams.k),
    )
    txt_path = _out_file(config, "regression", "txt")
    txt_path.write_text(regression.summary_text(fit), encoding="utf-8")
    path = _out_file(config, "regression")
    if config.output_format == "json":
        path.write_text(regression.summary_json(fit), encoding="utf-8")
    else:
        regression.summary_csv(fit, path)
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "scree": cmd_scree,
    "scores": cmd_scores,
    "teams": cmd_teams,
    "similar": cmd_similar,
    "regress": cmd_regress,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](config)
    except StatspaceError as exc:
        return _fail(exc, exc.exit_code)
    except OSError as exc:
        return _fail(exc, DataError.exit_code)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(exc, NumericalError.exit_code)


def _fail(exc: Exception, code: int) -> int:
    categories = {2: "usage", 3: "data", 4: "numerical"}
    line = json.dumps(
        {
            "error": str(exc),
            "category": categories.get(code, "internal"),
            "exit_code": code,
        }
    )
    print(line, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
