"""Run orchestration: execute a strategy, log every trial, write reports.

A run directory contains four stable artifacts:

* ``config.json``  - effective configuration snapshot
* ``trials.jsonl`` - one JSON object per trial, appended as trials complete
* ``report.json``  - the full run report
* ``report.txt``   - the report rendered as a display table

``replay`` reconstructs a report from ``config.json`` plus ``trials.jsonl``
alone; reconstructed reports match the originals except for wall times and
timestamps.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .config import RunConfig
from .errors import ConfigError
from .evaluators import (
    FAILED,
    OK,
    PENALIZED,
    EvalResult,
    EvaluationEngine,
    size_string_for,
)
from .space import CandidateArchitecture, candidate_params, genome_to_string
from .strategies import (
    GAConfig,
    GridConfig,
    RandomConfig,
    decode_population,
    ga_run,
    grid_enumerate,
    random_sample,
)

CONFIG_FILE = "config.json"
TRIALS_FILE = "trials.jsonl"
REPORT_FILE = "report.json"
REPORT_TEXT_FILE = "report.txt"

MISSING = "—"  # em dash: the "no value" cell marker


@dataclass
class TrialRecord:
    trial_index: int
    conv_cells: int
    dense_cells: int
    fitness: float
    status: str
    genome: str | None = None
    accuracy: float | None = None
    param_count: int | None = None
    size_string: str | None = None
    wall_time_seconds: float = 0.0
    timestamp: str = ""
    aux: dict[str, Any] = field(default_factory=dict)

    @property
    def candidate(self) -> CandidateArchitecture:
        return CandidateArchitecture(self.conv_cells, self.dense_cells)

    def to_dict(self) -> dict[str, Any]:
        return {
            "trial_index": self.trial_index,
            "conv_cells": self.conv_cells,
            "dense_cells": self.dense_cells,
            "genome": self.genome,
            "fitness": self.fitness,
            "status": self.status,
            "accuracy": self.accuracy,
            "param_count": self.param_count,
            "size_string": self.size_string,
            "wall_time_seconds": self.wall_time_seconds,
            "timestamp": self.timestamp,
            "aux": self.aux,
        }

    @classmethod
    def from_dict(cls, rec: dict[str, Any]) -> "TrialRecord":
        return cls(
            trial_index=int(rec["trial_index"]),
            conv_cells=int(rec["conv_cells"]),
            dense_cells=int(rec["dense_cells"]),
            fitness=float(rec["fitness"]),
            status=str(rec["status"]),
            genome=rec.get("genome"),
            accuracy=rec.get("accuracy"),
            param_count=rec.get("param_count"),
            size_string=rec.get("size_string"),
            wall_time_seconds=float(rec.get("wall_time_seconds", 0.0)),
            timestamp=str(rec.get("timestamp", "")),
            aux=dict(rec.get("aux") or {}),
        )


@dataclass
class RunReport:
    strategy: str
    config: dict[str, Any]
    seed: int
    trials: list[TrialRecord]
    best_index: int | None
    total_wall_time_seconds: float
    unique_evaluations: int
    total_evaluations: int

    @property
    def best(self) -> TrialRecord | None:
        if self.best_index is None:
            return None
        return self.trials[self.best_index]

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "config": self.config,
            "best_index": self.best_index,
            "total_wall_time_seconds": self.total_wall_time_seconds,
            "unique_evaluations": self.unique_evaluations,
            "total_evaluations": self.total_evaluations,
            "trials": [t.to_dict() for t in self.trials],
        }

    @classmethod
    def from_dict(cls, rec: dict[str, Any]) -> "RunReport":
        return cls(
            strategy=str(rec["strategy"]),
            config=dict(rec.get("config") or {}),
            seed=int(rec.get("seed", 0)),
            trials=[TrialRecord.from_dict(t) for t in rec.get("trials", [])],
            best_index=rec.get("best_index"),
            total_wall_time_seconds=float(rec.get("total_wall_time_seconds", 0.0)),
            unique_evaluations=int(rec.get("unique_evaluations", 0)),
            total_evaluations=int(rec.get("total_evaluations", 0)),
        )


def select_best(trials: list[TrialRecord]) -> int | None:
    """Index of the highest-fitness ok trial; earlier index wins ties."""
    best: int | None = None
    for i, trial in enumerate(trials):
        if trial.status != OK:
            continue
        if best is None or trial.fitness > trials[best].fitness:
            best = i
    return best


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _make_record(
    index: int,
    candidate: CandidateArchitecture,
    result: EvalResult,
    seconds: float,
    genome: str | None = None,
) -> TrialRecord:
    params = (
        result.param_count
        if result.param_count is not None
        else candidate_params(candidate)
    )
    return TrialRecord(
        trial_index=index,
        conv_cells=candidate.conv_cells,
        dense_cells=candidate.dense_cells,
        fitness=result.fitness,
        status=result.status,
        genome=genome,
        accuracy=result.accuracy,
        param_count=params,
        size_string=size_string_for(result, candidate),
        wall_time_seconds=seconds,
        timestamp=_now(),
        aux=dict(result.aux),
    )


class _TrialLog:
    """Append-only JSONL log; the run is its sole writer."""

    def __init__(self, path: Path):
        self._fh = open(path, "w")

    def append(self, record: TrialRecord) -> None:
        self._fh.write(json.dumps(record.to_dict()) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def _batched(items: list, size: int):
    for i in range(0, len(items), size):
        yield items[i : i + size]


def run(config: RunConfig, out_dir: str | Path) -> RunReport:
    """Execute the configured strategy, logging each trial as it completes.

    On evaluator abort the partial trial log is retained and the exception
    propagates; the final report is only written for completed runs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / CONFIG_FILE, "w") as fh:
        json.dump(config.raw, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if config.evaluator.kind == "external":
        config.evaluator.settings.setdefault("workers", config.workers)

    engine = EvaluationEngine(config.evaluator, seed=config.seed, cache=config.cache)
    log = _TrialLog(out / TRIALS_FILE)
    trials: list[TrialRecord] = []
    started = time.monotonic()

    def record_batch(
        candidates: list[CandidateArchitecture],
        pairs: list[tuple[EvalResult, float]],
        genomes: list[str] | None = None,
    ) -> None:
        for j, (cand, (result, seconds)) in enumerate(zip(candidates, pairs)):
            rec = _make_record(
                len(trials),
                cand,
                result,
                seconds,
                genome=genomes[j] if genomes else None,
            )
            trials.append(rec)
            log.append(rec)

    try:
        strategy = config.strategy
        if isinstance(strategy, (GridConfig, RandomConfig)):
            if isinstance(strategy, GridConfig):
                candidates = grid_enumerate(strategy)
            else:
                candidates = random_sample(strategy)
            for chunk in _batched(candidates, max(1, config.workers)):
                record_batch(chunk, engine.evaluate_many(chunk))
        elif isinstance(strategy, GAConfig):

            def evaluate_population(genomes):
                candidates = decode_population(genomes, config.space)
                pairs = engine.evaluate_many(candidates)
                record_batch(
                    candidates, pairs, genomes=[genome_to_string(g) for g in genomes]
                )
                return [result.fitness for result, _ in pairs]

            ga_run(strategy, config.space, evaluate_population)
        else:
            raise ConfigError(f"unknown strategy config {type(strategy).__name__}")
    finally:
        log.close()
        engine.close()

    report = RunReport(
        strategy=config.strategy_name,
        config=config.raw,
        seed=config.seed,
        trials=trials,
        best_index=select_best(trials),
        total_wall_time_seconds=time.monotonic() - started,
        unique_evaluations=engine.invocations,
        total_evaluations=engine.total_requests,
    )
    with open(out / REPORT_FILE, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    with open(out / REPORT_TEXT_FILE, "w") as fh:
        fh.write(render_report(report))
    return report


def _count_unique(trials: list[TrialRecord], cache_enabled: bool) -> int:
    """Replay-side reconstruction of the evaluator invocation count.

    Out-of-bounds penalties never reach the evaluator.  With the cache on, a
    candidate only invokes again while it has no cacheable (non-failed)
    result yet.
    """
    invoked = 0
    cached: set[tuple[int, int]] = set()
    for trial in trials:
        if trial.status == PENALIZED and trial.aux.get("reason") == "out_of_bounds":
            continue
        key = (trial.conv_cells, trial.dense_cells)
        if cache_enabled and key in cached:
            continue
        invoked += 1
        if trial.status != FAILED:
            cached.add(key)
    return invoked


def replay(run_dir: str | Path) -> RunReport:
    """Rebuild a report from a run directory's config snapshot and trial log."""
    run_path = Path(run_dir)
    config_path = run_path / CONFIG_FILE
    if not config_path.is_file():
        raise ConfigError(f"{run_path} has no {CONFIG_FILE}; not a run directory")
    with open(config_path) as fh:
        raw = json.load(fh)
    trials = []
    trials_path = run_path / TRIALS_FILE
    if trials_path.is_file():
        with open(trials_path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    trials.append(TrialRecord.from_dict(json.loads(line)))
    cache_enabled = bool(raw.get("cache", True))
    return RunReport(
        strategy=str((raw.get("strategy") or {}).get("kind", "unknown")),
        config=raw,
        seed=int(raw.get("seed", 0)),
        trials=trials,
        best_index=select_best(trials),
        total_wall_time_seconds=sum(t.wall_time_seconds for t in trials),
        unique_evaluations=_count_unique(trials, cache_enabled),
        total_evaluations=len(trials),
    )


def load_report(run_dir: str | Path) -> RunReport:
    """Load the report as written by ``run``, falling back to replay."""
    path = Path(run_dir) / REPORT_FILE
    if path.is_file():
        with open(path) as fh:
            return RunReport.from_dict(json.load(fh))
    return replay(run_dir)


def _fmt_num(value: float | int | None) -> str:
    if value is None:
        return MISSING
    return f"{value:g}"


def accuracy_percent_text(trial: TrialRecord) -> str:
    """Accuracy column text: the evaluator's stored percent when available."""
    pct = trial.aux.get("accuracy_percent")
    if pct is None and trial.accuracy is not None:
        pct = trial.accuracy * 100.0
    return _fmt_num(pct)


def best_row_text(report: RunReport) -> str:
    """The best trial as a single row: conv, dense, size, accuracy percent."""
    best = report.best
    if best is None:
        return MISSING
    return (
        f"{best.conv_cells} {best.dense_cells} "
        f"{best.size_string or MISSING} {accuracy_percent_text(best)}"
    )


def _table(headers: list[str], rows: list[list[str]], group_split: int | None = None,
           groups: tuple[str, str] | None = None) -> list[str]:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = []
    if groups is not None and group_split is not None:
        left = sum(widths[:group_split]) + 2 * (group_split - 1)
        lines.append(f"{groups[0]:<{left}}  {groups[1]}")
    lines.append("  ".join(f"{h:<{w}}" for h, w in zip(headers, widths)).rstrip())
    for row in rows:
        lines.append("  ".join(f"{c:<{w}}" for c, w in zip(row, widths)).rstrip())
    return lines


def _result_rows(report: RunReport) -> list[list[str]]:
    rows = []
    for trial in report.trials:
        score = trial.aux.get("score")
        row = [
            str(trial.conv_cells),
            str(trial.dense_cells),
            trial.size_string or MISSING,
            accuracy_percent_text(trial),
            _fmt_num(score),
        ]
        if trial.status != OK:
            row[-1] += f"  [{trial.status}]"
        rows.append(row)
    return rows


def render_report(report: RunReport) -> str:
    """Display table with the two-level column header used throughout."""
    lines = [
        f"strategy: {report.strategy}    seed: {report.seed}",
        f"trials: {report.total_evaluations}    "
        f"unique evaluations: {report.unique_evaluations}    "
        f"total time: {report.total_wall_time_seconds:.2f}s",
        "",
    ]
    lines += _table(
        ["Conv cells", "Dense cells", "Size", "Accuracy %", "Score"],
        _result_rows(report),
        group_split=3,
        groups=("Model params", "Evaluating"),
    )
    lines += ["", f"best: {best_row_text(report)}"]
    return "\n".join(lines) + "\n"


def render_comparison(reports: list[RunReport]) -> str:
    """Per-run tables plus a summary table, sorted by strategy name."""
    if not reports:
        raise ConfigError("comparison needs at least one run report")
    sections = [render_report(r) for r in reports]
    summary_rows = []
    for report in sorted(reports, key=lambda r: r.strategy):
        best = report.best
        summary_rows.append(
            [
                report.strategy,
                str(report.total_evaluations),
                str(report.unique_evaluations),
                accuracy_percent_text(best) if best is not None else MISSING,
                f"{report.total_wall_time_seconds:.2f}",
            ]
        )
    summary = _table(
        ["Strategy", "Trials", "Unique evals", "Best accuracy %", "Total time (s)"],
        summary_rows,
    )
    return "\n".join(sections) + "\n" + "\n".join(["Summary"] + summary) + "\n"
