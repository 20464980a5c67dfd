"""Evaluators: the objective functions a search strategy maximizes.

Built-in kinds:

* ``surrogate``   - a deterministic concave landscape with optional seeded
                    noise, standing in for real training.
* ``table``       - lookup of precomputed results from a delimited text file.
* ``param_count`` - negated parameter count of the canonical plan (favors
                    small models).
* ``external``    - delegation to a worker subprocess (see ``protocol``).

All evaluators return an :class:`EvalResult` whose ``fitness`` is maximized.
The :class:`EvaluationEngine` wraps a concrete evaluator with the validity /
penalty policy and an optional result cache.
"""

from __future__ import annotations

import csv
import hashlib
import random
import threading
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .space import CandidateArchitecture, candidate_params
from . import space

OK = "ok"
PENALIZED = "penalized"
FAILED = "failed"

DEFAULT_PENALTY_FITNESS = -1e9


@dataclass(frozen=True)
class EvalResult:
    fitness: float
    status: str = OK
    accuracy: float | None = None
    param_count: int | None = None
    aux: dict[str, Any] = field(default_factory=dict)


def penalized_result(penalty_fitness: float, reason: str) -> EvalResult:
    return EvalResult(fitness=penalty_fitness, status=PENALIZED, aux={"reason": reason})


def _candidate_noise(candidate: CandidateArchitecture, seed: int, sd: float) -> float:
    """Gaussian noise keyed by (candidate, run seed), not by draw order.

    The key is the blake2b-64 digest of "<seed>:<conv>:<dense>", used to seed
    a fresh stdlib RNG for a single standard-normal draw.  Repeat evaluations
    of the same candidate under the same run seed therefore agree exactly,
    regardless of evaluation order or process boundaries.
    """
    if sd == 0.0:
        return 0.0
    key = f"{seed}:{candidate.conv_cells}:{candidate.dense_cells}".encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big")).gauss(0.0, 1.0) * sd


def surrogate_fitness(
    candidate: CandidateArchitecture,
    peak: float,
    optimum: tuple[int, int],
    curvature: tuple[float, float],
    noise_sd: float = 0.0,
    seed: int = 0,
) -> float:
    """peak - a*(conv - c*)^2 - b*(dense - d*)^2, plus seeded noise."""
    a, b = curvature
    if a <= 0 or b <= 0:
        raise ConfigError(f"surrogate curvatures must be positive, got {curvature}")
    value = (
        peak
        - a * (candidate.conv_cells - optimum[0]) ** 2
        - b * (candidate.dense_cells - optimum[1]) ** 2
    )
    return value + _candidate_noise(candidate, seed, noise_sd)


class SurrogateEvaluator:
    def __init__(
        self,
        peak: float = 0.86,
        optimum: tuple[int, int] = (2, 2),
        curvature: tuple[float, float] = (0.01, 0.01),
        noise_sd: float = 0.0,
    ):
        if curvature[0] <= 0 or curvature[1] <= 0:
            raise ConfigError(f"surrogate curvatures must be positive, got {curvature}")
        self.peak = peak
        self.optimum = optimum
        self.curvature = curvature
        self.noise_sd = noise_sd

    def evaluate(self, candidate: CandidateArchitecture, seed: int) -> EvalResult:
        fitness = surrogate_fitness(
            candidate, self.peak, self.optimum, self.curvature, self.noise_sd, seed
        )
        return EvalResult(fitness=fitness)


@dataclass(frozen=True)
class TableRow:
    conv: int
    dense: int
    accuracy_percent: float
    spread: float
    score: float | None
    size: str


def load_table_rows(path: str | Path) -> list[TableRow]:
    """Read a results table: delimited text, header conv,dense,accuracy,spread,score,size."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                TableRow(
                    conv=int(rec["conv"]),
                    dense=int(rec["dense"]),
                    accuracy_percent=float(rec["accuracy"]),
                    spread=float(rec["spread"] or 0.0),
                    score=float(rec["score"]) if rec.get("score") not in (None, "") else None,
                    size=rec["size"],
                )
            )
    return rows


def resolve_table(name_or_path: str) -> Path:
    """Resolve a table argument: an existing file path, or a shipped fixture name."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    stem = name_or_path if name_or_path.endswith(".csv") else f"{name_or_path}.csv"
    shipped = resources.files("cellsearch").joinpath("data", "tables", stem)
    with resources.as_file(shipped) as fp:
        if fp.is_file():
            return fp
    raise ConfigError(f"table {name_or_path!r}: no such file or shipped fixture")


class TableEvaluator:
    """Returns stored accuracy (as a fraction) as fitness; misses are penalized.

    The central accuracy value drives fitness; the +/- spread and the table's
    score and size columns ride along in ``aux`` and never affect fitness.
    """

    def __init__(self, rows: list[TableRow], penalty_fitness: float = DEFAULT_PENALTY_FITNESS):
        self.rows: dict[tuple[int, int], TableRow] = {}
        for row in rows:
            key = (row.conv, row.dense)
            if key in self.rows:
                raise ConfigError(f"duplicate table entry for candidate {key}")
            self.rows[key] = row
        self.penalty_fitness = penalty_fitness

    @classmethod
    def from_file(
        cls, path: str | Path, penalty_fitness: float = DEFAULT_PENALTY_FITNESS
    ) -> "TableEvaluator":
        return cls(load_table_rows(path), penalty_fitness)

    def evaluate(self, candidate: CandidateArchitecture, seed: int) -> EvalResult:
        row = self.rows.get((candidate.conv_cells, candidate.dense_cells))
        if row is None:
            return penalized_result(self.penalty_fitness, "table_miss")
        fraction = row.accuracy_percent / 100.0
        aux: dict[str, Any] = {
            "accuracy_percent": row.accuracy_percent,
            "accuracy_spread": row.spread,
            "size": row.size,
        }
        if row.score is not None:
            aux["score"] = row.score
        return EvalResult(fitness=fraction, accuracy=fraction, aux=aux)


class ParamCountEvaluator:
    """Fitness is the negated parameter count, so smaller models win."""

    def evaluate(self, candidate: CandidateArchitecture, seed: int) -> EvalResult:
        n = candidate_params(candidate)
        return EvalResult(fitness=-float(n), param_count=n)


@dataclass(frozen=True)
class ValidityBounds:
    """Inclusive per-field bounds; candidates outside are penalized unseen."""

    conv: tuple[int, int] | None = None
    dense: tuple[int, int] | None = None

    def check(self, candidate: CandidateArchitecture) -> bool:
        if self.conv is not None and not (self.conv[0] <= candidate.conv_cells <= self.conv[1]):
            return False
        if self.dense is not None and not (self.dense[0] <= candidate.dense_cells <= self.dense[1]):
            return False
        return True


@dataclass(frozen=True)
class EvaluatorSpec:
    kind: str  # surrogate | table | param_count | external
    settings: dict[str, Any] = field(default_factory=dict)
    validity: ValidityBounds | None = None
    penalty_fitness: float = DEFAULT_PENALTY_FITNESS

    @classmethod
    def from_dict(cls, cfg: dict[str, Any]) -> "EvaluatorSpec":
        cfg = dict(cfg)
        kind = cfg.pop("kind", None)
        if kind is None:
            raise ConfigError("evaluator config needs a 'kind'")
        kind = str(kind).replace("-", "_")
        if kind not in ("surrogate", "table", "param_count", "external"):
            raise ConfigError(f"unknown evaluator kind {kind!r}")
        validity = None
        if "validity" in cfg:
            v = cfg.pop("validity") or {}
            def pair(key):
                if key not in v:
                    return None
                lo, hi = v[key]
                return (int(lo), int(hi))
            validity = ValidityBounds(conv=pair("conv"), dense=pair("dense"))
        penalty = float(cfg.pop("penalty_fitness", DEFAULT_PENALTY_FITNESS))
        return cls(kind=kind, settings=cfg, validity=validity, penalty_fitness=penalty)


def build_evaluator(spec: EvaluatorSpec, seed: int = 0):
    """Instantiate the concrete evaluator for a spec."""
    s = spec.settings
    if spec.kind == "surrogate":
        return SurrogateEvaluator(
            peak=float(s.get("peak", 0.86)),
            optimum=tuple(s.get("optimum", (2, 2))),
            curvature=tuple(s.get("curvature", (0.01, 0.01))),
            noise_sd=float(s.get("noise_sd", 0.0)),
        )
    if spec.kind == "table":
        table = s.get("table")
        if not table:
            raise ConfigError("table evaluator needs a 'table' (path or fixture name)")
        return TableEvaluator.from_file(resolve_table(str(table)), spec.penalty_fitness)
    if spec.kind == "param_count":
        return ParamCountEvaluator()
    if spec.kind == "external":
        from .protocol import WorkerPool  # deferred: protocol imports this module

        command = s.get("command")
        if not command:
            raise ConfigError("external evaluator needs a 'command'")
        return WorkerPool(
            command=command,
            n_workers=int(s.get("workers", 1)),
            timeout=float(s.get("timeout_seconds", 600.0)),
            handshake_timeout=float(s.get("handshake_timeout_seconds", 10.0)),
            on_error=str(s.get("on_error", "penalize")),
            penalty_fitness=spec.penalty_fitness,
            epochs=int(s.get("epochs", 50)),
            seed=seed,
        )
    raise ConfigError(f"unknown evaluator kind {spec.kind!r}")


@dataclass
class _Pending:
    """Marks a within-batch duplicate awaiting the first occurrence's result."""

    index: int


class EvaluationEngine:
    """Validity / penalty / cache layer over a concrete evaluator.

    ``total_requests`` counts every evaluation request, including penalized
    short-circuits and cache hits.  ``invocations`` counts calls that reached
    the concrete evaluator, so with the cache enabled it equals the number of
    distinct candidates evaluated.  Transport failures are never cached.
    """

    def __init__(self, spec: EvaluatorSpec, seed: int = 0, cache: bool = True):
        self.spec = spec
        self.seed = seed
        self.evaluator = build_evaluator(spec, seed)
        self.cache_enabled = cache
        self._cache: dict[tuple[int, int], EvalResult] = {}
        self._lock = threading.Lock()
        self.total_requests = 0
        self.invocations = 0

    def evaluate(self, candidate: CandidateArchitecture) -> EvalResult:
        return self.evaluate_many([candidate])[0][0]

    def evaluate_many(
        self, candidates: list[CandidateArchitecture]
    ) -> list[tuple[EvalResult, float]]:
        """Evaluate a batch, returning (result, seconds) pairs in input order."""
        results: list = [None] * len(candidates)
        dispatch: list[tuple[int, CandidateArchitecture]] = []
        scheduled: dict[tuple[int, int], int] = {}

        with self._lock:
            self.total_requests += len(candidates)
            for i, cand in enumerate(candidates):
                if self.spec.validity is not None and not self.spec.validity.check(cand):
                    results[i] = (
                        penalized_result(self.spec.penalty_fitness, "out_of_bounds"),
                        0.0,
                    )
                    continue
                key = (cand.conv_cells, cand.dense_cells)
                if self.cache_enabled and key in self._cache:
                    results[i] = (self._cache[key], 0.0)
                elif self.cache_enabled and key in scheduled:
                    results[i] = _Pending(scheduled[key])
                else:
                    scheduled[key] = i
                    dispatch.append((i, cand))

        if dispatch:
            fresh = self._dispatch([c for _, c in dispatch])
            with self._lock:
                self.invocations += len(dispatch)
                for (i, cand), (res, secs) in zip(dispatch, fresh):
                    results[i] = (res, secs)
                    if self.cache_enabled and res.status != FAILED:
                        self._cache[(cand.conv_cells, cand.dense_cells)] = res

        # Duplicates within the batch share the first occurrence's result.
        for i, entry in enumerate(results):
            if isinstance(entry, _Pending):
                results[i] = (results[entry.index][0], 0.0)
        return results

    def _dispatch(
        self, candidates: list[CandidateArchitecture]
    ) -> list[tuple[EvalResult, float]]:
        batch = getattr(self.evaluator, "evaluate_batch", None)
        if batch is not None:
            return batch(candidates)
        out = []
        for cand in candidates:
            start = time.monotonic()
            res = self.evaluator.evaluate(cand, self.seed)
            out.append((res, time.monotonic() - start))
        return out

    def close(self) -> None:
        closer = getattr(self.evaluator, "close", None)
        if closer is not None:
            closer()


def size_string_for(result: EvalResult, candidate: CandidateArchitecture) -> str:
    """Size column for a trial: the evaluator's verbatim size if it supplied
    one, otherwise the canonical plan's computed size."""
    size = result.aux.get("size")
    if isinstance(size, str) and size:
        return size
    n = result.param_count if result.param_count is not None else candidate_params(candidate)
    return space.format_size_millions(n)
