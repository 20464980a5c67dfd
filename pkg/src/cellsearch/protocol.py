"""Client side of the line-delimited JSON worker protocol.

A worker is any subprocess that, on start, writes one greeting line::

    {"hello": true, "protocol_version": 1}

and then answers each request line with exactly one response line until its
standard input closes.  Requests and responses are single-line JSON objects;
workers may log freely to standard error.

Request::

    {"id": 3, "candidate": {"conv_cells": 2, "dense_cells": 2},
     "budget": {"epochs": 50}, "seed": 0, "train_config": {...}}

Response::

    {"id": 3, "status": "ok", "fitness": 0.83, "accuracy": 0.83,
     "params": 849546, "message": null}

Each worker handles exactly one outstanding request at a time; parallelism
comes from running several independent workers.  Any transport fault
(timeout, broken pipe, malformed line, id mismatch) invalidates the worker,
which is restarted; the failed evaluation is either penalized or aborts the
run, per policy.
"""

from __future__ import annotations

import json
import os
import selectors
import shlex
import subprocess
import threading
import time
from queue import Empty, Queue

from .errors import RunAborted, TransportError
from .evaluators import EvalResult, FAILED, PENALIZED
from .space import CandidateArchitecture

PROTOCOL_VERSION = 1

# Fixed training hyperparameters echoed to workers with every request.
TRAIN_CONFIG = {
    "kernel": 3,
    "base_filters": 32,
    "cell_filters": 64,
    "dense_units": 512,
    "dropout_cell": 0.2,
    "dropout_head": 0.5,
    "l2": 1e-4,
    "optimizer": "adamax",
    "learning_rate": 2e-3,
}


class Worker:
    """One worker subprocess, strictly serial: write a line, read a line."""

    def __init__(self, command: str | list[str], handshake_timeout: float = 10.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.handshake_timeout = handshake_timeout
        self.proc: subprocess.Popen | None = None
        self._buffer = b""
        self.start()

    def start(self) -> None:
        try:
            self.proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                bufsize=0,
            )
        except OSError as exc:
            raise TransportError(f"failed to spawn worker {self.command}: {exc}") from exc
        self._buffer = b""
        self._handshake()

    def _handshake(self) -> None:
        line = self._read_line(self.handshake_timeout)
        try:
            greeting = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TransportError(f"malformed worker greeting: {line!r}") from exc
        if not isinstance(greeting, dict) or greeting.get("hello") is not True:
            raise TransportError(f"unexpected worker greeting: {greeting!r}")
        version = greeting.get("protocol_version")
        if version != PROTOCOL_VERSION:
            raise TransportError(
                f"worker speaks protocol version {version!r}, expected {PROTOCOL_VERSION}"
            )

    def _read_line(self, timeout: float) -> str:
        assert self.proc is not None and self.proc.stdout is not None
        fd = self.proc.stdout.fileno()
        deadline = time.monotonic() + timeout
        sel = selectors.DefaultSelector()
        sel.register(fd, selectors.EVENT_READ)
        try:
            while b"\n" not in self._buffer:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TransportError(f"worker response timed out after {timeout}s")
                if not sel.select(remaining):
                    continue
                chunk = os.read(fd, 65536)
                if not chunk:
                    raise TransportError("worker closed its output")
                self._buffer += chunk
        finally:
            sel.close()
        line, _, self._buffer = self._buffer.partition(b"\n")
        return line.decode("utf-8", errors="replace")

    def _write_line(self, obj: dict) -> None:
        assert self.proc is not None and self.proc.stdin is not None
        try:
            self.proc.stdin.write((json.dumps(obj) + "\n").encode())
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"worker pipe broken: {exc}") from exc

    def evaluate(
        self,
        candidate: CandidateArchitecture,
        request_id: int,
        seed: int,
        epochs: int,
        timeout: float,
    ) -> dict:
        """Send one request, read one response, validate the id. Returns the
        raw response object; transport faults raise TransportError."""
        self._write_line(
            {
                "id": request_id,
                "candidate": {
                    "conv_cells": candidate.conv_cells,
                    "dense_cells": candidate.dense_cells,
                },
                "budget": {"epochs": epochs},
                "seed": seed,
                "train_config": TRAIN_CONFIG,
            }
        )
        line = self._read_line(timeout)
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TransportError(f"malformed worker response: {line!r}") from exc
        if not isinstance(response, dict) or response.get("id") != request_id:
            raise TransportError(
                f"response id {response.get('id') if isinstance(response, dict) else None!r} "
                f"does not match outstanding request {request_id}"
            )
        return response

    def restart(self) -> None:
        self.close()
        self.start()

    def close(self) -> None:
        if self.proc is None:
            return
        try:
            if self.proc.stdin is not None:
                self.proc.stdin.close()
        except OSError:
            pass
        try:
            self.proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()
        self.proc = None


def _result_from_response(response: dict, penalty_fitness: float, on_error: str) -> EvalResult:
    status = response.get("status")
    if status == "ok":
        if "fitness" not in response or not isinstance(response["fitness"], (int, float)):
            raise TransportError(f"ok response without numeric fitness: {response!r}")
        aux = {}
        if response.get("message"):
            aux["message"] = response["message"]
        return EvalResult(
            fitness=float(response["fitness"]),
            accuracy=response.get("accuracy"),
            param_count=response.get("params"),
            aux=aux,
        )
    if status == "error":
        message = response.get("message", "worker error")
        if on_error == "abort":
            raise RunAborted(f"worker reported an error: {message}")
        return EvalResult(
            fitness=penalty_fitness, status=PENALIZED, aux={"reason": "worker_error", "message": message}
        )
    raise TransportError(f"response has unknown status {status!r}")


class WorkerPool:
    """N independent serial workers evaluating one batch at a time.

    Results are joined and returned in the batch's input order, so callers
    see the same trial order regardless of worker count.
    """

    def __init__(
        self,
        command: str | list[str],
        n_workers: int = 1,
        timeout: float = 600.0,
        handshake_timeout: float = 10.0,
        on_error: str = "penalize",
        penalty_fitness: float = -1e9,
        epochs: int = 50,
        seed: int = 0,
    ):
        if on_error not in ("penalize", "abort"):
            raise RunAborted(f"unknown on_error policy {on_error!r}")
        self.timeout = timeout
        self.on_error = on_error
        self.penalty_fitness = penalty_fitness
        self.epochs = epochs
        self.seed = seed
        self._id_lock = threading.Lock()
        self._next_id = 0
        self.workers = [
            Worker(command, handshake_timeout) for _ in range(max(1, n_workers))
        ]

    def _take_id(self) -> int:
        with self._id_lock:
            rid = self._next_id
            self._next_id += 1
            return rid

    def _evaluate_one(self, worker: Worker, candidate: CandidateArchitecture) -> EvalResult:
        request_id = self._take_id()
        try:
            response = worker.evaluate(
                candidate, request_id, self.seed, self.epochs, self.timeout
            )
        except TransportError as exc:
            if self.on_error == "abort":
                raise RunAborted(f"evaluation transport error: {exc}") from exc
            worker.restart()  # raises TransportError itself if the worker is gone for good
            return EvalResult(
                fitness=self.penalty_fitness, status=FAILED, aux={"reason": "transport_error", "message": str(exc)}
            )
        return _result_from_response(response, self.penalty_fitness, self.on_error)

    def evaluate_batch(
        self, candidates: list[CandidateArchitecture]
    ) -> list[tuple[EvalResult, float]]:
        results: list[tuple[EvalResult, float] | None] = [None] * len(candidates)
        if len(self.workers) == 1 or len(candidates) <= 1:
            for i, cand in enumerate(candidates):
                start = time.monotonic()
                res = self._wrapped_evaluate(self.workers[0], cand)
                results[i] = (res, time.monotonic() - start)
                if isinstance(res, _Abort):
                    break
            self._raise_if_aborted(results)
            return results  # type: ignore[return-value]

        jobs: Queue = Queue()
        for item in enumerate(candidates):
            jobs.put(item)
        abort = threading.Event()
        lock = threading.Lock()

        def drive(worker: Worker) -> None:
            while not abort.is_set():
                try:
                    i, cand = jobs.get_nowait()
                except Empty:
                    return
                start = time.monotonic()
                res = self._wrapped_evaluate(worker, cand)
                with lock:
                    results[i] = (res, time.monotonic() - start)
                if isinstance(res, _Abort):
                    abort.set()

        threads = [threading.Thread(target=drive, args=(w,)) for w in self.workers]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        self._raise_if_aborted(results)
        return results  # type: ignore[return-value]

    def _wrapped_evaluate(self, worker: Worker, candidate: CandidateArchitecture):
        try:
            return self._evaluate_one(worker, candidate)
        except RunAborted as exc:
            return _Abort(exc)
        except TransportError as exc:  # restart itself failed: the run cannot continue
            return _Abort(RunAborted(f"worker unrecoverable: {exc}"))

    @staticmethod
    def _raise_if_aborted(results: list) -> None:
        for entry in results:
            if entry is not None and isinstance(entry[0], _Abort):
                raise entry[0].exc

    def close(self) -> None:
        for worker in self.workers:
            worker.close()


class _Abort:
    """Sentinel result carrying the exception that should abort the run."""

    def __init__(self, exc: RunAborted):
        self.exc = exc
