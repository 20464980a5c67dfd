"""Line-protocol server: greeting, then one response line per request line.

Requests arrive on stdin as single-line JSON objects::

    {"id": 3, "candidate": {"conv_cells": 2, "dense_cells": 2},
     "budget": {"epochs": 50}, "seed": 0, "train_config": {...}}

and are answered on stdout, echoing the id::

    {"id": 3, "status": "ok", "fitness": 0.83, "accuracy": 0.83,
     "params": 849546, "message": null}

A request the worker cannot evaluate gets {"status": "error", "message":
...} and the worker keeps serving; only EOF on stdin stops it.  stderr is
free for logging and never part of the protocol.
"""

import argparse
import json
import sys
import time

from . import surrogate

PROTOCOL_VERSION = 1


class BadRequest(Exception):
    pass


def _parse_request(line: str) -> dict:
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        raise BadRequest(f"malformed request line: {exc}") from exc
    if not isinstance(request, dict):
        raise BadRequest(f"request must be an object, got {type(request).__name__}")
    return request


def _candidate_cells(request: dict) -> tuple[int, int]:
    candidate = request.get("candidate")
    if not isinstance(candidate, dict):
        raise BadRequest("request has no candidate object")
    try:
        conv = int(candidate["conv_cells"])
        dense = int(candidate["dense_cells"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BadRequest(f"bad candidate: {exc}") from exc
    if conv < 0 or dense < 0:
        raise BadRequest(f"cell counts must be >= 0, got ({conv}, {dense})")
    return conv, dense


def _ok(request_id, fitness, accuracy=None, params=None):
    return {
        "id": request_id,
        "status": "ok",
        "fitness": fitness,
        "accuracy": accuracy,
        "params": params,
        "message": None,
    }


def _error(request_id, message):
    return {"id": request_id, "status": "error", "message": message}


def _evaluate_surrogate(request: dict, args: argparse.Namespace) -> dict:
    conv, dense = _candidate_cells(request)
    seed = int(request.get("seed", 0))
    value = surrogate.fitness(
        conv,
        dense,
        seed,
        peak=args.peak,
        optimum=tuple(args.optimum),
        curvature=tuple(args.curvature),
        noise_sd=args.noise_sd,
    )
    return _ok(request.get("id"), value)


def _evaluate_train(request: dict, args: argparse.Namespace) -> dict:
    from . import model  # imports torch; only train mode pays for it

    conv, dense = _candidate_cells(request)
    seed = int(request.get("seed", 0))
    budget = request.get("budget") or {}
    epochs = int(budget.get("epochs", 0))
    if args.max_epochs is not None:
        epochs = min(epochs, args.max_epochs)
    train_config = request.get("train_config")
    if not isinstance(train_config, dict):
        raise BadRequest("request has no train_config object")
    net, accuracy = model.train_and_score(
        conv,
        dense,
        epochs,
        seed,
        train_config,
        n_train=args.train_samples,
        n_val=args.val_samples,
        batch_size=args.batch_size,
    )
    return _ok(request.get("id"), accuracy, accuracy=accuracy, params=model.parameter_count(net))


def handle_line(line: str, args: argparse.Namespace) -> dict:
    request_id = None
    try:
        request = _parse_request(line)
        request_id = request.get("id")
        if args.mode == "surrogate":
            return _evaluate_surrogate(request, args)
        return _evaluate_train(request, args)
    except BadRequest as exc:
        return _error(request_id, str(exc))
    except Exception as exc:  # noqa: BLE001 - a broken evaluation must not kill the loop
        return _error(request_id, f"evaluation failed: {exc}")


def serve(args: argparse.Namespace, stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stdout.write(json.dumps({"hello": True, "protocol_version": PROTOCOL_VERSION}) + "\n")
    stdout.flush()
    while True:
        line = stdin.readline()
        if not line:
            break
        if not line.strip():
            continue
        response = handle_line(line, args)
        if args.delay > 0:
            time.sleep(args.delay)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellsearch-worker",
        description="Evaluation worker speaking the cellsearch line protocol on stdin/stdout.",
    )
    parser.add_argument(
        "--mode", choices=["surrogate", "train"], default="surrogate",
        help="closed-form surface or a small torch training run",
    )
    parser.add_argument("--peak", type=float, default=surrogate.DEFAULT_PEAK,
                        help="surrogate: fitness at the optimum")
    parser.add_argument("--optimum", type=int, nargs=2, metavar=("CONV", "DENSE"),
                        default=list(surrogate.DEFAULT_OPTIMUM),
                        help="surrogate: location of the peak")
    parser.add_argument("--curvature", type=float, nargs=2, metavar=("A", "B"),
                        default=list(surrogate.DEFAULT_CURVATURE),
                        help="surrogate: quadratic falloff per axis")
    parser.add_argument("--noise-sd", type=float, default=0.0,
                        help="surrogate: noise level, keyed by candidate and seed")
    parser.add_argument("--max-epochs", type=int, default=None,
                        help="train: cap the requested epoch budget (0 skips training)")
    parser.add_argument("--train-samples", type=int, default=512,
                        help="train: training set size")
    parser.add_argument("--val-samples", type=int, default=256,
                        help="train: validation set size")
    parser.add_argument("--batch-size", type=int, default=64, help="train: minibatch size")
    parser.add_argument("--delay", type=float, default=0.0,
                        help="sleep this many seconds before every response")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    serve(args)
    return 0


def entry() -> None:
    sys.exit(main())
