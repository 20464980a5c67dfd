"""Server loop tests: frames in, frames out, errors never kill the loop."""

import io
import json
import subprocess
import sys
import time

import pytest

from cellsearch_worker.server import PROTOCOL_VERSION, build_parser, handle_line, serve


def surrogate_args(*extra):
    return build_parser().parse_args(["--mode", "surrogate", *extra])


def request_line(request_id=1, conv=2, dense=2, seed=0, epochs=50, **overrides):
    frame = {
        "id": request_id,
        "candidate": {"conv_cells": conv, "dense_cells": dense},
        "budget": {"epochs": epochs},
        "seed": seed,
        "train_config": {},
    }
    frame.update(overrides)
    return json.dumps(frame)


class TestHandleLine:
    def test_ok_response_shape(self):
        response = handle_line(request_line(request_id=9), surrogate_args())
        assert response == {
            "id": 9,
            "status": "ok",
            "fitness": 0.86,
            "accuracy": None,
            "params": None,
            "message": None,
        }

    def test_noise_flag_applies(self):
        quiet = handle_line(request_line(), surrogate_args())
        noisy = handle_line(request_line(), surrogate_args("--noise-sd", "0.1"))
        assert noisy["fitness"] != quiet["fitness"]

    def test_surface_flags_apply(self):
        args = surrogate_args("--peak", "1.0", "--optimum", "4", "1",
                              "--curvature", "0.1", "0.1")
        response = handle_line(request_line(conv=4, dense=1), args)
        assert response["fitness"] == 1.0

    def test_malformed_json_is_clean_error(self):
        response = handle_line("{not json", surrogate_args())
        assert response["status"] == "error"
        assert response["id"] is None

    def test_missing_candidate_is_clean_error(self):
        response = handle_line(json.dumps({"id": 4, "seed": 0}), surrogate_args())
        assert response == {"id": 4, "status": "error",
                            "message": "request has no candidate object"}

    def test_negative_cells_is_clean_error(self):
        response = handle_line(request_line(conv=-1), surrogate_args())
        assert response["status"] == "error"
        assert "must be >= 0" in response["message"]

    def test_non_object_request_is_clean_error(self):
        response = handle_line("[1, 2]", surrogate_args())
        assert response["status"] == "error"
        assert response["id"] is None

    def test_train_without_train_config_is_clean_error(self):
        args = build_parser().parse_args(["--mode", "train", "--max-epochs", "0"])
        response = handle_line(request_line(train_config=None), args)
        assert response["status"] == "error"
        assert "train_config" in response["message"]


class TestServeLoop:
    def run_serve(self, lines, *flags):
        stdin = io.StringIO("".join(line + "\n" for line in lines))
        stdout = io.StringIO()
        serve(build_parser().parse_args(list(flags)), stdin=stdin, stdout=stdout)
        return [json.loads(line) for line in stdout.getvalue().splitlines()]

    def test_greeting_first(self):
        frames = self.run_serve([])
        assert frames == [{"hello": True, "protocol_version": PROTOCOL_VERSION}]

    def test_one_response_per_request(self):
        frames = self.run_serve([request_line(request_id=i) for i in range(3)])
        assert [f.get("id") for f in frames[1:]] == [0, 1, 2]
        assert all(f["status"] == "ok" for f in frames[1:])

    def test_blank_lines_skipped(self):
        frames = self.run_serve(["", request_line(request_id=5), ""])
        assert len(frames) == 2
        assert frames[1]["id"] == 5

    def test_error_does_not_stop_serving(self):
        frames = self.run_serve(["garbage", request_line(request_id=2)])
        assert frames[1]["status"] == "error"
        assert frames[2] == {
            "id": 2, "status": "ok", "fitness": 0.86,
            "accuracy": None, "params": None, "message": None,
        }


class TestSubprocess:
    """The same loop over a real pipe, driven as the client would."""

    @pytest.fixture()
    def worker(self):
        proc = subprocess.Popen(
            [sys.executable, "-m", "cellsearch_worker", "--mode", "surrogate"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        yield proc
        proc.stdin.close()
        proc.wait(timeout=5)

    def ask(self, proc, line):
        proc.stdin.write(line + "\n")
        proc.stdin.flush()
        return json.loads(proc.stdout.readline())

    def test_greets_then_serves(self, worker):
        greeting = json.loads(worker.stdout.readline())
        assert greeting == {"hello": True, "protocol_version": 1}
        response = self.ask(worker, request_line(request_id=3))
        assert response["id"] == 3
        assert response["fitness"] == 0.86

    def test_error_then_recovery_over_pipe(self, worker):
        worker.stdout.readline()
        bad = self.ask(worker, json.dumps({"id": 7}))
        assert bad == {"id": 7, "status": "error",
                       "message": "request has no candidate object"}
        good = self.ask(worker, request_line(request_id=8))
        assert good["status"] == "ok"

    def test_exits_on_stdin_close(self, worker):
        worker.stdout.readline()
        worker.stdin.close()
        assert worker.wait(timeout=5) == 0

    def test_delay_flag_holds_responses(self):
        proc = subprocess.Popen(
            [sys.executable, "-m", "cellsearch_worker", "--delay", "0.4"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        try:
            proc.stdout.readline()
            start = time.monotonic()
            self.ask(proc, request_line())
            assert time.monotonic() - start >= 0.4
        finally:
            proc.stdin.close()
            proc.wait(timeout=5)
