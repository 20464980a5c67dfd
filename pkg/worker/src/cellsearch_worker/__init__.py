"""Evaluation worker for the cellsearch line protocol.

Speaks newline-delimited JSON on stdin/stdout: one greeting line on start,
then one response line per request line.  Two evaluation modes: a closed-form
surrogate (stdlib only) and a small torch training run.
"""

__version__ = "0.1.0"
