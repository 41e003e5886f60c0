"""Multiply-add counting for operator application paths.

Counters are incremented inside the apply routines themselves, so recorded
costs reflect the code path actually executed (fixed-width sparse rows count
their padding lanes; dense products count full m*n).
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

_stack: list = []


@dataclass
class Tally:
    madds: int = 0


def add_madds(n: int):
    if _stack:
        _stack[-1].madds += int(n)


@contextmanager
def tally():
    t = Tally()
    _stack.append(t)
    try:
        yield t
    finally:
        _stack.pop()


def dense_apply(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    """x (..., n) -> (..., m) through the dense (m, n) matrix A, counted."""
    out = x @ A.T
    batch = int(np.prod(x.shape[:-1], dtype=np.int64)) if x.ndim > 1 else 1
    add_madds(batch * A.shape[0] * A.shape[1])
    return out
