"""JSON encoding of scalars and matrices.

Complex scalars are ``[re, im]`` pairs and matrices row-major nested lists.
Exact rationals are written as ints or ``"p/q"`` strings so they round-trip
without loss.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _linalg as la


class InputError(ValueError):
    """Malformed user input; the CLI maps this to exit status 2."""


def scalar_to_json(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    z = complex(x)
    return [float(z.real), float(z.imag)]


def matrix_to_json(M) -> list:
    M = np.asarray(M)
    if M.ndim == 0:
        return scalar_to_json(M.item())
    return [matrix_to_json(row) for row in M]


def _scalar_from_json(x, where: str):
    if isinstance(x, bool):
        raise InputError(f"{where}: boolean is not a number")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError as exc:
            raise InputError(f"{where}: cannot parse {x!r} as a rational") from exc
    if isinstance(x, float):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise InputError(f"{where}: expected a number, rational string or [re, im], got {x!r}")


def matrix_from_json(obj, where: str = "matrix") -> np.ndarray:
    """Parse a square matrix; exact if every entry is rational."""
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise InputError(f"{where}: expected a non-empty list of rows")
    n = len(obj)
    if any(len(r) != n for r in obj):
        raise InputError(f"{where}: matrix must be square ({n} rows)")
    vals = [[_scalar_from_json(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(obj)]
    if all(isinstance(v, Fraction) for r in vals for v in r):
        out = la.zeros((n, n), True)
        for i in range(n):
            for j in range(n):
                out[i, j] = vals[i][j]
        return out
    return np.array([[complex(v) for v in r] for r in vals], dtype=complex)


def load_json(path: str | Path):
    """Read a JSON file, turning decode errors into :class:`InputError` with a location."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return matrix_to_json(o)
    if isinstance(o, (complex, np.complexfloating)):
        return scalar_to_json(o)
    if isinstance(o, Fraction):
        return scalar_to_json(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
