"""Row reduction over Q (exact, ``Fraction`` object arrays) or C (floating).

Kept deliberately small: the monodromy code needs rank, kernels, spans and
inverses, all on matrices of size <= 8 or so.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np

FLOAT_RTOL = 1e-9


def as_exact(M) -> np.ndarray | None:
    """Object array of ``Fraction`` if every entry is rational, else None.

    Accepts ints, Fractions, and strings such as ``"-1/2"``.  Floats are not
    promoted, even integral ones, unless ``M`` is already integer-typed.
    """
    arr = np.asarray(M, dtype=object)
    if arr.dtype == object and arr.ndim >= 1:
        out = np.empty(arr.shape, dtype=object)
        for idx, x in np.ndenumerate(arr):
            if isinstance(x, (bool, np.bool_)):
                return None
            if isinstance(x, (int, np.integer, Rational)):
                out[idx] = Fraction(int(x)) if isinstance(x, np.integer) else Fraction(x)
            elif isinstance(x, str):
                try:
                    out[idx] = Fraction(x)
                except ValueError:
                    return None
            else:
                return None
        return out
    return None


def is_exact(M) -> bool:
    return isinstance(M, np.ndarray) and M.dtype == object


def eye(n: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                out[i, j] = Fraction(int(i == j))
        return out
    return np.eye(n, dtype=complex)


def zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape, dtype=complex)


def _tol(M: np.ndarray) -> float:
    scale = float(np.abs(M).max(initial=0.0)) if M.size else 0.0
    return FLOAT_RTOL * max(scale, 1.0)


def rref(M: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    exact = is_exact(M)
    R = M.copy() if exact else np.array(M, dtype=complex)
    rows, cols = R.shape
    tol = 0.0 if exact else _tol(R)
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        if exact:
            p = next((i for i in range(r, rows) if R[i, c] != 0), None)
        else:
            i = r + int(np.argmax(np.abs(R[r:, c])))
            p = i if abs(R[i, c]) > tol else None
        if p is None:
            continue
        if p != r:
            R[[r, p]] = R[[p, r]]
        R[r] = R[r] / R[r, c]
        for i in range(rows):
            if i != r and (R[i, c] != 0 if exact else abs(R[i, c]) > 0):
                R[i] = R[i] - R[i, c] * R[r]
        if not exact:
            R[np.abs(R) < tol * 1e-3] = 0
        pivots.append(c)
        r += 1
    return R, pivots


def rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    return len(rref(M)[1])


def nullspace(M: np.ndarray) -> np.ndarray:
    """Basis of ker M as columns (canonical basis from the RREF)."""
    exact = is_exact(M)
    n = M.shape[1]
    R, pivots = rref(M)
    free = [c for c in range(n) if c not in pivots]
    basis = zeros((n, len(free)), exact)
    for k, f in enumerate(free):
        basis[f, k] = Fraction(1) if exact else 1.0
        for r, p in enumerate(pivots):
            basis[p, k] = -R[r, f]
    return basis


def column_basis(M: np.ndarray) -> np.ndarray:
    """Independent subset of the columns of M spanning its column space."""
    if M.shape[1] == 0:
        return M
    _, pivots = rref(M)
    return M[:, pivots]


def extend(S: np.ndarray, candidates: np.ndarray) -> list[int]:
    """Indices of candidate columns that are greedily independent modulo span(S)."""
    chosen: list[int] = []
    current = S
    r = rank(current) if current.shape[1] else 0
    for j in range(candidates.shape[1]):
        trial = np.concatenate([current, candidates[:, j : j + 1]], axis=1)
        rt = rank(trial)
        if rt > r:
            chosen.append(j)
            current, r = trial, rt
    return chosen


def intersect(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Basis (columns) of ``col(A) cap col(B)``."""
    exact = is_exact(A) and is_exact(B)
    n = A.shape[0]
    if A.shape[1] == 0 or B.shape[1] == 0:
        return zeros((n, 0), exact)
    K = nullspace(np.concatenate([A, -B], axis=1))
    if K.shape[1] == 0:
        return zeros((n, 0), exact)
    return column_basis(A @ K[: A.shape[1]])


def inv(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    exact = is_exact(M)
    aug = np.concatenate([M, eye(n, exact)], axis=1)
    R, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise np.linalg.LinAlgError("singular matrix")
    return R[:, n:]


def is_zero(M: np.ndarray, tol: float = 1e-10) -> bool:
    if is_exact(M):
        return all(x == 0 for x in M.flat)
    return bool(np.abs(M).max(initial=0.0) <= tol)


def to_complex(M: np.ndarray) -> np.ndarray:
    if is_exact(M):
        return np.array([complex(x) for x in M.flat], dtype=complex).reshape(M.shape)
    return np.asarray(M, dtype=complex)


def matpow(M: np.ndarray, k: int) -> np.ndarray:
    out = eye(M.shape[0], is_exact(M))
    for _ in range(k):
        out = out @ M
    return out
