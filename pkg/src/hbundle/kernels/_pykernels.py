"""Pure numpy versions of the compiled kernels (same signatures)."""

from __future__ import annotations

import numpy as np


def geometric_scan(a: np.ndarray, b: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``W[0] = 0``, ``W[i] = q * (W[i-1] + b[i-1]) + a[i]`` column-wise.

    ``a`` and ``b`` have shape ``(n, m)`` (complex), ``q`` shape ``(m,)`` with ``|q| <= 1``.
    """
    a = np.ascontiguousarray(a, dtype=complex)
    b = np.ascontiguousarray(b, dtype=complex)
    q = np.asarray(q, dtype=float)
    W = np.zeros_like(a)
    for i in range(1, a.shape[0]):
        W[i] = q * (W[i - 1] + b[i - 1]) + a[i]
    return W


def cauchy_direct(tx, ty, sx, sy, w, chunk: int = 512) -> np.ndarray:
    """``u_i = (1/pi) sum_j w_j / (t_i - s_j)``, skipping coincident points."""
    t = np.asarray(tx, dtype=float) + 1j * np.asarray(ty, dtype=float)
    s = np.asarray(sx, dtype=float) + 1j * np.asarray(sy, dtype=float)
    w = np.asarray(w, dtype=complex)
    out = np.empty(t.shape[0], dtype=complex)
    for lo in range(0, t.shape[0], chunk):
        d = t[lo : lo + chunk, None] - s[None, :]
        near = np.abs(d) == 0
        d[near] = 1.0
        k = 1.0 / d
        k[near] = 0.0
        out[lo : lo + chunk] = k @ w
    return out / np.pi
