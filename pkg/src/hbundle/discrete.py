"""Finite-difference harmonic-map quantities for fields of metrics.

The discrete tension at a node is the sum of Riemannian logarithms towards the
four neighbours, divided by the squared spacing.  It is the gradient of the
edge energy ``1/2 sum w_e d(H_p, H_q)^2`` and agrees with the continuum
tension ``H [d_x(H^-1 H_x) + d_y(H^-1 H_y)]`` to second order.
"""

from __future__ import annotations

import numpy as np

from .mats import dagger, hermitian, sqrt_and_invsqrt


def _logs(Hs, Hm, Q):
    M = hermitian(Hm @ Q @ Hm)
    w, V = np.linalg.eigh(M)
    if np.any(w <= 0):
        raise FloatingPointError("metric left the positive cone")
    return (V * np.log(w)[..., None, :]) @ dagger(V)


def tension(H, Hxm, Hxp, Hym, Hyp, hx: float, hy: float) -> np.ndarray:
    """Discrete tension field (tangent vectors at H)."""
    Hs, Hm = sqrt_and_invsqrt(H)
    inner_sum = (_logs(Hs, Hm, Hxm) + _logs(Hs, Hm, Hxp)) / hx**2 + (
        _logs(Hs, Hm, Hym) + _logs(Hs, Hm, Hyp)
    ) / hy**2
    return hermitian(Hs @ inner_sum @ Hs)


def normalized(H, V) -> np.ndarray:
    """``H^-1/2 V H^-1/2``: tangent vector in an H-orthonormal frame."""
    _, Hm = sqrt_and_invsqrt(H)
    return hermitian(Hm @ V @ Hm)


def tangent_norms(H, V) -> np.ndarray:
    W = normalized(H, V)
    return np.sqrt(np.sum(np.abs(W) ** 2, axis=(-2, -1)))


def sq_dist(A, B) -> np.ndarray:
    _, Am = sqrt_and_invsqrt(A)
    w = np.linalg.eigvalsh(hermitian(Am @ B @ Am))
    if np.any(w <= 0):
        raise FloatingPointError("metric left the positive cone")
    return np.sum(np.log(w) ** 2, axis=-1)


def flat_density(H, Hx, Hy) -> np.ndarray:
    """``tr((H^-1 H_x)^2) + tr((H^-1 H_y)^2)`` for stacks of matrices."""
    Ax = np.linalg.solve(H, Hx)
    Ay = np.linalg.solve(H, Hy)
    return np.real(np.einsum("...ij,...ji->...", Ax, Ax) + np.einsum("...ij,...ji->...", Ay, Ay))
