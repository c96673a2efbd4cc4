"""Dense complex matrices and the Riemannian geometry of positive-definite
Hermitian matrices, ``P_n = GL(n, C) / U(n)``.

Every function accepts stacks of matrices with shape ``(..., n, n)`` so the
grid solvers can evaluate whole fields at once.  Hermitian functions (exp,
log, powers) go through ``eigh``; inputs are Hermitian by construction, so
there is no need for scaling-and-squaring.
"""

from __future__ import annotations

import numpy as np

#: Inverting a metric whose condition number exceeds this is refused.
COND_LIMIT = 1e12
#: Normalisation constant of the invariant metric ``tr(H^-1 A H^-1 B)``.
METRIC_CONSTANT = 1.0


class NotPositiveDefinite(ValueError):
    pass


class SingularElement(ValueError):
    pass


def dagger(A: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(A, -1, -2))


def hermitian(A) -> np.ndarray:
    """Return ``(A + A*) / 2`` as a complex array."""
    A = np.asarray(A, dtype=complex)
    if A.shape[-1] != A.shape[-2]:
        raise ValueError(f"not square: shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("non-finite matrix entries")
    return 0.5 * (A + dagger(A))


def posdef(H) -> np.ndarray:
    """Symmetrise ``H`` and check that it lies in ``P_n``."""
    H = hermitian(H)
    w = np.linalg.eigvalsh(H)
    if np.any(w <= 0):
        raise NotPositiveDefinite("not positive definite")
    return H


def _eig_apply(A: np.ndarray, fn) -> np.ndarray:
    w, V = np.linalg.eigh(A)
    return (V * fn(w)[..., None, :]) @ dagger(V)


def matexp(A) -> np.ndarray:
    """Matrix exponential.

    Hermitian input goes through the eigendecomposition.  Anything else is
    handed to :func:`scipy.linalg.expm`, which covers the nilpotent and
    unipotent matrices used by the monodromy code.
    """
    A = np.asarray(A, dtype=complex)
    if np.allclose(A, dagger(A), rtol=0, atol=1e-14 * max(1.0, np.abs(A).max(initial=0))):
        return _eig_apply(hermitian(A), np.exp)
    from scipy.linalg import expm

    if A.ndim == 2:
        return expm(A)
    return np.stack([expm(a) for a in A.reshape(-1, *A.shape[-2:])]).reshape(A.shape)


def matlog_pd(H) -> np.ndarray:
    """Logarithm of a positive-definite Hermitian matrix (Hermitian result)."""
    H = hermitian(H)
    w, V = np.linalg.eigh(H)
    if np.any(w <= 0):
        raise NotPositiveDefinite("not positive definite")
    return (V * np.log(w)[..., None, :]) @ dagger(V)


def powm(H, p: float) -> np.ndarray:
    H = hermitian(H)
    w, V = np.linalg.eigh(H)
    if np.any(w <= 0):
        raise NotPositiveDefinite("not positive definite")
    return (V * (w ** p)[..., None, :]) @ dagger(V)


def sqrt_and_invsqrt(H) -> tuple[np.ndarray, np.ndarray]:
    H = hermitian(H)
    w, V = np.linalg.eigh(H)
    if np.any(w <= 0):
        raise NotPositiveDefinite("not positive definite")
    s = np.sqrt(w)
    Vd = dagger(V)
    return (V * s[..., None, :]) @ Vd, (V * (1.0 / s)[..., None, :]) @ Vd


def safe_inv(H) -> np.ndarray:
    """Inverse of a metric, refusing condition numbers above ``COND_LIMIT``."""
    H = hermitian(H)
    w, V = np.linalg.eigh(H)
    if np.any(w <= 0):
        raise NotPositiveDefinite("not positive definite")
    if np.any(w[..., -1] / w[..., 0] > COND_LIMIT):
        raise NotPositiveDefinite(
            f"condition number above {COND_LIMIT:g}; rescale the metric before inverting"
        )
    return (V * (1.0 / w)[..., None, :]) @ dagger(V)


def act(g, H) -> np.ndarray:
    """Left action of ``GL(n, C)`` on ``P_n``: ``g . H = g H g*``.

    Written with ``g*`` on the right so that ``g . (h . H) = (gh) . H``.
    """
    g = np.asarray(g, dtype=complex)
    H = np.asarray(H, dtype=complex)
    if g.shape[-1] != H.shape[-1]:
        raise ValueError(f"dimension mismatch: {g.shape} vs {H.shape}")
    s = np.linalg.svd(g, compute_uv=False)
    if np.any(s[..., -1] <= 1e-14 * s[..., 0]):
        raise SingularElement("non-invertible group element")
    return hermitian(g @ H @ dagger(g))


def inner(H, A, B) -> float:
    """Invariant inner product ``tr(H^-1 A H^-1 B)`` of tangent vectors at H."""
    H, A, B = (np.asarray(M, dtype=complex) for M in (H, A, B))
    if not (H.shape == A.shape == B.shape):
        raise ValueError(f"dimension mismatch: {H.shape}, {A.shape}, {B.shape}")
    Hinv = safe_inv(H)
    val = np.trace(Hinv @ A @ Hinv @ B, axis1=-2, axis2=-1)
    return METRIC_CONSTANT * np.real(val)


def geodesic(A, s: float) -> np.ndarray:
    """Point ``exp(sA)`` on the geodesic through the identity with direction A."""
    return _eig_apply(hermitian(A) * s, np.exp)


def dist(H1, H2) -> np.ndarray:
    """Riemannian distance ``sqrt(sum log^2 lambda_i)``, lambda eigenvalues of H1^-1 H2."""
    _, H1m = sqrt_and_invsqrt(H1)
    M = hermitian(H1m @ np.asarray(H2, dtype=complex) @ H1m)
    w = np.linalg.eigvalsh(M)
    if np.any(w <= 0):
        raise NotPositiveDefinite("not positive definite")
    return np.sqrt(np.sum(np.log(w) ** 2, axis=-1))


def log_map(H, Q) -> np.ndarray:
    """Riemannian logarithm: tangent vector at H pointing to Q."""
    Hs, Hm = sqrt_and_invsqrt(H)
    return hermitian(Hs @ matlog_pd(Hm @ Q @ Hm) @ Hs)


def exp_map(H, V) -> np.ndarray:
    """Retraction ``H^1/2 exp(H^-1/2 V H^-1/2) H^1/2``; stays in P_n exactly."""
    Hs, Hm = sqrt_and_invsqrt(H)
    return hermitian(Hs @ _eig_apply(hermitian(Hm @ V @ Hm), np.exp) @ Hs)


def tangent_norm(H, V) -> np.ndarray:
    """Norm of the tangent vector V at H, ``sqrt(tr((H^-1 V)^2))``."""
    _, Hm = sqrt_and_invsqrt(H)
    W = hermitian(Hm @ V @ Hm)
    return np.sqrt(METRIC_CONSTANT * np.sum(np.abs(W) ** 2, axis=(-2, -1)))


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0, shape: tuple = ()) -> np.ndarray:
    size = tuple(shape) + (n, n)
    X = rng.normal(size=size) + 1j * rng.normal(size=size)
    return hermitian(X) * scale


def random_posdef(rng: np.random.Generator, n: int, max_cond: float = 1e3) -> np.ndarray:
    """Random element of P_n with eigenvalues log-uniform in [1, max_cond]."""
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    w = np.exp(rng.uniform(0, np.log(max_cond), size=n))
    return hermitian((Q * w) @ dagger(Q))
