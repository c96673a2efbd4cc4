"""Discrete Simpson operators on bundle-valued forms and the Kaehler identities.

Forms on a rectangular patch of the ``z = x + iy`` plane are stored as four
blocks ``[f | a | b | c]`` for ``f + a dz + b dzbar + c dz^dzbar``, each block
holding an n-vector per node.  Derivatives are centered differences with
zero padding outside the patch, so test forms must vanish near its edge.

Coefficient fields, with H the metric in the flat frame:

    A_z = 1/2 H^-1 H_z,   A_zbar = 1/2 H^-1 H_zbar,
    theta = -A_z,         theta^dagger = -A_zbar,
    d_E = d_z + A_z,      dbar_E = d_zbar + A_zbar,
    D'' = dbar_E + theta, D' = d_E + theta^dagger.

The Kaehler form is ``omega = (i/2) lam dz^dzbar`` (``lam = 1/y^2`` for the
Poincare-type metric, 1 for the Euclidean one).  Adjoints are computed by
transposing the assembled sparse matrices against the weighted inner product
``<u, v> = h^2 sum u^* W v``, never by discretising a continuum adjoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .report import ReportDocument

METRICS = ("poincare", "euclidean")
EXACT = 1e-12


def _centered(N: int, h: float) -> sp.csr_matrix:
    e = np.ones(N - 1)
    return sp.diags([-e, e], [-1, 1], shape=(N, N), format="csr") / (2 * h)


def _blocks(M: np.ndarray) -> sp.csr_matrix:
    """Block-diagonal sparse matrix from a stack ``(..., n, n)``."""
    n = M.shape[-1]
    M = M.reshape(-1, n, n)
    k = M.shape[0]
    rows = np.repeat(np.arange(k * n).reshape(k, n, 1), n, axis=2)
    cols = np.repeat(np.arange(k * n).reshape(k, 1, n), n, axis=1)
    return sp.csr_matrix((M.ravel(), (rows.ravel(), cols.ravel())), shape=(k * n, k * n))


@dataclass(frozen=True)
class Patch:
    N: int
    x0: float = 0.0
    x1: float = 1.0
    y0: float = 1.5
    y1: float = 2.5

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.N - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.N - 1)

    def mesh(self):
        return np.meshgrid(
            np.linspace(self.x0, self.x1, self.N), np.linspace(self.y0, self.y1, self.N), indexing="ij"
        )


class FlatBundle:
    """Trivial bundle with the constant identity metric."""

    def __init__(self, n: int = 1):
        self.n = n

    def with_derivatives(self, x, y):
        x = np.asarray(x, dtype=float)
        eye = np.broadcast_to(np.eye(self.n, dtype=complex), x.shape + (self.n, self.n)).copy()
        z = np.zeros_like(eye)
        return eye, z, z.copy()


class OperatorQuad:
    """Sparse realisations of ``D', D'', D, D^c, L, Lambda`` and their adjoints."""

    def __init__(self, bundle, patch: Patch, metric: str = "poincare"):
        if metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        self.patch = patch
        self.metric = metric
        X, Y = patch.mesh()
        H, Hx, Hy = bundle.with_derivatives(X, Y)
        n = H.shape[-1]
        self.n = n
        N = patch.N
        self.m = N * N * n
        Az = 0.5 * np.linalg.solve(H, 0.5 * (Hx - 1j * Hy))
        Azb = 0.5 * np.linalg.solve(H, 0.5 * (Hx + 1j * Hy))
        lam = 1.0 / Y**2 if metric == "poincare" else np.ones_like(Y)

        I_n = sp.identity(n, format="csr")
        I_N = sp.identity(N, format="csr")
        Dx = sp.kron(sp.kron(_centered(N, patch.hx), I_N), I_n, format="csr")
        Dy = sp.kron(sp.kron(I_N, _centered(N, patch.hy)), I_n, format="csr")
        Dz = 0.5 * (Dx - 1j * Dy)
        Dzb = 0.5 * (Dx + 1j * Dy)
        dE = Dz + _blocks(Az)
        dbE = Dzb + _blocks(Azb)
        th = _blocks(-Az)
        thd = _blocks(-Azb)

        eye_n = np.eye(n)
        lam_b = _blocks(lam[..., None, None] * eye_n)
        Z = None
        zero = sp.csr_matrix((self.m, self.m))

        # rows/cols: f, a (dz), b (dzbar), c (dz^dzbar)
        self.D2 = sp.bmat([[zero, Z, Z, Z], [th, Z, Z, Z], [dbE, Z, Z, Z], [Z, -dbE, th, zero]], format="csr")
        self.D1 = sp.bmat([[zero, Z, Z, Z], [dE, Z, Z, Z], [thd, Z, Z, Z], [Z, -thd, dE, zero]], format="csr")
        self.D = self.D1 + self.D2
        self.Dc = self.D2 - self.D1
        self.L = sp.bmat([[zero, Z, Z, Z], [Z, zero, Z, Z], [Z, Z, zero, Z], [0.5j * lam_b, Z, Z, zero]], format="csr")

        W = [lam[..., None, None] * H, 2 * H, 2 * H, (4 / lam)[..., None, None] * H]
        area = patch.hx * patch.hy
        self.W = sp.block_diag([_blocks(w) * area for w in W], format="csr")
        self.Winv = sp.block_diag([_blocks(np.linalg.inv(w)) / area for w in W], format="csr")
        self.Lam = self.adjoint(self.L)

    @property
    def size(self) -> int:
        return 4 * self.m

    def adjoint(self, A: sp.spmatrix) -> sp.csr_matrix:
        return (self.Winv @ A.conj().T @ self.W).tocsr()

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return complex(np.vdot(u, self.W @ v))

    def norm(self, u: np.ndarray) -> float:
        return math.sqrt(max(self.inner(u, u).real, 0.0))

    def laplacian(self, A: sp.spmatrix, As: sp.spmatrix | None = None):
        """``A A^* + A^* A`` as a function on vectors."""
        As = self.adjoint(A) if As is None else As

        def apply(u):
            return A @ (As @ u) + As @ (A @ u)

        return apply

    @cached_property
    def D2_adjoint(self) -> sp.csr_matrix:
        return self.adjoint(self.D2)

    @cached_property
    def D_adjoint(self) -> sp.csr_matrix:
        return self.adjoint(self.D)

    def identity_errors(self, eta: np.ndarray) -> dict[str, float]:
        """Relative errors of the three identities on the form ``eta``."""
        D2s = self.D2_adjoint
        Ds = self.D_adjoint
        Lam = self.Lam
        comm = lambda A, u: Lam @ (A @ u) - A @ (Lam @ u)  # noqa: E731

        def rel(lhs, rhs):
            nl = self.norm(lhs)
            return 0.0 if nl == 0 and self.norm(rhs) == 0 else self.norm(lhs - rhs) / max(nl, 1e-300)

        out = {
            "d2_adjoint": rel(D2s @ eta, -1j * comm(self.D1, eta)),
            "d_adjoint": rel(Ds @ eta, 1j * comm(self.Dc, eta)),
            "laplacian": rel(self.laplacian(self.D, Ds)(eta), 2 * self.laplacian(self.D2, D2s)(eta)),
        }
        return out


def bump(X, Y, cx: float, cy: float, radius: float) -> np.ndarray:
    """Smooth bump ``exp(1 - 1/(1 - rho^2))`` supported in a disk."""
    rho2 = ((X - cx) ** 2 + (Y - cy) ** 2) / radius**2
    out = np.zeros_like(X)
    inside = rho2 < 1
    out[inside] = np.exp(1 - 1 / (1 - rho2[inside]))
    return out


@dataclass(frozen=True)
class TestForm:
    """Random form: each block is a quadratic polynomial with vector coefficients times a bump."""

    coeffs: np.ndarray  # (4, 6, n) complex

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "TestForm":
        return cls(rng.normal(size=(4, 6, n)) + 1j * rng.normal(size=(4, 6, n)))

    def sample(self, patch: Patch) -> np.ndarray:
        X, Y = patch.mesh()
        cx, cy = 0.5 * (patch.x0 + patch.x1), 0.5 * (patch.y0 + patch.y1)
        u, v = (X - cx) / (patch.x1 - patch.x0), (Y - cy) / (patch.y1 - patch.y0)
        mono = np.stack([np.ones_like(u), u, v, u * u, u * v, v * v], axis=-1)
        phi = bump(X, Y, cx, cy, 0.35 * min(patch.x1 - patch.x0, patch.y1 - patch.y0))
        blocks = [(mono @ c) * phi[..., None] for c in self.coeffs]
        return np.concatenate([b.reshape(-1) for b in blocks])


def kahler_identity_check(
    bundle, sizes=(32, 64, 128), trials: int = 20, seed: int = 0, metric: str = "poincare", patch: Patch | None = None
) -> ReportDocument:
    """Refinement study of the three identities on ``trials`` random test forms."""
    from .model import observed_orders

    base = patch or Patch(sizes[0])
    rng = np.random.default_rng(seed)
    n = bundle.n
    forms = [TestForm.random(n, rng) for _ in range(trials)]
    names = ("d2_adjoint", "d_adjoint", "laplacian")
    errs = {k: np.zeros((trials, len(sizes))) for k in names}
    hs = []
    for j, N in enumerate(sizes):
        P = Patch(N, base.x0, base.x1, base.y0, base.y1)
        q = OperatorQuad(bundle, P, metric)
        hs.append(P.hx)
        for i, f in enumerate(forms):
            e = q.identity_errors(f.sample(P))
            for k in names:
                errs[k][i, j] = e[k]
    rep = ReportDocument(
        "kahler",
        inputs={"sizes": list(sizes), "trials": trials, "seed": seed, "metric": metric},
        convention={"omega": "(i/2) lam dz^dzbar", "adjoint": "weighted transpose"},
    )
    for k in names:
        worst = float(errs[k].max())
        if worst < EXACT:
            # identity holds to roundoff on every grid; no order to observe
            rep.data[k] = {"errors_max": errs[k].max(axis=0).tolist(), "min_order": None}
            rep.add(f"{k}_exact", worst, EXACT)
            continue
        orders = np.array([observed_orders(hs, row) for row in errs[k]])
        rep.data[k] = {"errors_max": errs[k].max(axis=0).tolist(), "min_order": float(orders.min())}
        rep.add(f"{k}_min_order", float(orders.min()), 1.5, ">=")
        rep.add(f"{k}_finest_max_err", float(errs[k][:, -1].max()), None, "finite")
    return rep
