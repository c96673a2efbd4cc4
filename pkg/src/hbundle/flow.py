"""Equivariant harmonic maps into positive-definite matrices on a twisted cylinder.

The map is sampled on ``x_i = 2 pi i / nx`` (i = 0..nx-1) and
``y_k = y0 + k hy`` (k = 0..ny-1).  Only the fundamental domain is stored;
the neighbour across the seam is ``act(gamma, H(x_0))`` so the twist holds
exactly.  Rows ``k = 0`` and ``k = ny-1`` carry Dirichlet data.

The solver is a Riemannian descent on the discrete energy

    E = 1/2 sum_edges w_e d(H_p, H_q)^2,

whose negative gradient is the discrete tension.  Each step solves a scalar
grid Laplacian against the tension written in an orthonormal frame, retracts
with ``H^1/2 exp(s X) H^1/2`` and halves ``s`` until the energy does not go up.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .discrete import flat_density, normalized, sq_dist, tangent_norms, tension
from .mats import NotPositiveDefinite, act, dagger, hermitian, matexp, random_hermitian, sqrt_and_invsqrt
from .report import ReportDocument

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
SEAM_TOL = 1e-10
# relative slack for energy comparisons; below this the energy is pure roundoff
ENERGY_SLACK = 64 * np.finfo(float).eps


class FlowStalled(RuntimeError):
    pass


@dataclass
class GridMap:
    H: np.ndarray  # (nx, ny, n, n)
    gamma: np.ndarray
    y0: float
    y1: float

    def __post_init__(self):
        self.H = hermitian(np.asarray(self.H, dtype=complex))
        self.gamma = np.asarray(self.gamma, dtype=complex)
        if self.H.ndim != 4 or self.H.shape[-1] != self.H.shape[-2]:
            raise ValueError("H must have shape (nx, ny, n, n)")
        if self.nx < 3 or self.ny < 3:
            raise ValueError("grid needs at least 3 nodes per direction")
        if not self.y1 > self.y0:
            raise ValueError("need y1 > y0")
        if np.any(np.linalg.eigvalsh(self.H) <= 0):
            raise ValueError("samples must be positive definite")
        self.gamma_inv = np.linalg.inv(self.gamma)

    @property
    def nx(self) -> int:
        return self.H.shape[0]

    @property
    def ny(self) -> int:
        return self.H.shape[1]

    @property
    def n(self) -> int:
        return self.H.shape[-1]

    @property
    def hx(self) -> float:
        return TWO_PI / self.nx

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def xs(self) -> np.ndarray:
        return np.arange(self.nx) * self.hx

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y0, self.y1, self.ny)

    def mesh(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def copy(self) -> "GridMap":
        return replace(self, H=self.H.copy())

    @classmethod
    def from_model(cls, m, nx: int, ny: int, y0: float, y1: float) -> "GridMap":
        g = cls.__new__(cls)
        X, Y = np.meshgrid(np.arange(nx) * (TWO_PI / nx), np.linspace(y0, y1, ny), indexing="ij")
        cls.__init__(g, m(X, Y), m.deck(), y0, y1)
        return g

    # -- neighbours across the seam ---------------------------------------

    def x_neighbours(self, H=None):
        H = self.H if H is None else H
        left = np.concatenate([act(self.gamma_inv, H[-1:]), H[:-1]], axis=0)
        right = np.concatenate([H[1:], act(self.gamma, H[:1])], axis=0)
        return left, right

    def seam_deviation(self, m) -> float:
        """Relative mismatch between ``act(gamma, H(x_0))`` and ``m`` at ``x = 2pi``."""
        ext = act(self.gamma, self.H[0])
        ref = m(np.full(self.ny, TWO_PI), self.ys)
        return float((np.abs(ext - ref).max(axis=(-2, -1)) / np.abs(ref).max(axis=(-2, -1))).max())


def tension_field(g: GridMap) -> np.ndarray:
    """Discrete tension at interior rows, shape ``(nx, ny-2, n, n)``."""
    left, right = g.x_neighbours()
    s = slice(1, -1)
    return tension(
        g.H[:, s], left[:, s], right[:, s], g.H[:, :-2], g.H[:, 2:], g.hx, g.hy
    )


def sup_tension(g: GridMap) -> float:
    return float(tangent_norms(g.H[:, 1:-1], tension_field(g)).max())


def energy(g: GridMap, H=None) -> float:
    H = g.H if H is None else H
    _, right = g.x_neighbours(H)
    ex = sq_dist(H, right).sum() * (g.hy / g.hx)
    ey = sq_dist(H[:, :-1], H[:, 1:]).sum() * (g.hx / g.hy)
    return 0.5 * float(ex + ey)


@dataclass(frozen=True)
class FlowConfig:
    step: float = 1.0
    tol: float = 1e-8
    max_iters: int = 500
    min_step: float = 1e-12
    schedule: tuple[int, ...] = ()


def _laplacian(nx: int, m: int, hx: float, hy: float) -> sp.csr_matrix:
    """``-Delta_h`` on ``nx`` periodic columns times ``m`` Dirichlet rows."""
    ex = np.ones(nx)
    Dx = sp.diags([-ex[:-1], 2 * ex, -ex[:-1]], [-1, 0, 1], shape=(nx, nx), format="lil")
    Dx[0, nx - 1] = -1
    Dx[nx - 1, 0] = -1
    ey = np.ones(m)
    Dy = sp.diags([-ey[:-1], 2 * ey, -ey[:-1]], [-1, 0, 1], shape=(m, m))
    A = sp.kron(Dx.tocsr(), sp.identity(m)) / hx**2 + sp.kron(sp.identity(nx), Dy) / hy**2
    return A.tocsr()


def _ad_squared(A: np.ndarray) -> np.ndarray:
    """Matrix of ``Z -> [A, [A, Z]]`` on row-major ``vec(Z)``, batched over A."""
    n = A.shape[-1]
    eye = np.eye(n)
    ad = np.einsum("...ik,jl->...ijkl", A, eye) - np.einsum("ik,...lj->...ijkl", eye, A)
    ad = ad.reshape(A.shape[:-2] + (n * n, n * n))
    return ad @ ad


def _preconditioner(g: GridMap, lap: sp.csr_matrix):
    """Approximate Hessian ``-Delta + 1/4 sum ad(A)^2`` in orthonormal frames.

    The curvature term comes from the Jacobi equation on ``P_n``; without it
    the scalar Laplacian underestimates the Hessian on smooth modes.
    """
    Hin = g.H[:, 1:-1]
    left, right = g.x_neighbours()
    Ax = normalized(Hin, (right[:, 1:-1] - left[:, 1:-1]) / (2 * g.hx))
    Ay = normalized(Hin, (g.H[:, 2:] - g.H[:, :-2]) / (2 * g.hy))
    K = 0.25 * (_ad_squared(Ax) + _ad_squared(Ay))
    nn = g.n * g.n
    K = K.reshape(-1, nn, nn)
    A = sp.kron(lap, sp.identity(nn)) + sp.block_diag(list(K), format="csr")
    lu = splu(sp.csc_matrix(A))
    shape = Hin.shape

    def solve(V):
        X = lu.solve(np.ascontiguousarray(V.reshape(-1).astype(complex)))
        return hermitian(X.reshape(shape))

    return solve


def _dexp_adjoint(X: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Adjoint of the Frechet derivative of ``exp`` at Hermitian X applied to M."""
    w, V = np.linalg.eigh(X)
    ew = np.exp(w)
    dw = w[..., :, None] - w[..., None, :]
    de = ew[..., :, None] - ew[..., None, :]
    close = np.abs(dw) < 1e-12
    G = np.where(close, 0.5 * (ew[..., :, None] + ew[..., None, :]), de / np.where(close, 1.0, dw))
    Vd = dagger(V)
    return hermitian(V @ (G * (Vd @ M @ V)) @ Vd)


class _Chart:
    """Energy in the chart ``X -> H^1/2 exp(X) H^1/2`` of the interior nodes.

    Gradients are divided by the cell area, so at ``X = 0`` the gradient is
    minus the tension in orthonormal frames.
    """

    def __init__(self, g: GridMap):
        self.g = g
        self.Hs, _ = sqrt_and_invsqrt(g.H[:, 1:-1])

    def point(self, X) -> np.ndarray:
        H = self.g.H.copy()
        H[:, 1:-1] = hermitian(self.Hs @ matexp(X) @ self.Hs)
        return H

    def grad(self, X) -> np.ndarray:
        H = self.point(X)
        trial = replace(self.g, H=H)
        tau = tension_field(trial)
        Hi = np.linalg.inv(H[:, 1:-1])
        M = -(self.Hs @ Hi @ tau @ Hi @ self.Hs)
        return _dexp_adjoint(X, hermitian(M))


def _newton_direction(chart: _Chart, precond, rhs: np.ndarray, rtol: float, maxiter: int):
    """Preconditioned CG on ``Hess d = rhs`` with finite-difference Hessian products."""
    from scipy.sparse.linalg import LinearOperator, cg

    shape = rhs.shape
    size = rhs.size

    def hv(v):
        V = hermitian(v.reshape(shape))
        nv = np.abs(V).max()
        if nv == 0:
            return np.zeros(size, dtype=complex)
        eps = 1e-4 / nv
        out = (chart.grad(eps * V) - chart.grad(-eps * V)) / (2 * eps)
        return out.reshape(-1)

    op = LinearOperator((size, size), matvec=hv, dtype=complex)
    pre = LinearOperator((size, size), matvec=lambda v: precond(v.reshape(shape)).reshape(-1), dtype=complex)
    d, info = cg(op, rhs.reshape(-1), rtol=rtol, maxiter=maxiter, M=pre)
    return hermitian(d.reshape(shape)), info


def relax(g: GridMap, cfg: FlowConfig = FlowConfig()) -> tuple[GridMap, ReportDocument]:
    """Minimise the discrete energy with the boundary rows held fixed.

    Each step is an inexact Newton step in the exponential chart at the
    current iterate followed by a backtracking line search on the energy, so
    accepted steps never increase the energy.
    """
    g = g.copy()
    rep = ReportDocument("flow", convention={"energy": "1/2 sum w_e d^2", "retraction": "H^1/2 exp H^1/2"})
    lap = _laplacian(g.nx, g.ny - 2, g.hx, g.hy)
    E = energy(g)
    energies = [E]
    monotone = True
    res = sup_tension(g)
    res0 = res
    it = 0
    cg_iters = 0
    while res >= cfg.tol and it < cfg.max_iters:
        it += 1
        chart = _Chart(g)
        grad = chart.grad(np.zeros_like(chart.Hs))
        forcing = min(0.1, math.sqrt(res / res0))
        X, _ = _newton_direction(chart, _preconditioner(g, lap), -grad, forcing, 200)
        s = cfg.step
        while True:
            try:
                trial = chart.point(s * X)
                Et = energy(g, trial)
            except (FloatingPointError, NotPositiveDefinite, np.linalg.LinAlgError):
                Et = math.inf
            if Et <= E * (1 + ENERGY_SLACK):
                break
            s *= 0.5
            if s < cfg.min_step:
                raise FlowStalled(f"flow stalled at iteration {it}: residual {res:.3e}, energy {E:.17g}")
        monotone &= Et <= E * (1 + ENERGY_SLACK)
        g.H, E = trial, Et
        energies.append(E)
        res = sup_tension(g)
        log.debug("iter %d step %.3g energy %.17g tension %.3e", it, s, E, res)
    rep.data.update(iterations=it, energy_initial=energies[0], energy_final=E, energies=energies)
    rep.add("sup_tension", res, cfg.tol)
    rep.add("energy_monotone", monotone, True, "bool")
    return g, rep


def perturb(g: GridMap, rng: np.random.Generator, size: float = 0.1) -> GridMap:
    """Move each interior node a random distance ``<= size`` along a random geodesic."""
    g = g.copy()
    Hin = g.H[:, 1:-1]
    A = random_hermitian(rng, g.n, shape=Hin.shape[:2])
    A = A / np.linalg.norm(A, axis=(-2, -1), keepdims=True)
    r = rng.uniform(0, size, size=Hin.shape[:2])[..., None, None]
    Hs, _ = sqrt_and_invsqrt(Hin)
    g.H[:, 1:-1] = hermitian(Hs @ matexp(r * A) @ Hs)
    return g


def sup_dist(a: GridMap, b) -> float:
    B = b.H if isinstance(b, GridMap) else b
    return float(np.sqrt(sq_dist(a.H, B)).max())


def dist_to_model(g: GridMap, m) -> np.ndarray:
    X, Y = g.mesh()
    return np.sqrt(sq_dist(g.H, m(X, Y)))


def gradient_bound_check(g: GridMap) -> ReportDocument:
    """``|dh|^2_omega / |log r|^2`` at interior nodes by centered differences.

    With the Poincare-type metric ``|dh|^2_omega = y^2 e`` for the flat density
    ``e``, so the ratio equals ``e`` itself.
    """
    rep = ReportDocument("gradient_bound", inputs={"nx": g.nx, "ny": g.ny, "y0": g.y0, "y1": g.y1})
    left, right = g.x_neighbours()
    s = slice(1, -1)
    Hx = (right[:, s] - left[:, s]) / (2 * g.hx)
    Hy = (g.H[:, 2:] - g.H[:, :-2]) / (2 * g.hy)
    e = flat_density(g.H[:, s], Hx, Hy)
    ys = g.ys[1:-1]
    dh2 = e * ys**2
    ratio = dh2 / ys**2
    rows = ratio.max(axis=0)
    C = float(rows.max())
    rise = float(np.max(np.diff(rows) / rows[:-1], initial=-math.inf))
    rep.data.update(C=C, row_sup=rows.tolist(), y=ys.tolist(), C_times_y0_sq=C * ys[0] ** 2)
    rep.add("C_finite", C, None, "finite")
    # non-increasing in y up to roundoff
    rep.add("max_relative_rise_in_y", rise, 1e-9, "<=")
    return rep


def prolong(coarse: GridMap, fine_shape: tuple[int, int], m) -> GridMap:
    """Interpolate a solution to a finer grid in the log chart centered on ``m``."""
    from scipy.interpolate import RegularGridInterpolator

    nx, ny = fine_shape
    fine = GridMap.from_model(m, nx, ny, coarse.y0, coarse.y1)
    Xc, Yc = coarse.mesh()
    Mc = m(Xc, Yc)
    Ms, Mm = sqrt_and_invsqrt(Mc)
    w, V = np.linalg.eigh(hermitian(Mm @ coarse.H @ Mm))
    Lc = (V * np.log(w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))
    # periodic wrap for the interpolator; the log chart is model-relative and untwisted
    xs = np.append(coarse.xs, TWO_PI)
    Lc = np.concatenate([Lc, Lc[:1]], axis=0)
    interp = RegularGridInterpolator((xs, coarse.ys), Lc.reshape(len(xs), coarse.ny, -1))
    Xf, Yf = fine.mesh()
    Lf = interp(np.stack([Xf, Yf], axis=-1)).reshape(fine.H.shape)
    Fs, _ = sqrt_and_invsqrt(fine.H)
    inner = hermitian(Fs @ matexp(hermitian(Lf)) @ Fs)
    fine.H[:, 1:-1] = inner[:, 1:-1]
    return fine


def relax_schedule(m, sizes, y0: float, y1: float, cfg: FlowConfig = FlowConfig()):
    """Solve on each ``(nx, ny)`` of ``sizes`` in turn, warm-starting from the previous grid."""
    out = []
    prev = None
    for nx, ny in sizes:
        g = GridMap.from_model(m, nx, ny, y0, y1) if prev is None else prolong(prev, (nx, ny), m)
        prev, rep = relax(g, cfg)
        out.append((prev, rep))
    return out


def write_csv(path, g: GridMap, m) -> None:
    d = dist_to_model(g, m)
    X, Y = g.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "dist_to_model"])
        for x, y, v in zip(X.ravel(), Y.ravel(), d.ravel()):
            w.writerow([f"{x:.12g}", f"{y:.12g}", f"{v:.6e}"])
