"""Weighted dbar problem on a punctured disk.

A line bundle on ``0 < r < alpha`` has generating section ``sigma`` with
``|sigma|^2 = L^k``, ``L = -log r``, and the base carries the Poincare-type
metric with area element ``dA / (r^2 L^2)``.  Given ``f`` we look for ``u``
with ``du/dtbar = f`` and finite

    |u|^2_k = int |u|^2 L^(k-2) dL dpsi,     |f dtbar|^2_k = int |f|^2 L^k r dr dpsi.

Fields live on a polar grid uniform in ``log r`` and in angle.  Writing
``u = sum u_n(r) e^{i n psi}``, the equation decouples into

    (r^-n u_n)' = 2 r^-n f_{n+1},

and the Cauchy transform over the disk integrates modes ``n < 0`` outward
from the puncture and modes ``n >= 0`` inward from the rim.  For ``k > 1``
the constant mode is integrated outward instead, which subtracts the
holomorphic constant ``c0 = -2 int_0^alpha f_1 dr`` and makes ``u`` vanish
at the puncture.  ``k = 1`` is excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import kernels
from .report import ReportDocument

ZERO_RATE = 1e-6
NOISE = 1e-24  # relative density floor: roundoff, not a tail


class ExcludedWeight(ValueError):
    pass


class NotL2(ValueError):
    pass


@dataclass(frozen=True)
class WeightedLineBundle:
    k: int
    alpha: float = 0.5

    def __post_init__(self):
        if int(self.k) != self.k:
            raise ValueError("weight exponent must be an integer")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    def require_admissible(self) -> None:
        if self.k == 1:
            raise ExcludedWeight("excluded weight: k = 1")


@dataclass(frozen=True)
class PolarGrid:
    """``nr`` radii ``alpha e^{-span} .. alpha`` (uniform in log r) times ``nt`` angles."""

    nr: int
    nt: int
    alpha: float = 0.5
    span: float = 12.0

    @property
    def h(self) -> float:
        return self.span / (self.nr - 1)

    @property
    def s(self) -> np.ndarray:
        return math.log(self.alpha) - self.span + self.h * np.arange(self.nr)

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.s)

    @property
    def L(self) -> np.ndarray:
        return -self.s

    @property
    def psi(self) -> np.ndarray:
        return 2 * math.pi * np.arange(self.nt) / self.nt

    @property
    def modes(self) -> np.ndarray:
        return np.fft.fftfreq(self.nt, 1.0 / self.nt).astype(int)

    def mesh(self):
        return np.meshgrid(self.r, self.psi, indexing="ij")

    def t(self) -> np.ndarray:
        R, P = self.mesh()
        return R * np.exp(1j * P)

    @classmethod
    def parse(cls, text: str, alpha: float = 0.5, span: float = 12.0) -> "PolarGrid":
        try:
            nr, nt = (int(x) for x in text.lower().split("x"))
        except ValueError as exc:
            raise ValueError(f"grid must look like 256x256, got {text!r}") from exc
        return cls(nr, nt, alpha, span)


@dataclass
class DbarProblem:
    f: np.ndarray  # (nr, nt) coefficient of dtbar
    grid: PolarGrid

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=complex)
        if self.f.shape != (self.grid.nr, self.grid.nt):
            raise ValueError(f"f must have shape {(self.grid.nr, self.grid.nt)}")

    def norm(self, b: WeightedLineBundle) -> float:
        return weighted_norm(self.f, self.grid, b, "form")


@dataclass
class DbarSolution:
    u: np.ndarray
    grid: PolarGrid
    k: int
    correction: complex
    residual: float
    norm_u: float
    norm_f: float

    @property
    def ratio(self) -> float:
        return self.norm_u / self.norm_f if self.norm_f > 0 else 0.0


# -- norms ----------------------------------------------------------------


def _tail(L_end: float, dens: np.ndarray, L: np.ndarray) -> float:
    """``int_{L_end}^inf`` of a density fitted as ``C e^{-beta L} L^gamma``."""
    d = dens[:3]
    if np.all(d <= NOISE * dens.max()):
        return 0.0
    if np.any(d <= 0):
        return 0.0 if d[0] == 0 else math.inf
    l = L[:3]
    A = np.stack([np.ones(3), -l, np.log(l)], axis=1)
    logC, beta, gam = np.linalg.solve(A, np.log(d))
    scale = abs(math.log(d[0])) + abs(logC) + 1.0
    if beta > ZERO_RATE * scale:
        g = lambda x: math.exp(logC - beta * x + gam * math.log(x))  # noqa: E731
        return float(quad(g, L_end, math.inf, limit=200)[0])
    if beta < -ZERO_RATE * scale:
        return math.inf
    if gam < -1:
        return float(d[0] * L_end / (-gam - 1))
    return math.inf


def weighted_norm(field_: np.ndarray, grid: PolarGrid, b: WeightedLineBundle, kind: str = "section", tail: bool = True) -> float:
    """Weighted L2 norm on the grid plus a fitted tail below ``r_min``.

    Sections use ``|u|^2 L^(k-2) dL dpsi``, (0,1)-forms ``|f|^2 L^k r^2 dL dpsi``.
    A non-integrable tail gives ``inf``; ``tail=False`` integrates the grid only.
    """
    if kind not in ("section", "form"):
        raise ValueError("kind must be 'section' or 'form'")
    F = np.asarray(field_)
    L = grid.L
    if kind == "form":
        F = F * grid.r[:, None]  # r^2 |f|^2 without overflow near the puncture
    dens = (np.abs(F) ** 2).sum(axis=1) * (2 * math.pi / grid.nt) * L ** (b.k - 2 if kind == "section" else b.k)
    body = grid.h * (dens.sum() - 0.5 * (dens[0] + dens[-1]))
    total = body + (_tail(L[0], dens, L) if tail else 0.0)
    return math.sqrt(total) if math.isfinite(total) else math.inf


def radial_oracle(a: float, c: float, b: WeightedLineBundle, kind: str) -> bool:
    """Finiteness of the norm of ``r^a e^{i m psi} L^c`` near the puncture."""
    if kind == "section":
        rate, power = 2 * a, 2 * c + b.k - 2
    else:
        rate, power = 2 * a + 2, 2 * c + b.k
    return rate > 0 or (rate == 0 and power < -1)


# -- solver ---------------------------------------------------------------


def _mode_integrals(F: np.ndarray, grid: PolarGrid, outward: np.ndarray, modes: np.ndarray | None = None) -> np.ndarray:
    """Per-mode ``2 r^n int rho^-n f_{n+1} d rho`` from the puncture or the rim.

    ``F`` holds the Fourier coefficients of ``f`` shifted so column ``j``
    pairs with ``u``'s mode ``n_j``.  Cells use the trapezoid rule in
    ``log rho`` with the Euler-Maclaurin end correction, so the transform is
    fourth order in ``h``.
    """
    n = (grid.modes if modes is None else modes).astype(float)
    h = grid.h
    phi = F * grid.r[:, None]
    psi = _ds(phi, h) - n * phi
    lo = 0.5 * h * phi - h * h / 12 * psi
    hi = 0.5 * h * phi + h * h / 12 * psi
    out = np.empty_like(phi)
    sel = outward
    if sel.any():
        # r_i^n / r_{i-1}^n = e^{n h} <= 1 for n <= 0
        out[:, sel] = kernels.geometric_scan(lo[:, sel], hi[:, sel], np.exp(n[sel] * h))
    sel = ~outward
    if sel.any():
        out[:, sel] = -kernels.geometric_scan(hi[::-1, sel], lo[::-1, sel], np.exp(-n[sel] * h))[::-1]
    return 2 * out


def _ds(u: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order first derivative along axis 0 (one-sided at the ends)."""
    d = np.empty_like(u)
    d[2:-2] = (u[:-4] - 8 * u[1:-3] + 8 * u[3:-1] - u[4:]) / (12 * h)
    c = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    d[0] = np.tensordot(c, u[:5], axes=1)
    d[1] = np.tensordot(np.array([-3, -10, 18, -6, 1]) / (12 * h), u[:5], axes=1)
    d[-1] = -np.tensordot(c, u[::-1][:5], axes=1)
    d[-2] = -np.tensordot(np.array([-3, -10, 18, -6, 1]) / (12 * h), u[::-1][:5], axes=1)
    return d


def dbar_apply(u: np.ndarray, grid: PolarGrid) -> np.ndarray:
    """``du/dtbar`` by fourth-order differences in ``log r`` and FFT in angle."""
    us = _ds(u, grid.h)
    m = grid.modes
    upsi = np.fft.ifft(1j * m * np.fft.fft(u, axis=1), axis=1)
    R, P = grid.mesh()
    return 0.5 * np.exp(1j * P) / R * (us + 1j * upsi)


def solve_dbar(p: DbarProblem, b: WeightedLineBundle, check_norm: bool = True) -> DbarSolution:
    """Cauchy transform of ``f`` mode by mode, with the ``k > 1`` constant-mode correction."""
    b.require_admissible()
    grid = p.grid
    if b.alpha != grid.alpha:
        raise ValueError("bundle radius and grid radius differ")
    nf = p.norm(b)
    if check_norm and not math.isfinite(nf):
        raise NotL2("data not L2")
    n = grid.modes
    fh = np.fft.fft(p.f, axis=1) / grid.nt
    # u mode n pairs with f mode n + 1
    cols = np.array([np.nonzero(n == (m + 1))[0][0] if (m + 1) in n else -1 for m in n])
    F = np.where(cols[None, :] >= 0, fh[:, np.maximum(cols, 0)], 0)
    outward = n < 0
    if b.k > 1:
        outward = outward | (n == 0)
    U = _mode_integrals(F, grid, outward)
    correction = 0j
    if b.k > 1:
        # constant the plain transform would have carried at the puncture
        j0 = int(np.nonzero(n == 0)[0][0])
        inward = _mode_integrals(F[:, [j0]], grid, np.array([False]), np.array([0]))
        correction = complex(inward[0, 0] - U[0, j0])
    u = np.fft.ifft(U * grid.nt, axis=1)
    res_field = dbar_apply(u, grid) - p.f
    res = weighted_norm(res_field[1:-1], _interior(grid), b, "form", tail=False)
    return DbarSolution(u, grid, b.k, correction, res, weighted_norm(u, grid, b, "section"), nf)


def _interior(grid: PolarGrid) -> PolarGrid:
    return PolarGrid(grid.nr - 2, grid.nt, grid.alpha * math.exp(-grid.h), grid.span - 2 * grid.h)


def cauchy_check(p: DbarProblem, stride: int = 1) -> np.ndarray:
    """Direct quadrature of ``(1/pi) int f(s) / (t - s) dA(s)`` at every grid node.

    Cells are polar rectangles with weight ``r^2 h dpsi``; the self cell is
    dropped (its principal value vanishes for a disk of equal area).
    """
    grid = p.grid
    R, P = grid.mesh()
    w = p.f * R**2 * grid.h * (2 * math.pi / grid.nt)
    w[0] *= 0.5
    w[-1] *= 0.5
    X, Y = R * np.cos(P), R * np.sin(P)
    tgt = (slice(None, None, stride), slice(None, None, stride))
    u = kernels.cauchy_direct(X[tgt].ravel(), Y[tgt].ravel(), X.ravel(), Y.ravel(), w.ravel())
    return u.reshape(X[tgt].shape)


# -- manufactured data ----------------------------------------------------


def smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    a = np.where(x > 0, np.exp(-1 / np.where(x > 0, x, 1)), 0.0)
    b = np.where(x < 1, np.exp(-1 / np.where(x < 1, 1 - x, 1)), 0.0)
    return a / (a + b)


def _bump_and_derivative(r: np.ndarray, r0: float, r1: float):
    """``sin^4`` bump in ``log r`` supported in ``[r0, r1]`` (C^3) and its r-derivative."""
    s = np.log(r)
    s0, s1 = math.log(r0), math.log(r1)
    x = np.clip((s - s0) / (s1 - s0), 0.0, 1.0)
    chi = np.sin(math.pi * x) ** 4
    dchi = 4 * np.sin(math.pi * x) ** 3 * np.cos(math.pi * x) * math.pi / (s1 - s0) / r
    return chi, dchi


@dataclass(frozen=True)
class ManufacturedCase:
    """``u = chi(r) tbar / t`` with an annular cutoff ``chi``; ``f = du/dtbar``."""

    r0: float = 1e-4
    r1: float = 0.45

    def exact(self, grid: PolarGrid) -> tuple[np.ndarray, np.ndarray]:
        R, P = grid.mesh()
        chi, dchi = _bump_and_derivative(R, self.r0, self.r1)
        u = chi * np.exp(-2j * P)
        f = np.exp(-1j * P) * (chi / R + 0.5 * dchi)
        return u, f


def named_rhs(name: str, grid: PolarGrid) -> np.ndarray:
    R, P = grid.mesh()
    if name == "zero":
        return np.zeros_like(R, dtype=complex)
    if name == "one":
        return np.ones_like(R, dtype=complex)
    if name == "tbar_over_abs2":
        return ManufacturedCase().exact(grid)[1]
    if name == "sweep":
        return sweep_datum(grid)
    raise ValueError(f"unknown manufactured case {name!r}")


def sweep_datum(grid: PolarGrid) -> np.ndarray:
    """``chi(L) / (L tbar)``: feeds only the constant mode of ``u`` with slow decay in L."""
    R, P = grid.mesh()
    L = -np.log(R)
    L0, L1 = -math.log(grid.alpha), L.max()
    chi = smooth_step((L - L0) / 1.0) * smooth_step((L1 - L) / 1.0)
    return chi * np.exp(1j * P) / (L * R)


# -- studies --------------------------------------------------------------


def residual_study(ks=(-2, 0, 2, 3), sizes=(64, 128, 256), case: ManufacturedCase = ManufacturedCase(), span: float = 9.0, alpha: float = 0.5) -> ReportDocument:
    """Refinement of the dbar residual and of the error against the manufactured solution."""
    from .model import observed_orders

    rep = ReportDocument(
        "dbar_residual",
        inputs={"ks": list(ks), "sizes": list(sizes), "r0": case.r0, "r1": case.r1, "span": span, "alpha": alpha},
        convention={"norm": "|sigma|^2 = L^k", "grid": "uniform in log r"},
    )
    for k in ks:
        b = WeightedLineBundle(k, alpha)
        res, err, hs = [], [], []
        for N in sizes:
            g = PolarGrid(N, N, alpha, span)
            u_ex, f = case.exact(g)
            sol = solve_dbar(DbarProblem(f, g), b)
            res.append(sol.residual / sol.norm_f)
            # the exact solution vanishes below r0, so the error has no tail
            err.append(weighted_norm(sol.u - u_ex, g, b, "section", tail=False) / weighted_norm(u_ex, g, b, "section"))
            hs.append(g.h)
        o_res = float(min(observed_orders(hs, res)))
        o_err = float(min(observed_orders(hs, err)))
        rep.data[f"k={k}"] = {"residual": res, "error": err, "norm_u": sol.norm_u, "norm_f": sol.norm_f}
        rep.add(f"k={k}_residual_order", o_res, 1.5, ">=")
        rep.add(f"k={k}_error_order", o_err, 1.5, ">=")
        rep.add(f"k={k}_finest_residual", res[-1], 1e-4, "<")
        rep.add(f"k={k}_norms_finite", math.isfinite(sol.norm_u) and math.isfinite(sol.norm_f), True, "bool")
    return rep


MONOMIAL_TABLE = (
    # (a, m, c, k, kind)
    (0, 0, 0, -2, "section"),
    (0, 0, 0, 0, "section"),
    (0, 0, 0, 2, "section"),
    (0, 1, -1, 2, "section"),
    (1, 1, 0, 3, "section"),
    (0, 2, 1, -2, "section"),
    (0, 0, 0, 0, "form"),
    (0, 0, 3, 4, "form"),
    (-1, -1, 0, 0, "form"),
    (-1, 0, -2, 2, "form"),
    (-1, 1, -1, 0, "form"),
    (-2, 0, 0, -3, "form"),
)


def monomial_table(grid: PolarGrid | None = None) -> ReportDocument:
    """Numeric finiteness of ``r^a e^{i m psi} L^c`` against the closed-form radial verdict."""
    grid = grid or PolarGrid(256, 16, 0.5, 40.0)
    rep = ReportDocument("dbar_monomials", inputs={"cases": len(MONOMIAL_TABLE), "span": grid.span})
    R, P = grid.mesh()
    L = -np.log(R)
    rows = []
    mism = 0
    for a, m, c, k, kind in MONOMIAL_TABLE:
        b = WeightedLineBundle(k, grid.alpha)
        fld = R**a * np.exp(1j * m * P) * L**c
        num = math.isfinite(weighted_norm(fld, grid, b, kind))
        orc = radial_oracle(a, c, b, kind)
        mism += num != orc
        rows.append({"a": a, "m": m, "c": c, "k": k, "kind": kind, "numeric": num, "oracle": orc})
    rep.data["table"] = rows
    rep.add("mismatches", mism, 0, "==")
    return rep


SWEEP_KS = (-3, -2, -1, 0, 2, 3, 4)


def sweep_constant(ks=SWEEP_KS, grid: PolarGrid | None = None, f: np.ndarray | None = None) -> ReportDocument:
    """Empirical ``C(k) = |u| / |f|`` on a fixed datum; ``k = 1`` is refused."""
    grid = grid or PolarGrid(512, 8, 0.5, 400.0)
    f = sweep_datum(grid) if f is None else f
    rep = ReportDocument("dbar_sweep", inputs={"ks": list(ks), "nr": grid.nr, "span": grid.span})
    C = {}
    for k in ks:
        try:
            sol = solve_dbar(DbarProblem(f, grid), WeightedLineBundle(k, grid.alpha))
            C[k] = sol.ratio
        except ExcludedWeight:
            C[k] = None
    rep.data["C"] = {str(k): v for k, v in C.items()}
    below = [C[k] for k in sorted(ks) if k < 1 and C[k] is not None]
    above = [C[k] for k in sorted(ks) if k > 1 and C[k] is not None]
    rep.add("all_finite", all(v is not None and math.isfinite(v) for v in C.values() if v is not None), True, "bool")
    rep.add("growth_from_below", len(below) > 1 and all(x < y for x, y in zip(below, below[1:])), True, "bool")
    rep.add("growth_from_above", len(above) > 1 and all(x > y for x, y in zip(above, above[1:])), True, "bool")
    return rep
