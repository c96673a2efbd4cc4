"""Higgs field of a metric on the punctured disk and its residue and norm.

With ``z = x + iy`` on the cover and ``t = e^{iz}`` on the disk, the flat
connection ``d`` splits against the metric ``h`` (matrix H in the flat frame)
as ``d = D_K + theta + theta^dagger`` with

    D_K = d + 1/2 H^-1 dH,          theta = -1/2 H^-1 (d_z H) dz.

The ``"left"`` convention ``-1/2 (d_z H) H^-1`` is available for comparison;
it is the same endomorphism written in the dual frame and is not bounded in
the h-unitary frame.

Since ``dz = dt / (i t)``, the coefficient of ``dt/t`` is ``-i theta_z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mats import dagger, sqrt_and_invsqrt
from .monodromy import jordan_profile
from .report import ReportDocument

CONVENTIONS = ("right", "left")


class NoResidueLimit(ArithmeticError):
    pass


@dataclass(frozen=True)
class HiggsField:
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray  # theta_z samples, shape x.shape + (n, n)
    H: np.ndarray
    convention: str = "right"

    @property
    def n(self) -> int:
        return self.theta.shape[-1]

    def unitary(self) -> np.ndarray:
        """``H^1/2 theta_z H^-1/2``: theta_z in an h-orthonormal frame."""
        Hs, Hm = sqrt_and_invsqrt(self.H)
        return Hs @ self.theta @ Hm

    def pointwise_norm(self) -> np.ndarray:
        """``|theta|_{omega,h}`` with ``|dz|_omega = y`` (operator norm on the fibre)."""
        return np.linalg.norm(self.unitary(), ord=2, axis=(-2, -1)) * self.y

    def log_coefficient(self) -> np.ndarray:
        """Coefficient of ``dt/t``."""
        return -1j * self.theta


def _theta(H, Hx, Hy, convention: str) -> np.ndarray:
    Hz = 0.5 * (Hx - 1j * Hy)
    if convention == "right":
        return -0.5 * np.linalg.solve(H, Hz)
    if convention == "left":
        return -0.5 * np.swapaxes(np.linalg.solve(np.swapaxes(H, -1, -2), np.swapaxes(Hz, -1, -2)), -1, -2)
    raise ValueError(f"convention must be one of {CONVENTIONS}")


def extract_higgs(source, x=None, y=None, convention: str = "right") -> HiggsField:
    """Higgs field of a :class:`ModelMetric` (analytic) or a ``GridMap`` (centered differences).

    For a grid map the samples are its interior nodes and ``x``, ``y`` are ignored.
    """
    from .flow import GridMap

    if isinstance(source, GridMap):
        g = source
        left, right = g.x_neighbours()
        s = slice(1, -1)
        H = g.H[:, s]
        Hx = (right[:, s] - left[:, s]) / (2 * g.hx)
        Hy = (g.H[:, 2:] - g.H[:, :-2]) / (2 * g.hy)
        X, Y = g.mesh()
        return HiggsField(X[:, s], Y[:, s], _theta(H, Hx, Hy, convention), H, convention)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    H, Hx, Hy = source.with_derivatives(x, y)
    return HiggsField(x, y, _theta(H, Hx, Hy, convention), H, convention)


def extrapolate(us, values) -> tuple[np.ndarray, list[np.ndarray]]:
    """Neville extrapolation to ``u = 0`` of samples ``values[k]`` at ``us[k]``.

    Returns the full-table estimate and the diagonal of leading estimates
    (extrapolants using the first 1, 2, ... points) for diagnostics.
    """
    us = [float(u) for u in us]
    T = [np.asarray(v) for v in values]
    diag = [T[0]]
    k = len(T)
    for level in range(1, k):
        T = [
            (us[i + level] * T[i] - us[i] * T[i + 1]) / (us[i + level] - us[i])
            for i in range(k - level)
        ]
        diag.append(T[0])
    return T[0], diag


@dataclass
class Residue:
    R: np.ndarray
    scale: complex
    conjugate: str
    rel_err: float
    profile: list[int]
    estimates: list = field(default_factory=list)


def residue(source, ladder=(50.0, 100.0, 200.0, 400.0), x: float = 0.0, convention: str = "right", N=None) -> Residue:
    """Limit of the ``dt/t`` coefficient along the ray ``arg t = x`` as ``|t| -> 0``.

    The subleading terms of the model are polynomial in ``1/y`` (degree 2), so
    the samples are extrapolated in ``u = 1/y``.  ``N`` is the nilpotent the
    residue is compared against; it defaults to the model's logarithm.
    """
    from .flow import GridMap
    from . import _linalg as la

    ladder = sorted(float(v) for v in ladder)
    # grid samples carry O(h^2) difference errors; entries below this are noise
    noise = 1e-3 if isinstance(source, GridMap) else 1e-9
    if len(ladder) < 2:
        raise ValueError("ladder needs at least two heights")
    if isinstance(source, GridMap):
        hf = extract_higgs(source, convention=convention)
        ys = hf.y[0]
        rows = []
        for yv in ladder:
            k = np.flatnonzero(np.isclose(ys, yv, rtol=0, atol=1e-9 * max(1.0, yv)))
            if not len(k):
                raise ValueError(f"ladder height {yv} is not an interior grid row")
            rows.append(hf.log_coefficient()[0, k[0]])
        samples = rows
        if N is None:
            from .monodromy import log_unipotent

            N = log_unipotent(source.gamma).N
        Nref = la.to_complex(np.asarray(N))
    else:
        hf = extract_higgs(source, np.full(len(ladder), x), np.array(ladder), convention)
        samples = list(hf.log_coefficient())
        Nref = la.to_complex(source.sl2.N.N) if N is None else la.to_complex(np.asarray(N))
    R, diag = extrapolate([1.0 / v for v in ladder], samples)
    scaleR = max(np.abs(R).max(), np.abs(samples[-1]).max(), 1e-300)
    change = float(np.abs(diag[-1] - diag[-2]).max()) / scaleR
    growth = float(np.abs(samples[-1]).max() / max(np.abs(samples[0]).max(), 1e-300))
    if not np.all(np.isfinite(R)) or (len(diag) > 2 and change > 0.5) or growth > 4.0:
        raise NoResidueLimit(
            f"no residue limit: last extrapolation change {change:.3e}, sample growth {growth:.3e}"
        )
    target = dagger(Nref) if convention == "right" else Nref
    nrm = float(np.linalg.norm(target))
    if nrm == 0:
        scale = 0j
        rel = float(np.linalg.norm(R))
    else:
        scale = complex(np.vdot(target, R) / nrm**2)
        rel = float(np.linalg.norm(R - scale * target) / max(np.linalg.norm(R), 1e-300))
    prof = list(jordan_profile(_denoise(R, noise)))
    return Residue(R, scale, "N^*" if convention == "right" else "N", rel, prof, [np.asarray(d) for d in diag])


def _denoise(R: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    R = np.array(R, dtype=complex)
    R[np.abs(R) < rtol * max(np.abs(R).max(), 1e-300)] = 0
    return R


def residue_report(m, ladder=(50.0, 100.0, 200.0, 400.0), tol: float = 0.01) -> ReportDocument:
    rep = ReportDocument("residue", inputs={"ladder": list(ladder)}, convention={**m.convention, "higgs": "right"})
    res = residue(m, ladder)
    target = jordan_profile(m.sl2.N.N)
    rep.data.update(
        R=res.R, scale=res.scale, conjugate=res.conjugate, profile=res.profile, expected_profile=list(target)
    )
    rep.add("profile_matches", list(res.profile) == list(target), True, "bool")
    rep.add("proportionality_rel_err", res.rel_err, tol)
    return rep


def higgs_norm_check(m, ys=None, nx: int = 16, convention: str = "right", y0: float | None = None) -> ReportDocument:
    """Sup of ``|theta|_{omega,h}`` over rows ``y`` and ``nx`` angles.

    Default convention: finite and non-increasing for ``y >= 2 y0``.  Other
    convention: reports the growth exponent of the row sups in ``y``.
    """
    y0 = y0 if y0 is not None else max(2.0, 1.5 * m.y_min)
    if ys is None:
        ys = y0 * np.geomspace(1, 1000, 25)
    ys = np.asarray(ys, dtype=float)
    xs = np.arange(nx) * (2 * math.pi / nx)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    hf = extract_higgs(m, X, Y, convention)
    norms = hf.pointwise_norm()
    rows = norms.max(axis=0)
    sup = float(rows.max())
    tail = rows[ys >= 2 * y0]
    rise = float(np.max(np.diff(tail) / tail[:-1], initial=-math.inf)) if len(tail) > 1 else -math.inf
    slope = float(np.polyfit(np.log(ys[-5:]), np.log(np.maximum(rows[-5:], 1e-300)), 1)[0])
    # local log-log slopes approach the exponent like 1/y; extrapolate to y = inf
    local = np.diff(np.log(np.maximum(rows, 1e-300))) / np.diff(np.log(ys))
    ymid = np.sqrt(ys[1:] * ys[:-1])
    asym = float(extrapolate(1 / ymid[-4:], list(local[-4:]))[0])
    rep = ReportDocument("higgs_norm", inputs={"y0": y0, "nx": nx, "convention": convention}, convention={"higgs": convention, "dz_omega": "y"})
    rep.data.update(sup=sup, row_sup=rows.tolist(), y=ys.tolist(), growth_exponent=slope, asymptotic_exponent=asym)
    rep.data["integral"] = integral_bound(m, convention=convention, y0=y0)
    rep.add("sup_finite", sup, None, "finite")
    rep.add("max_relative_rise_beyond_2y0", rise, 1e-9, "<=")
    return rep


def integral_bound(m, convention: str = "right", y0: float = 2.0, y1: float | None = None, trials: int = 8, seed: int = 0) -> dict:
    """``int |theta s|^2 / int |s|^2`` for unit sections ``s = H^-1/2 v phi(y)``.

    The weights are the Poincare-type ones: ``dA = dx dy / y^2`` and
    ``|dz|^2 = y^2``.  Returns the largest ratio and the square of the
    pointwise sup on the same samples, which bounds it.
    """
    y1 = y1 if y1 is not None else 50 * y0
    rng = np.random.default_rng(seed)
    xs = np.arange(16) * (2 * math.pi / 16)
    nodes, weights = np.polynomial.legendre.leggauss(64)
    a, b = math.log(y0), math.log(y1)
    ys = np.exp(0.5 * (b - a) * nodes + 0.5 * (b + a))
    wy = 0.5 * (b - a) * weights / ys  # dy / y^2 = d(log y) / y
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    hf = extract_higgs(m, X, Y, convention)
    B = hf.unitary()
    sup2 = float((hf.pointwise_norm() ** 2).max())
    worst = 0.0
    for _ in range(trials):
        v = rng.normal(size=hf.n) + 1j * rng.normal(size=hf.n)
        c = rng.uniform(a, b)
        w = rng.uniform(0.2, 1.0) * (b - a)
        phi = np.exp(-(((np.log(ys) - c) / w) ** 2))
        num = (np.linalg.norm(B @ v, axis=-1) ** 2 * Y**2 * phi[None, :] ** 2) @ wy
        den = (np.vdot(v, v).real * np.ones_like(X) * phi[None, :] ** 2) @ wy
        worst = max(worst, float(num.sum() / den.sum()))
    return {"max_ratio": worst, "sup_squared": sup2}


def integrability_residual(m, h: float, points) -> float:
    """Sup of ``|d_zbar theta_z + [1/2 H^-1 H_zbar, theta_z]|_h`` by centered differences.

    Every derivative, including the ones inside theta, is a centered
    difference with spacing ``h`` applied to samples of the metric.
    """
    X, Y = (np.asarray(p, dtype=float) for p in points)

    def parts(x, y):
        H = m(x, y)
        Hx = (m(x + h, y) - m(x - h, y)) / (2 * h)
        Hy = (m(x, y + h) - m(x, y - h)) / (2 * h)
        th = _theta(H, Hx, Hy, "right")
        Azb = 0.5 * np.linalg.solve(H, 0.5 * (Hx + 1j * Hy))
        return H, th, Azb

    H, th, Azb = parts(X, Y)
    thx = (parts(X + h, Y)[1] - parts(X - h, Y)[1]) / (2 * h)
    thy = (parts(X, Y + h)[1] - parts(X, Y - h)[1]) / (2 * h)
    r = 0.5 * (thx + 1j * thy) + Azb @ th - th @ Azb
    Hs, Hm = sqrt_and_invsqrt(H)
    return float(np.linalg.norm(Hs @ r @ Hm, ord=2, axis=(-2, -1)).max())


def integrability_study(m, sizes=(32, 64, 128), x0: float = 0.0, x1: float = 1.0, y0: float = 2.0, y1: float = 3.0) -> ReportDocument:
    from .model import observed_orders

    rep = ReportDocument("integrability", inputs={"sizes": list(sizes), "patch": [x0, x1, y0, y1]}, convention=m.convention)
    N0 = sizes[0]
    pts = np.meshgrid(np.linspace(x0, x1, N0 + 1)[1:-1], np.linspace(y0, y1, N0 + 1)[1:-1], indexing="ij")
    hs = [(x1 - x0) / N for N in sizes]
    res = [integrability_residual(m, h, pts) for h in hs]
    rep.data["residuals"] = res
    if max(res) < 1e-13:
        rep.data["orders"] = []
        rep.add("residual_identically_zero", max(res), 1e-13)
        return rep
    orders = observed_orders(hs, res)
    rep.data["orders"] = orders
    rep.add("min_observed_order", min(orders), 1.5, ">=")
    return rep
