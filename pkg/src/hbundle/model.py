"""Explicit model metric on a punctured disk built from unipotent monodromy.

Coordinates: ``t = r e^{ix}`` on the punctured disk of radius ``alpha``, lifted
to the half plane ``z = x + iy`` with ``y = -log r = |log r|``.  For every
Jordan block the metric is

    H_a(x, y) = exp(x~ J) D(y) exp(x~ J)^*,   x~ = x / 2pi,
    D(y) = diag(y^{-j})  (labels j ascending, "descending" exponents)

in the adapted frame, and ``H = F H_a F^*`` in the flat frame, where the
columns of F are the (possibly rescaled) adapted basis vectors.  The deck
step ``x -> x + 2pi`` then acts by ``exp(N)``.

Two normalisations of the adapted frame are supported:

``chain``
    ``N e_j = e_{j-2}`` exactly.  Finite energy with density
    ``[2(b-1)/(2pi)^2 + b(b^2-1)/3] / y^2`` per block, but not harmonic
    for b >= 2.
``unitary``
    ``N e_j = s e_{j-2}`` with ``s_i = 2pi sqrt(i(b-i))``, the frame in which
    ``N^* = (2pi)^2 N^-`` at the base point.  This model is an exactly harmonic
    (totally geodesic) map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _linalg as la
from .discrete import flat_density, tangent_norms, tension
from .mats import act, dagger, hermitian
from .monodromy import Sl2Data, exp_nilpotent, sl2_triple
from .report import ReportDocument

TWO_PI = 2.0 * math.pi
NORMALIZATIONS = ("chain", "unitary")
DIAGONALS = ("descending", "ascending")


class OutsideChart(ValueError):
    pass


@dataclass(frozen=True)
class PuncturedPoint:
    """Point of the punctured disk stored by its lift ``(x, y)``, ``y = -log r``.

    Keeping ``y`` rather than ``r`` avoids underflow deep in the cusp.
    """

    x: float
    y: float

    @property
    def r(self) -> float:
        return math.exp(-self.y)

    @property
    def L(self) -> float:
        return abs(self.y)

    @classmethod
    def from_polar(cls, r: float, x: float) -> "PuncturedPoint":
        if not 0 < r < 1:
            raise OutsideChart("radius must lie in (0, 1)")
        return cls(x, -math.log(r))


def chain_scales(b: int, normalization: str) -> list[float]:
    """``s_i`` (i = 1..b-1) with ``J f_i = s_i f_{i-1}`` in the adapted frame."""
    if normalization == "chain":
        return [1.0] * (b - 1)
    if normalization == "unitary":
        return [TWO_PI * math.sqrt(i * (b - i)) for i in range(1, b)]
    raise ValueError(f"unknown normalization {normalization!r}")


@dataclass(frozen=True)
class ModelMetric:
    sl2: Sl2Data
    alpha: float = 0.5
    normalization: str = "chain"
    diagonal: str = "descending"
    # derived
    labels: np.ndarray = field(init=False, repr=False)
    J: np.ndarray = field(init=False, repr=False)
    F: np.ndarray = field(init=False, repr=False)
    _Jpow: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
        if self.diagonal not in DIAGONALS:
            raise ValueError(f"diagonal must be one of {DIAGONALS}")
        n = self.sl2.n
        J = np.zeros((n, n))
        c = np.ones(n)
        off = 0
        for blk in self.sl2.blocks:
            s = chain_scales(blk.size, self.normalization)
            for i in range(1, blk.size):
                J[off + i - 1, off + i] = s[i - 1]
                c[off + i] = c[off + i - 1] * s[i - 1]
            off += blk.size
        P = la.to_complex(self.sl2.P)
        object.__setattr__(self, "labels", np.array(self.sl2.labels, dtype=float))
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "F", P * c[None, :])
        pows = [np.eye(n)]
        for k in range(1, n):
            pows.append(pows[-1] @ J / k)
        object.__setattr__(self, "_Jpow", tuple(pows))

    @property
    def n(self) -> int:
        return self.sl2.n

    @property
    def y_min(self) -> float:
        return -math.log(self.alpha)

    @property
    def exponents(self) -> np.ndarray:
        """``d_j`` with ``D(y) = diag(y^{d_j})``."""
        return -self.labels if self.diagonal == "descending" else self.labels

    @property
    def convention(self) -> dict:
        return {
            "d": self.diagonal,
            "angular": "x/2pi",
            "basis": self.normalization,
            "action": "g H g^*",
            "metric_constant": 1.0,
        }

    def to_json(self) -> dict:
        return {"sl2": self.sl2.to_json(), "alpha": self.alpha, "convention": self.convention}

    @classmethod
    def from_json(cls, obj: dict) -> "ModelMetric":
        from .jsonio import InputError, matrix_from_json

        try:
            sl2 = sl2_triple(matrix_from_json(obj["sl2"]["N"], "sl2.N"))
            conv = obj.get("convention", {})
            return cls(
                sl2,
                float(obj.get("alpha", 0.5)),
                conv.get("basis", "chain"),
                conv.get("d", "descending"),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"model.json: missing or malformed field {exc}") from exc

    @classmethod
    def from_nilpotent(cls, N, **kw) -> "ModelMetric":
        return cls(sl2_triple(N), **kw)

    # -- evaluation -------------------------------------------------------

    def deck(self) -> np.ndarray:
        """Monodromy ``exp(N)`` in the flat frame."""
        return la.to_complex(exp_nilpotent(self.sl2.N.N))

    def _g(self, xt):
        xt = np.asarray(xt, dtype=float)
        g = np.zeros(xt.shape + (self.n, self.n))
        for k, Pk in enumerate(self._Jpow):
            g = g + (xt[..., None, None] ** k) * Pk
        return g

    def _check(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y <= self.y_min):
            raise OutsideChart("outside model chart")
        return y

    def adapted(self, x, y, derivatives: bool = False):
        """Metric in the adapted frame (and its x, y derivatives)."""
        y = self._check(y)
        x = np.broadcast_to(np.asarray(x, dtype=float), y.shape)
        d = self.exponents
        Dd = y[..., None] ** d
        g = self._g(x / TWO_PI)
        gt = np.swapaxes(g, -1, -2)
        Ha = (g * Dd[..., None, :]) @ gt
        if not derivatives:
            return Ha
        gx = (self.J / TWO_PI) @ g
        Hx = (gx * Dd[..., None, :]) @ gt
        Hx = Hx + np.swapaxes(Hx, -1, -2)
        Dy = d * y[..., None] ** (d - 1)
        Hy = (g * Dy[..., None, :]) @ gt
        return Ha, Hx, Hy

    def to_flat(self, A):
        return self.F @ A @ dagger(self.F)

    def __call__(self, x, y) -> np.ndarray:
        return hermitian(self.to_flat(self.adapted(x, y)))

    def with_derivatives(self, x, y):
        Ha, Hx, Hy = self.adapted(x, y, derivatives=True)
        return tuple(self.to_flat(A) for A in (Ha, Hx, Hy))

    def energy_constant(self) -> float:
        """``c`` in ``e(x, y) = c / y^2`` (descending diagonal)."""
        total = 0.0
        for blk in self.sl2.blocks:
            b = blk.size
            s2 = sum(s * s for s in chain_scales(b, self.normalization))
            total += 2 * s2 / TWO_PI**2 + b * (b * b - 1) / 3
        return total


def eval_model(m: ModelMetric, p: PuncturedPoint) -> np.ndarray:
    return m(p.x, p.y)


def check_equivariance(m: ModelMetric, samples, tol: float = 1e-12) -> ReportDocument:
    """Compare ``H(x + 2pi, y)`` with ``exp(N) . H(x, y)`` at each sample."""
    rep = ReportDocument("equivariance", convention=m.convention)
    x = np.array([p.x for p in samples])
    y = np.array([p.y for p in samples])
    H1 = m(x + TWO_PI, y)
    H0 = act(m.deck(), m(x, y))
    dev = np.abs(H1 - H0).max(axis=(-2, -1)) / np.abs(H1).max(axis=(-2, -1))
    worst = float(dev.max(initial=0.0))
    rep.data["samples"] = len(samples)
    rep.add("max_relative_deviation", worst, tol)
    return rep


def random_samples(m: ModelMetric, count: int, rng: np.random.Generator, y_max: float = 1e3):
    """Points with x uniform in [-4pi, 4pi] and y log-uniform in (y_min, y_max)."""
    xs = rng.uniform(-2 * TWO_PI, 2 * TWO_PI, size=count)
    lo = math.log(m.y_min * 1.001)
    ys = np.exp(rng.uniform(lo, math.log(y_max), size=count))
    return [PuncturedPoint(float(x), float(y)) for x, y in zip(xs, ys)]


def energy_density(m: ModelMetric, x, y) -> np.ndarray:
    """Flat-coordinate energy density ``tr((H^-1 H_x)^2) + tr((H^-1 H_y)^2)``."""
    Ha, Hx, Hy = m.adapted(x, y, derivatives=True)
    # trace is frame independent, so stay in the adapted frame
    return flat_density(Ha, Hx, Hy)


@dataclass(frozen=True)
class Quadrature:
    nx: int = 16
    ny: int = 96
    y_cut: float = 1e4


def total_energy(m: ModelMetric, y0: float, quadrature: Quadrature = Quadrature()) -> float:
    """Energy of the model over ``[0, 2pi] x [y0, inf)``.

    Trapezoid in x (periodic integrand), Gauss-Legendre in ``log y`` up to
    ``y_cut`` and the exact ``c / y^2`` law beyond it.
    """
    if y0 <= m.y_min:
        raise OutsideChart("outside model chart")
    q = quadrature
    if q.y_cut <= y0:
        raise ValueError("y_cut must exceed y0")
    xs = np.arange(q.nx) * (TWO_PI / q.nx)
    nodes, weights = np.polynomial.legendre.leggauss(q.ny)
    a, b = math.log(y0), math.log(q.y_cut)
    s = 0.5 * (b - a) * nodes + 0.5 * (b + a)
    w = 0.5 * (b - a) * weights
    ys = np.exp(s)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    e = energy_density(m, X, Y)
    body = float(np.sum(e.mean(axis=0) * ys * w) * TWO_PI)
    ecut = energy_density(m, xs, np.full_like(xs, q.y_cut)).mean()
    tail = TWO_PI * float(ecut) * q.y_cut  # int_{Y}^inf c/y^2 dy = c / Y
    val = body + tail
    if not math.isfinite(val):
        raise FloatingPointError(f"energy quadrature diverged: body={body}, tail={tail}")
    return val


def closed_form_energy(m: ModelMetric, y0: float) -> float:
    return TWO_PI * m.energy_constant() / y0


def energy_report(m: ModelMetric, y0: float, tol: float = 5e-3) -> ReportDocument:
    rep = ReportDocument("energy", inputs={"y0": y0}, convention=m.convention)
    num = total_energy(m, y0)
    cf = closed_form_energy(m, y0)
    rel = abs(num - cf) / cf if cf else abs(num)
    rep.data.update(closed_form=cf, numeric=num, rel_err=rel)
    rep.add("energy_rel_err", rel, tol, "<=" if cf == 0 else "<")
    return rep


def truncated_energy(m: ModelMetric, y0: float, y1: float, ny: int = 128, nx: int = 16) -> float:
    """Energy of ``[0, 2pi] x [y0, y1]`` with no tail model (any diagonal convention)."""
    xs = np.arange(nx) * (TWO_PI / nx)
    nodes, weights = np.polynomial.legendre.leggauss(ny)
    a, b = math.log(y0), math.log(y1)
    ys = np.exp(0.5 * (b - a) * nodes + 0.5 * (b + a))
    w = 0.5 * (b - a) * weights
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    e = energy_density(m, X, Y)
    return float(np.sum(e.mean(axis=0) * ys * w) * TWO_PI)


def divergence_growth(m: ModelMetric, y0: float, extents=(1e1, 1e2, 1e3)) -> list[float]:
    """Truncated energies on ``[y0, Y]`` for growing Y (negative control)."""
    return [truncated_energy(m, y0, Y) for Y in extents]


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    y0: float
    y1: float
    x0: float = 0.0
    x1: float = TWO_PI

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)


def harmonicity_residual(m: ModelMetric, grid: GridSpec, points=None) -> float:
    """Sup of the invariant norm of the discrete tension with spacing of ``grid``.

    The stencil is applied at the interior nodes of ``grid`` or, if given, at
    ``points = (X, Y)``; refinement studies pass a fixed point set so that the
    sup is taken over the same locations on every grid.
    """
    if points is None:
        xs = np.linspace(grid.x0, grid.x1, grid.nx)[1:-1]
        ys = np.linspace(grid.y0, grid.y1, grid.ny)[1:-1]
        X, Y = np.meshgrid(xs, ys, indexing="ij")
    else:
        X, Y = (np.asarray(a, dtype=float) for a in points)
    hx, hy = grid.hx, grid.hy
    H = m(X, Y)
    tau = tension(H, m(X - hx, Y), m(X + hx, Y), m(X, Y - hy), m(X, Y + hy), hx, hy)
    return float(tangent_norms(H, tau).max())


def observed_orders(hs, errs) -> list[float]:
    return [math.log(errs[i] / errs[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(len(errs) - 1)]


def harmonicity_study(m: ModelMetric, sizes=(32, 64, 128), y0: float = 2.0, y1: float = 6.0) -> ReportDocument:
    """Refinement study on ``[0, 2pi] x [y0, y1]`` with ``N x N`` cells per grid.

    The residual is sampled at the interior nodes of the coarsest grid, which
    are nodes of every finer grid as well.
    """
    rep = ReportDocument("harmonicity", inputs={"sizes": list(sizes), "y0": y0, "y1": y1}, convention=m.convention)
    if y0 <= m.y_min:
        raise OutsideChart("outside model chart")
    grids = [GridSpec(N + 1, N + 1, y0, y1) for N in sizes]
    c = grids[0]
    pts = np.meshgrid(
        np.linspace(c.x0, c.x1, c.nx)[1:-1], np.linspace(c.y0, c.y1, c.ny)[1:-1], indexing="ij"
    )
    res = [harmonicity_residual(m, g, pts) for g in grids]
    rep.data["residuals"] = res
    if max(res) < 1e-13:
        rep.data["orders"] = []
        rep.add("residual_identically_zero", max(res), 1e-13)
        return rep
    orders = observed_orders([g.hx for g in grids], res)
    rep.data["orders"] = orders
    rep.add("min_observed_order", min(orders), 1.8, ">=")
    return rep


def norm_profile(m: ModelMetric, y: float) -> list[tuple[int, float]]:
    """``(label, |e_j|^2)`` on the ``x = 0`` slice, in the adapted frame."""
    Ha = m.adapted(0.0, y)
    return [(int(j), float(Ha[i, i])) for i, j in enumerate(m.labels)]
