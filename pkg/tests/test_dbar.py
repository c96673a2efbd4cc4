from __future__ import annotations

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from hbundle import dbar as D
from hbundle.kernels import _pykernels


@pytest.fixture(scope="module")
def grid():
    return D.PolarGrid(128, 64, 0.5, 6.0)


def solve(f, grid, k):
    return D.solve_dbar(D.DbarProblem(f, grid), D.WeightedLineBundle(k, grid.alpha))


def test_zero_data_gives_zero(grid):
    s = solve(np.zeros((grid.nr, grid.nt)), grid, 2)
    assert np.all(s.u == 0)
    assert s.norm_u == 0


@pytest.mark.parametrize("k", [-2, 0, 2, 3])
def test_constant_data_gives_conjugate_coordinate(grid, k):
    s = solve(np.ones((grid.nr, grid.nt)), grid, k)
    tbar = np.conj(grid.t())
    # only the disk below r_min is missing from the data: error r_min^2 / r
    rmin = grid.r[0]
    assert np.abs(s.u - tbar).max() <= 1.01 * rmin
    assert math.isfinite(s.norm_u)


def test_k_equal_one_is_refused(grid):
    with pytest.raises(D.ExcludedWeight, match="excluded weight"):
        solve(np.ones((grid.nr, grid.nt)), grid, 1)


def test_divergent_data_refused(grid):
    R, P = grid.mesh()
    with pytest.raises(D.NotL2):
        solve(R**-2.0, grid, 0)


# closed-form radial integrals: sections int L^(k-2) dL, forms int r^2 L^k dL
@pytest.mark.parametrize(
    "field,k,kind,finite",
    [
        ("zero", 0, "section", True),
        ("one", -2, "section", True),
        ("one", 0, "section", True),
        ("one", 2, "section", False),
        ("one", 0, "form", True),
    ],
)
def test_weighted_norm_examples(field, k, kind, finite):
    g = D.PolarGrid(256, 8, 0.5, 40.0)
    f = D.named_rhs(field, g)
    v = D.weighted_norm(f, g, D.WeightedLineBundle(k, 0.5), kind)
    assert math.isfinite(v) == finite
    if field == "zero":
        assert v == 0


def test_weighted_norm_value_for_constant_section():
    # u = 1, k = -2: 2 pi int_{L0}^inf L^-4 dL = 2 pi / (3 L0^3)
    g = D.PolarGrid(20001, 4, 0.5, 60.0)
    v = D.weighted_norm(np.ones((g.nr, g.nt)), g, D.WeightedLineBundle(-2, 0.5))
    L0 = math.log(2)
    assert v**2 == pytest.approx(2 * math.pi / (3 * L0**3), rel=1e-4)


def test_monomial_table():
    rep = D.monomial_table()
    assert rep.passed
    assert len(rep.data["table"]) == 12


def test_linearity(grid, rng):
    f1 = D.ManufacturedCase().exact(grid)[1]
    f2 = D.named_rhs("one", grid)
    a, b = 0.7 - 0.2j, -1.3
    for k in (-1, 2):
        lhs = solve(a * f1 + b * f2, grid, k).u
        rhs = a * solve(f1, grid, k).u + b * solve(f2, grid, k).u
        assert np.allclose(lhs, rhs, atol=1e-12 * np.abs(lhs).max())


def test_correction_only_for_k_above_one():
    g = D.PolarGrid(256, 8, 0.5, 40.0)
    f = D.sweep_datum(g)
    assert solve(f, g, 0).correction == 0
    s2 = solve(f, g, 2)
    assert abs(s2.correction) > 0
    # with the correction the constant mode vanishes at the puncture
    assert abs(s2.u[0].mean()) < 1e-3 * np.abs(s2.u).max()


def test_manufactured_solution_converges():
    rep = D.residual_study(ks=(0, 2), sizes=(64, 128, 256))
    assert rep.passed


def test_direct_cauchy_sum_agrees_with_mode_solver():
    errs = []
    for n in (32, 64):
        g = D.PolarGrid(n, n, 0.5, math.log(0.5 / 1e-4) + 0.05)
        u, f = D.ManufacturedCase().exact(g)
        errs.append(np.abs(D.cauchy_check(D.DbarProblem(f, g)) - u).max())
    assert errs[1] < errs[0] / 3
    assert errs[1] < 5e-3


def test_sweep_grows_toward_excluded_weight():
    rep = D.sweep_constant()
    assert rep.passed
    C = rep.data["C"]
    assert C["0"] > C["-3"] and C["2"] > C["4"]


def test_compiled_and_python_kernels_agree(rng):
    try:
        from hbundle.kernels import _ckernels
    except ImportError:
        pytest.skip("extension not built")
    a = rng.normal(size=(50, 7)) + 1j * rng.normal(size=(50, 7))
    b = rng.normal(size=(50, 7)) + 1j * rng.normal(size=(50, 7))
    q = rng.uniform(0.5, 1.0, size=7)
    assert np.allclose(_ckernels.geometric_scan(a, b, q), _pykernels.geometric_scan(a, b, q), rtol=1e-14)
    x, y = rng.uniform(-1, 1, size=(2, 200))
    w = rng.normal(size=200) + 0j
    assert np.allclose(_ckernels.cauchy_direct(x, y, x, y, w), _pykernels.cauchy_direct(x, y, x, y, w), rtol=1e-10)


def test_backend_selector_honours_env():
    code = "import hbundle.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, HB_KERNELS="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
