from __future__ import annotations

import numpy as np
import pytest

from hbundle import flow
from hbundle.model import ModelMetric
from hbundle.monodromy import jordan_matrix, sl2_triple


@pytest.fixture(scope="module")
def m():
    return ModelMetric(sl2_triple(jordan_matrix([3])), normalization="unitary")


@pytest.fixture(scope="module")
def base(m):
    return flow.GridMap.from_model(m, 16, 12, 5.0, 20.0)


def test_seam_matches_monodromy(base, m):
    assert base.seam_deviation(m) < flow.SEAM_TOL


def test_model_is_nearly_harmonic_on_grid(base):
    # discretisation error only; the fixed point sits O(h^2) away
    assert flow.sup_tension(base) < 5e-3


def test_relax_converges_with_monotone_energy(base, rng):
    g = flow.perturb(base, rng, 0.1)
    lim, rep = flow.relax(g)
    assert rep.passed
    E = rep.data["energies"]
    assert all(b <= a * (1 + flow.ENERGY_SLACK) for a, b in zip(E, E[1:]))
    # boundary rows are held fixed
    assert np.array_equal(lim.H[:, 0], g.H[:, 0]) and np.array_equal(lim.H[:, -1], g.H[:, -1])


def test_limit_close_to_model_and_independent_of_start(base, m):
    lims = [flow.relax(flow.perturb(base, np.random.default_rng(s), 0.1))[0] for s in (1, 2)]
    assert flow.sup_dist(lims[0], lims[1]) < 1e-6
    assert flow.dist_to_model(lims[0], m).max() < 2e-2


def test_distance_to_model_shrinks_like_h2(m):
    d = []
    for nx, ny in ((16, 12), (32, 23)):
        g = flow.GridMap.from_model(m, nx, ny, 5.0, 20.0)
        d.append(flow.dist_to_model(flow.relax(g)[0], m).max())
    assert d[1] < d[0] / 3


def test_gradient_bound_finite(base):
    rep = flow.gradient_bound_check(base)
    assert rep.passed
    assert np.isfinite(rep.data["C"])


def test_csv_dump(tmp_path, base, m):
    p = tmp_path / "grid.csv"
    flow.write_csv(p, base, m)
    lines = p.read_text().splitlines()
    assert lines[0] == "x,y,dist_to_model"
    assert len(lines) == 1 + base.nx * base.ny
