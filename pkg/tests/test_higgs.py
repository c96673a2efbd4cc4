from __future__ import annotations

import math

import numpy as np
import pytest

from hbundle import flow, higgs
from hbundle.model import ModelMetric
from hbundle.monodromy import jordan_matrix, jordan_profile, sl2_triple


def make(profile, normalization="unitary"):
    return ModelMetric(sl2_triple(jordan_matrix(profile)), normalization=normalization)


@pytest.mark.parametrize("profile", [(2,), (3,), (4,), (2, 2), (3, 1), (2, 1, 1)])
def test_residue_is_multiple_of_N_adjoint(profile):
    m = make(profile)
    r = higgs.residue(m)
    N = np.array(m.sl2.N.N, dtype=complex)
    # the dt/t coefficient tends to (i / 8 pi) N^* exactly
    assert np.allclose(r.R, 1j / (8 * math.pi) * N.conj().T, atol=1e-10)
    assert list(r.profile) == list(jordan_profile(N))
    assert r.rel_err < 0.01


def test_residue_from_relaxed_grid_map():
    m = make((2,))
    g = flow.GridMap.from_model(m, 16, 351, 50.0, 400.0)
    r = higgs.residue(g, ladder=(50.0 + 1, 100.0, 200.0, 399.0))
    assert list(r.profile) == [2]
    assert r.rel_err < 0.01


def test_pointwise_norm_constant_in_default_convention():
    m = make((3,))
    rep = higgs.higgs_norm_check(m)
    assert rep.passed
    rows = np.array(rep.data["row_sup"])
    assert np.allclose(rows, 1 / math.sqrt(2), rtol=1e-9)


def test_left_convention_grows_quadratically():
    rep = higgs.higgs_norm_check(make((3,)), convention="left")
    assert rep.data["asymptotic_exponent"] == pytest.approx(2.0, abs=1e-4)


def test_integral_bounded_by_pointwise_sup():
    d = higgs.integral_bound(make((3,)))
    assert d["max_ratio"] <= d["sup_squared"] * (1 + 1e-9)


def test_integrability_for_harmonic_model():
    rep = higgs.integrability_study(make((3,)))
    assert rep.passed


def test_integrability_fails_for_chain_model():
    m = make((3,), "chain")
    res = [higgs.integrability_residual(m, h, ([0.5], [2.5])) for h in (1e-2, 5e-3)]
    assert min(res) > 1e-3


def test_extrapolate_recovers_polynomial_limit():
    us = [0.4, 0.2, 0.1, 0.05]
    vals = [3 + 2 * u - u**2 for u in us]
    est, _ = higgs.extrapolate(us, vals)
    assert float(est) == pytest.approx(3.0, abs=1e-12)


def test_unknown_convention_refused():
    with pytest.raises(ValueError):
        higgs.extract_higgs(make((2,)), 0.0, 5.0, convention="middle")
