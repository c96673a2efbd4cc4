from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hbundle import model
from hbundle.mats import act
from hbundle.monodromy import jordan_matrix, sl2_triple


def make(profile, normalization="chain", diagonal="descending"):
    return model.ModelMetric(sl2_triple(jordan_matrix(profile)), normalization=normalization, diagonal=diagonal)


def oracle_energy(profile, y0):
    return 2 * math.pi * sum(2 * (b - 1) / (2 * math.pi) ** 2 + b * (b * b - 1) / 3 for b in profile) / y0


@pytest.mark.parametrize("profile", [(2,), (3,), (4,), (2, 1), (3, 2)])
@pytest.mark.parametrize("y0", [5.0, 10.0, 20.0])
def test_energy_matches_closed_form(profile, y0):
    m = make(profile)
    assert model.closed_form_energy(m, y0) == pytest.approx(oracle_energy(profile, y0), rel=1e-12)
    assert model.total_energy(m, y0) == pytest.approx(oracle_energy(profile, y0), rel=5e-3)


def test_cli_energy_example_value():
    # 2 pi (2/(4 pi^2) + 2) / 10 for a single block of size 2
    assert model.closed_form_energy(make((2,)), 10.0) == pytest.approx(2 * math.pi * (2 / (4 * math.pi**2) + 2) / 10)


def test_trivial_block_has_zero_energy():
    m = make((1, 1))
    assert model.total_energy(m, 5.0) == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([(2,), (3,), (2, 2), (3, 1), (4,), (5,)]), st.sampled_from(model.NORMALIZATIONS), st.integers(0, 999))
def test_equivariance(profile, normalization, seed):
    m = make(profile, normalization)
    pts = model.random_samples(m, 50, np.random.default_rng(seed))
    assert model.check_equivariance(m, pts).passed


def test_deck_transformation_is_exp_of_N():
    m = make((3,))
    x, y = 0.3, 7.0
    assert np.allclose(m(x + 2 * math.pi, y), act(m.deck(), m(x, y)), rtol=1e-13)


def test_metric_is_hermitian_positive():
    m = make((3, 2), "unitary")
    H = m(np.linspace(0, 6, 7), np.linspace(3, 50, 7))
    assert np.allclose(H, np.conj(np.swapaxes(H, -1, -2)))
    assert np.all(np.linalg.eigvalsh(H) > 0)


def test_norm_profile_follows_labels():
    m = make((3,))
    y = 10.0
    prof = dict(model.norm_profile(m, y))
    assert prof[2] == pytest.approx(y**-2, rel=1e-12)
    assert prof[0] == pytest.approx(1.0, rel=1e-12)
    assert prof[-2] == pytest.approx(y**2, rel=1e-12)


@pytest.mark.parametrize("b", [2, 3, 4])
def test_unitary_model_is_harmonic_to_second_order(b):
    rep = model.harmonicity_study(make((b,), "unitary"))
    assert rep.passed
    assert min(rep.data["orders"]) > 1.95


def test_chain_model_is_not_harmonic():
    rep = model.harmonicity_study(make((3,), "chain"))
    assert not rep.passed


def test_ascending_diagonal_diverges():
    E = model.divergence_growth(make((3,), "chain", "ascending"), 10.0)
    assert E[0] < E[1] < E[2]
    assert E[2] - E[1] > E[1] - E[0]


def test_point_below_chart_refused():
    m = make((3,), "unitary")
    with pytest.raises(model.OutsideChart):
        model.harmonicity_study(m, y0=m.y_min / 2 if m.y_min > 0 else -1.0)


def test_json_roundtrip():
    m = make((3, 1), "unitary")
    m2 = model.ModelMetric.from_json(m.to_json())
    assert np.allclose(m(0.4, 8.0), m2(0.4, 8.0))
