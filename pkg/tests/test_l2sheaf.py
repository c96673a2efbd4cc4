from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hbundle import l2sheaf as L
from hbundle.jsonio import InputError


def closed_form_finite(t: L.Term) -> bool:
    """Independent radial verdict: each factor converges iff a_k > 0 or its power < -1."""
    c = L.NormModel().exponents(t)
    return all(a > 0 or ck < -1 for a, ck in zip(t.a, c))


@pytest.mark.parametrize("name,germ,expected,cert", L.reference_cases())
def test_reference_cases(name, germ, expected, cert):
    v = L.is_l2(germ)
    assert v.member is expected
    assert v.trace == [cert]
    assert L.is_l2_numeric(germ).member is expected


@pytest.mark.parametrize("vars,degree", [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2)])
def test_predicate_matches_closed_form_exhaustively(vars, degree):
    for t in L.exhaustive_terms(vars, degree, 3):
        assert (L.term_summand(t, vars) is not None) == closed_form_finite(t), t


def test_numeric_oracle_matches_closed_form():
    for a, c in itertools.product((0, 1, 2), range(-6, 4)):
        conv, est = L.radial_verdict(a, c, 2.0)
        assert conv == (a > 0 or c < -1), (a, c)
        assert math.isfinite(est) == conv


def test_agreement_study_small():
    rep = L.agreement_study(samples=10, seed=5)
    assert rep.passed


@pytest.mark.parametrize("eps", [0.25, 0.5, 0.75])
def test_verdicts_stable_in_eps(eps):
    for t in itertools.islice(L.exhaustive_terms(2, 1, 2), 0, None, 7):
        g = L.GermExpression(2, (t,))
        assert L.is_l2_numeric(g, region=L.RegionSpec(eps)).member == L.is_l2_numeric(g).member


def test_log_powers_rejected_by_predicate_but_not_oracle():
    g = L.GermExpression(1, (L.Term((0,), (-2,), logp=(1,)),))
    with pytest.raises(L.LogPowerUnsupported):
        L.is_l2(g)
    # L^-2 (log t)^2 L^-2: power -2 + 2 - 2 = -2 < -1, finite
    assert L.is_l2_numeric(g).member


def test_scope_limits():
    with pytest.raises(L.ScopeError):
        L.GermExpression(3, ())
    with pytest.raises(ValueError):
        L.Term((0, 0), (0,))


def test_invalid_eps_refused():
    with pytest.raises(ValueError):
        L.is_l2(L.GermExpression(2, (L.Term((0, 0), (0, 0)),)), region=L.RegionSpec(1.5))


@pytest.mark.parametrize("data", [L.tensor_data(2, 2), L.tensor_data(3, 2), L.single_data(3)])
def test_theta_stability(data):
    assert L.theta_stability(data).passed


def test_second_nilpotent_preserves_first_label():
    f = L.tensor_data(3, 3)
    N2 = f.nilpotents[1]
    for lab in sorted(set(f.labels)):
        S = f.W(lab)
        img = np.asarray(N2) @ S
        # N2 keeps l1 and lowers l2 by two, never lowers l1
        assert f.contains((lab[0], lab[1] - 2), img[:, 0]) or np.all(img == 0)


def test_bigraded_basis_is_adapted():
    f = L.tensor_data(3, 2)
    for i, lab in enumerate(f.labels):
        assert f.contains(lab, f.basis[:, i])


def test_splitter_produces_pure_terms(rng):
    f = L.tensor_data(2, 3)
    g = L.random_germ(f, rng, 1, terms=3, pure=False)
    split = L.splitter(g, f)
    for t in split.terms:
        assert L._is_pure(t, f)


def test_mixed_term_needs_split():
    f = L.tensor_data(2, 2)
    v = f.basis[:, 0] + f.basis[:, -1]
    g = L.GermExpression(2, (L.Term((0, 0), f.labels[-1], frozenset(), None, v),))
    with pytest.raises(L.SplitRequired):
        L.is_l2_numeric(g, f)


def test_graded_sequence_probe(rng):
    f = L.tensor_data(3, 3)
    germs = [L.random_germ(f, rng, d, 2, pure=False) for d in (0, 1, 2) for _ in range(10)]
    assert L.graded_sequence_probe(f, germs).passed


def test_json_roundtrip():
    g = L.reference_cases()[2][1]
    g2 = L.GermExpression.from_json(g.to_json())
    assert g2 == g


def test_malformed_json_reports_location():
    with pytest.raises(InputError, match="terms\\[0\\].form"):
        L.GermExpression.from_json({"vars": 2, "terms": [{"a": [0, 0], "labels": [0, 0], "form": ["dz"]}]})


@settings(max_examples=40, deadline=None)
@given(
    st.tuples(st.integers(0, 2), st.integers(0, 2)),
    st.tuples(st.integers(-4, 4), st.integers(-4, 4)),
    st.sets(st.sampled_from([1, 2])),
)
def test_predicate_equals_oracle_property(a, labels, form):
    g = L.GermExpression(2, (L.Term(a, labels, frozenset(form)),))
    assert L.is_l2(g).member == L.is_l2_numeric(g).member
