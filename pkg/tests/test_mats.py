from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hbundle import mats


def _pd(seed, n):
    return mats.random_posdef(np.random.default_rng(seed), n, 1e2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_act_is_left_action(seed, n):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 3 * np.eye(n)
    h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 3 * np.eye(n)
    H = _pd(seed + 1, n)
    lhs = mats.act(g @ h, H)
    rhs = mats.act(g, mats.act(h, H))
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10 * np.abs(lhs).max())


def test_transpose_conjugate_reading_is_not_a_left_action(rng):
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    H = mats.random_posdef(rng, 2)
    lit = lambda a, M: a @ M.T @ np.conj(a)  # noqa: E731
    assert not np.allclose(lit(g @ h, H), lit(g, lit(h, H)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_exp_log_roundtrip(seed, n):
    H = _pd(seed, n)
    assert np.allclose(mats.matexp(mats.matlog_pd(H)), H, rtol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_distance_is_invariant_and_symmetric(seed, n):
    rng = np.random.default_rng(seed)
    A, B = _pd(seed, n), _pd(seed + 7, n)
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 3 * np.eye(n)
    d = mats.dist(A, B)
    assert np.isclose(d, mats.dist(B, A), rtol=1e-9)
    assert np.isclose(d, mats.dist(mats.act(g, A), mats.act(g, B)), rtol=1e-8)


def test_exp_map_inverts_log_map(rng):
    A, B = mats.random_posdef(rng, 3), mats.random_posdef(rng, 3)
    V = mats.log_map(A, B)
    assert np.allclose(mats.exp_map(A, V), B, rtol=1e-9)
    assert np.isclose(mats.tangent_norm(A, V), mats.dist(A, B), rtol=1e-9)


def test_geodesic_midpoint_halves_distance(rng):
    X = mats.random_hermitian(rng, 3)
    I = np.eye(3)
    mid = mats.geodesic(X, 0.5)
    end = mats.geodesic(X, 1.0)
    assert np.isclose(mats.dist(I, mid), 0.5 * mats.dist(I, end))


def test_singular_element_refused():
    with pytest.raises(mats.SingularElement):
        mats.act(np.zeros((2, 2)), np.eye(2))


def test_indefinite_metric_refused():
    with pytest.raises(mats.NotPositiveDefinite):
        mats.safe_inv(np.diag([1.0, -1.0]))
    with pytest.raises(mats.NotPositiveDefinite):
        mats.safe_inv(np.diag([1.0, 1e-13]))


def test_inner_matches_tangent_norm(rng):
    H = mats.random_posdef(rng, 3)
    V = mats.random_hermitian(rng, 3)
    assert np.isclose(mats.inner(H, V, V), mats.tangent_norm(H, V) ** 2)
