from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hbundle import _linalg as la
from hbundle.monodromy import (
    NotUnipotent,
    bracket_defects,
    exp_nilpotent,
    filtration_defects,
    jordan_matrix,
    jordan_profile,
    log_unipotent,
    partitions,
    sl2_triple,
    weight_filtration,
    weight_filtration_from_kernels,
    same_subspace,
)


def _rank_profile(N):
    """Block sizes from ranks of powers (independent of the sl2 code)."""
    n = N.shape[0]
    ranks = [n] + [la.rank(la.matpow(N, k)) for k in range(1, n + 2)]
    at_least = [ranks[k - 1] - ranks[k] for k in range(1, n + 1)]
    out = []
    for k in range(n, 0, -1):
        exactly = at_least[k - 1] - (at_least[k] if k < n else 0)
        out += [k] * exactly
    return out


def test_identity_monodromy_gives_zero_log():
    N = log_unipotent(la.eye(3, True))
    assert la.is_zero(N.N)
    s = sl2_triple(N)
    assert list(s.jordan_profile) == [1, 1, 1]


def test_non_unipotent_refused():
    with pytest.raises(NotUnipotent):
        log_unipotent(np.array([[2, 0], [0, 1]]))


@pytest.mark.parametrize("n", range(1, 7))
def test_profiles_and_brackets_exact(n):
    for p in partitions(n):
        N = jordan_matrix(p)
        s = sl2_triple(N)
        assert s.exact
        assert sorted(jordan_profile(N), reverse=True) == sorted(_rank_profile(N), reverse=True) == p
        assert all(v == 0 for v in bracket_defects(s).values())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_conjugated_unipotent_roundtrip(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    p = list(partitions(n))[int(rng.integers(len(list(partitions(n)))))]
    # unimodular integer conjugation keeps everything exact
    U = la.eye(n, True)
    for _ in range(4):
        i, j = rng.choice(n, 2, replace=False)
        E = la.eye(n, True)
        E[i, j] = Fraction(int(rng.integers(-2, 3)))
        U = U @ E
    N = U @ jordan_matrix(p) @ la.inv(U)
    gamma = exp_nilpotent(N)
    logN = log_unipotent(gamma)
    assert la.is_zero(logN.N - N)
    s = sl2_triple(logN)
    assert list(s.jordan_profile) == p
    assert all(v == 0 for v in bracket_defects(s).values())
    W = weight_filtration(s)
    assert all(filtration_defects(logN, W).values())
    Wk = weight_filtration_from_kernels(logN)
    assert all(same_subspace(W.W(l), Wk.W(l)) for l in range(-n, n + 1))


def test_weight_filtration_of_single_block():
    W = weight_filtration(jordan_matrix([3]))
    assert W.weights == (-2, 0, 2)
    assert [W.gr_dim(l) for l in (-2, -1, 0, 1, 2)] == [1, 0, 1, 0, 1]


def test_labels_follow_lowering_convention():
    s = sl2_triple(jordan_matrix([3]))
    N, P = s.N.N, s.P
    # N e_j = e_{j-2} up to the lowering coefficients: labels of images drop by 2
    for i, j in enumerate(s.labels):
        img = N @ P[:, i]
        if not la.is_zero(img.reshape(-1, 1)):
            k = s.labels.index(j - 2)
            assert la.rank(np.stack([img, P[:, k]], axis=1)) == 1


def test_float_input_is_accepted():
    s = sl2_triple(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert list(s.jordan_profile) == [2]
    assert max(bracket_defects(s).values()) < 1e-12
