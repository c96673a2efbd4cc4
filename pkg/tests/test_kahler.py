from __future__ import annotations

import numpy as np
import pytest

from hbundle import kahler
from hbundle.model import ModelMetric
from hbundle.monodromy import jordan_matrix, sl2_triple


@pytest.fixture(scope="module")
def bundle():
    return ModelMetric(sl2_triple(jordan_matrix([3])), normalization="unitary")


def test_adjoint_definition(bundle, rng):
    q = kahler.OperatorQuad(bundle, kahler.Patch(16))
    u = rng.normal(size=q.size) + 1j * rng.normal(size=q.size)
    v = rng.normal(size=q.size) + 1j * rng.normal(size=q.size)
    for A in (q.D2, q.D1, q.L):
        assert q.inner(A @ u, v) == pytest.approx(q.inner(u, q.adjoint(A) @ v), rel=1e-10)


def test_lambda_is_adjoint_of_L(bundle):
    q = kahler.OperatorQuad(bundle, kahler.Patch(8))
    assert abs(q.Lam - q.adjoint(q.L)).max() == 0


def test_flat_bundle_identities_exact():
    rep = kahler.kahler_identity_check(kahler.FlatBundle(2), sizes=(16, 32), trials=3, metric="euclidean")
    assert rep.passed
    assert all(c.name.endswith("_exact") for c in rep.checks)


def test_identities_converge_on_model(bundle):
    rep = kahler.kahler_identity_check(bundle, sizes=(32, 64, 128), trials=4, seed=3)
    assert rep.passed


def test_square_of_D2_vanishes_to_discretisation_error(bundle):
    errs = []
    for N in (32, 64):
        P = kahler.Patch(N)
        q = kahler.OperatorQuad(bundle, P)
        f = kahler.TestForm.random(3, np.random.default_rng(0)).sample(P)
        errs.append(q.norm(q.D2 @ (q.D2 @ f)) / q.norm(f))
    assert errs[1] < errs[0] / 2


def test_unknown_metric_refused(bundle):
    with pytest.raises(ValueError):
        kahler.OperatorQuad(bundle, kahler.Patch(8), metric="fubini")
