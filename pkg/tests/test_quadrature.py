import math

import numpy as np
import pytest

from bbdg import quadrature as quad
from bbdg.multiindex import simplex_barycentric


def monomial_integral(gamma, d):
    # int_T lambda^gamma = |T| * d! * prod(gamma_i!) / (|gamma| + d)!
    measure = {1: 2.0, 2: 2.0, 3: 4.0 / 3.0}[d]
    num = math.factorial(d)
    for g in gamma:
        num *= math.factorial(g)
    return measure * num / math.factorial(sum(gamma) + d)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_weights_sum_to_measure(d):
    _, w = quad.simplex_rule(6, d)
    assert w.sum() == pytest.approx({1: 2.0, 2: 2.0, 3: 4.0 / 3.0}[d], rel=1e-14)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_points_inside(d):
    pts, _ = quad.simplex_rule(9, d)
    lam = simplex_barycentric(pts, d)
    assert lam.min() > -1e-13
    assert np.allclose(lam.sum(axis=1), 1.0, atol=1e-13)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("order", [3, 7, 12])
def test_barycentric_monomials_exact(d, order, seed=7):
    rng = np.random.default_rng(seed + order + d)
    pts, w = quad.simplex_rule(order, d)
    lam = simplex_barycentric(pts, d)
    for _ in range(12):
        gamma = rng.multinomial(order, np.ones(d + 1) / (d + 1))
        val = (w * np.prod(lam ** gamma, axis=1)).sum()
        exact = monomial_integral(tuple(gamma), d)
        assert val == pytest.approx(exact, rel=1e-12)
