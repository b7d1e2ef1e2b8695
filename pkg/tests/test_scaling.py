import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from airylab.errors import ArgumentError, DomainError, RangeError
from airylab.scaling import (ModelTag, arctic_curve, closed_form_edge_gap, residual_offdiagonal,
                             rescale_ensemble, scaling_params, shear_residual)
from airylab.walks import sample_ni_geometric


def test_geometric_curve_at_one_one():
    g, _, _ = arctic_curve("geometric", 1, 1.0, 1.0)
    assert g == pytest.approx(2 + 2 * math.sqrt(2), rel=1e-15)


@pytest.mark.parametrize("model,n,m,expected", [
    ("exponential", 4, 9, 25.0),
    ("brownian", 4, 9, 12.0),
    ("poisson_plane", None, 9, 6.0),
    ("poisson_lines", 4, 9, 21.0),
])
def test_closed_form_curves(model, n, m, expected):
    assert arctic_curve(model, n, None, m)[0] == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("model", ["geometric", "exponential", "poisson_lines", "brownian",
                                   "bernoulli", "sj"])
@given(m=st.floats(5.0, 500.0))
@settings(max_examples=25, deadline=None)
def test_derivatives_match_finite_differences(model, m):
    n, beta = 10, 1.5
    if model == "bernoulli" and math.sqrt(m / n * beta) <= 1.2:
        return
    g, g1, g2 = arctic_curve(model, n, beta, m)
    h = 1e-4 * m
    gp = arctic_curve(model, n, beta, m + h)[0]
    gm = arctic_curve(model, n, beta, m - h)[0]
    scale = 1 + abs(g)
    assert abs((gp - gm) / (2 * h) - g1) < 1e-6 * scale
    assert abs((gp - 2 * g + gm) / h**2 - g2) < 1e-3 * scale / m


@pytest.mark.parametrize("model", ["geometric", "exponential", "bernoulli", "brownian"])
def test_curves_are_homogeneous(model):
    g = arctic_curve(model, 10, 2.0, 70.0)[0]
    assert arctic_curve(model, 30, 2.0, 210.0)[0] == pytest.approx(3 * g, rel=1e-13)


def test_bernoulli_flat_branch():
    assert arctic_curve("bernoulli", 10, 1.0, 8.0) == (0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        scaling_params("bernoulli", 10, 1.0, 10.0)
    with pytest.raises(DomainError):
        closed_form_edge_gap(10, 1.0, 10.0)


@given(st.integers(1, 200), st.floats(0.1, 10.0), st.floats(1.0, 400.0))
@settings(max_examples=60, deadline=None)
def test_shear_maps_geometric_curve_onto_bernoulli_curve(n, beta, m):
    g = arctic_curve("geometric", n, beta, m)[0]
    assert arctic_curve("bernoulli", n, beta, m + g)[0] == pytest.approx(m, rel=1e-10)


@pytest.mark.parametrize("model", ["geometric", "exponential", "bernoulli", "sj"])
def test_scaling_system_residuals(model):
    p = scaling_params(model, 50, 1.0, 300.0)
    assert max(abs(r) for r in p.system_residuals()) < 1e-12
    assert p.tau > 0 and p.chi > 0


def test_bernoulli_edge_gap_closed_form():
    for n, beta, m in [(100, 1.0, 400), (30, 2.0, 50), (10, 0.5, 90)]:
        p = scaling_params("bernoulli", n, beta, m)
        assert ((1 - p.delta) * p.rho) ** 3 == pytest.approx(closed_form_edge_gap(n, beta, m),
                                                             rel=1e-12)


def test_shear_residual_is_near_identity():
    R = shear_residual(100, 1.0, 100).matrix
    off = residual_offdiagonal(100, 1.0, 100)
    assert R[0, 1] == pytest.approx(off, rel=1e-10)
    R[0, 1] = 0.0
    assert np.allclose(R, np.eye(3), atol=1e-12)
    # the off-diagonal entry decays along n = m
    assert abs(residual_offdiagonal(10000, 1.0, 10000)) < abs(off)


def test_rescale_geometric_ensemble():
    ens = sample_ni_geometric(20, 1.0, 80, seed=1)
    p = scaling_params("geometric", 20, 1.0, 40.0)
    res = rescale_ensemble(ens, p, [0.0])
    m = 40
    expected = (ens.paths[:, m] + np.arange(20) - p.g) / p.chi
    assert np.allclose(res.lines[:, 0], expected)
    with pytest.raises(RangeError):
        rescale_ensemble(ens, p, [5.0])


def test_model_tag_parse():
    assert ModelTag.parse("Geometric") is ModelTag.GEOMETRIC
    with pytest.raises(ArgumentError):
        ModelTag.parse("nope")
