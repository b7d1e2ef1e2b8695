import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from airylab import kernels as K
from airylab.errors import ArgumentError, DomainError, NumericError
from airylab.scaling import scaling_params

CIRCLE = K.QuadConfig(mode="circle")


def test_h_term_by_hand():
    # -beta^(x-y) C(s-t, x-y) with beta = 1, x - y = 1, s - t = 2
    assert K.h_term(1.0, 1, 2, 0, 0) == -2.0
    assert K.h_term(2.0, 3, 5, 0, 0) == -8.0 * 10
    assert K.h_term(1.0, 3, 2, 0, 0) == 0.0
    assert K.h_term(1.0, 1, 0, 0, 2) == 0.0


def test_conjugated_h_is_a_binomial_pmf():
    beta, delta, N = 1.5, 0.3, 12
    total = sum(-K.h_term_conjugated(beta, delta, k, N, 0, 0) for k in range(1, N + 1))
    p = beta * delta / (1 + beta * delta)
    assert total == pytest.approx(1 - (1 - p) ** N, rel=1e-13)
    h = K.h_term(beta, 4, N, 0, 0) * delta**4 * (1 + beta * delta) ** (-N)
    assert K.h_term_conjugated(beta, delta, 4, N, 0, 0) == pytest.approx(h, rel=1e-13)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_single_walk_density_is_binomial(beta):
    sym = K.LatticeSymbols(1, beta)
    p = beta / (1 + beta)
    for x in range(6):
        v = K.prelimit_kernel(sym, K.KernelQuery(x, 5, x, 5), CIRCLE).value.real
        assert v == pytest.approx(math.comb(5, x) * p**x * (1 - p) ** (5 - x), abs=1e-12)


@pytest.mark.parametrize("n,beta,s", [(2, 1.0, 4), (3, 0.5, 6), (4, 2.0, 3)])
def test_one_point_density_integrates_to_n(n, beta, s):
    sym = K.LatticeSymbols(n, beta)
    xs = np.arange(0, n + s)
    Kmat, err = K.prelimit_kernel_matrix(sym, xs, s, xs, s, CIRCLE)
    assert np.trace(Kmat) == pytest.approx(n, abs=1e-9)
    assert np.all(np.diag(Kmat) >= -1e-12) and np.all(np.diag(Kmat) <= 1 + 1e-12)


def test_packed_start_is_deterministic():
    sym = K.LatticeSymbols(3, 1.0)
    for x in range(-2, 6):
        v = K.prelimit_kernel(sym, K.KernelQuery(x, 0, x, 0), CIRCLE).value.real
        assert v == pytest.approx(1.0 if 0 <= x <= 2 else 0.0, abs=1e-10)


def test_steepest_and_circle_agree():
    p = scaling_params("bernoulli", 20, 1.0, 120)
    sym = K.symbols_for(p)
    circ = K.LatticeSymbols(20, 1.0, delta=p.delta)
    quad = K.QuadConfig(eta=K.kernel_eta(sym, p))
    circle = K.QuadConfig(mode="circle", circle_nodes=512)
    for q in (K.KernelQuery(30, 120, 31, 120), K.KernelQuery(28, 121, 30, 119),
              K.KernelQuery(29, 119, 28, 122)):
        a = K.prelimit_kernel(sym, q, quad).value
        b = K.prelimit_kernel(circ, q, circle).value
        assert abs(a - b) < 1e-9 * max(1.0, abs(b))


def test_impossible_tolerance_raises_numeric_error():
    sym = K.LatticeSymbols(3, 1.0)
    with pytest.raises(NumericError) as info:
        K.prelimit_kernel(sym, K.KernelQuery(2, 40, 3, 40),
                          K.QuadConfig(mode="circle", circle_nodes=8, tol=1e-30))
    assert info.value.estimate is not None


def test_prelimit_kernel_approaches_airy_kernel():
    p = K.companion_walk_params(200, 1.0, 200)
    sym = K.symbols_for(p)
    for x, y in [(-1.0, 0.0), (0.0, 0.0), (1.0, -1.0)]:
        q = K.KernelQuery.from_limit(p, x, 0, y, 0)
        v = K.conjugated_kernel(sym, p, q)[0]
        assert abs(v - K.airy_kernel(x, 0, y, 0)) < 0.05


def test_flat_parameters_are_refused():
    with pytest.raises(DomainError):
        K.LatticeSymbols(0, 1.0)
    with pytest.raises(DomainError):
        scaling_params("bernoulli", 10, 1.0, 5)


# --- Airy -----------------------------------------------------------------

@pytest.mark.parametrize("x", [-10.0, -7.3, -2.0, 0.0, 1.5, 5.0, 10.0])
def test_airy_function_matches_reference(x):
    ai, aip, _, _ = special.airy(x)
    assert K.airy_function(x) == pytest.approx(ai, abs=1e-12)
    assert K.airy_function(x, derivative=True) == pytest.approx(aip, abs=1e-11)


def test_airy_closed_forms_at_zero():
    assert K.airy_function(0.0) == pytest.approx(3 ** (-2 / 3) / math.gamma(2 / 3), rel=1e-13)
    assert K.airy_function(0.0, derivative=True) == pytest.approx(
        -(3 ** (-1 / 3)) / math.gamma(1 / 3), rel=1e-12)


@pytest.mark.parametrize("x", [-3.0, -0.5, 0.7, 2.5])
def test_airy_equation_by_richardson(x):
    def d2(h):
        return (K.airy_function(x + h) - 2 * K.airy_function(x) + K.airy_function(x - h)) / h**2
    h = 0.02
    rich = (4 * d2(h / 2) - d2(h)) / 3
    assert abs(rich - x * K.airy_function(x)) < 1e-8


@given(st.floats(-5, 5), st.floats(-5, 5))
@settings(max_examples=20, deadline=None)
def test_equal_time_kernel_is_symmetric(x, y):
    assert K.airy_kernel(x, 0, y, 0) == pytest.approx(K.airy_kernel(y, 0, x, 0), abs=1e-12)


@pytest.mark.parametrize("x", [-4.0, -1.0, 0.0, 2.0])
def test_airy_kernel_diagonal(x):
    ai, aip, _, _ = special.airy(x)
    assert K.airy_kernel(x, 0, x, 0) == pytest.approx(aip**2 - x * ai**2, abs=1e-12)


def test_extended_kernel_jump_is_the_heat_kernel():
    x, y, s, t = 0.3, -0.4, 0.5, 0.2
    diff = K.airy_j_matrix([x], s, [y], t)[0, 0] - K.airy_kernel(x, s, y, t)
    d = s - t
    assert diff == pytest.approx(math.exp(-(x - y) ** 2 / (4 * d)) / math.sqrt(4 * math.pi * d),
                                 abs=1e-12)


@pytest.mark.parametrize("x,s,y,t", [(0.0, 0.0, 0.0, 0.0), (-1.0, 0.5, 0.5, -0.3),
                                     (1.0, -0.4, -0.5, 0.6), (0.2, 0.3, 0.1, 0.3)])
def test_stationary_identity(x, s, y, t):
    assert K.airy_from_stationary(x, s, y, t) == pytest.approx(K.airy_kernel(x, s, y, t),
                                                               abs=1e-11)


def test_airy_arguments_checked():
    with pytest.raises(ArgumentError):
        K.airy_function(11.0)
    with pytest.raises(ArgumentError):
        K.airy_kernel(float("nan"), 0, 0, 0)


def test_scales_diverge():
    seq = [(n, 1.0, 4 * n) for n in (10, 100, 1000, 10000)]
    rows, ok = K.scale_divergence(seq)
    assert ok
    assert all(r.edge_closed_form >= r.n for r in rows)
