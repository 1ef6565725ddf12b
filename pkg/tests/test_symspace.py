import math

import numpy as np
import pytest

from tempered_spectra.symspace import (
    CFunctionPoleError,
    RankOneModel,
    c_function,
    chi_lambda_laplace,
    lp_threshold,
    make_model,
    plancherel_density,
    spherical_function,
    spherical_function_quadrature,
)

SL2 = make_model("sl2r")
H3 = make_model("hyperbolic_n", 3)


def h2_density(nu):
    """Closed form for the hyperbolic plane, written from Gamma(1/2 + ix)Gamma(1/2 - ix) = pi / cosh(pi x)."""
    return math.pi * nu * math.tanh(math.pi * nu)


def test_make_model_examples():
    assert (SL2.dim, SL2.m_alpha, SL2.m_2alpha, SL2.rho_norm) == (2, 1, 0, 0.5)
    assert (H3.dim, H3.m_alpha, H3.rho_norm) == (3, 2, 1.0)
    with pytest.raises(ValueError):
        make_model("hyperbolic_n", 1)
    with pytest.raises(ValueError):
        make_model("spherical")
    with pytest.raises(ValueError):
        RankOneModel(dim=5, m_alpha=2)


def test_chi():
    assert chi_lambda_laplace(SL2, 0) == 0.25
    assert chi_lambda_laplace(SL2, 0.5) == 0
    assert chi_lambda_laplace(SL2, 2j) == pytest.approx(0.25 + 4)


@pytest.mark.parametrize("model", [SL2, H3] + [make_model("hyperbolic_n", n) for n in (2, 4, 5, 8)]
                         + [RankOneModel(4, 2, 1), RankOneModel(8, 4, 3)])
def test_c_at_rho_is_one(model):
    assert abs(c_function(model, model.rho_norm) - 1) < 1e-10


def test_c_conjugate_symmetry():
    for nu in (0.1, 0.7, 3.0):
        assert c_function(SL2, -1j * nu) == pytest.approx(c_function(SL2, 1j * nu).conjugate())


def test_h3_c_function_closed_form():
    for lam in (0.7, 2.5, 0.3 + 1j, -2.0):
        assert c_function(H3, lam) == pytest.approx(1 / lam, rel=1e-12)


def test_c_pole_raises():
    for lam in (0.0, -1.0, -2.0, 1e-11):
        with pytest.raises(CFunctionPoleError):
            c_function(SL2, lam)


@pytest.mark.parametrize("nu", np.linspace(0, 10, 41))
def test_density_matches_h2_oracle(nu):
    assert plancherel_density(SL2, nu) == pytest.approx(h2_density(nu), abs=1e-8, rel=1e-10)


def test_density_even_and_positive():
    for nu in (0.01, 0.5, 4.0):
        assert plancherel_density(SL2, nu) == pytest.approx(plancherel_density(SL2, -nu))
        assert plancherel_density(SL2, nu) > 0
        assert plancherel_density(H3, nu) == pytest.approx(nu * nu, rel=1e-12)
    assert plancherel_density(SL2, 0.0) == 0


def test_spherical_at_identity():
    for lam in (0.3, 2j, 0.1 + 0.4j):
        assert spherical_function(SL2, lam, 0.0) == 1


def test_spherical_h3_closed_form():
    for lam in (0.3, 0.8j, 1.5 + 0.2j):
        for t in (0.5, 2.0, 5.0):
            ref = np.sinh(lam * t) / (lam * np.sinh(t))
            assert spherical_function(H3, lam, t) == pytest.approx(ref, rel=1e-10)


def test_spherical_trivial_rep_is_one():
    # lambda = rho gives the constant function
    for t in (0.5, 3.0):
        assert spherical_function(SL2, 0.5, t) == pytest.approx(1.0)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 4.0])
@pytest.mark.parametrize("lam", [0.3j, 2j, 0.2, 0.45, 0.1 + 0.5j])
def test_quadrature_oracle(lam, t):
    assert abs(spherical_function(SL2, lam, t) - spherical_function_quadrature(lam, t)) < 1e-6


def test_unitary_axis_bounded():
    for nu in np.linspace(0, 6, 13):
        for t in np.linspace(0, 5, 11):
            assert abs(spherical_function(SL2, 1j * nu, t)) <= 1 + 1e-8


def test_lp_threshold_examples():
    assert lp_threshold(SL2, 0) == 2
    assert lp_threshold(SL2, 0.5) == math.inf
    assert lp_threshold(SL2, 0.25) == pytest.approx(4)
    with pytest.raises(ValueError):
        lp_threshold(SL2, -0.1)
