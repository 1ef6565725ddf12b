"""Rank-one symmetric spaces and their spherical harmonic analysis.

Conventions: the restricted root ``alpha`` has unit length and the
metric on ``H^n`` has curvature -1, so ``|rho| = (n-1)/2`` and the Cartan
coordinate ``t`` of ``exp(t H0)`` is the Riemannian distance to the base
point. A spectral parameter ``lambda`` in the complexified dual of ``a`` is
represented by the complex number ``c`` with ``lambda = c * alpha``; the
Weyl group acts by ``c -> -c``.

The spectral parameter follows the convention in which ``lambda = rho``
is the trivial representation and ``i a*`` is the tempered axis, i.e.
``phi_lambda`` here is Helgason's ``phi_{-i lambda}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .groups import iwasawa_H_batch, rotation_batch
from .special import GammaPoleError, POLE_TOL, gamma, hyp2f1, rgamma

__all__ = [
    "RankOneModel",
    "CFunctionPoleError",
    "make_model",
    "chi_lambda_laplace",
    "c_function",
    "plancherel_density",
    "spherical_function",
    "spherical_function_quadrature",
    "lp_threshold",
]

SpectralParameter = complex


@dataclass(frozen=True)
class RankOneModel:
    """Root data of one rank-one factor ``G/K``."""

    dim: int
    m_alpha: int
    m_2alpha: int = 0
    name: str = "rank_one"

    def __post_init__(self):
        if self.m_alpha < 1 or self.m_2alpha < 0:
            raise ValueError("need m_alpha >= 1 and m_2alpha >= 0")
        if self.dim != 1 + self.m_alpha + self.m_2alpha:
            raise ValueError(
                f"dim = {self.dim} inconsistent with 1 + m_alpha + m_2alpha"
            )
        if self.dim < 2:
            raise ValueError("dim must be at least 2")

    @property
    def rho_norm(self) -> float:
        return self.m_alpha / 2 + self.m_2alpha

    # Jacobi-function indices of the radial Laplacian
    @property
    def jacobi_alpha(self) -> float:
        return (self.m_alpha + self.m_2alpha - 1) / 2

    @property
    def jacobi_beta(self) -> float:
        return (self.m_2alpha - 1) / 2


def make_model(kind: str, n: int | None = None) -> RankOneModel:
    """Build ``sl2r`` (the hyperbolic plane) or ``hyperbolic_n`` with ``n >= 2``."""
    if kind == "sl2r":
        return RankOneModel(dim=2, m_alpha=1, m_2alpha=0, name="sl2r")
    if kind == "hyperbolic_n":
        if n is None or int(n) != n or n < 2:
            raise ValueError(f"hyperbolic_n needs an integer n >= 2, got {n!r}")
        n = int(n)
        return RankOneModel(dim=n, m_alpha=n - 1, m_2alpha=0, name=f"hyperbolic_{n}")
    raise ValueError(f"unknown model kind {kind!r}")


def chi_lambda_laplace(model: RankOneModel, lam: SpectralParameter) -> complex:
    """Eigenvalue of the positive Laplacian on the joint eigenspace of ``lam``."""
    lam = complex(lam)
    return -lam * lam + model.rho_norm**2


class CFunctionPoleError(ArithmeticError):
    """The c-function has a genuine pole at the requested parameter."""

    def __init__(self, lam: complex):
        super().__init__(f"c-function has a pole at lambda = {lam}")
        self.lam = lam


def _c_factors(model: RankOneModel, x: complex) -> tuple[complex, complex]:
    # Gamma arguments of the denominator at <lambda, alpha_0> = x
    d1 = model.m_alpha / 4 + 0.5 + x / 2
    d2 = model.m_alpha / 4 + model.m_2alpha / 2 + x / 2
    return d1, d2


def _c_unnormalized(model: RankOneModel, x: complex) -> complex:
    d1, d2 = _c_factors(model, x)
    n = round(x.real)
    if n <= 0 and abs(x - n) < POLE_TOL:
        # Gamma(x) has a simple pole; it survives unless a denominator pole cancels it
        at_pole = [round(d.real) <= 0 and abs(d - round(d.real)) < 2 * POLE_TOL for d in (d1, d2)]
        if not any(at_pole):
            raise CFunctionPoleError(x)
        if all(at_pole):
            return 0.0j
        pole, other = (d1, d2) if at_pole[0] else (d2, d1)
        k = -round(pole.real)
        # Res Gamma(x) at -n over Res Gamma(d) at -k, with dd/dx = 1/2
        ratio = (-1) ** (-n - k) * math.factorial(k) / (2 * math.factorial(-n))
        return 2.0 ** (-n) * ratio * rgamma(other)
    try:
        num = gamma(x)
    except GammaPoleError:  # pragma: no cover - covered by the branch above
        raise CFunctionPoleError(x) from None
    return 2.0 ** (-x) * num * rgamma(d1) * rgamma(d2)


def _c_normalization(model: RankOneModel) -> float:
    return 1.0 / _c_unnormalized(model, complex(model.rho_norm)).real


def c_function(model: RankOneModel, lam: SpectralParameter) -> complex:
    """Harish-Chandra c-function from the Gindikin-Karpelevich product, ``c(rho) = 1``.

    Raises :class:`CFunctionPoleError` within ``1e-9`` of an uncancelled pole.
    """
    return _c_normalization(model) * _c_unnormalized(model, complex(lam))


def plancherel_density(model: RankOneModel, nu: float) -> float:
    """``|c(i nu)|^{-2}``, computed through reciprocal Gamma factors.

    On the imaginary axis the denominator arguments of the c-function have
    positive real part, so ``1/c`` is finite and the density vanishes
    exactly where ``Gamma(i nu)`` has its pole.
    """
    x = 1j * float(nu)
    d1, d2 = _c_factors(model, x)
    inv_c = rgamma(x) / (_c_normalization(model) * 2.0 ** (-x) * rgamma(d1) * rgamma(d2))
    return float(abs(inv_c) ** 2)


def spherical_function(model: RankOneModel, lam: SpectralParameter, t: float) -> complex:
    """Elementary spherical function ``phi_lam(a_t)`` as a Jacobi function.

    ``phi_lam(a_t) = 2F1((rho+lam)/2, (rho-lam)/2; alpha_J + 1; -sinh(t)^2)``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    lam = complex(lam)
    rho = model.rho_norm
    z = -math.sinh(t) ** 2
    return hyp2f1((rho + lam) / 2, (rho - lam) / 2, model.jacobi_alpha + 1, z)


def spherical_function_quadrature(lam: SpectralParameter, t: float, nodes: int = 4096) -> complex:
    """``phi_lam(a_t)`` for SL2(R) from the K-integral, trapezoid rule on SO(2).

    Independent of the hypergeometric route; uses the Iwasawa projection of
    ``a_t^{-1} k_theta``.
    """
    lam = complex(lam)
    theta = 2 * np.pi * np.arange(nodes) / nodes
    a_inv = np.array([[math.exp(-t / 2), 0.0], [0.0, math.exp(t / 2)]])
    g = a_inv @ rotation_batch(theta)
    h = iwasawa_H_batch(g)
    return complex(np.mean(np.exp(-(lam + 0.5) * h)))


def lp_threshold(model: RankOneModel, re_abs: float) -> float:
    """Smallest ``p`` with ``re_abs <= ((p-2)/p) |rho|``; ``inf`` once ``re_abs >= |rho|``."""
    if re_abs < 0:
        raise ValueError("re_abs must be nonnegative")
    rho = model.rho_norm
    if re_abs >= rho:
        return math.inf
    return 2.0 / (1.0 - re_abs / rho)
