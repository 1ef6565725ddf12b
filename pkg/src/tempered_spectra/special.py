"""Complex Gamma function and Gauss hypergeometric function.

Both are written for complex parameters, which is what the spectral
parameter on the imaginary axis requires (scipy's ``hyp2f1`` only takes
real ``a, b, c``).

The Gamma function uses the Lanczos approximation with g = 7 and nine
coefficients on ``Re z >= 1/2`` and the reflection formula elsewhere.
``hyp2f1`` sums the power series for ``|z| <= 0.8`` and otherwise maps the
argument into that disc with the Pfaff and ``z -> 1 - z`` transformations.
"""
from __future__ import annotations

import cmath
import math

__all__ = [
    "GammaPoleError",
    "HypergeometricError",
    "gamma",
    "rgamma",
    "hyp2f1",
    "SERIES_RADIUS",
    "MAX_TERMS",
]

_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

SERIES_RADIUS = 0.8
MAX_TERMS = 10_000
POLE_TOL = 1e-9

# degenerate c - a - b: average over a circle in b of this radius
_DEGENERATE_DIST = 0.2
_CIRCLE_RADIUS = 0.4
_CIRCLE_NODES = 32


class GammaPoleError(ArithmeticError):
    """Raised when Gamma is evaluated at (or within tolerance of) a pole."""

    def __init__(self, z: complex):
        super().__init__(f"Gamma has a pole at z = {z}")
        self.z = z


class HypergeometricError(ArithmeticError):
    """Raised when a hypergeometric evaluation cannot meet its tolerance."""


def _nearest_nonpositive_int(z: complex) -> int | None:
    n = round(z.real)
    if n <= 0 and abs(z - n) < POLE_TOL:
        return int(n)
    return None


def _lanczos_log_gamma(z: complex) -> complex:
    # valid for Re z >= 1/2
    z = z - 1.0
    acc = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        acc += _LANCZOS[i] / (z + i)
    t = z + _G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(acc)


def gamma(z: complex) -> complex:
    """Gamma function for complex ``z``; raises :class:`GammaPoleError` at poles."""
    z = complex(z)
    if _nearest_nonpositive_int(z) is not None:
        raise GammaPoleError(z)
    if z.real < 0.5:
        return math.pi / (cmath.sin(math.pi * z) * gamma(1.0 - z))
    return cmath.exp(_lanczos_log_gamma(z))


def rgamma(z: complex) -> complex:
    """Reciprocal Gamma function ``1/Gamma(z)``, entire in ``z``."""
    z = complex(z)
    n = _nearest_nonpositive_int(z)
    if n is not None and z == n:
        return 0.0j
    if z.real < 0.5:
        return cmath.sin(math.pi * z) * gamma(1.0 - z) / math.pi
    return cmath.exp(-_lanczos_log_gamma(z))


def _series(a: complex, b: complex, c: complex, z: complex) -> complex:
    term = 1.0 + 0.0j
    total = 1.0 + 0.0j
    small = 0
    for k in range(MAX_TERMS):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        if abs(term) <= 1e-17 * max(abs(total), 1e-300):
            small += 1
            if small >= 2:
                return total
        else:
            small = 0
        if term == 0:
            return total
    raise HypergeometricError(
        f"2F1 series did not converge in {MAX_TERMS} terms (a={a}, b={b}, c={c}, z={z})"
    )


def _one_minus_z(a: complex, b: complex, c: complex, z: complex) -> complex:
    """Connection formula to the point 1 (|1 - z| small)."""
    s = c - a - b
    m = round(s.real)
    if abs(s - m) < _DEGENERATE_DIST:
        # F is entire in b; the mean over a circle recovers the removable limit
        total = 0.0j
        for j in range(_CIRCLE_NODES):
            bj = b + _CIRCLE_RADIUS * cmath.exp(2j * math.pi * (j + 0.5) / _CIRCLE_NODES)
            total += _one_minus_z(a, bj, c, z)
        return total / _CIRCLE_NODES
    w = 1.0 - z
    first = gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b)
    second = gamma(c) * gamma(-s) * rgamma(a) * rgamma(b)
    out = 0.0j
    if first != 0:
        out += first * _series(a, b, 1.0 - s, w)
    if second != 0:
        out += second * w**s * _series(c - a, c - b, 1.0 + s, w)
    return out


def hyp2f1(a: complex, b: complex, c: complex, z: complex) -> complex:
    """Gauss hypergeometric function 2F1(a, b; c; z).

    Supported arguments: the disc ``|z| <= 0.8`` and every ``z`` reachable
    from it by ``z -> z/(z-1)`` or ``z -> 1-z`` (in particular all real
    ``z < 1``). ``c`` must not be a nonpositive integer.
    """
    a, b, c, z = complex(a), complex(b), complex(c), complex(z)
    if _nearest_nonpositive_int(c) is not None:
        raise HypergeometricError(f"c = {c} is a nonpositive integer")
    if z == 0:
        return 1.0 + 0.0j
    if abs(z) <= SERIES_RADIUS:
        return _series(a, b, c, z)
    if z.imag == 0 and z.real >= 1.0:
        raise HypergeometricError(f"z = {z.real} lies on the branch cut [1, inf)")
    if abs(1.0 - z) <= SERIES_RADIUS:
        return _one_minus_z(a, b, c, z)
    w = z / (z - 1.0)
    pref = (1.0 - z) ** (-a)
    if abs(w) <= SERIES_RADIUS:
        return pref * _series(a, c - b, c, w)
    if abs(1.0 - w) <= SERIES_RADIUS:
        return pref * _one_minus_z(a, c - b, c, w)
    raise HypergeometricError(f"argument z = {z} outside the supported region")
