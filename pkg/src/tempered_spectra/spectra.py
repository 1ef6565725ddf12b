"""Spectral consequences of growth exponents.

Green-kernel bounds are reported with their unspecified constants set to
1; only the decay rates carry information. The crossover between the
near-origin and far regimes is fixed at ``t = 1``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .groups import GroupElement, cartan_mu_batch
from .orbit import COUNT_SLACK, Ball, OrbitBall, ProductBall
from .symspace import RankOneModel, lp_threshold

__all__ = [
    "SpectralRegion",
    "ConvergenceResult",
    "SingularConfigurationError",
    "GREEN_CROSSOVER",
    "DEFAULT_NU",
    "STABLE_RATIO",
    "rank_one_bottom",
    "re_bound",
    "spectral_rectangle",
    "temperedness_verdict",
    "green_bound",
    "b_critical",
    "averaged_convergence_test",
    "averaged_kernel_sample",
    "write_convergence_csv",
    "write_green_csv",
]

GREEN_CROSSOVER = 1.0
DEFAULT_NU = 1e-3
STABLE_RATIO = 0.01
LAST_DECADE = 0.9
SINGULAR_TOL = 1e-9


def rank_one_bottom(delta: float, rho: float) -> float:
    """Bottom of the Laplace spectrum: ``rho^2`` for ``delta < rho``, else ``rho^2 - (delta - rho)^2``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    if delta < rho:
        return rho * rho
    return rho * rho - (delta - rho) ** 2


def re_bound(delta: float, rho: float) -> float:
    return max(0.0, delta - rho)


@dataclass(frozen=True)
class SpectralRegion:
    """``|Re lambda_i| <= re_bound_i``; ``re_bound_2`` is None for one factor."""

    re_bound_1: float
    re_bound_2: float | None
    tempered: bool
    p_min: float

    @property
    def re_bounds(self) -> tuple:
        return (self.re_bound_1,) if self.re_bound_2 is None else (self.re_bound_1, self.re_bound_2)

    def contains_imaginary_axis(self) -> bool:
        return all(b >= 0 for b in self.re_bounds)


def temperedness_verdict(region: SpectralRegion, models: Sequence[RankOneModel]) -> tuple:
    """``(tempered, p_min)``; ``p_min`` is the largest per-factor L^p threshold."""
    bounds = region.re_bounds
    if len(models) != len(bounds):
        raise ValueError(f"need {len(bounds)} models, got {len(models)}")
    tempered = all(b == 0 for b in bounds)
    p_min = max(lp_threshold(m, b) for m, b in zip(models, bounds))
    return tempered, p_min


def spectral_rectangle(delta1: float, delta2: float | None, model1: RankOneModel,
                       model2: RankOneModel | None = None) -> SpectralRegion:
    """Region from directional exponents; pass ``delta2=None`` for a single factor."""
    b1 = re_bound(delta1, model1.rho_norm)
    models = [model1]
    b2 = None
    if delta2 is not None:
        if model2 is None:
            raise ValueError("two exponents need two models")
        b2 = re_bound(delta2, model2.rho_norm)
        models.append(model2)
    draft = SpectralRegion(b1, b2, False, math.inf)
    tempered, p_min = temperedness_verdict(draft, models)
    return SpectralRegion(b1, b2, tempered, p_min)


def green_bound(model: RankOneModel, z: float, b: float, t: float) -> float:
    """Resolvent-kernel majorant at distance ``t`` (constants set to 1).

    ``e^{-(sqrt(rho^2 - b) + rho) t}`` for ``t >= 1``; ``log(1/t)`` in
    dimension 2 and ``t^{2 - dim}`` otherwise for ``t < 1``.
    """
    rho = model.rho_norm
    if not z <= b < rho * rho:
        raise ValueError(f"need z <= b < rho^2 = {rho * rho}, got z={z}, b={b}")
    if not t > 0:
        raise ValueError("t must be positive")
    return float(_green_batch(model, b, np.asarray([t], dtype=float))[0])


def _green_batch(model: RankOneModel, b: float, t: np.ndarray) -> np.ndarray:
    rho = model.rho_norm
    rate = math.sqrt(rho * rho - b) + rho
    far = np.exp(-rate * t)
    with np.errstate(divide="ignore"):
        near = -np.log(t) if model.dim == 2 else t ** (2.0 - model.dim)
    return np.where(t >= GREEN_CROSSOVER, far, near)


def b_critical(delta: float, rho: float) -> float:
    return rho * rho - re_bound(delta, rho) ** 2


@dataclass(frozen=True)
class ConvergenceResult:
    b: float
    nu: float
    delta_input: float
    predicted: bool
    b_critical: float
    radii: np.ndarray
    partial_sums: np.ndarray
    increment_ratio: float
    stable: bool
    strip_width: float | None = None


def _series_values(ball: Ball, factor: int, strip_width: float | None) -> tuple:
    """Displacements summed over, a constant multiplicity (lazy products), R_max, strip width."""
    if not ball.is_product:
        return ball.norms, 1, ball.complete_radius(), None
    other = 3 - factor
    width = strip_width
    if width is None:
        width = 0.4 * ball.complete_radius(other)
    if isinstance(ball, ProductBall):
        oth = ball.factors[other - 1]
        mult = int(np.sum(oth.norms <= width + COUNT_SLACK))
        return ball.factors[factor - 1].norms, mult, ball.complete_radius(factor), width
    inside = ball.mu[:, other - 1] <= width + COUNT_SLACK
    return ball.mu[inside, factor - 1], 1, ball.complete_radius(factor), width


def averaged_convergence_test(ball: Ball, model: RankOneModel, b: float,
                              nu: float = DEFAULT_NU, delta_input: float = -math.inf,
                              factor: int = 1, strip_width: float | None = None,
                              points: int = 256) -> ConvergenceResult:
    """Partial sums of ``sum e^{-(sqrt(rho^2-b) + rho - nu) |mu|}`` by increasing ``|mu|``.

    On product balls the sum runs over the strip ``|mu(gamma_other)| <= strip_width``
    (default 0.4 of the other factor's completeness radius) and ``mu`` is the
    ``factor`` component. ``stable`` means the last tenth of the radius range
    adds less than 1% of the total; it is a diagnostic, not a proof of
    convergence or divergence.
    """
    rho = model.rho_norm
    if not b < rho * rho:
        raise ValueError(f"need b < rho^2 = {rho * rho}")
    if not 0 < nu < rho:
        raise ValueError("nu must lie in (0, rho)")
    predicted = b < b_critical(delta_input, rho)
    vals, mult, r_max, width = _series_values(ball, factor, strip_width)
    vals = np.sort(np.asarray(vals, dtype=float))
    rate = math.sqrt(rho * rho - b) + rho - nu
    cum = np.cumsum(np.exp(-rate * vals)) * mult
    radii = np.linspace(0.0, r_max, points)
    idx = np.searchsorted(vals, radii + COUNT_SLACK, side="right")
    sums = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
    total = float(sums[-1])
    i_dec = np.searchsorted(vals, LAST_DECADE * r_max + COUNT_SLACK, side="right")
    before = float(cum[i_dec - 1]) if i_dec > 0 else 0.0
    ratio = (total - before) / total if total > 0 else 0.0
    return ConvergenceResult(float(b), float(nu), float(delta_input), bool(predicted),
                             float(b_critical(delta_input, rho)), radii, sums, float(ratio),
                             bool(ratio < STABLE_RATIO), width)


class SingularConfigurationError(ValueError):
    """A ball element maps ``y`` onto ``x``; the kernel is singular there."""


def averaged_kernel_sample(ball: OrbitBall, model: RankOneModel, z: float,
                           x: GroupElement, y: GroupElement, b: float | None = None) -> float:
    """Sum over the ball of ``green_bound`` at ``t = mu(y^{-1} gamma x)``.

    An upper-bound diagnostic for the averaged resolvent kernel at
    ``(Gamma x, Gamma y)``, not the kernel itself; ``b`` defaults to ``z``.
    """
    if not isinstance(ball, OrbitBall) or ball.is_product:
        raise ValueError("averaged_kernel_sample needs a single-factor ball")
    b = z if b is None else b
    rho = model.rho_norm
    if not z <= b < rho * rho:
        raise ValueError(f"need z <= b < rho^2 = {rho * rho}")
    y_inv = y.inverse().m
    t = cartan_mu_batch(y_inv @ ball.matrices @ x.m)
    if np.any(t < SINGULAR_TOL):
        raise SingularConfigurationError("x = gamma y for an element gamma of the ball")
    return float(np.sum(_green_batch(model, b, t)))


def write_convergence_csv(results: Sequence[ConvergenceResult], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["b", "nu", "predicted", "increment_ratio", "stable", "b_critical"])
    for r in results:
        w.writerow([repr(r.b), repr(r.nu), str(r.predicted).lower(), repr(r.increment_ratio),
                    str(r.stable).lower(), repr(r.b_critical)])


def write_green_csv(model: RankOneModel, z: float, b_values: Sequence[float],
                    t_values: Sequence[float], fh: IO[str]) -> None:
    """Long-format ``t,b,bound`` rows."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "b", "bound"])
    for b in b_values:
        for t in t_values:
            w.writerow([repr(float(t)), repr(float(b)), repr(green_bound(model, z, b, t))])
