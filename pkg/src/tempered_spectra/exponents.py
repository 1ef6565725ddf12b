"""Growth exponents from orbit counting data.

All estimators read uniform ``(R, N(R))`` series. Radii are only trusted
up to the completeness radius of the ball (see
:meth:`OrbitBall.complete_radius`), so the ball-level helpers sample
counts on ``[0, R_max]`` with ``R_max`` that radius.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .orbit import (
    Ball,
    ProductBall,
    cone_series,
    counting_series,
    component_series,
    strip_series,
)

__all__ = [
    "ExponentEstimate",
    "DirectionalExponent",
    "GrowthIndicator",
    "LimitConeEstimate",
    "TAIL_FRACTION",
    "MIN_TAIL_POINTS",
    "DISAGREEMENT",
    "PLATEAU_TOL",
    "GRID_POINTS",
    "estimate_delta",
    "delta_of_ball",
    "delta_of_component",
    "directional_delta",
    "default_strip_grid",
    "growth_indicator",
    "limit_cone",
    "write_strip_csv",
    "write_rays_csv",
]

TAIL_FRACTION = 0.5
MIN_TAIL_POINTS = 5
DISAGREEMENT = 0.1
PLATEAU_TOL = 0.02
GRID_POINTS = 256
BISECTION_BRACKET = (-1.0, 20.0)
DEFAULT_APERTURES = (0.4, 0.2, 0.1, 0.05)


@dataclass(frozen=True)
class ExponentEstimate:
    """Regression slope of ``log N`` on the tail window, with a Poincare cross-check."""

    value: float
    method: str
    window: tuple
    fit_r2: float
    sample_count: int
    secondary: float = math.nan
    secondary_method: str = "poincare_bisection"
    flags: tuple = ()

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


def _poincare_ratio(r: np.ndarray, dn: np.ndarray, s: float, R: float) -> float:
    lo = (r > R / 4) & (r <= R / 2)
    hi = (r > R / 2) & (r <= R)
    # shift exponents by the window start to avoid overflow for negative s
    w1 = np.sum(dn[lo] * np.exp(-s * (r[lo] - R / 4)))
    w2 = np.sum(dn[hi] * np.exp(-s * (r[hi] - R / 4)))
    return w2 / w1 if w1 > 0 else math.inf


def _poincare_bisection(R: np.ndarray, N: np.ndarray) -> float:
    """Exponent ``s`` at which the two doubling windows carry equal mass per unit length.

    For ``N ~ e^{delta r}`` the Poincare mass of ``(R/2, R]`` is twice that of
    ``(R/4, R/2]`` exactly at ``s = delta``; the ratio decreases in ``s``.
    """
    r = R[1:]
    dn = np.diff(N).astype(float)
    top = float(R[-1])
    lo_s, hi_s = BISECTION_BRACKET
    f = lambda s: _poincare_ratio(r, dn, s, top) - 2.0
    if not math.isfinite(f(lo_s)):
        return math.nan
    if f(lo_s) <= 0:
        return lo_s
    if f(hi_s) >= 0:
        return hi_s
    for _ in range(100):
        mid = 0.5 * (lo_s + hi_s)
        if f(mid) > 0:
            lo_s = mid
        else:
            hi_s = mid
        if hi_s - lo_s < 1e-10:
            break
    return 0.5 * (lo_s + hi_s)


def estimate_delta(R: Sequence[float], N: Sequence[int], tail_fraction: float = TAIL_FRACTION
                   ) -> ExponentEstimate:
    """Critical exponent from a counting series on a uniform grid.

    The value is the least-squares slope of ``log N`` against ``R`` over
    ``[tail_fraction * R_max, R_max]``; it is ``-inf`` when fewer than five
    grid points in that window see ``N`` increase.
    """
    R = np.asarray(R, dtype=float)
    N = np.asarray(N, dtype=float)
    if R.ndim != 1 or R.shape != N.shape or R.size < 2:
        raise ValueError("R and N must be equal-length 1-d series with at least two points")
    if np.any(np.diff(R) <= 0):
        raise ValueError("R grid must be strictly increasing")
    if np.any(np.diff(N) < 0):
        raise ValueError("counting series must be nondecreasing")
    r_hi = float(R[-1])
    r_lo = tail_fraction * r_hi
    tail = R >= r_lo
    idx = np.nonzero(tail)[0]
    prev = np.maximum(idx - 1, 0)
    increasing = int(np.sum((N[idx] > N[prev]) & (idx > 0)))
    window = (r_lo, r_hi)
    if increasing < MIN_TAIL_POINTS or np.any(N[tail] <= 0):
        return ExponentEstimate(-math.inf, "log_count_regression", window, 0.0, increasing,
                                -math.inf, flags=("bounded_tail",))
    x, y = R[tail], np.log(N[tail])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    secondary = _poincare_bisection(R, N)
    flags = ()
    if not math.isfinite(secondary) or abs(secondary - slope) > DISAGREEMENT:
        flags = ("estimator_disagreement",)
    return ExponentEstimate(float(slope), "log_count_regression", window,
                            float(min(max(r2, 0.0), 1.0)), increasing, float(secondary),
                            flags=flags)


def _grid(r_max: float, points: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, r_max, points)


def delta_of_ball(ball: Ball, points: int = GRID_POINTS,
                  tail_fraction: float = TAIL_FRACTION) -> ExponentEstimate:
    """``delta`` of ``N(R)`` (maximum norm on products) up to the completeness radius."""
    r_max = ball.complete_radius()
    if r_max <= 0:
        return _empty_estimate()
    R = _grid(r_max, points)
    return estimate_delta(R, counting_series(ball, R), tail_fraction)


def delta_of_component(ball: Ball, factor: int, points: int = GRID_POINTS,
                       tail_fraction: float = TAIL_FRACTION) -> ExponentEstimate:
    """``delta`` of the projection multiset ``{mu(gamma_factor)}`` over the whole ball."""
    r_max = ball.complete_radius(factor)
    if r_max <= 0:
        return _empty_estimate()
    R = _grid(r_max, points)
    return estimate_delta(R, component_series(ball, factor, R), tail_fraction)


def _empty_estimate() -> ExponentEstimate:
    return ExponentEstimate(-math.inf, "log_count_regression", (0.0, 0.0), 0.0, 0,
                            -math.inf, flags=("bounded_tail",))


@dataclass(frozen=True)
class DirectionalExponent:
    """Strip exponents of one factor; ``per_strip`` holds running maxima of ``raw``."""

    factor: int
    strip_grid: tuple
    per_strip: tuple
    raw: tuple = field(repr=False)
    sup_value: float
    plateau_detected: bool

    @property
    def values(self) -> list[float]:
        return [e.value for e in self.per_strip]


def default_strip_grid(ball: Ball, factor: int) -> tuple:
    """Strip widths at 0.1..0.4 of the other factor's completeness radius."""
    r = ball.complete_radius(3 - factor)
    return tuple(f * r for f in (0.1, 0.2, 0.3, 0.4))


def directional_delta(ball: Ball, factor: int, strip_grid: Sequence[float] | None = None,
                      points: int = GRID_POINTS, tail_fraction: float = TAIL_FRACTION,
                      plateau_tol: float = PLATEAU_TOL) -> DirectionalExponent:
    """Exponent of ``#{||mu(gamma_factor)|| <= R : ||mu(gamma_other)|| <= R_strip}``, sup over strips."""
    if not ball.is_product:
        raise ValueError("directional exponents need a product-model ball")
    if factor not in (1, 2):
        raise ValueError(f"factor must be 1 or 2, got {factor!r}")
    grid = tuple(float(x) for x in (strip_grid if strip_grid is not None
                                    else default_strip_grid(ball, factor)))
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("strip_grid must be nonempty and strictly increasing")
    r_max = ball.complete_radius(factor)
    R = _grid(r_max, points) if r_max > 0 else None
    raw = []
    for width in grid:
        if R is None:
            raw.append(_empty_estimate())
            continue
        counts = strip_series(ball, 3 - factor, width, R)
        raw.append(estimate_delta(R, counts, tail_fraction))
    stored, best = [], None
    for est in raw:
        if best is None or est.value > best.value:
            best = est
        stored.append(best if best is est else _replace_value(est, best.value))
    values = [e.value for e in stored]
    sup = max(values)
    tail = values[-3:]
    if len(tail) == 3 and all(math.isinf(v) and v < 0 for v in tail):
        plateau = True
    elif len(tail) == 3 and all(math.isfinite(v) for v in tail):
        plateau = max(tail) - min(tail) < plateau_tol
    else:
        plateau = False
    return DirectionalExponent(factor, grid, tuple(stored), tuple(raw), sup, plateau)


def _replace_value(est: ExponentEstimate, value: float) -> ExponentEstimate:
    return ExponentEstimate(value, est.method, est.window, est.fit_r2, est.sample_count,
                            est.secondary, est.secondary_method,
                            est.flags + ("running_max",))


@dataclass(frozen=True)
class GrowthIndicator:
    direction: tuple          # normalized to maximum norm 1
    theta: float
    apertures: tuple
    per_aperture: tuple
    value: float


def growth_indicator(ball: Ball, direction, apertures: Sequence[float] = DEFAULT_APERTURES,
                     points: int = GRID_POINTS, tail_fraction: float = TAIL_FRACTION
                     ) -> GrowthIndicator:
    """``psi(H)`` for ``H`` of maximum norm 1 from cone exponents along the schedule.

    Shrinking the cone can only lower the true exponent, so the reported
    value is the running infimum of the per-aperture estimates (the limit
    of that monotone sequence); ``-inf`` as soon as one aperture has
    bounded cone counts.
    """
    if not ball.is_product:
        raise ValueError("the growth indicator needs a product-model ball")
    d = np.asarray(direction, dtype=float)
    if d.shape != (2,) or not np.all(np.isfinite(d)) or np.max(np.abs(d)) == 0:
        raise ValueError("direction must be a nonzero vector in R^2")
    d = d / np.max(np.abs(d))
    aps = tuple(float(a) for a in apertures)
    if not aps or any(not 0 < a < math.pi / 2 for a in aps) or any(
            b >= a for a, b in zip(aps, aps[1:])):
        raise ValueError("apertures must be strictly decreasing in (0, pi/2)")
    r_max = ball.complete_radius()
    R = _grid(r_max, points) if r_max > 0 else None
    per = []
    for h in aps:
        if R is None:
            per.append(_empty_estimate())
        else:
            per.append(estimate_delta(R, cone_series(ball, d, h, R), tail_fraction))
    value = -math.inf if any(not e.finite for e in per) else min(e.value for e in per)
    theta = math.atan2(d[1], d[0])
    return GrowthIndicator((float(d[0]), float(d[1])), theta, aps, tuple(per), float(value))


@dataclass(frozen=True)
class LimitConeEstimate:
    directions: np.ndarray      # (n, 2) Euclidean unit vectors
    angular_hull: tuple | None  # (theta_min, theta_max)
    radius_floor: float
    empty: bool
    sampled: bool = False


MAX_DIRECTIONS = 10_000


def limit_cone(ball: Ball, radius_floor: float | None = None) -> LimitConeEstimate:
    """Directions of ``mu`` with ``||mu||_max >= radius_floor`` and their angular hull.

    The default floor is half the completeness radius.
    """
    if not ball.is_product:
        raise ValueError("the limit cone needs a product-model ball")
    floor = 0.5 * ball.complete_radius() if radius_floor is None else float(radius_floor)
    if isinstance(ball, ProductBall):
        return _lazy_limit_cone(ball, floor)
    mu = ball.mu[(ball.norms >= floor) & (ball.norms > 0)]
    if mu.shape[0] == 0:
        return LimitConeEstimate(np.zeros((0, 2)), None, floor, True)
    ang = np.arctan2(mu[:, 1], mu[:, 0])
    hull = (float(ang.min()), float(ang.max()))
    sampled = mu.shape[0] > MAX_DIRECTIONS
    if sampled:
        mu = mu[np.linspace(0, mu.shape[0] - 1, MAX_DIRECTIONS).astype(int)]
    dirs = mu / np.hypot(mu[:, 0], mu[:, 1])[:, None]
    return LimitConeEstimate(dirs, hull, floor, False, sampled)


def _lazy_limit_cone(ball: ProductBall, floor: float) -> LimitConeEstimate:
    u, v = ball.first._sorted_norms, ball.second._sorted_norms
    # extreme angles over pairs with max(u, v) >= floor: split on which side reaches it
    lows, highs = [], []
    if u[-1] >= floor:
        lows.append(math.atan2(v[0], u[-1]))
        highs.append(math.atan2(v[-1], u[u >= floor][0]))
    if v[-1] >= floor:
        lows.append(math.atan2(v[v >= floor][0], u[-1]))
        highs.append(math.atan2(v[-1], u[0]))
    if not lows:
        return LimitConeEstimate(np.zeros((0, 2)), None, floor, True)
    hull = (float(min(lows)), float(max(highs)))
    k = int(math.isqrt(MAX_DIRECTIONS))
    su = u[np.linspace(0, u.size - 1, min(k, u.size)).astype(int)]
    sv = v[np.linspace(0, v.size - 1, min(k, v.size)).astype(int)]
    pu, pv = np.meshgrid(su, sv, indexing="ij")
    mu = np.stack([pu.ravel(), pv.ravel()], axis=1)
    mu = mu[(mu.max(axis=1) >= floor) & (mu.max(axis=1) > 0)]
    dirs = mu / np.hypot(mu[:, 0], mu[:, 1])[:, None]
    return LimitConeEstimate(dirs, hull, floor, False, True)


def write_strip_csv(d: DirectionalExponent, fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["R_strip", "delta", "delta_raw"])
    for r, est, raw in zip(d.strip_grid, d.per_strip, d.raw):
        w.writerow([repr(float(r)), repr(est.value), repr(raw.value)])


def write_rays_csv(rays: Sequence[GrowthIndicator], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["theta", "psi"])
    for g in rays:
        w.writerow([repr(g.theta), repr(g.value)])
