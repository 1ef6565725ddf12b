"""Word balls of finitely generated subgroups and their orbit counting functions.

The ball of radius ``L`` is the set of freely reduced words of length at
most ``L`` over the symmetrized generators, evaluated to matrices. In
``set`` mode words that evaluate to the same element of PSL2(R) (or of
the product) are merged, keeping the first word in canonical order (word
length, then lexicographic in alphabet order). In ``multiset`` mode every
reduced word is kept.

A generating set whose generators all have one trivial component
generates a direct product; its ball is represented lazily as the product
of the two factor balls, with the word length bounded per factor.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable, Sequence, Union

import numpy as np

from .groups import (
    GeneratorSet,
    cartan_mu_batch,
    canonical_sign_batch,
    renormalize_batch,
)

__all__ = [
    "OrbitBall",
    "ProductBall",
    "Ball",
    "MemoryCapExceeded",
    "DEFAULT_MEM_CAP",
    "COUNT_SLACK",
    "enumerate_ball",
    "counting_function",
    "counting_series",
    "component_series",
    "strip_count",
    "strip_series",
    "cone_count",
    "cone_series",
    "write_orbit_csv",
    "write_counts_csv",
]

DEFAULT_MEM_CAP = 10_000_000
MEM_CAP_ENV = "TEMPERED_SPECTRA_MEM_CAP"
# float noise in mu must not move an element across an integer radius
COUNT_SLACK = 1e-9


class MemoryCapExceeded(MemoryError):
    """The enumeration would store more elements than the configured cap."""

    def __init__(self, cap: int, reached_length: int, size: int):
        super().__init__(
            f"element cap {cap} exceeded; complete up to word length {reached_length} "
            f"({size} elements)"
        )
        self.cap = cap
        self.reached_length = reached_length
        self.size = size


def memory_cap(cap: int | None = None) -> int:
    if cap is not None:
        return int(cap)
    env = os.environ.get(MEM_CAP_ENV)
    if env:
        try:
            return int(float(env))
        except ValueError:
            raise ValueError(f"{MEM_CAP_ENV}={env!r} is not a number") from None
    return DEFAULT_MEM_CAP


@dataclass(frozen=True, eq=False)
class OrbitBall:
    """Materialized word ball; rows are in canonical order, identity first."""

    model: str
    alphabet: tuple
    words: np.ndarray        # (N, L) letter indices, -1 padded
    lengths: np.ndarray      # (N,)
    matrices: np.ndarray     # (N, 2, 2) or (N, 2, 2, 2)
    mu: np.ndarray           # (N, 2); second column zero for sl2r
    max_word_length: int
    dedup_tolerance: float
    counting_mode: str

    @property
    def size(self) -> int:
        return int(self.lengths.shape[0])

    def __len__(self) -> int:
        return self.size

    @property
    def is_product(self) -> bool:
        return self.model == "product_sl2r"

    @cached_property
    def norms(self) -> np.ndarray:
        return self.mu.max(axis=1)

    @cached_property
    def _sorted_norms(self) -> np.ndarray:
        return np.sort(self.norms)

    def sorted_component(self, factor: int) -> np.ndarray:
        return np.sort(self.mu[:, factor - 1])

    @property
    def max_norm(self) -> float:
        return float(self.norms.max())

    def complete_radius(self, factor: int | None = None) -> float:
        """Smallest displacement among the longest words in the ball.

        Elements displaced less than this are, for quasi-geodesic word
        growth, all reached by words of length at most ``max_word_length``;
        counting beyond it sees the truncation rather than the group.
        """
        top = int(self.lengths.max())
        if top == 0:
            return 0.0
        vals = self.norms if factor is None else self.mu[:, factor - 1]
        return float(vals[self.lengths == top].min())

    def word(self, i: int) -> str:
        return " ".join(self.alphabet[x] for x in self.words[i, : self.lengths[i]])

    def word_strings(self) -> list[str]:
        return [self.word(i) for i in range(self.size)]


@dataclass(frozen=True, eq=False)
class ProductBall:
    """Direct product ``B_1 x B_2`` of two single-factor balls, never materialized."""

    first: OrbitBall
    second: OrbitBall
    counting_mode: str

    model = "product_sl2r"
    is_product = True

    @property
    def factors(self) -> tuple:
        return (self.first, self.second)

    @property
    def size(self) -> int:
        return self.first.size * self.second.size

    def __len__(self) -> int:
        return self.size

    @property
    def max_word_length(self) -> int:
        return max(self.first.max_word_length, self.second.max_word_length)

    @property
    def dedup_tolerance(self) -> float:
        return self.first.dedup_tolerance

    @property
    def max_norm(self) -> float:
        return max(self.first.max_norm, self.second.max_norm)

    def sorted_component(self, factor: int) -> np.ndarray:
        return self.factors[factor - 1]._sorted_norms

    def complete_radius(self, factor: int | None = None) -> float:
        if factor is None:
            return min(self.first.complete_radius(), self.second.complete_radius())
        return self.factors[factor - 1].complete_radius()


Ball = Union[OrbitBall, ProductBall]


# --------------------------------------------------------------------------
# enumeration


def _dedup_keep(mats: np.ndarray, mu: np.ndarray, n_old: int, tol: float) -> np.ndarray:
    """Keep-mask over rows ``n_old:`` of ``mats``; rows are in priority order.

    Two rows are the same element when their canonically signed entries
    agree within ``tol * max(1, scale)``. Candidates are found by sorting on
    ``mu1 + mu2``, which moves by at most a small multiple of ``tol`` under
    such perturbations.
    """
    n = mats.shape[0]
    keep = np.ones(n, dtype=bool)
    if n - n_old == 0 or n < 2:
        return keep[n_old:]
    flat = mats.reshape(n, -1)
    blocks = flat.reshape(n, -1, 4)
    canon = canonical_sign_batch(blocks.reshape(-1, 2, 2), tol).reshape(n, -1)
    scale = np.maximum(1.0, np.abs(canon).max(axis=1))
    key = mu.sum(axis=1)
    order = np.argsort(key, kind="stable")
    skey = key[order]
    window = 64 * tol
    offset = 1
    while offset < n:
        close = skey[offset:] - skey[:-offset] <= window
        if not close.any():
            break
        i = order[:-offset][close]
        j = order[offset:][close]
        diff = np.abs(canon[i] - canon[j]).max(axis=1)
        same = diff <= tol * np.maximum(scale[i], scale[j])
        if same.any():
            # the later row in priority order is the duplicate
            later = np.maximum(i[same], j[same])
            keep[later] = False
        offset += 1
    # never drop rows that were already kept
    keep[:n_old] = True
    return keep[n_old:]


@dataclass
class _Partition:
    """Words starting with one fixed letter, grouped by length."""

    mats: list
    mu: list
    words: list
    last: np.ndarray
    frontier_mats: np.ndarray
    frontier_words: np.ndarray

    @property
    def stored(self) -> int:
        return sum(m.shape[0] for m in self.mats)


def _mu_of(mats: np.ndarray, product: bool) -> np.ndarray:
    if product:
        return np.stack([cartan_mu_batch(mats[:, 0]), cartan_mu_batch(mats[:, 1])], axis=1)
    out = np.zeros((mats.shape[0], 2))
    out[:, 0] = cartan_mu_batch(mats)
    return out


def _children(part: _Partition, gens: np.ndarray, inverse: np.ndarray):
    k = gens.shape[0]
    letters = np.arange(k)
    allowed = letters[None, :] != inverse[part.last][:, None]
    parent, letter = np.nonzero(allowed)
    return parent, letter


def _extend(part: _Partition, parent, letter, gens, product, tol, mode):
    mats = renormalize_batch(part.frontier_mats[parent] @ gens[letter])
    words = np.concatenate([part.frontier_words[parent], letter[:, None].astype(np.int16)], axis=1)
    mu = _mu_of(mats, product)
    if mode == "set" and mats.shape[0]:
        old_m = np.concatenate(part.mats) if part.mats else mats[:0]
        old_mu = np.concatenate(part.mu) if part.mu else mu[:0]
        keep = _dedup_keep(np.concatenate([old_m, mats]), np.concatenate([old_mu, mu]),
                           old_m.shape[0], tol)
        mats, words, mu, letter = mats[keep], words[keep], mu[keep], letter[keep]
    part.mats.append(mats)
    part.mu.append(mu)
    part.words.append(words)
    part.last = letter
    part.frontier_mats = mats
    part.frontier_words = words


def _enumerate_materialized(gens: GeneratorSet, L: int, mode: str, tol: float,
                            threads: int, cap: int) -> OrbitBall:
    product = gens.is_product
    mats = gens.matrices()
    # letters without an inverse map to k, which matches no letter
    inverse = np.array(gens.inverse)
    inverse = np.where(inverse < 0, mats.shape[0], inverse)
    shape = mats.shape[1:]
    eye = np.broadcast_to(np.eye(2), shape).copy()

    parts = []
    for f in range(mats.shape[0]):
        m = mats[f : f + 1].copy()
        w = np.array([[f]], dtype=np.int16)
        parts.append(_Partition([m], [_mu_of(m, product)], [w], np.array([f]), m, w))
    total = 1 + len(parts)
    if L == 0:
        parts = []
        total = 1
    elif total > cap:
        raise MemoryCapExceeded(cap, 0, 1)

    pool = ThreadPoolExecutor(max_workers=max(1, threads)) if threads > 1 else None
    try:
        for level in range(2, L + 1):
            plans = [_children(p, mats, inverse) for p in parts]
            n_new = sum(pl[0].shape[0] for pl in plans)
            if total + n_new > cap:
                raise MemoryCapExceeded(cap, level - 1, total)
            jobs = [(p, pl[0], pl[1], mats, product, tol, mode) for p, pl in zip(parts, plans)]
            if pool is None:
                for job in jobs:
                    _extend(*job)
            else:
                list(pool.map(lambda job: _extend(*job), jobs))
            total = 1 + sum(p.stored for p in parts)
            if all(p.frontier_mats.shape[0] == 0 for p in parts):
                break
    finally:
        if pool is not None:
            pool.shutdown()

    # canonical merge: identity, then by length, then first letter, then in-partition order
    width = max(L, 1)
    all_m = [eye[None]]
    all_mu = [np.zeros((1, 2))]
    all_w = [np.full((1, width), -1, dtype=np.int16)]
    all_len = [np.zeros(1, dtype=np.int64)]
    depth = max((len(p.mats) for p in parts), default=0)
    for k in range(depth):
        for p in parts:
            if k < len(p.mats) and p.mats[k].shape[0]:
                n = p.mats[k].shape[0]
                all_m.append(p.mats[k])
                all_mu.append(p.mu[k])
                w = np.full((n, width), -1, dtype=np.int16)
                w[:, : k + 1] = p.words[k]
                all_w.append(w)
                all_len.append(np.full(n, k + 1, dtype=np.int64))
    M = np.concatenate(all_m)
    MU = np.concatenate(all_mu)
    W = np.concatenate(all_w)
    LEN = np.concatenate(all_len)
    if mode == "set":
        keep = np.concatenate([[True], _dedup_keep(M, MU, 1, tol)])
        M, MU, W, LEN = M[keep], MU[keep], W[keep], LEN[keep]
    for arr in (M, MU, W, LEN):
        arr.setflags(write=False)
    return OrbitBall(gens.model, tuple(gens.labels), W, LEN, M, MU, int(L), float(tol), mode)


def enumerate_ball(gens: GeneratorSet, L: int, mode: str = "set", tol: float = 1e-9,
                   threads: int = 1, cap: int | None = None) -> Ball:
    """Enumerate the word ball of radius ``L``.

    Raises :class:`MemoryCapExceeded` when more than ``cap`` elements
    (default 10**7, overridable through ``TEMPERED_SPECTRA_MEM_CAP``) would
    be stored. Output does not depend on ``threads``.
    """
    if len(gens) == 0:
        raise ValueError("generator set is empty")
    if int(L) != L or L < 0:
        raise ValueError(f"word length must be a nonnegative integer, got {L!r}")
    if mode not in ("set", "multiset"):
        raise ValueError(f"counting mode must be 'set' or 'multiset', got {mode!r}")
    cap = memory_cap(cap)
    L = int(L)
    if gens.is_split():
        first = _enumerate_materialized(gens.factor(1), L, mode, tol, threads, cap)
        second = _enumerate_materialized(gens.factor(2), L, mode, tol, threads, cap)
        return ProductBall(first, second, mode)
    return _enumerate_materialized(gens, L, mode, tol, threads, cap)


# --------------------------------------------------------------------------
# counting


def _count_le(sorted_vals: np.ndarray, R) -> np.ndarray:
    return np.searchsorted(sorted_vals, np.asarray(R, dtype=float) + COUNT_SLACK, side="right")


def counting_series(ball: Ball, R: Sequence[float]) -> np.ndarray:
    """``N(R) = #{gamma : |mu(gamma)|_max <= R}`` on a grid of radii."""
    R = np.asarray(R, dtype=float)
    if isinstance(ball, ProductBall):
        return _count_le(ball.first._sorted_norms, R) * _count_le(ball.second._sorted_norms, R)
    return _count_le(ball._sorted_norms, R)


def counting_function(ball: Ball, R: float) -> int:
    return int(counting_series(ball, [R])[0])


def component_series(ball: Ball, factor: int, R: Sequence[float]) -> np.ndarray:
    """Counts of ``|mu(gamma_factor)| <= R`` over the whole ball (projection multiset)."""
    _check_factor(factor)
    R = np.asarray(R, dtype=float)
    if isinstance(ball, ProductBall):
        other = ball.factors[2 - factor]
        return _count_le(ball.factors[factor - 1]._sorted_norms, R) * other.size
    return _count_le(ball.sorted_component(factor), R)


def _check_factor(factor: int) -> None:
    if factor not in (1, 2):
        raise ValueError(f"factor must be 1 or 2, got {factor!r}")


def _require_product(ball: Ball) -> None:
    if not ball.is_product:
        raise ValueError("this count needs a product-model ball")


def strip_series(ball: Ball, strip_factor: int, R_strip: float, R: Sequence[float]) -> np.ndarray:
    """``#{gamma : |mu(gamma_strip)| <= R_strip, |mu(gamma_other)| <= R}`` on a grid."""
    _require_product(ball)
    _check_factor(strip_factor)
    other = 3 - strip_factor
    R = np.asarray(R, dtype=float)
    if isinstance(ball, ProductBall):
        n_strip = _count_le(ball.factors[strip_factor - 1]._sorted_norms, [R_strip])[0]
        return n_strip * _count_le(ball.factors[other - 1]._sorted_norms, R)
    inside = ball.mu[:, strip_factor - 1] <= R_strip + COUNT_SLACK
    vals = np.sort(ball.mu[inside, other - 1])
    return _count_le(vals, R)


def strip_count(ball: Ball, strip_factor: int, R_strip: float, R: float) -> int:
    return int(strip_series(ball, strip_factor, R_strip, [R])[0])


def _cone_setup(direction, half_angle):
    d = np.asarray(direction, dtype=float)
    if d.shape != (2,) or not np.all(np.isfinite(d)) or np.hypot(*d) == 0:
        raise ValueError("cone direction must be a nonzero vector in R^2")
    if not 0 < half_angle < math.pi / 2:
        raise ValueError("half_angle must lie in (0, pi/2)")
    return math.atan2(d[1], d[0]), float(half_angle)


def cone_series(ball: Ball, direction, half_angle: float, R: Sequence[float]) -> np.ndarray:
    """``#{gamma : mu != 0, angle(mu, direction) < half_angle, |mu|_max <= R}``."""
    _require_product(ball)
    theta, h = _cone_setup(direction, half_angle)
    R = np.asarray(R, dtype=float)
    if isinstance(ball, OrbitBall):
        ang = np.arctan2(ball.mu[:, 1], ball.mu[:, 0])
        sel = (np.abs(ang - theta) < h) & (ball.norms > 0)
        return _count_le(np.sort(ball.norms[sel]), R)
    return _lazy_cone_series(ball, theta, h, R)


def _lazy_cone_series(ball: ProductBall, theta: float, h: float, R: np.ndarray) -> np.ndarray:
    u = ball.first._sorted_norms
    v = ball.second._sorted_norms
    lo_ang, hi_ang = theta - h, theta + h
    out = np.zeros(R.shape, dtype=np.int64)
    pos = u[u > 0]
    zero_u = u.size - pos.size
    lo_mult = math.tan(lo_ang) if lo_ang >= 0 else -math.inf
    hi_mult = math.tan(hi_ang) if hi_ang < math.pi / 2 else math.inf
    lo = pos * lo_mult if lo_ang >= 0 else np.full(pos.shape, -math.inf)
    hi = pos * hi_mult if hi_ang < math.pi / 2 else np.full(pos.shape, math.inf)
    n_le_lo = np.searchsorted(v, lo, side="right")
    n_lt_hi = np.searchsorted(v, hi, side="left")
    vertical = abs(math.pi / 2 - theta) < h
    for idx, r in enumerate(R):
        rr = r + COUNT_SLACK
        m = np.searchsorted(pos, rr, side="right")
        n_le_r = np.searchsorted(v, rr, side="right")
        upper = np.minimum(n_lt_hi[:m], n_le_r)
        total = int(np.maximum(upper - n_le_lo[:m], 0).sum())
        if vertical and zero_u:
            # mu_1 = 0, mu_2 > 0 lies on the vertical axis
            total += zero_u * int(n_le_r - np.searchsorted(v, 0.0, side="right"))
        out[idx] = total
    return out


def cone_count(ball: Ball, direction, half_angle: float, R: float) -> int:
    return int(cone_series(ball, direction, half_angle, [R])[0])


# --------------------------------------------------------------------------
# export


def _iter_rows(ball: Ball) -> Iterable[tuple]:
    if isinstance(ball, ProductBall):
        w1, w2 = ball.first.word_strings(), ball.second.word_strings()
        for i, a in enumerate(w1):
            m1 = ball.first.mu[i, 0]
            for j, b in enumerate(w2):
                yield " ".join(x for x in (a, b) if x), m1, ball.second.mu[j, 0]
        return
    for i in range(ball.size):
        yield ball.word(i), ball.mu[i, 0], ball.mu[i, 1]


def write_orbit_csv(ball: Ball, fh: IO[str]) -> int:
    """Write ``word,mu1,mu2`` rows in canonical order; returns the row count."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["word", "mu1", "mu2"])
    n = 0
    for word, m1, m2 in _iter_rows(ball):
        writer.writerow([word, repr(float(m1)), repr(float(m2))])
        n += 1
    return n


def write_counts_csv(R: Sequence[float], N: Sequence[int], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["R", "N"])
    for r, n in zip(R, N):
        writer.writerow([repr(float(r)), int(n)])
