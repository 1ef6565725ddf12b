"""Reference generator sets with known growth behaviour.

* ``cyclic``: one hyperbolic element of translation length ``ell``;
  ``N(R) = 2 floor(R / ell) + 1`` and ``delta = 0``.
* ``schottky``: hyperbolic ``a`` along the imaginary axis and ``b``, its
  conjugate by a quarter turn at ``i``, so the two axes cross
  perpendicularly. The group is free and Schottky once
  ``sinh(ell/2) > 1``; large ``ell`` gives a thin group with ``delta < 1/2``.
* ``self_joining``: the diagonal ``{(g, g)}`` of a Schottky group; all of
  the orbit sits on the diagonal ray, so strip counts are bounded.
* ``product``: ``Gamma_1 x Gamma_2`` of two Schottky groups, with split
  generators ``(a, e)``, ``(e, c)``.
"""
from __future__ import annotations

import math

from .groups import GeneratorSet, GroupElement, ProductElement, diagonal, rotation, to_config

__all__ = [
    "SCHOTTKY_THRESHOLD",
    "cyclic",
    "schottky_pair",
    "schottky",
    "self_joining",
    "product",
    "fixture_configs",
]

# perpendicular axes at i: the ping-pong discs are disjoint iff sinh(ell/2) > 1
SCHOTTKY_THRESHOLD = 2 * math.asinh(1.0)


def cyclic(ell: float = 1.0) -> GeneratorSet:
    return GeneratorSet.build("sl2r", [diagonal(ell)], ["a"])


def schottky_pair(ell: float) -> tuple:
    a = diagonal(ell)
    k = rotation(math.pi / 4)
    return a, k @ a @ k.inverse()


def schottky(ell: float = 4.0, labels=("a", "b")) -> GeneratorSet:
    if ell <= SCHOTTKY_THRESHOLD:
        raise ValueError(f"ell must exceed {SCHOTTKY_THRESHOLD:.4f} for a Schottky pair")
    return GeneratorSet.build("sl2r", list(schottky_pair(ell)), list(labels))


def self_joining(ell: float = 4.0) -> GeneratorSet:
    a, b = schottky_pair(ell)
    gens = [ProductElement(a, a), ProductElement(b, b)]
    return GeneratorSet.build("product_sl2r", gens, ["a", "b"])


def product(ell1: float = 4.0, ell2: float = 5.0) -> GeneratorSet:
    e = GroupElement.identity()
    a, b = schottky_pair(ell1)
    c, d = schottky_pair(ell2)
    gens = [ProductElement(a, e), ProductElement(b, e), ProductElement(e, c), ProductElement(e, d)]
    return GeneratorSet.build("product_sl2r", gens, ["a", "b", "c", "d"])


def fixture_configs() -> dict:
    """Group and analysis configs for the reference fixtures, keyed by file stem."""
    groups = {
        "cyclic": (cyclic(1.0), 200),
        "schottky_4": (schottky(4.0), 10),
        "schottky_5": (schottky(5.0, ("c", "d")), 10),
        "self_joining": (self_joining(4.0), 12),
        "product": (product(4.0, 5.0), 7),
    }
    out = {}
    for stem, (gens, L) in groups.items():
        out[f"{stem}.group"] = to_config(gens)
        out[f"{stem}.analysis"] = {
            "group": f"{stem}.group.json",
            "max_word_length": L,
            "counting_mode": "set",
        }
    return out
