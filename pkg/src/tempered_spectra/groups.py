"""Matrix models of SL2(R) and SL2(R) x SL2(R).

Group elements are 2x2 real matrices of determinant one, identified up to
sign (the symmetric space only sees PSL2(R)). The Cartan projection of
``g`` is the distance ``d(g.i, i)`` in the upper half plane, equivalently
``2 log sigma_max(g)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence, Union

import numpy as np

__all__ = [
    "ConfigError",
    "GroupElement",
    "ProductElement",
    "CartanVector",
    "GeneratorSet",
    "DET_TOL",
    "cartan_mu",
    "cartan_mu_batch",
    "iwasawa_H",
    "iwasawa_H_batch",
    "product_mu",
    "rotation",
    "rotation_batch",
    "diagonal",
    "mobius",
    "canonical_sign_batch",
    "renormalize_batch",
    "parse_group_config",
    "load_group_config",
    "to_config",
]

DET_TOL = 1e-9
RENORM_TOL = 1e-12


class ConfigError(ValueError):
    """A group or analysis configuration violates its schema."""


def _as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.shape == (4,):
        arr = arr.reshape(2, 2)
    if arr.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Determinant-one 2x2 real matrix."""

    m: np.ndarray

    def __post_init__(self):
        arr = _as_matrix(self.m)
        det = arr[0, 0] * arr[1, 1] - arr[0, 1] * arr[1, 0]
        if abs(det - 1.0) >= DET_TOL:
            raise ValueError(f"determinant {det!r} is not 1 within {DET_TOL}")
        if abs(det - 1.0) > RENORM_TOL:
            arr = arr / math.sqrt(det)
        arr.setflags(write=False)
        object.__setattr__(self, "m", arr)

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(np.eye(2))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.m @ other.m)

    def inverse(self) -> "GroupElement":
        (a, b), (c, d) = self.m
        return GroupElement(np.array([[d, -b], [-c, a]]))

    def canonical(self) -> "GroupElement":
        return GroupElement(canonical_sign_batch(self.m[None])[0])

    def same_as(self, other: "GroupElement", tol: float = DET_TOL) -> bool:
        """Equality in PSL2(R), entrywise within ``tol``."""
        return bool(np.max(np.abs(self.canonical().m - other.canonical().m)) <= tol)

    def __repr__(self) -> str:
        return f"GroupElement({self.m.tolist()})"


@dataclass(frozen=True, eq=False)
class ProductElement:
    g1: GroupElement
    g2: GroupElement

    @classmethod
    def identity(cls) -> "ProductElement":
        return cls(GroupElement.identity(), GroupElement.identity())

    def __matmul__(self, other: "ProductElement") -> "ProductElement":
        return ProductElement(self.g1 @ other.g1, self.g2 @ other.g2)

    def inverse(self) -> "ProductElement":
        return ProductElement(self.g1.inverse(), self.g2.inverse())

    @property
    def m(self) -> np.ndarray:
        return np.stack([self.g1.m, self.g2.m])


Element = Union[GroupElement, ProductElement]


@dataclass(frozen=True)
class CartanVector:
    mu1: float
    mu2: float = 0.0

    def __post_init__(self):
        if self.mu1 < 0 or self.mu2 < 0:
            raise ValueError("Cartan coordinates are nonnegative")

    @property
    def norm(self) -> float:
        """Maximum norm on the Cartan subalgebra of the product."""
        return max(self.mu1, self.mu2)


def cartan_mu_batch(m: np.ndarray) -> np.ndarray:
    """Cartan projection of a stack of det-one matrices with shape (..., 2, 2).

    ``|g|_F^2 / 2 = 1 + ((a-d)^2 + (b+c)^2) / 2`` for ``det g = 1``; the
    excess over 1 is formed directly so that near-identity elements keep
    full relative accuracy.
    """
    m = np.asarray(m, dtype=float)
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    y = 0.5 * ((a - d) ** 2 + (b + c) ** 2)
    return np.log1p(y + np.sqrt(y * (y + 2.0)))


def cartan_mu(g: GroupElement) -> float:
    return float(cartan_mu_batch(g.m))


def iwasawa_H_batch(m: np.ndarray) -> np.ndarray:
    """Log of the A-part of ``g = k a n`` with ``a = diag(e^{H/2}, e^{-H/2})``."""
    m = np.asarray(m, dtype=float)
    return np.log(m[..., 0, 0] ** 2 + m[..., 1, 0] ** 2)


def iwasawa_H(g: GroupElement) -> float:
    return float(iwasawa_H_batch(g.m))


def product_mu(p: ProductElement) -> CartanVector:
    return CartanVector(cartan_mu(p.g1), cartan_mu(p.g2))


def rotation_batch(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape + (2, 2))
    out[..., 0, 0], out[..., 0, 1] = c, -s
    out[..., 1, 0], out[..., 1, 1] = s, c
    return out


def rotation(theta: float) -> GroupElement:
    return GroupElement(rotation_batch(theta))


def diagonal(t: float) -> GroupElement:
    """``a_t = diag(e^{t/2}, e^{-t/2})``, translation length ``t``."""
    return GroupElement(np.diag([math.exp(t / 2), math.exp(-t / 2)]))


def mobius(g: GroupElement, z: complex) -> complex:
    (a, b), (c, d) = g.m
    return (a * z + b) / (c * z + d)


def canonical_sign_batch(m: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Flip signs so the first nonzero entry (row-major) of each matrix is positive.

    Works on shape (N, 2, 2); entries with ``|x| <= tol * scale`` count as zero.
    """
    flat = m.reshape(m.shape[0], 4)
    scale = np.max(np.abs(flat), axis=1, keepdims=True)
    nonzero = np.abs(flat) > tol * scale
    first = np.argmax(nonzero, axis=1)
    lead = flat[np.arange(flat.shape[0]), first]
    sign = np.where(lead < 0, -1.0, 1.0)
    return m * sign[:, None, None]


def renormalize_batch(m: np.ndarray) -> np.ndarray:
    """Divide by ``sqrt(det)`` wherever the determinant drifted beyond 1e-12.

    For large entries ``ad - bc`` is mostly cancellation noise; drift below
    that noise level is left alone.
    """
    ad = m[..., 0, 0] * m[..., 1, 1]
    bc = m[..., 0, 1] * m[..., 1, 0]
    det = ad - bc
    noise = 64 * np.finfo(float).eps * (np.abs(ad) + np.abs(bc))
    drift = (np.abs(det - 1.0) > np.maximum(RENORM_TOL, noise)) & (det > 0)
    if np.any(drift):
        m = m.copy()
        m[drift] /= np.sqrt(det[drift])[..., None, None]
    return m


_FORBIDDEN_LABEL_CHARS = set(" \t\n,\"'^")


@dataclass(frozen=True)
class GeneratorSet:
    """Generators of a subgroup of SL2(R) or SL2(R) x SL2(R).

    ``generators``/``labels`` are the user-supplied ones; when ``symmetrized``
    the missing inverses are appended as ``label^-1``. ``inverse`` maps each
    letter of the alphabet to the index of its inverse letter, or -1.
    """

    model: str
    generators: tuple
    labels: tuple
    symmetrized: bool = True
    inverse: tuple = field(default=())

    def __post_init__(self):
        if self.model not in ("sl2r", "product_sl2r"):
            raise ConfigError(f"unknown model {self.model!r}")
        if len(self.generators) != len(self.labels):
            raise ConfigError("labels and generators differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError("generator labels must be unique")
        kind = GroupElement if self.model == "sl2r" else ProductElement
        for g in self.generators:
            if not isinstance(g, kind):
                raise ConfigError(f"model {self.model} needs {kind.__name__} generators")
        if not self.inverse and self.generators:
            object.__setattr__(self, "inverse", tuple(_inverse_pairs(self.matrices())))

    @classmethod
    def build(cls, model: str, generators: Sequence[Element], labels: Sequence[str],
              symmetrize: bool = True) -> "GeneratorSet":
        gens, labs = list(generators), [str(x) for x in labels]
        for lab in labs:
            if not lab or _FORBIDDEN_LABEL_CHARS & set(lab):
                raise ConfigError(f"invalid generator label {lab!r}")
        if len(set(labs)) != len(labs):
            raise ConfigError("generator labels must be unique")
        if symmetrize:
            base = cls(model, tuple(gens), tuple(labs), False)
            for i, (g, lab) in enumerate(zip(list(gens), list(labs))):
                if base.inverse[i] < 0:
                    gens.append(g.inverse())
                    labs.append(f"{lab}^-1")
        return cls(model, tuple(gens), tuple(labs), symmetrize)

    def __len__(self) -> int:
        return len(self.generators)

    @property
    def is_product(self) -> bool:
        return self.model == "product_sl2r"

    def matrices(self) -> np.ndarray:
        """Stack of generator matrices, shape (k, 2, 2) or (k, 2, 2, 2)."""
        return np.stack([g.m for g in self.generators])

    def factor(self, i: int) -> "GeneratorSet":
        """Generators of ``pr_i`` of a split product, dropping identity components."""
        if not self.is_product:
            raise ConfigError("factor() needs a product generator set")
        gens, labs = [], []
        for g, lab in zip(self.generators, self.labels):
            comp = g.g1 if i == 1 else g.g2
            if not comp.same_as(GroupElement.identity()):
                gens.append(comp)
                labs.append(lab)
        return GeneratorSet("sl2r", tuple(gens), tuple(labs), self.symmetrized)

    def is_split(self) -> bool:
        """True when every generator has one trivial component, so the group is
        the direct product of the groups generated in each factor."""
        if not self.is_product:
            return False
        e = GroupElement.identity()
        return all(g.g1.same_as(e) or g.g2.same_as(e) for g in self.generators)


def _inverse_pairs(mats: np.ndarray) -> list[int]:
    """Index of each generator's inverse among the generators (PSL sense), or -1."""
    k = mats.shape[0]
    out = [-1] * k
    for i in range(k):
        for j in range(k):
            prod = (mats[i] @ mats[j]).reshape(-1, 2, 2)
            if all(_is_pm_identity(p) for p in prod):
                out[i] = j
                break
    return out


def _is_pm_identity(prod: np.ndarray) -> bool:
    return any(np.max(np.abs(prod - sign * np.eye(2))) <= DET_TOL for sign in (1.0, -1.0))


def _parse_matrix(value: Any, where: str) -> GroupElement:
    try:
        arr = _as_matrix(value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    try:
        return GroupElement(arr)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_group_config(doc: Union[str, dict]) -> GeneratorSet:
    """Validate a group configuration (JSON text or decoded mapping).

    Schema::

        {"model": "sl2r" | "product_sl2r",
         "generators": [{"label": "a", "m": [[a, b], [c, d]]}
                        | {"label": "a", "m1": [[...]], "m2": [[...]]}],
         "symmetrize": true | false}
    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("group config must be a JSON object")
    unknown = set(doc) - {"model", "generators", "symmetrize", "name", "description"}
    if unknown:
        raise ConfigError(f"unknown keys in group config: {sorted(unknown)}")
    model = doc.get("model")
    if model not in ("sl2r", "product_sl2r"):
        raise ConfigError(f"'model' must be 'sl2r' or 'product_sl2r', got {model!r}")
    gens_doc = doc.get("generators")
    if not isinstance(gens_doc, list) or not gens_doc:
        raise ConfigError("'generators' must be a nonempty list")
    symmetrize = doc.get("symmetrize", True)
    if not isinstance(symmetrize, bool):
        raise ConfigError("'symmetrize' must be a boolean")
    gens, labels = [], []
    for i, entry in enumerate(gens_doc):
        where = f"generators[{i}]"
        if not isinstance(entry, dict) or not isinstance(entry.get("label"), str):
            raise ConfigError(f"{where}: needs a string 'label'")
        labels.append(entry["label"])
        if model == "sl2r":
            if set(entry) != {"label", "m"}:
                raise ConfigError(f"{where}: sl2r generators take exactly 'label' and 'm'")
            gens.append(_parse_matrix(entry["m"], where))
        else:
            if set(entry) != {"label", "m1", "m2"}:
                raise ConfigError(f"{where}: product generators take exactly 'label', 'm1', 'm2'")
            gens.append(ProductElement(_parse_matrix(entry["m1"], where + ".m1"),
                                       _parse_matrix(entry["m2"], where + ".m2")))
    return GeneratorSet.build(model, gens, labels, symmetrize)


def load_group_config(path: Union[str, Path]) -> GeneratorSet:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_group_config(text)


def to_config(gens: GeneratorSet, only_base: bool = True) -> dict:
    """Serialize back to the config schema (inverses dropped when symmetrized)."""
    out = []
    for g, lab in zip(gens.generators, gens.labels):
        if only_base and gens.symmetrized and lab.endswith("^-1"):
            continue
        if isinstance(g, ProductElement):
            out.append({"label": lab, "m1": g.g1.m.tolist(), "m2": g.g2.m.tolist()})
        else:
            out.append({"label": lab, "m": g.m.tolist()})
    return {"model": gens.model, "generators": out, "symmetrize": gens.symmetrized}
