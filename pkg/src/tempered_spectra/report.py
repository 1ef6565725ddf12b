"""Analysis configuration and end-to-end orchestration.

``run_analysis`` goes from a generator set to the JSON report and its CSV
sidecars. The report is a pure function of the configuration and the
tool version; wall-clock timings and thread counts are returned
separately so that reports stay byte-identical across runs.
"""
from __future__ import annotations

import io
import json
import math
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .exponents import (
    DEFAULT_APERTURES,
    PLATEAU_TOL,
    TAIL_FRACTION,
    DirectionalExponent,
    ExponentEstimate,
    GrowthIndicator,
    default_strip_grid,
    delta_of_ball,
    delta_of_component,
    directional_delta,
    growth_indicator,
    limit_cone,
    write_rays_csv,
    write_strip_csv,
)
from .groups import ConfigError, GeneratorSet, parse_group_config, to_config
from .orbit import ProductBall, counting_series, enumerate_ball, write_counts_csv
from .spectra import (
    DEFAULT_NU,
    GREEN_CROSSOVER,
    averaged_convergence_test,
    rank_one_bottom,
    spectral_rectangle,
    write_convergence_csv,
    write_green_csv,
)
from .symspace import make_model

__all__ = [
    "AnalysisConfig",
    "AnalysisResult",
    "parse_analysis_config",
    "load_analysis_config",
    "run_analysis",
    "dumps",
    "jsonable",
]

TOOL_NAME = "tempered-spectra"

_KEYS = {
    "group", "max_word_length", "counting_mode", "strip_grid", "aperture_schedule",
    "r_grid_points", "rays", "b_grid", "nu_grid", "green_b", "green_t", "tail_fraction",
    "plateau_tol", "seed", "output_dir", "dedup_tolerance",
}


@dataclass(frozen=True)
class AnalysisConfig:
    group: GeneratorSet
    group_source: str
    max_word_length: int
    counting_mode: str = "set"
    strip_grid: tuple | None = None
    aperture_schedule: tuple = DEFAULT_APERTURES
    r_grid_points: int = 256
    rays: int = 9
    b_grid: tuple | None = None
    nu_grid: tuple = (DEFAULT_NU,)
    green_b: tuple | None = None
    green_t: tuple | None = None
    tail_fraction: float = TAIL_FRACTION
    plateau_tol: float = PLATEAU_TOL
    seed: int = 0
    output_dir: str = "out"
    dedup_tolerance: float = 1e-9

    def echo(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "group"}
        d["group"] = to_config(self.group)
        return d


def _floats(value: Any, key: str, *, sorted_: str | None = "increasing") -> tuple:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{key}' must be a nonempty list of numbers")
    out = []
    for x in value:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigError(f"'{key}' entries must be finite numbers")
        out.append(float(x))
    pairs = list(zip(out, out[1:]))
    if sorted_ == "increasing" and any(b <= a for a, b in pairs):
        raise ConfigError(f"'{key}' must be strictly increasing")
    if sorted_ == "decreasing" and any(b >= a for a, b in pairs):
        raise ConfigError(f"'{key}' must be strictly decreasing")
    return tuple(out)


def _int(value: Any, key: str, lo: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < lo:
        raise ConfigError(f"'{key}' must be an integer >= {lo}")
    return value


def parse_analysis_config(doc: dict | str, base_dir: Path | None = None) -> AnalysisConfig:
    """Validate an analysis config; a bare group config gets default parameters."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("analysis config must be a JSON object")
    base_dir = Path(".") if base_dir is None else base_dir
    if "group" not in doc and "generators" in doc:
        doc = {"group": doc, "max_word_length": 8}
    unknown = set(doc) - _KEYS
    if unknown:
        raise ConfigError(f"unknown keys in analysis config: {sorted(unknown)}")
    if "group" not in doc:
        raise ConfigError("analysis config needs a 'group' (path or inline object)")
    src = doc["group"]
    if isinstance(src, str):
        path = (base_dir / src) if not Path(src).is_absolute() else Path(src)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read group config {path}: {exc}") from None
        group, source = parse_group_config(text), src
    elif isinstance(src, dict):
        group, source = parse_group_config(src), "inline"
    else:
        raise ConfigError("'group' must be a path or an object")
    if "max_word_length" not in doc:
        raise ConfigError("'max_word_length' is required")
    kw: dict = {"group": group, "group_source": source,
                "max_word_length": _int(doc["max_word_length"], "max_word_length", 1)}
    if "counting_mode" in doc:
        if doc["counting_mode"] not in ("set", "multiset"):
            raise ConfigError("'counting_mode' must be 'set' or 'multiset'")
        kw["counting_mode"] = doc["counting_mode"]
    if doc.get("strip_grid") is not None:
        kw["strip_grid"] = _floats(doc["strip_grid"], "strip_grid")
        if kw["strip_grid"][0] < 0:
            raise ConfigError("'strip_grid' entries must be nonnegative")
    if "aperture_schedule" in doc:
        aps = _floats(doc["aperture_schedule"], "aperture_schedule", sorted_="decreasing")
        if any(not 0 < a < math.pi / 2 for a in aps):
            raise ConfigError("apertures must lie in (0, pi/2)")
        kw["aperture_schedule"] = aps
    if "r_grid_points" in doc:
        kw["r_grid_points"] = _int(doc["r_grid_points"], "r_grid_points", 16)
    if "rays" in doc:
        kw["rays"] = _int(doc["rays"], "rays", 2)
    for key in ("b_grid", "green_b", "green_t", "nu_grid"):
        if key in doc:
            kw[key] = _floats(doc[key], key)
    # every matrix model here is SL2(R)-based, so rho^2 = 1/4
    for key in ("b_grid", "green_b"):
        if key in kw and kw[key][-1] >= 0.25:
            raise ConfigError(f"'{key}' entries must lie below rho^2 = 0.25")
    if "green_t" in kw and kw["green_t"][0] <= 0:
        raise ConfigError("'green_t' entries must be positive")
    if "nu_grid" in kw and not (kw["nu_grid"][0] > 0 and kw["nu_grid"][-1] < 0.5):
        raise ConfigError("'nu_grid' entries must lie in (0, rho) = (0, 0.5)")
    for key in ("tail_fraction", "plateau_tol", "dedup_tolerance"):
        if key in doc:
            v = doc[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"'{key}' must be a positive number")
            kw[key] = float(v)
    if "tail_fraction" in kw and not kw["tail_fraction"] < 1:
        raise ConfigError("'tail_fraction' must be below 1")
    if "seed" in doc:
        kw["seed"] = _int(doc["seed"], "seed", 0)
    if "output_dir" in doc:
        if not isinstance(doc["output_dir"], str):
            raise ConfigError("'output_dir' must be a string")
        kw["output_dir"] = doc["output_dir"]
    return AnalysisConfig(**kw)


def load_analysis_config(path: str | Path) -> AnalysisConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_analysis_config(text, path.parent)


# --------------------------------------------------------------------------
# JSON helpers


def jsonable(x: Any) -> Any:
    """Plain JSON values; non-finite floats become the strings ``inf``, ``-inf``, ``nan``."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def dumps(doc: Any) -> str:
    return json.dumps(jsonable(doc), indent=2, allow_nan=False) + "\n"


def _estimate(e: ExponentEstimate, mode: str) -> dict:
    return {"value": e.value, "method": e.method, "window": list(e.window),
            "fit_r2": e.fit_r2, "sample_count": e.sample_count, "secondary": e.secondary,
            "secondary_method": e.secondary_method, "flags": list(e.flags),
            "counting_mode": mode}


def _directional(d: DirectionalExponent, mode: str) -> dict:
    return {
        "factor": d.factor,
        "sup_value": d.sup_value,
        "plateau_detected": d.plateau_detected,
        "plateau_heuristic": "last three strip values within plateau_tol",
        "method": "strip_log_count_regression",
        "counting_mode": mode,
        "per_strip": [dict(R_strip=r, raw_value=raw.value, **_estimate(e, mode))
                      for r, e, raw in zip(d.strip_grid, d.per_strip, d.raw)],
    }


def _ray(g: GrowthIndicator) -> dict:
    return {"theta": g.theta, "direction": list(g.direction), "psi": g.value,
            "method": "cone_log_count_regression_running_inf",
            "apertures": list(g.apertures),
            "per_aperture": [e.value for e in g.per_aperture],
            "windows": [list(e.window) for e in g.per_aperture]}


# --------------------------------------------------------------------------
# orchestration


@dataclass
class AnalysisResult:
    report: dict
    sidecars: dict                   # file name -> text
    timings: dict = field(default_factory=dict)
    ball: object = field(default=None, repr=False, compare=False)


def _csv(writer, *args) -> str:
    buf = io.StringIO()
    writer(*args, buf)
    return buf.getvalue()


def run_analysis(cfg: AnalysisConfig, threads: int = 1, cap: int | None = None) -> AnalysisResult:
    timings: dict = {}
    t0 = time.perf_counter()
    gens = cfg.group
    model = make_model("sl2r")
    rho = model.rho_norm
    mode = cfg.counting_mode
    ball = enumerate_ball(gens, cfg.max_word_length, mode=mode, tol=cfg.dedup_tolerance,
                          threads=threads, cap=cap)
    timings["enumerate"] = time.perf_counter() - t0
    t1 = time.perf_counter()
    pts, tail = cfg.r_grid_points, cfg.tail_fraction
    product = gens.is_product
    flags: list = []
    sidecars: dict = {}

    ball_doc = {"size": ball.size, "max_norm": ball.max_norm,
                "complete_radius": ball.complete_radius(),
                "max_word_length": cfg.max_word_length, "counting_mode": mode,
                "model": gens.model,
                "representation": "lazy_product" if isinstance(ball, ProductBall)
                else "materialized",
                "word_length_per_factor": isinstance(ball, ProductBall)}
    if product:
        ball_doc["complete_radius_1"] = ball.complete_radius(1)
        ball_doc["complete_radius_2"] = ball.complete_radius(2)

    R_counts = np.linspace(0.0, ball.max_norm, pts)
    sidecars["counts.csv"] = _csv(write_counts_csv, R_counts, counting_series(ball, R_counts))

    joint = delta_of_ball(ball, pts, tail)
    deltas = {"joint": _estimate(joint, mode)}
    for f in ((1, 2) if product else ()):
        deltas[f"factor_{f}"] = _estimate(delta_of_component(ball, f, pts, tail), mode)
    for name, d in deltas.items():
        if "estimator_disagreement" in d["flags"]:
            flags.append(f"delta_{name}: estimator disagreement > 0.1")

    report: dict = {
        "tool": {"name": TOOL_NAME, "version": __version__},
        "config": cfg.echo(),
        "norm": "maximum norm on the Cartan subspace of the product" if product
        else "Riemannian distance",
        "ball": ball_doc,
        "delta_global": deltas,
    }

    b_grid = cfg.b_grid or tuple(rho * rho * f for f in (-4.0, -2.0, 0.0, 0.4, 0.6, 0.8, 0.96))
    conv_rows, conv_results = [], []
    if product:
        dirs = {}
        for f in (1, 2):
            grid = cfg.strip_grid or default_strip_grid(ball, f)
            d = directional_delta(ball, f, grid, pts, tail, cfg.plateau_tol)
            dirs[f] = d
            sidecars[f"strips_factor_{f}.csv"] = _csv(write_strip_csv, d)
            if not d.plateau_detected:
                flags.append(f"delta_{f}: no plateau in strip grid, sup is a lower bound")
        report["directional"] = {f"factor_{f}": _directional(d, mode) for f, d in dirs.items()}

        thetas = np.linspace(0.0, math.pi / 2, cfg.rays)
        rays = [growth_indicator(ball, [math.cos(t), math.sin(t)], cfg.aperture_schedule,
                                 pts, tail) for t in thetas]
        sidecars["psi_rays.csv"] = _csv(write_rays_csv, rays)
        report["growth_indicator"] = {"psi_at_zero": 0.0, "norm": "maximum",
                                      "rays": [_ray(g) for g in rays]}
        lc = limit_cone(ball)
        report["limit_cone"] = {"angular_hull": list(lc.angular_hull) if lc.angular_hull else None,
                                "radius_floor": lc.radius_floor, "empty": lc.empty,
                                "n_directions": int(lc.directions.shape[0]),
                                "directions_subsampled": lc.sampled}
        region = spectral_rectangle(dirs[1].sup_value, dirs[2].sup_value, model, model)
        provenance = {
            "delta_1": dirs[1].sup_value, "delta_2": dirs[2].sup_value,
            "plateau_1": dirs[1].plateau_detected, "plateau_2": dirs[2].plateau_detected,
            "method": "directional strip exponents (sup over strip grid)",
            "windows_1": [list(e.window) for e in dirs[1].per_strip],
            "windows_2": [list(e.window) for e in dirs[2].per_strip],
            "counting_mode": mode,
        }
        for f in (1, 2):
            for nu in cfg.nu_grid:
                for b in b_grid:
                    r = averaged_convergence_test(ball, model, b, nu, dirs[f].sup_value, factor=f,
                                                  strip_width=dirs[f].strip_grid[-1])
                    conv_results.append(r)
                    conv_rows.append({"factor": f, "b": b, "nu": nu, "predicted": r.predicted,
                                      "increment_ratio": r.increment_ratio, "stable": r.stable,
                                      "b_critical": r.b_critical, "strip_width": r.strip_width})
    else:
        region = spectral_rectangle(joint.value, None, model)
        provenance = {"delta_1": joint.value, "method": joint.method,
                      "window_1": list(joint.window), "counting_mode": mode}
        report["rank_one_bottom"] = {"value": rank_one_bottom(joint.value, rho),
                                     "delta": joint.value, "rho": rho}
        for nu in cfg.nu_grid:
            for b in b_grid:
                r = averaged_convergence_test(ball, model, b, nu, joint.value)
                conv_results.append(r)
                conv_rows.append({"factor": 1, "b": b, "nu": nu, "predicted": r.predicted,
                                  "increment_ratio": r.increment_ratio, "stable": r.stable,
                                  "b_critical": r.b_critical, "strip_width": None})

    region_doc = {"re_bound_1": region.re_bound_1, "re_bound_2": region.re_bound_2,
                  "tempered": region.tempered, "p_min": region.p_min,
                  "contains_imaginary_axis": region.contains_imaginary_axis(),
                  "provenance": provenance}
    report["spectral_region"] = region_doc
    report["convergence"] = {"diagnostic": "increment over the last tenth of R below 0.01",
                             "rows": conv_rows}
    sidecars["convergence.csv"] = _csv(write_convergence_csv, conv_results)

    green_b = cfg.green_b or (0.0, 0.1, 0.2)
    green_t = cfg.green_t or tuple(float(x) for x in np.linspace(0.05, 5.0, 100))
    sidecars["green_curves.csv"] = _csv(write_green_csv, model, min(green_b), green_b, green_t)
    report["green"] = {"crossover_t": GREEN_CROSSOVER, "constants": "set to 1 (up to constants)",
                       "z": min(green_b), "b_values": list(green_b)}
    report["flags"] = flags
    sidecars["spectral_region.json"] = dumps(region_doc)
    timings["analyze"] = time.perf_counter() - t1
    timings["threads"] = threads
    return AnalysisResult(report, sidecars, timings, ball)
