"""Acceptance criteria 1-9, each recorded as one pass/fail line in the terminal summary."""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from tempered_spectra import fixtures as fx
from tempered_spectra.cli import main
from tempered_spectra.exponents import delta_of_ball, directional_delta, limit_cone
from tempered_spectra.groups import cartan_mu_batch, rotation_batch
from tempered_spectra.orbit import counting_series, enumerate_ball, strip_series
from tempered_spectra.report import parse_analysis_config, run_analysis
from tempered_spectra.spectra import (
    SpectralRegion,
    averaged_convergence_test,
    b_critical,
    rank_one_bottom,
    spectral_rectangle,
    temperedness_verdict,
)
from tempered_spectra.symspace import (
    RankOneModel,
    c_function,
    make_model,
    plancherel_density,
    spherical_function,
    spherical_function_quadrature,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SL2 = make_model("sl2r")


class Check:
    """Collects sub-checks so a criterion reports every failure, then asserts once."""

    def __init__(self):
        self.failures = []

    def __call__(self, ok, what):
        if not ok:
            self.failures.append(what)

    @property
    def ok(self):
        return not self.failures


def _finish(record, n, check, seconds, budget, detail):
    if seconds >= budget:
        check.failures.append(f"runtime {seconds:.1f} s >= {budget} s")
    msg = detail if check.ok else detail + "; failed: " + "; ".join(check.failures[:5])
    record(n, check.ok, msg, seconds)
    assert check.ok, msg


# --------------------------------------------------------------------------


def test_criterion_1_special_function_exactness(record_acceptance):
    t0 = time.perf_counter()
    check = Check()
    models = [SL2] + [make_model("hyperbolic_n", n) for n in (2, 3, 4, 7)] + [
        RankOneModel(4, 2, 1), RankOneModel(8, 4, 3)]
    for m in models:
        check(abs(c_function(m, m.rho_norm) - 1) < 1e-10, f"c(rho) on {m.name}")
    rng = np.random.default_rng(20)
    for lam in rng.uniform(-3, 3, 20) + 1j * rng.uniform(-3, 3, 20):
        for m in (SL2, models[2]):
            check(abs(spherical_function(m, lam, 0.0) - 1) < 1e-10, f"phi_{lam}(0)")
    lams = [1j * nu for nu in np.linspace(0.2, 5, 5)] + list(np.linspace(-0.45, 0.45, 5))
    ts = np.linspace(0, 5, 10)
    worst_sym = worst_quad = 0.0
    for lam in lams:
        for t in ts:
            for m in (SL2, models[2]):
                d = abs(spherical_function(m, lam, t) - spherical_function(m, -lam, t))
                worst_sym = max(worst_sym, d)
            if t > 0:
                q = abs(spherical_function(SL2, lam, t) - spherical_function_quadrature(lam, t))
                worst_quad = max(worst_quad, q)
    check(worst_sym < 1e-8, f"symmetry {worst_sym:.2e}")
    check(worst_quad < 1e-6, f"quadrature {worst_quad:.2e}")
    secs = time.perf_counter() - t0
    _finish(record_acceptance, 1, check, secs, 10,
            f"symmetry err {worst_sym:.1e}, quadrature err {worst_quad:.1e}")


def test_criterion_2_plancherel_oracle(record_acceptance):
    t0 = time.perf_counter()
    check = Check()
    nus = np.linspace(0, 10, 2001)
    oracle = math.pi * nus * np.tanh(math.pi * nus)
    got = np.array([plancherel_density(SL2, nu) for nu in nus])
    err = float(np.max(np.abs(got - oracle)))
    check(err < 1e-8, f"max abs err {err:.2e}")
    secs = time.perf_counter() - t0
    _finish(record_acceptance, 2, check, secs, 5, f"max abs err {err:.1e} on 2001 nu values")


def _jacobi_mu(m):
    a = np.einsum("nji,njk->nik", m, m)
    p, q, r = a[:, 0, 0], a[:, 0, 1], a[:, 1, 1]
    lam = 0.5 * (p + r) + np.hypot(0.5 * (p - r), q)
    return np.log(lam)


def test_criterion_3_cartan_correctness(record_acceptance):
    t0 = time.perf_counter()
    check = Check()
    rng = np.random.default_rng(3)
    n = 10_000
    k1, k2 = rotation_batch(rng.uniform(0, 2 * np.pi, n)), rotation_batch(rng.uniform(0, 2 * np.pi, n))
    t = rng.uniform(0, 12, n)
    a = np.zeros((n, 2, 2))
    a[:, 0, 0], a[:, 1, 1] = np.exp(t / 2), np.exp(-t / 2)
    unip = np.tile(np.eye(2), (n, 1, 1))
    unip[:, 0, 1] = rng.normal(0, 2, n)
    g = k1 @ a @ unip @ k2
    mu = cartan_mu_batch(g)
    err_svd = float(np.max(np.abs(mu - _jacobi_mu(g))))
    # upper half plane: w = g.i, distance to i
    num = g[:, 0, 0] * 1j + g[:, 0, 1]
    den = g[:, 1, 0] * 1j + g[:, 1, 1]
    w = num / den
    dist = np.arccosh(1 + np.abs(w - 1j) ** 2 / (2 * w.imag))
    err_dist = float(np.max(np.abs(mu - dist)))
    inv = np.stack([np.stack([g[:, 1, 1], -g[:, 0, 1]], -1),
                    np.stack([-g[:, 1, 0], g[:, 0, 0]], -1)], -2)
    err_inv = float(np.max(np.abs(cartan_mu_batch(inv) - mu)))
    kk1, kk2 = rotation_batch(rng.uniform(0, 7, n)), rotation_batch(rng.uniform(0, 7, n))
    err_k = float(np.max(np.abs(cartan_mu_batch(kk1 @ g @ kk2) - mu)))
    h = np.roll(g, 1, axis=0)
    excess = float(np.max(cartan_mu_batch(g @ h) - mu - cartan_mu_batch(h)))
    check(err_svd < 1e-9, f"svd {err_svd:.2e}")
    check(err_dist < 1e-9, f"distance {err_dist:.2e}")
    check(err_inv < 1e-9, f"inverse {err_inv:.2e}")
    check(err_k < 1e-9, f"bi-K {err_k:.2e}")
    check(excess <= 1e-9, f"subadditivity excess {excess:.2e}")
    secs = time.perf_counter() - t0
    _finish(record_acceptance, 3, check, secs, 10,
            f"svd {err_svd:.1e}, distance {err_dist:.1e}, inverse {err_inv:.1e}, "
            f"bi-K {err_k:.1e}, subadditivity excess {excess:.1e}")


def test_criterion_4_cyclic_fixture(record_acceptance):
    t0 = time.perf_counter()
    check = Check()
    ball = enumerate_ball(fx.cyclic(1.0), 200)
    R = np.concatenate([np.arange(0, 201, dtype=float), np.linspace(0, 200, 4001)])
    exact = bool(np.array_equal(counting_series(ball, R), 2 * np.floor(R) + 1))
    check(exact, "N(R) != 2 floor(R) + 1")
    est = delta_of_ball(ball)
    check(-0.05 <= est.value <= 0.05, f"delta {est.value}")
    bottom = rank_one_bottom(est.value, SL2.rho_norm)
    check(bottom == 0.25, f"bottom {bottom}")
    secs = time.perf_counter() - t0
    _finish(record_acceptance, 4, check, secs, 5,
            f"N(R) exact={exact}, delta={est.value:.4f}, bottom={bottom}")


@pytest.fixture(scope="module")
def self_joining_run():
    cfg = parse_analysis_config((CONFIGS / "self_joining.analysis.json").read_text(), CONFIGS)
    t0 = time.perf_counter()
    res = run_analysis(cfg, threads=1)
    return cfg, res, time.perf_counter() - t0


def test_criterion_5_self_joining(record_acceptance, self_joining_run):
    cfg, res, secs = self_joining_run
    check = Check()
    ball = res.ball
    check(cfg.max_word_length == 12, "word length")
    shift = max(float(x) for x in cartan_mu_batch(cfg.group.matrices()).ravel())
    R = np.linspace(0, ball.max_norm, 512)
    for width in (1.0, 4.0, 8.0, 16.0):
        for factor in (1, 2):
            counts = strip_series(ball, factor, width, R)
            beyond = counts[R >= width + shift]
            check(beyond.size > 0 and np.all(beyond == beyond[0]),
                  f"strip {width} factor {factor} not constant")
    rep = res.report
    d1 = rep["directional"]["factor_1"]["sup_value"]
    d2 = rep["directional"]["factor_2"]["sup_value"]
    region = rep["spectral_region"]
    check(d1 == -math.inf and d2 == -math.inf, f"deltas {d1}, {d2}")
    check(region["tempered"] is True, "not tempered")
    check(region["p_min"] == 2, f"p_min {region['p_min']}")
    _finish(record_acceptance, 5, check, secs, 60,
            f"{ball.size} elements, delta_1={d1}, delta_2={d2}, tempered={region['tempered']}, "
            f"p_min={region['p_min']}")


def test_criterion_6_product_fixture(record_acceptance):
    t0 = time.perf_counter()
    check = Check()
    cfg = parse_analysis_config((CONFIGS / "product.analysis.json").read_text(), CONFIGS)
    ball = enumerate_ball(cfg.group, cfg.max_word_length)
    stand = [enumerate_ball(cfg.group.factor(i), cfg.max_word_length) for i in (1, 2)]
    details = []
    for i in (1, 2):
        d = directional_delta(ball, i).sup_value
        s = delta_of_ball(stand[i - 1]).value
        check(abs(d - s) <= 0.1, f"factor {i}: {d} vs {s}")
        details.append(f"delta_{i}={d:.4f} vs {s:.4f}")
    hull = limit_cone(ball).angular_hull
    check(hull is not None and abs(hull[0]) <= 0.05 and abs(hull[1] - math.pi / 2) <= 0.05,
          f"hull {hull}")
    secs = time.perf_counter() - t0
    _finish(record_acceptance, 6, check, secs, 120,
            ", ".join(details) + f", hull=({hull[0]:.3f}, {hull[1]:.3f})")


def _intro_bottom(d, rho):
    return rho * rho if d < rho else rho * rho - (d - rho) ** 2


def test_criterion_7_spectrum_maps(record_acceptance):
    t0 = time.perf_counter()
    check = Check()
    rho = 0.5
    grid = np.linspace(-0.5, 1.5, 100)
    check(all(rank_one_bottom(d, rho) == _intro_bottom(d, rho) for d in grid), "bottom formula")
    check(rank_one_bottom(rho, rho) == rho * rho, "value at the branch")
    check(abs(rank_one_bottom(rho + 1e-12, rho) - rho * rho) < 1e-15, "continuity")
    h3 = make_model("hyperbolic_n", 3)
    for d1 in grid:
        d2 = 1.5 - d1
        r = spectral_rectangle(d1, d2, SL2, h3)
        check(r.re_bound_1 == max(0.0, d1 - 0.5) and r.re_bound_2 == max(0.0, d2 - 1.0),
              f"re_bounds at {d1}")
    tempered, p = temperedness_verdict(SpectralRegion(rho / 2, 0.0, False, 0), [SL2, SL2])
    check(p == 4 and not tempered, f"p_min {p}")
    secs = time.perf_counter() - t0
    _finish(record_acceptance, 7, check, secs, 1, f"100-point grid exact, p_min at rho/2 = {p}")


def test_criterion_8_convergence_consistency(record_acceptance, self_joining_run, cyclic_ball,
                                             product_ball):
    t0 = time.perf_counter()
    check = Check()
    rho = SL2.rho_norm
    b_grid = np.linspace(-2.0, 0.249, 46)
    nu_grid = (1e-3, 1e-2, 5e-2)
    cases = [("cyclic", cyclic_ball, 1, delta_of_ball(cyclic_ball).value)]
    sj = self_joining_run[1].ball
    for f in (1, 2):
        cases.append((f"self-joining/{f}", sj, f, directional_delta(sj, f).sup_value))
        cases.append((f"product/{f}", product_ball, f, directional_delta(product_ball, f).sup_value))
    tested = agreed = 0
    for name, ball, f, delta in cases:
        bc = b_critical(delta, rho)
        for nu in nu_grid:
            for b in b_grid:
                if abs(b - bc) <= 0.05:
                    continue
                r = averaged_convergence_test(ball, SL2, float(b), nu, delta, factor=f)
                tested += 1
                if r.predicted == r.stable:
                    agreed += 1
                else:
                    check(False, f"{name} b={b:.3f} nu={nu}: predicted {r.predicted}, "
                                 f"ratio {r.increment_ratio:.3g}")
    secs = time.perf_counter() - t0
    _finish(record_acceptance, 8, check, secs, 30, f"{agreed}/{tested} grid points agree")


def test_criterion_9_determinism(record_acceptance, self_joining_run, tmp_path):
    # each analyze run is held to twice the measured criterion-5 runtime
    budget = 2 * self_joining_run[2]
    check = Check()
    outs, runs = [], []
    for threads in (1, 8):
        out = tmp_path / f"t{threads}"
        t0 = time.perf_counter()
        code = main(["analyze", "--config", str(CONFIGS / "self_joining.analysis.json"),
                     "--out", str(out), "--threads", str(threads)])
        runs.append(time.perf_counter() - t0)
        check(code == 0, f"exit {code} with {threads} threads")
        outs.append((out / "report.json").read_bytes())
    same = outs[0] == outs[1]
    check(same, "reports differ")
    _finish(record_acceptance, 9, check, max(runs), budget,
            f"byte-identical={same} ({len(outs[0])} bytes), runs {runs[0]:.1f} s / {runs[1]:.1f} s "
            f"vs budget {budget:.1f} s")
