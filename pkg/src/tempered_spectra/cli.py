"""``tempered-spectra`` command line.

Exit codes: 0 success, 2 configuration or usage error, 3 element cap
exceeded, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .groups import ConfigError, parse_group_config
from .orbit import MemoryCapExceeded, enumerate_ball, write_orbit_csv
from .report import dumps, load_analysis_config, parse_analysis_config, run_analysis
from .special import GammaPoleError, HypergeometricError
from .symspace import (
    CFunctionPoleError,
    c_function,
    make_model,
    plancherel_density,
    spherical_function,
)

EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_NUMERIC = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which matches the config-error code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tempered-spectra",
                description="Orbit growth exponents and spectral bounds for discrete groups.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="enumerate, estimate exponents, write report")
    a.add_argument("--config", required=True, help="analysis or group config (JSON)")
    a.add_argument("--out", help="output directory (default: config output_dir)")
    a.add_argument("--max-word-length", type=int)
    a.add_argument("--mode", choices=("set", "multiset"))
    a.add_argument("--threads", type=int, default=1)

    e = sub.add_parser("enumerate", help="write the word ball as CSV")
    e.add_argument("--config", required=True, help="group or analysis config (JSON)")
    e.add_argument("--max-word-length", type=int)
    e.add_argument("--mode", choices=("set", "multiset"))
    e.add_argument("--threads", type=int, default=1)
    e.add_argument("--csv", "--out", dest="csv", help="output file (default stdout)")

    s = sub.add_parser("specialfn", help="tabulate phi_lambda(t), c(lambda) and the density")
    s.add_argument("--model", choices=("sl2r", "hyperbolic"), default="sl2r")
    s.add_argument("--n", type=int, help="dimension for --model hyperbolic")
    s.add_argument("--lambda", dest="lam", required=True,
                   help="comma-separated complex values (e.g. 0.5,1j,0.2+0.3j)")
    s.add_argument("--t", required=True, help="comma-separated values or start:stop:num")
    s.add_argument("--csv", "--out", dest="csv", help="output file (default stdout)")
    return p


def _load_any(path: str) -> tuple:
    """(group, analysis-config-or-None) from either kind of config file."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from None
    if isinstance(doc, dict) and "group" in doc:
        cfg = parse_analysis_config(doc, p.parent)
        return cfg.group, cfg
    return parse_group_config(doc), None


def _complex_list(text: str) -> list:
    items = [x.strip() for x in text.split(",") if x.strip()]
    if not items:
        raise ConfigError("empty lambda grid")
    try:
        return [complex(x.replace(" ", "")) for x in items]
    except ValueError as exc:
        raise ConfigError(f"bad lambda value: {exc}") from None


def _real_grid(text: str) -> list:
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("range needs start:stop:num")
            start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
            if num < 1:
                raise ValueError("num must be positive")
            vals = list(np.linspace(start, stop, num))
        else:
            vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad t grid: {exc}") from None
    if not vals:
        raise ConfigError("empty t grid")
    if any(not math.isfinite(v) or v < 0 for v in vals):
        raise ConfigError("t values must be finite and nonnegative")
    return [float(v) for v in vals]


def _open_out(path: str | None):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _cmd_analyze(args) -> int:
    cfg = load_analysis_config(args.config)
    overrides = {}
    if args.max_word_length is not None:
        if args.max_word_length < 1:
            raise ConfigError("--max-word-length must be >= 1 for analyze")
        overrides["max_word_length"] = args.max_word_length
    if args.mode is not None:
        overrides["counting_mode"] = args.mode
    if overrides:
        cfg = replace(cfg, **overrides)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    result = run_analysis(cfg, threads=args.threads)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps(result.report), encoding="utf-8")
    for name, text in result.sidecars.items():
        (out / name).write_text(text, encoding="utf-8")
    (out / "timings.json").write_text(dumps(result.timings), encoding="utf-8")
    region = result.report["spectral_region"]
    print(f"wrote {out / 'report.json'}: tempered={str(region['tempered']).lower()} "
          f"p_min={region['p_min']}")
    return EXIT_OK


def _cmd_enumerate(args) -> int:
    gens, cfg = _load_any(args.config)
    L = args.max_word_length if args.max_word_length is not None else (
        cfg.max_word_length if cfg else None)
    if L is None:
        raise ConfigError("--max-word-length is required with a bare group config")
    if L < 0:
        raise ConfigError("--max-word-length must be >= 0")
    mode = args.mode or (cfg.counting_mode if cfg else "set")
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    ball = enumerate_ball(gens, L, mode=mode, threads=args.threads)
    fh, close = _open_out(args.csv)
    try:
        write_orbit_csv(ball, fh)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _fmt(z: complex | None) -> list:
    if z is None:
        return ["", ""]
    return [repr(float(z.real)), repr(float(z.imag))]


def _cmd_specialfn(args) -> int:
    if args.model == "hyperbolic":
        if args.n is None:
            raise ConfigError("--model hyperbolic needs --n")
        try:
            model = make_model("hyperbolic_n", args.n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        model = make_model("sl2r")
    lams = _complex_list(args.lam)
    ts = _real_grid(args.t)
    fh, close = _open_out(args.csv)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda_re", "lambda_im", "t", "phi_re", "phi_im", "c_re", "c_im", "density"])
        for lam in lams:
            try:
                c = c_function(model, lam)
            except CFunctionPoleError:
                c = None
            density = repr(plancherel_density(model, lam.imag)) if lam.real == 0 else ""
            for t in ts:
                phi = spherical_function(model, lam, t)
                w.writerow(_fmt(lam) + [repr(t)] + _fmt(phi) + _fmt(c) + [density])
    finally:
        if close:
            fh.close()
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = {"analyze": _cmd_analyze, "enumerate": _cmd_enumerate,
               "specialfn": _cmd_specialfn}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MemoryCapExceeded as exc:
        print(f"memory cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ArithmeticError, HypergeometricError, GammaPoleError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
