"""Command-line front end.

    trapres {poles,sweep,field,peaks,identities,junction} [--config PATH] [--eps E]
            [--branch {1,2}] [--t T] [--out DIR] [--threads N]

Every command writes CSV/JSON artifacts plus ``manifest.json`` into ``--out``.
Numbers are printed with 17 significant digits so identical inputs give
byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    build_spectral_data,
    c_F,
    peak_frequency,
    peak_solution_field,
    pole_coefficients,
    pole_value,
    quasimode_field,
    tau20_closed,
)
from .config import RunConfig, parse_config_text, resolved_as_json, truncation_dict
from .errors import TrapresError
from .exterior import limit_exterior_solution
from .geometry import in_domain, validate_spec
from .junction import JunctionFieldX, fit_tail_constants, junction_constants
from .oracle import pole_search
from .verify import _classify, failed_identities, identity_suite, sweep_compare

COMMANDS = ("poles", "sweep", "field", "peaks", "identities", "junction")

EXIT_OK, EXIT_IDENTITY, EXIT_ERROR, EXIT_COUNT = 0, 1, 2, 3


def _g(x) -> str:
    return format(float(x), ".17g")


def _num(x):
    x = float(x)
    return float(_g(x)) if math.isfinite(x) else str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


class _Writer:
    def __init__(self, out: Path):
        self.out = out
        self.files = []
        out.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str):
        p = self.out / name
        p.write_text(text, encoding="utf-8")
        self.files.append(name)


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------
def cmd_poles(cfg: RunConfig, args, w: _Writer) -> int:
    spec = cfg.spec.spec
    eps = spec.eps
    data = build_spectral_data(cfg.spec)
    rows, notes = [], []
    for n in (1, 2):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            z = pole_value(pole_coefficients(data, n), eps)
        notes += [str(c.message) for c in caught]
        rows.append(["asymptotic", n, _g(z.real), _g(z.imag), ""])
    res = pole_search(spec, eps, None, cfg.truncation, strict=False)
    main, extra = _classify(res.roots, spec, eps)
    by_k = {p.k: p for p in res.poles}
    for n, z in enumerate(main, 1):
        rows.append(["oracle", n, _g(z.real), _g(z.imag), _g(by_k[z].residual)])
    for z in extra:
        rows.append(["oracle-other-mode", 0, _g(z.real), _g(z.imag), _g(by_k[z].residual)])
    w.write("poles.csv", _csv(["source", "branch", "re", "im", "indicator"], rows))
    summary = {"schema": 1, "eps": _num(eps), "winding": res.count,
               "window": {"center": [_num(res.window.center.real), _num(res.window.center.imag)],
                          "radius": _num(res.window.radius)},
               "flags": res.flags + notes}
    w.write("poles.json", _json(summary))
    if res.count != 2 or len(main) != 2:
        print(f"pole count {res.count} in the window (branch roots {len(main)}), expected 2",
              file=sys.stderr)
        return EXIT_COUNT
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args, w: _Writer) -> int:
    data = build_spectral_data(cfg.spec)
    rep = sweep_compare(cfg.spec, data, cfg.eps_ladder, threads=args.threads, strict_fit=False)
    rep.identities = identity_suite(data, (cfg.spec.omega_minus, cfg.spec.omega_plus))
    w.write("sweep.csv", rep.to_csv())
    w.write("sweep.json", rep.to_json())
    return EXIT_IDENTITY if failed_identities(rep.identities) else EXIT_OK


def _grid_points(grid):
    xs = np.linspace(grid["x1_min"], grid["x1_max"], int(grid["nx"]))
    ys = np.linspace(grid["x2_min"], grid["x2_max"], int(grid["ny"]))
    for y in ys[::-1]:
        for x in xs:
            yield float(x), float(y)


def cmd_field(cfg: RunConfig, args, w: _Writer) -> int:
    spec = cfg.spec.spec
    data = build_spectral_data(cfg.spec)
    X = JunctionFieldX(spec.omega_minus, spec.omega_plus)
    t = args.t if args.t is not None else cfg.grid.get("t")
    lines = ["# x1 x2 re im region flag"]
    for x in _grid_points(cfg.grid):
        if not in_domain(spec, x):
            continue
        if t is None:
            fv = quasimode_field(args.branch, x, spec.eps, data, X, spec)
        else:
            fv = peak_solution_field(args.branch, t, x, spec.eps, data, cfg.source, spec, X)
        flag = "overlap" if fv.overlap else "-"
        for tag, v in fv.candidates.items():
            v = complex(v)
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                continue
            lines.append(f"{_g(x[0])} {_g(x[1])} {_g(v.real)} {_g(v.imag)} {tag} {flag}")
    w.write("field.txt", "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_peaks(cfg: RunConfig, args, w: _Writer) -> int:
    spec = cfg.spec.spec
    data = build_spectral_data(cfg.spec)
    t20 = tau20_closed(data)
    ts = [t20.real + abs(t20.imag) * j / 2.0 for j in range(-8, 9)] if args.t is None else [args.t]
    uex = limit_exterior_solution((0.0, -spec.h), cfg.source, data.k0, spec.h)
    rows = []
    for n in (1, 2):
        exp = pole_coefficients(data, n)
        for t in ts:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                k = peak_frequency(exp, t, spec.eps)
            c = c_F(n, t, data, uex)
            rows.append([n, _g(t), _g(k), _g(c.real), _g(c.imag), _g(abs(c))])
    w.write("peaks.csv", _csv(["branch", "t", "k", "re_cF", "im_cF", "abs_cF"], rows))
    return EXIT_OK


def cmd_identities(cfg: RunConfig, args, w: _Writer) -> int:
    data = build_spectral_data(cfg.spec)
    ids = identity_suite(data, (cfg.spec.omega_minus, cfg.spec.omega_plus))
    failed = failed_identities(ids)
    w.write("identities.json", _json({"schema": 1, "identities": [i.as_dict() for i in ids],
                                      "all_passed": not failed, "failed": failed}))
    for name in failed:
        print(f"identity failed: {name}", file=sys.stderr)
    return EXIT_IDENTITY if failed else EXIT_OK


def cmd_junction(cfg: RunConfig, args, w: _Writer) -> int:
    spec = cfg.spec.spec
    X = JunctionFieldX(spec.omega_minus, spec.omega_plus)
    wlen = spec.omega_len
    x1s = np.linspace(-2 * wlen, 2 * wlen, 17)
    x2s = np.linspace(-2 * wlen, 2 * wlen, 17)
    rows = [[_g(a), _g(b), _g(v)] for a, b, v in X.grid(x1s, x2s)]
    w.write("junction.csv", _csv(["xi1", "xi2", "X"], rows))
    jc = junction_constants(spec.omega_minus, spec.omega_plus)
    fit = fit_tail_constants(X)
    w.write("junction.json", _json({
        "schema": 1,
        "closed_form": {"c_omega": _num(jc.c_omega), "q_omega": _num(jc.q_omega),
                        "q_upper": _num(jc.q_upper), "c_upper": _num(jc.c_upper)},
        "tail_fit": {"c_omega": _num(fit.c_omega), "q_omega": _num(fit.q_omega),
                     "c_err": _num(fit.c_err), "q_err": _num(fit.q_err)},
    }))
    return EXIT_OK


_DISPATCH = {"poles": cmd_poles, "sweep": cmd_sweep, "field": cmd_field, "peaks": cmd_peaks,
             "identities": cmd_identities, "junction": cmd_junction}


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trapres", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="INI-style run configuration")
    ap.add_argument("--eps", type=float, help="override [channel] eps")
    ap.add_argument("--branch", type=int, choices=(1, 2), default=2)
    ap.add_argument("--t", type=float, help="peak-regime detuning (field, peaks)")
    ap.add_argument("--out", type=Path, default=Path("trapres-out"))
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--version", action="version", version=f"trapres {__version__}")
    return ap


def _load(args) -> tuple[RunConfig, str]:
    text = args.config.read_text(encoding="utf-8") if args.config else ""
    cfg = parse_config_text(text)
    if args.eps is not None:
        spec = cfg.spec.spec.with_eps(args.eps)
        cfg.spec = validate_spec(spec)
        cfg.resolved["channel"]["eps"] = args.eps
    return cfg, text


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg, text = _load(args)
    except TrapresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    w = _Writer(args.out)
    try:
        code = _DISPATCH[args.command](cfg, args, w)
    except TrapresError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_ERROR
    inputs = json.dumps({"config": text, "command": args.command, "eps": args.eps,
                         "branch": args.branch, "t": args.t}, sort_keys=True)
    manifest = {
        "schema": 1,
        "tool": "trapres",
        "version": __version__,
        "command": args.command,
        "config": resolved_as_json(cfg),
        "derived": cfg.derived,
        "truncation": truncation_dict(cfg.truncation),
        "outputs": list(w.files),
        "input_hash": hashlib.sha256(inputs.encode()).hexdigest(),
        "threads": args.threads,
        "wall_clock_s": round(time.perf_counter() - t0, 3),
        "exit_code": code,
    }
    w.write("manifest.json", _json(manifest))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
