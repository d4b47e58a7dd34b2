"""Command-line front end: evaluate kernels, run validation suites, sweep fits, probe L^p behaviour.

Exit codes: 0 ok, 1 suite failure, 2 configuration error, 3 domain violation, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from . import __version__
from .errors import DomainViolation, InvalidParameter, NoValidB, NumericFailure, WormkernError
from .geometry import StripPoint, WormParams, lp_range, make_params

EXIT_OK, EXIT_SUITE, EXIT_CONFIG, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3, 4
COMMANDS = ("eval", "validate", "sweep", "probe-lp")
SWEEPS = ("decay", "l31ii", "l33ii", "lower-bound")
DEFAULT_POINT = [0.3, 0.2, 1.1, 0.0]


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    beta: float = 1.5 * math.pi
    h: Optional[float] = None
    c0: Optional[float] = None
    route: str = "all"
    tol: float = 1e-10
    seed: int = 0
    format: str = "csv"
    out: Optional[str] = None
    only: list = field(default_factory=list)
    points: list = field(default_factory=list)     # [{"z": [re z1, im z1, re z2, im z2], "w": [...]}]
    which: str = "decay"
    values: Optional[list] = None
    p: list = field(default_factory=lambda: [1.5, 2.0, 3.0])
    delta: float = 0.5
    sign: int = 1
    threads: int = 1

    def params(self) -> WormParams:
        return make_params(self.beta, self.h, self.c0)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        try:
            self.params()
        except InvalidParameter as exc:
            raise ConfigError(str(exc)) from None
        if not (self.tol > 0):
            raise ConfigError("tol must be positive")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        routes = ("all", "brute", "split", "expansion")
        for r in self.routes():
            if r not in routes:
                raise ConfigError(f"unknown route {r!r}; expected one of {routes}")
        from .validation import SUITES
        for s in self.only:
            if s not in SUITES:
                raise ConfigError(f"unknown suite {s!r}; expected one of {SUITES}")
        for pt in self.points:
            for key in ("z", "w"):
                if len(pt.get(key, [])) != 4:
                    raise ConfigError("each point needs z and w as [re z1, im z1, re z2, im z2]")
        if self.command == "sweep":
            if self.which not in SWEEPS:
                raise ConfigError(f"unknown sweep {self.which!r}; expected one of {SWEEPS}")
            if self.values is not None and len(self.values) == 0:
                raise ConfigError("empty sweep list")
            if self.values is not None and len(self.values) < 2:
                raise ConfigError("a fit needs at least two sweep values")
        if self.command == "probe-lp" and len(self.p) == 0:
            raise ConfigError("empty list of exponents p")
        if any(not (q > 1) for q in self.p):
            raise ConfigError("every p must exceed 1")

    def routes(self) -> list:
        if self.route == "all":
            return ["brute", "split", "expansion"]
        return [r.strip() for r in self.route.split(",")]

    def resolved(self) -> dict:
        d = asdict(self)
        d["params"] = self.params().to_dict()
        return d


# ---------------------------------------------------------------------------
# argument parsing


def _floats(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; command-line flags override it")
    common.add_argument("--beta", type=float)
    common.add_argument("--h", type=float)
    common.add_argument("--c0", type=float)
    common.add_argument("--route", help="brute, split, expansion, a comma list, or all")
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="output path (default stdout)")

    parser = argparse.ArgumentParser(prog="wormkern", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"wormkern {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate K'(z, w) by one or more routes")
    p.add_argument("--z", type=_floats, action="append", help="re z1,im z1,re z2,im z2 (repeatable)")
    p.add_argument("--w", type=_floats, action="append", help="paired with --z (default: w = z)")

    p = sub.add_parser("validate", parents=[common], help="run validation suites")
    p.add_argument("--only", action="append", help="suite name (repeatable)")

    p = sub.add_parser("sweep", parents=[common], help="fit decay rates and scaling exponents")
    p.add_argument("--which", choices=SWEEPS)
    p.add_argument("--values", type=_floats, help="comma-separated sweep values")
    p.add_argument("--delta", type=float, help="delta for the l33ii sweep")
    p.add_argument("--sign", type=int, choices=(-1, 1), help="sign of Re tau for the decay sweep")

    p = sub.add_parser("probe-lp", parents=[common], help="b-windows, Schur ratios and divergence probes")
    p.add_argument("--p", type=_floats, help="comma-separated exponents")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    data["command"] = args.command
    for key in ("beta", "h", "c0", "route", "tol", "seed", "format", "out", "which", "values", "delta", "sign", "p"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    if getattr(args, "only", None):
        data["only"] = args.only
    if getattr(args, "z", None):
        ws = args.w or []
        if ws and len(ws) != len(args.z):
            raise ConfigError("--w must be given once per --z or not at all")
        data["points"] = [{"z": z, "w": ws[k] if ws else z} for k, z in enumerate(args.z)]
    env = os.environ.get("WORMKERN_THREADS")
    if env:
        try:
            data["threads"] = max(1, int(env))
        except ValueError:
            raise ConfigError(f"WORMKERN_THREADS must be an integer (got {env!r})") from None
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def _expand_complex(row: dict) -> dict:
    out = {}
    for k, v in row.items():
        if isinstance(v, complex):
            out[f"{k}_re"], out[f"{k}_im"] = v.real, v.imag
        else:
            out[k] = v
    return out


def render(rows: list, cfg: RunConfig, kind: str, extra: Optional[dict] = None) -> str:
    """CSV (metadata on a leading '#' line) or a JSON object with the rows as an array."""
    rows = [_expand_complex(r) for r in rows]
    meta = {"wormkern_version": __version__, "report": kind, "config": cfg.resolved()}
    if extra:
        meta.update(extra)
    if cfg.format == "json":
        meta["rows"] = rows
        return json.dumps(meta, sort_keys=True, indent=1, default=str) + "\n"
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True, default=str) + "\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def emit(text: str, cfg: Optional[RunConfig]) -> None:
    if cfg is not None and cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _error(code: int, exc: BaseException) -> int:
    sys.stdout.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code},
                                sort_keys=True) + "\n")
    return code


def _pmap(fn, items, threads: int):
    """Map over items in worker processes (capped by the CPU count); results keep input order."""
    threads = min(threads, os.cpu_count() or 1)
    if threads <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, *zip(*items)))


# ---------------------------------------------------------------------------
# commands


def _point(v) -> StripPoint:
    return StripPoint(complex(v[0], v[1]), complex(v[2], v[3]))


def _eval_one(beta, h, c0, tol, zv, wv, route) -> dict:
    from .geometry import reduce
    from .kernel import TERM_NAMES, kernel_expansion, kernel_strip
    from .modes import QuadratureSpec
    params = make_params(beta, h, c0)
    quad = QuadratureSpec(tol=tol)
    z, w = _point(zv), _point(wv)
    tl = reduce(z, w)
    row = {"z1": z.z1, "z2": z.z2, "w1": w.z1, "w2": w.z2, "tau": tl.tau, "lambda": tl.lam, "route": route}
    if route == "expansion":
        br = kernel_expansion(z, w, params, quad)
        row["K"] = br.total
        for k in TERM_NAMES:
            row[k] = br.terms[k]
        row["E"] = br.error_term
        row["phi1"], row["phi2"] = br.phi_terms
        row["chi1"], row["chi2"] = br.cutoff_weights
    else:
        row["K"] = kernel_strip(z, w, params, route, quad)
    return row


def cmd_eval(cfg: RunConfig) -> int:
    points = cfg.points or [{"z": DEFAULT_POINT, "w": DEFAULT_POINT}]
    params = cfg.params()
    from .geometry import in_strip_worm
    for pt in points:
        for key in ("z", "w"):
            if not in_strip_worm(_point(pt[key]), params):
                raise DomainViolation(f"{key} = {pt[key]} is not in D'_beta (beta = {params.beta})")
    jobs = [(cfg.beta, cfg.h, cfg.c0, cfg.tol, pt["z"], pt["w"], r) for pt in points for r in cfg.routes()]
    rows = _pmap(_eval_one, jobs, cfg.threads)
    emit(render(rows, cfg, "eval"), cfg)
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    from .validation import SUITES, run_suite
    names = sorted(cfg.only or SUITES)
    jobs = [(n, cfg.beta, cfg.h, cfg.c0, cfg.tol, cfg.seed) for n in names]
    results = _pmap(run_suite, jobs, cfg.threads)
    for r in results:
        r.pop("seconds", None)      # keep reports byte-identical across runs
    ok = all(r["passed"] for r in results)
    if cfg.format == "json":
        report = {"wormkern_version": __version__, "report": "validate", "config": cfg.resolved(),
                  "passed": ok, "suites": results}
        emit(json.dumps(report, sort_keys=True, indent=1, default=str) + "\n", cfg)
    else:
        rows = []
        for r in results:
            for c in r["checks"]:
                rows.append({"suite": r["suite"], "check": c["name"], "measured": c.get("measured"),
                             "tolerance": c.get("tolerance"), "passed": c["passed"]})
        emit(render(rows, cfg, "validate", {"passed": ok}), cfg)
    return EXIT_OK if ok else EXIT_SUITE


def cmd_sweep(cfg: RunConfig) -> int:
    from . import lp_probe as lp
    import numpy as np
    params = cfg.params()
    rows = []
    if cfg.which == "decay":
        from .kernel import decay_slope
        vals = cfg.values
        x_range = (min(vals), max(vals)) if vals else (10.0, 50.0)
        route = "expansion" if cfg.route == "all" else cfg.routes()[0]
        fit = decay_slope(params, x_range, cfg.sign, route)
        xs, ys, slope, icpt, target = fit.x, np.log(fit.abs_k), fit.slope, fit.intercept, -params.nu
        label = "abs_re_tau"
    elif cfg.which == "lower-bound":
        fit = lp.lower_bound_slope(None, params, cfg.values)
        xs, ys, slope, icpt, target = fit.x, fit.y, fit.slope, fit.intercept, params.nu - 1.0
        label = "log_abs_omega1"
    else:
        law = {"l31ii": "L31ii", "l33ii": "L33ii"}[cfg.which]
        fit = lp.forelli_rudin_scaling(law, cfg.values, delta=cfg.delta)
        xs, ys, slope, icpt = np.log(fit.sweep), np.log(fit.values), fit.slope, fit.intercept
        target = -1.0 if cfg.which == "l31ii" else -cfg.delta
        label = "log_parameter"
    for x, y in zip(xs, ys):
        rows.append({"sweep": cfg.which, label: float(x), "log_value": float(y)})
    extra = {"fit": {"slope": float(slope), "intercept": float(icpt), "expected_slope": float(target)}}
    for r in rows:
        r["fitted_slope"] = float(slope)
        r["fitted_intercept"] = float(icpt)
    emit(render(rows, cfg, "sweep", extra), cfg)
    return EXIT_OK


def _probe_one(beta, h, c0, p, seed) -> dict:
    from . import lp_probe as lp
    params = make_params(beta, h, c0)
    p_min, p_max = lp_range(params)
    lo, hi = lp.b_window(p, params)
    plo, phi = lp.printed_b_window(p, params)
    row = {"p": p, "p_min": p_min, "p_max": p_max, "in_range": bool(p_min < p < p_max),
           "b_window_lo": lo, "b_window_hi": hi, "printed_window_lo": plo, "printed_window_hi": phi}
    try:
        b = lp.choose_b(p, params)
        row["b"], row["no_valid_b"] = b, False
    except NoValidB:
        row["b"], row["no_valid_b"] = None, True
    cfg = lp.SchurConfig(p=p, a=lp.default_a(p))
    zs = lp.default_z_samples(params)
    worst, change = 0.0, 0.0
    for i in lp.MAJORANTS:
        r = lp.schur_check_Bi(i, cfg, zs, params, strict=False)
        worst = max(worst, r.max_ratio)
        change = max(change, r.rel_change)
    row["schur_B_max_ratio"], row["schur_B_rel_change"] = worst, change
    # the p > p_max side is probed through the conjugate exponent (the operator is self-adjoint)
    q = p if p <= p_max else lp.conjugate_exponent(p)
    rep = lp.divergence_probe(q, None, params, seed=seed)
    row["probe_exponent"] = q
    row["probe_verdict"] = rep.verdict
    row["probe_fitted_rate"] = rep.fitted_exponent
    row["probe_expected_rate"] = rep.expected_exponent
    return row


def cmd_probe_lp(cfg: RunConfig) -> int:
    jobs = [(cfg.beta, cfg.h, cfg.c0, float(p), cfg.seed) for p in sorted(cfg.p)]
    rows = _pmap(_probe_one, jobs, cfg.threads)
    emit(render(rows, cfg, "probe-lp"), cfg)
    return EXIT_OK


_COMMANDS = {"eval": cmd_eval, "validate": cmd_validate, "sweep": cmd_sweep, "probe-lp": cmd_probe_lp}


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        return _error(EXIT_CONFIG, exc)
    try:
        return _COMMANDS[cfg.command](cfg)
    except DomainViolation as exc:
        return _error(EXIT_DOMAIN, exc)
    except (InvalidParameter, NoValidB) as exc:
        return _error(EXIT_CONFIG, exc)
    except (NumericFailure, ArithmeticError) as exc:
        return _error(EXIT_NUMERIC, exc)
    except WormkernError as exc:
        return _error(EXIT_NUMERIC, exc)


if __name__ == "__main__":
    sys.exit(main())
