"""The ``wcs`` command line.

Every command writes one JSON report.  Exit status is 0 on success, 1 for
invalid input and 2 when a numerical procedure did not converge; errors go
to standard error as a JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import sasaki as S
from . import ypq as Y
from .report import WcsReport, dumps, load_report
from .tensor import AlgCurvature, random_alg_curvature
from .wcsform import (ALTERNATE_CONSTANTS, WcsPointInput, default_constant, interior_term_check, wcs_full,
                      wcs_reduced)

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2


class ValidationError(ValueError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


REQUIRED = object()


def _int_list(s):
    if isinstance(s, (list, tuple)):
        return [int(v) for v in s]
    return [int(v) for v in str(s).split(",") if v.strip()]


# command -> field -> (converter, default); flags are the field names with '-' for '_'
COMMANDS = {
    "cs3-check": {"dim": (int, REQUIRED), "trials": (int, REQUIRED), "seed": (int, REQUIRED)},
    "wcs-equiv": {"k": (int, REQUIRED), "trials": (int, REQUIRED), "seed": (int, REQUIRED)},
    "sasaki": {"surface": (str, REQUIRED), "p": (int, REQUIRED), "a": (float, 1.0), "b": (float, 1.0),
               "lambda": (float, None), "seed": (int, 0)},
    "threshold": {"r_inf": (float, REQUIRED), "vol": (float, REQUIRED), "sigma": (int, REQUIRED)},
    "ypq": {"p": (int, REQUIRED), "q": (int, REQUIRED), "rel_tol": (float, 1e-9),
            "max_refine": (int, 4), "grid": (int, 16)},
    "ypq-einstein": {"p": (int, REQUIRED), "q": (int, REQUIRED), "samples": (int, REQUIRED),
                     "seed": (int, 0)},
    "h4": {"coeffs": (_int_list, REQUIRED)},
    "report": {"in": (str, REQUIRED)},
}


@dataclass
class JobConfig:
    command: str
    values: dict = field(default_factory=dict)
    output_path: str | None = None

    def __getitem__(self, key):
        return self.values[key]


def read_config(path: str) -> dict:
    """Flat ``key = value`` (or ``key: value``) lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as err:
        raise ValidationError(f"cannot read config: {err}", "config") from None
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ValidationError(f"config line {n} is not 'key = value'", "config")
        k, v = line.split(sep, 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _build_parser() -> _Parser:
    parser = _Parser(prog="wcs", description="Wodzicki-Chern-Simons computations")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, fields in COMMANDS.items():
        sp = sub.add_parser(name)
        for key in fields:
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
        sp.add_argument("--config", default=None)
        if name != "report":
            sp.add_argument("--out", default=None)
    return parser


def parse_job(argv) -> JobConfig:
    ns = vars(_build_parser().parse_args(argv))
    command = ns.pop("command")
    if command is None:
        raise ValidationError("missing command", "command")
    merged = read_config(ns.pop("config")) if ns.get("config") else {}
    ns.pop("config", None)
    out = ns.pop("out", None) or merged.pop("out", None)
    merged.update({k: v for k, v in ns.items() if v is not None})
    values = {}
    for key, (conv, default) in COMMANDS[command].items():
        if key in merged:
            try:
                values[key] = conv(merged[key])
            except (TypeError, ValueError):
                raise ValidationError(f"bad value {merged[key]!r} for --{key.replace('_', '-')}",
                                      key) from None
        elif default is REQUIRED:
            raise ValidationError(f"--{key.replace('_', '-')} is required for {command}", key)
        else:
            values[key] = default
    unknown = set(merged) - set(COMMANDS[command]) - {"seed"}
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}", sorted(unknown)[0])
    return JobConfig(command, values, out)


# ---------------------------------------------------------------------------
# commands


def _require(cond: bool, message: str, fld: str):
    if not cond:
        raise ValidationError(message, fld)


def _random_inputs(rng, dim):
    R = AlgCurvature(random_alg_curvature(dim, int(rng.integers(2 ** 63))).comps)
    return R, rng.standard_normal(dim), rng.standard_normal((dim, dim))


def cmd_cs3_check(job: JobConfig) -> WcsReport:
    _require(job["dim"] == 3, "cs3-check needs --dim 3", "dim")
    _require(job["trials"] >= 1, "--trials must be positive", "trials")
    rng = np.random.default_rng(job["seed"])
    worst_abs = worst_rel = 0.0
    for _ in range(job["trials"]):
        R, gd, V = _random_inputs(rng, 3)
        inp = WcsPointInput(R, gd, 2, V)
        val = max(abs(wcs_reduced(inp)), abs(wcs_full(inp)))
        scale = R.scale() ** 2 * np.linalg.norm(gd) * np.prod(np.linalg.norm(V, axis=1))
        worst_abs = max(worst_abs, val)
        worst_rel = max(worst_rel, val / scale)
    warnings = [] if worst_rel < 1e-12 else ["CS_3 not zero to 1e-12 relative"]
    return WcsReport(worst_abs, 0.0, default_constant(3), dict(job.values), job["trials"],
                     warnings=warnings, extra={"max_abs": worst_abs, "max_rel": worst_rel,
                                               "constant_C2": default_constant(2)})


def cmd_wcs_equiv(job: JobConfig) -> WcsReport:
    k = job["k"]
    _require(k in (2, 3), "--k must be 2 or 3", "k")
    _require(job["trials"] >= 1, "--trials must be positive", "trials")
    rng = np.random.default_rng(job["seed"])
    dim = 2 * k - 1
    worst = worst_int = 0.0
    for _ in range(job["trials"]):
        R, gd, V = _random_inputs(rng, dim)
        inp = WcsPointInput(R, gd, k, V)
        full, red = wcs_full(inp), wcs_reduced(inp)
        worst = max(worst, abs(full - red) / max(abs(red), 1e-300))
        scale = R.scale() ** k * np.linalg.norm(gd) * np.prod(np.linalg.norm(V, axis=1))
        worst_int = max(worst_int, abs(interior_term_check(R, V, gd)) / scale)
    warnings = []
    if worst > 1e-10:
        warnings.append("full and reduced sums disagree beyond 1e-10")
    if worst_int > 1e-10:
        warnings.append("interior term does not vanish to 1e-10")
    return WcsReport(worst, 0.0, default_constant(3), dict(job.values), job["trials"], warnings=warnings,
                     extra={"max_rel_full_vs_reduced": worst, "max_rel_interior": worst_int,
                            "constant_Ck": default_constant(k)})


def cmd_sasaki(job: JobConfig) -> WcsReport:
    surf, p = job["surface"], job["p"]
    _require(surf in S.SURFACES, f"--surface must be one of {S.SURFACES}", "surface")
    a, b = job["a"], job["b"]
    _require(a > 0 and b > 0, "--a and --b must be positive", "a")
    kd = S.kahler_point_data(surf, a=a, b=b, seed=job["seed"])
    closed = S.wcs5_integrand_kahler(kd, p)
    pipeline = S.lifted_integrand(kd.Rfull, S.J_ADAPTED, p)
    bt = S.bterms(kd.Rfull, kd.p1, p)
    extra = {"integrand_closed_form": closed, "integrand_pipeline": pipeline,
             "bterms": list(bt), "Rfive": kd.Rfive, "p1": kd.p1}
    warnings = []
    if surf == "cp2":
        extra["expected"] = S.cp2_closed_form(p)
        extra["note"] = "leading coefficient 576/5 = 3*192/5 from the b-term sum"
    elif surf == "s2xs2":
        extra["expected_as_stated"] = S.s2xs2_closed_form(p, a, b)
    if surf != "k3":
        summ = S.surface_summary(surf, a, b, per_axis=4)
        extra["vol"] = summ.vol
        if job["lambda"] is not None:
            extra["integral"] = closed * job["lambda"] * summ.vol
    if abs(closed - pipeline) > 1e-10 * max(1.0, abs(closed)):
        warnings.append("closed form and lifted permutation sum disagree")
    return WcsReport(closed, abs(closed - pipeline), default_constant(3), dict(job.values), 1,
                     warnings=warnings, extra=extra)


def cmd_threshold(job: JobConfig) -> WcsReport:
    try:
        s = S.SurfaceSummary(job["r_inf"], job["vol"], job["sigma"])
    except ValueError as err:
        raise ValidationError(str(err), "vol") from None
    p0, verdicts = S.rotation_threshold(s)
    extra = {"p0": p0, "verdicts": [{"p": p, "holds": ok, "certificate": S.positivity_certificate(s, p)}
                                    for p, ok in verdicts]}
    return WcsReport(float(p0), 0.0, default_constant(3), dict(job.values), len(verdicts), extra=extra)


def _params(job):
    try:
        return Y.solve_params(job["p"], job["q"])
    except Y.ParameterError as err:
        raise ValidationError(str(err), "q" if isinstance(err, Y.OrderingError) else "p") from None


def cmd_ypq(job: JobConfig) -> WcsReport:
    params = _params(job)
    try:
        quad = Y.QuadratureSpec(orders=(job["grid"], job["grid"]), rel_tol=job["rel_tol"],
                                max_refinements=job["max_refine"])
    except ValueError as err:
        raise ValidationError(str(err), "rel_tol") from None
    rep = Y.integrate(params, quad)
    target = -1849 * math.pi ** 4 / 37750
    rep.extra["reference_value"] = target
    rep.extra["relative_gap_to_reference"] = abs(rep.value - target) / abs(target)
    alt = ALTERNATE_CONSTANTS[3]
    rep.extra["alternate_constant_C3"] = alt
    rep.extra["value_with_alternate_constant"] = rep.value * alt / rep.constant_C3
    return rep


def cmd_ypq_einstein(job: JobConfig) -> WcsReport:
    params = _params(job)
    _require(job["samples"] >= 1, "--samples must be positive", "samples")
    res, lam = Y.einstein_residual(params, job["samples"], job["seed"])
    warnings = [] if res < 1e-8 else ["Einstein residual above 1e-8"]
    return WcsReport(res, 0.0, default_constant(3), dict(job.values), job["samples"], warnings=warnings,
                     extra={"lambda_fit": lam, "residual": res})


def cmd_h4(job: JobConfig) -> WcsReport:
    try:
        order = S.h4_order(job["coeffs"])
    except ValueError as err:
        raise ValidationError(str(err), "coeffs") from None
    return WcsReport(float(order), 0.0, default_constant(3), dict(job.values), 0, extra={"order": order})


HANDLERS = {"cs3-check": cmd_cs3_check, "wcs-equiv": cmd_wcs_equiv, "sasaki": cmd_sasaki,
            "threshold": cmd_threshold, "ypq": cmd_ypq, "ypq-einstein": cmd_ypq_einstein,
            "h4": cmd_h4}


def _emit_error(kind: str, message: str, fld=None, stderr=None):
    err = {"error": kind, "message": message}
    if fld is not None:
        err["field"] = fld
    print(json.dumps(err), file=stderr or sys.stderr)


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        job = parse_job(argv)
        if job.command == "report":
            try:
                doc = load_report(job["in"])
            except (OSError, json.JSONDecodeError) as err:
                raise ValidationError(f"cannot read report: {err}", "in") from None
            print(dumps(doc), file=stdout)
            return EXIT_OK
        t0 = time.perf_counter()
        rep = HANDLERS[job.command](job)
        rep.wall_time_ms = int(1000 * (time.perf_counter() - t0))
        rep.params_echo = {"command": job.command, **rep.params_echo}
    except ValidationError as err:
        _emit_error("validation", str(err), err.field, stderr)
        return EXIT_INVALID
    except (ValueError, ArithmeticError) as err:
        _emit_error(type(err).__name__, str(err), None, stderr)
        return EXIT_INVALID
    text = rep.to_json()
    if job.output_path:
        with open(job.output_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text, file=stdout)
    converged = rep.extra.get("converged", True)
    return EXIT_OK if converged else EXIT_NONCONVERGED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
