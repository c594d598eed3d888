"""Command-line entry point: ``mtlab <command> --in <path> --out <path> [options]``.

Exit codes: 0 success (warnings go into the report), 2 usage or parse
error, 3 precondition error, 4 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .discrete import DiscreteFunction, cheeger_report, iso_profile_bruteforce
from .errors import BudgetError, PreconditionError
from .functionals import MTParams, mt_functional, mt_threshold, step2_certificate, step3_envelope
from .modelgeom import GrowthSamples, ModelSpace, bishop_gromov_check, model_ball_volume, model_sphere_area
from .probes import blowup_scan, threshold_estimate
from .radial import cone_angle, profile_table, synthesize_from_profile, trumpet_space
from .rearrange import (decreasing_rearrangement, double_rearrangement,
                        median_average_gap_check, polya_szego_check, split_identity_check)
from .serialize import (SerializationError, csv_text, dumps, function_from_dict,
                        graph_from_dict, loads, profile_from_dict, profile_to_dict, report_document,
                        space_from_dict, space_to_dict)

COMMANDS = ("profile", "synthesize", "rearrange", "mt-eval", "mt-scan", "threshold", "cheeger",
            "compact-cert", "bishop-gromov")
EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_BUDGET = 0, 2, 3, 4
ENVELOPE_RATIO = 0.5  # R in the step-3 envelope t^q / R - (t + c)^q


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    output_path: str | None = None
    params: dict = field(default_factory=dict)

    def require(self, *names):
        missing = [k for k in names if self.params.get(k) is None]
        if missing:
            raise UsageError(f"{self.command}: missing required parameter(s) "
                             + ", ".join("--" + k for k in missing))
        return [self.params[k] for k in names]

    def get(self, name, default=None):
        v = self.params.get(name)
        return default if v is None else v

    def echo(self) -> dict:
        return {"command": self.command, "input": self.input_path, "output": self.output_path,
                "params": {k: v for k, v in sorted(self.params.items()) if v is not None}}


# -- helpers ----------------------------------------------------------------------------

def _read_json(cfg: RunConfig, required: bool = True):
    if cfg.input_path is None:
        if required:
            raise UsageError(f"{cfg.command}: --in is required")
        return None
    try:
        text = Path(cfg.input_path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {cfg.input_path}: {e.strerror}") from None
    return loads(text)


def _trumpet(cfg: RunConfig):
    n, beta = cfg.require("n", "beta")
    return trumpet_space(int(n), float(beta))


def _space(cfg: RunConfig):
    doc = _read_json(cfg, required=False)
    if doc is None:
        return _trumpet(cfg)
    return space_from_dict(doc, "input")


def _floats(text, name):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated numbers, got {text!r}") from None


def _json_doc(cfg: RunConfig, body, warnings=(), **extra) -> str:
    doc = report_document(body, tool="mtlab", version=__version__, seed=cfg.get("seed", 0),
                          config=cfg.echo(), **extra)
    if warnings:
        doc["warnings"] = list(warnings)
    return dumps(doc)


def _csv_doc(cfg: RunConfig, columns, rows, warnings=()) -> str:
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    echo = cfg.echo()
    params = " ".join(f"{k}={v}" for k, v in echo["params"].items())
    comments = [f"generated {stamp}", f"mtlab {__version__} {cfg.command} seed={cfg.get('seed', 0)}",
                f"params {params}"] + [f"warning {w}" for w in warnings]
    return csv_text(columns, rows, comments)


# -- commands ---------------------------------------------------------------------------

def cmd_profile(cfg: RunConfig):
    doc = _read_json(cfg, required=False)
    if doc is not None and "vertices" in doc:
        table = iso_profile_bruteforce(graph_from_dict(doc, "input"))
    else:
        s = space_from_dict(doc, "input") if doc is not None else _trumpet(cfg)
        table = profile_table(s, count=int(cfg.get("grid", 400)))
    if cfg.output_path and cfg.output_path.endswith(".csv"):
        return _csv_doc(cfg, ["t [volume]", "phi [perimeter]"],
                        list(zip(table.volumes.tolist(), table.perimeters.tolist())))
    return dumps(profile_to_dict(table))


def cmd_synthesize(cfg: RunConfig):
    (n,) = cfg.require("n")
    prof = profile_from_dict(_read_json(cfg), "input")
    s = synthesize_from_profile(prof, int(n), M=int(cfg.get("grid", 2000)))
    doc = space_to_dict(s)
    doc["coneAngle"] = float(cone_angle(s).value)
    return dumps(doc)


def cmd_rearrange(cfg: RunConfig):
    target = _trumpet(cfg)
    u = function_from_dict(_read_json(cfg), target, "input")
    p = float(cfg.get("p", 2.0))
    rep = polya_szego_check(u, target, p, rtol=float(cfg.get("tol", 1e-8)))
    v = decreasing_rearrangement(u, target)
    out = {"rearranged": {"radii": v.radii.tolist(), "values": v.values.tolist()}, "polyaSzego": rep}
    return _json_doc(cfg, out)


def cmd_mt_eval(cfg: RunConfig):
    m, alpha = cfg.require("m", "alpha")
    doc = _read_json(cfg)
    space = None
    if isinstance(doc, dict) and "space" not in doc and "vertices" not in doc:
        space = _trumpet(cfg)
    u = function_from_dict(doc, space, "input")
    rep = mt_functional(u, MTParams(int(m), float(alpha)))
    warnings = ["functional overflows double precision; see log_value"] if rep.overflow else []
    if not rep.admissible:
        warnings.append("energy exceeds 1")
    return _json_doc(cfg, rep, warnings, threshold=None if cfg.get("beta") is None
                     else mt_threshold(int(m), float(cfg.get("beta"))))


def cmd_mt_scan(cfg: RunConfig):
    s = _space(cfg)
    n = s.n
    theta = float(cone_angle(s).value)
    thr = mt_threshold(n, min(theta, 1.0))
    alphas = _floats(cfg.params["alpha"], "alpha") if cfg.get("alpha") is not None else \
        [f * thr for f in (0.8, 1.2)]
    radii = np.geomspace(1e-4, 1e-1, int(cfg.get("grid", 13)))
    scan = blowup_scan(s, alphas, radii)
    rows = [(a, r, val, lv, scan.verdicts[a]) for a, r, val, lv in scan.rows]
    warnings = [f"alpha={a!r} inconclusive" for a, v in scan.verdicts.items() if v == "inconclusive"]
    return _csv_doc(cfg, ["alpha [1]", "r [radius]", "value [volume]", "log_value [log volume]", "verdict [label]"], rows, warnings)


def cmd_threshold(cfg: RunConfig):
    s = _space(cfg)
    est = threshold_estimate(s, rel_tol=float(cfg.get("tol", 0.01)))
    warnings = ["bisection did not settle; estimate flagged"] if est.flagged else []
    return _json_doc(cfg, est, warnings)


def cmd_cheeger(cfg: RunConfig):
    g = graph_from_dict(_read_json(cfg), "input")
    ps = _floats(cfg.params["p"], "p") if cfg.get("p") is not None else [1.5, 2.0, 3.0]
    rep = cheeger_report(g, ps, tol=float(cfg.get("tol", 1e-9)), seed=int(cfg.get("seed", 0)))
    body = {"h": rep.h, "witness": list(rep.witness),
            "lambda_p": [{"p": p, "estimate": rep.lambda_p[p], "bound": rep.h**p / p**p,
                          "holds": rep.inequality_holds[p]} for p in ps]}
    return _json_doc(cfg, body)


def cmd_compact_cert(cfg: RunConfig):
    m, beta = cfg.require("m", "beta")
    m, beta = int(m), float(beta)
    u = function_from_dict(_read_json(cfg), None, "input")
    if not isinstance(u, DiscreteFunction):
        raise UsageError("compact-cert: input must be a discrete function")
    target = trumpet_space(m, beta)
    alpha = float(cfg.get("alpha", 1.0))
    q = m / (m - 1)

    def F(t):
        return np.expm1(alpha * np.abs(t) ** q)

    gap = median_average_gap_check(u, float(m))
    split = double_rearrangement(u, target)
    ident = split_identity_check(split, F, u=u, p=float(m))
    warnings, step2 = [], None
    try:
        step2 = step2_certificate(split, m, beta)
    except PreconditionError as e:
        warnings.append(f"step 2 not applicable: {e}")
    step3 = step3_envelope(m, ENVELOPE_RATIO, split.c) if split.c > 0 else None
    body = {"median": split.c, "medianGap": gap, "split": ident, "step2": step2, "step3": step3}
    return _json_doc(cfg, body, warnings)


def cmd_bishop_gromov(cfg: RunConfig):
    n, k = int(cfg.require("n")[0]), float(cfg.get("k", 0.0))
    model = ModelSpace(n, k)
    doc = _read_json(cfg, required=False)
    if doc is None:
        top = min(5.0, 0.95 * model.T)
        radii = np.linspace(top / 200, top, 200)
        g = GrowthSamples(radii, model_ball_volume(model, radii), model_sphere_area(model, radii))
    else:
        try:
            g = GrowthSamples(np.asarray(doc["radii"], float), np.asarray(doc["ballVolumes"], float),
                              None if doc.get("perimeters") is None
                              else np.asarray(doc["perimeters"], float))
        except (KeyError, TypeError, ValueError) as e:
            raise SerializationError(f"input: {e}") from None
    rep = bishop_gromov_check(g, model, rtol=float(cfg.get("tol", 1e-9)))
    return _json_doc(cfg, rep)


HANDLERS = {"profile": cmd_profile, "synthesize": cmd_synthesize, "rearrange": cmd_rearrange,
            "mt-eval": cmd_mt_eval, "mt-scan": cmd_mt_scan, "threshold": cmd_threshold,
            "cheeger": cmd_cheeger, "compact-cert": cmd_compact_cert,
            "bishop-gromov": cmd_bishop_gromov}


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute a command; returns (exit code, text written or diagnostic)."""
    try:
        text = HANDLERS[cfg.command](cfg)
    except (UsageError, SerializationError) as e:
        return EXIT_USAGE, f"error: {e}"
    except PreconditionError as e:
        return EXIT_PRECONDITION, f"precondition failed: {e}"
    except BudgetError as e:
        return EXIT_BUDGET, f"budget exceeded: {e}"
    except ValueError as e:
        return EXIT_USAGE, f"error: {e}"
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    return EXIT_OK, text


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mtlab", description="Isoperimetry, rearrangement and "
                                 "Moser-Trudinger numerics on radial and discrete spaces.")
    ap.add_argument("--version", action="version", version=f"mtlab {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--in", dest="input_path")
    ap.add_argument("--out", dest="output_path")
    ap.add_argument("--n", type=int)
    ap.add_argument("--m", type=int)
    ap.add_argument("--alpha", help="number, or comma-separated list for mt-scan")
    ap.add_argument("--beta", type=float)
    ap.add_argument("--p", help="number, or comma-separated list for cheeger")
    ap.add_argument("--k", type=float, help="model curvature (bishop-gromov)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--grid", type=int, help="profile: table rows; synthesize: radial cells; mt-scan: scan radii")
    ap.add_argument("--tol", type=float)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    params = {k: getattr(args, k) for k in ("n", "m", "alpha", "beta", "p", "k", "seed", "grid", "tol")}
    if args.command == "mt-eval" and params["alpha"] is not None:
        params["alpha"] = _scalar(ap, params["alpha"], "alpha")
    if args.command in ("rearrange",) and params["p"] is not None:
        params["p"] = _scalar(ap, params["p"], "p")
    cfg = RunConfig(args.command, args.input_path, args.output_path, params)
    code, text = run(cfg)
    if code == EXIT_USAGE:
        ap.print_usage(sys.stderr)
    if code != EXIT_OK:
        print(text, file=sys.stderr)
    elif not cfg.output_path:
        sys.stdout.write(text)
    return code


def _scalar(ap, text, name) -> float:
    try:
        x = float(text)
    except ValueError:
        ap.error(f"--{name}: expected a number, got {text!r}")
    if not math.isfinite(x):
        ap.error(f"--{name}: expected a finite number")
    return x


if __name__ == "__main__":
    sys.exit(main())
