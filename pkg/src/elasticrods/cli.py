"""Command-line front end.

Exit status is 0 on success, 2 when an argument violates a precondition and 3
when a numerical step fails (the message names the failing residual).
The default output directory is taken from ``$ELASTICRODS_OUT``; ``--config``
accepts a JSON object whose keys are the long flag names of the subcommand.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .closure import KnotSpec, Quadrant, solve_constant_torsion_knot, solve_knot
from .exceptions import DomainError, NoSolutionError, RodError
from .fileio import curve_meta, default_outdir, jsonable, write_curve, write_json, write_table_csv
from .homotopy import frame_indices, landmark_points, trace_level
from .paramspace import DiskPoint, LocusKind, locus_curve
from .rodsynth import synthesize
from .stability import circle_stability, figure_eight_modulus, figure_eight_stability, h_sweep, valid_h_bound
from .verify import KNOWN_FAULTS, SUITES, run_suite, verify_all

COMMANDS = ("locus", "curve", "knot", "homotopy", "stability", "verify")
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


class ValidationError(DomainError):
    """Bad command-line input."""


@dataclass
class RunConfig:
    command: str
    parameters: dict = field(default_factory=dict)
    output_path: Path | None = None
    format: str = "csv"
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    quad_oracle: bool = False

    @property
    def method(self):
        return "quadrature" if self.quad_oracle else "closed"


# --- helpers ----------------------------------------------------------------------------------


def _out(cfg, default_name):
    if cfg.output_path is not None:
        return Path(cfg.output_path)
    return default_outdir() / default_name


def _require(P, *names):
    missing = [n for n in names if P.get(n) is None]
    if missing:
        raise ValidationError("missing required argument(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _positive_int(name, v, minimum=1):
    if v is None or int(v) != v or v < minimum:
        raise ValidationError(f"--{name} must be an integer >= {minimum}")
    return int(v)


def _point(params):
    X, Y, p, phi = (params.get(k) for k in ("X", "Y", "p", "phi"))
    if X is not None and Y is not None:
        return DiskPoint.from_xy(X, Y)
    if p is not None and phi is not None:
        return DiskPoint.from_polar(p, phi)
    raise ValidationError("give either --X and --Y or --p and --phi")


def _parse_sweep(text):
    try:
        h0, h1, steps = text.split(":")
        h0, h1, steps = float(h0), float(h1), int(steps)
    except ValueError:
        raise ValidationError("--sweep must look like h0:h1:steps") from None
    if steps < 2 or not h1 > h0:
        raise ValidationError("--sweep needs h1 > h0 and steps >= 2")
    return h0, h1, steps


def _parse_tolerances(items):
    out = {}
    for item in items or []:
        name, sep, val = item.partition("=")
        try:
            out[name] = float(val)
        except ValueError:
            sep = ""
        if not sep or not name:
            raise ValidationError(f"--tol expects NAME=VALUE, got {item!r}")
    return out


# --- subcommands --------------------------------------------------------------------------------


def run_locus(cfg):
    P = cfg.parameters
    _require(P, "kind")
    n = _positive_int("samples", P["samples"], 4)
    p, phi, X, Y = locus_curve(LocusKind(P["kind"]), n)
    path = _out(cfg, f"locus_{P['kind']}.csv")
    write_table_csv(path, ("p", "phi", "X", "Y"), zip(p, phi, X, Y))
    print(f"wrote {len(p)} {P['kind']} locus points to {path}")
    return [path]


def run_curve(cfg):
    P = cfg.parameters
    pt = _point(P)
    curve = synthesize(pt, _positive_int("periods", P["periods"]), _positive_int("per-period", P["per_period"], 16),
                       method=cfg.method)
    meta = curve_meta(curve)
    _check_integrals(meta)
    paths = write_curve(curve, _out(cfg, f"curve.{cfg.format}"), cfg.format, meta)
    print(f"wrote {len(curve.t)} samples to {paths[0]} (delta_theta={curve.delta_theta!r})")
    return list(paths)


def _check_integrals(meta):
    tol = meta["tolerances"]["first_integrals"]
    bad = {k: v for k, v in meta["residuals"].items() if k in ("first", "second", "J_norm", "J_drift") and v >= tol}
    if bad:
        name, val = max(bad.items(), key=lambda kv: kv[1])
        raise RodError(f"first-integral residual {name}={val:.3e} exceeds {tol:.1e}")


def run_knot(cfg):
    P = cfg.parameters
    _require(P, "m", "n")
    try:
        spec = KnotSpec(int(P["m"]), int(P["n"]))
    except DomainError as exc:
        raise ValidationError(f"invalid knot (m, n)=({P['m']}, {P['n']}): {exc}") from None
    if P.get("constant_torsion"):
        rod = solve_constant_torsion_knot(spec.m, spec.n, samples_per_period=P["per_period"])
    else:
        rod = solve_knot(spec, P.get("quadrant"), P["per_period"], method=cfg.method)
    if rod.curve.closure_gap >= 1e-6:
        raise RodError(f"closure_gap={rod.curve.closure_gap:.3e} exceeds 1e-06")
    extra = {"knot": {"m": rod.knot.m, "n": rod.knot.n, "kind": rod.knot.kind, "embedded": rod.knot.embedded,
                      "theta_winding": rod.knot.theta_winding, "waist_winding": rod.knot.waist_winding},
             "target_residual": rod.residual, "solver": rod.meta}
    meta = curve_meta(rod.curve, extra=extra)
    _check_integrals(meta)
    paths = write_curve(rod.curve, _out(cfg, f"knot_{spec.m}_{spec.n}.{cfg.format}"), cfg.format, meta)
    print(f"({spec.m},{spec.n}): {rod.knot.kind} {rod.knot_type} at p={rod.point.p!r} phi={rod.point.phi!r}; "
          f"wrote {paths[0]}")
    return list(paths)


def run_homotopy(cfg):
    P = cfg.parameters
    _require(P, "k", "n")
    k, n = _positive_int("k", P["k"]), _positive_int("n", P["n"])
    if math.gcd(k, n) != 1:
        raise ValidationError(f"k={k} and n={n} must be coprime")
    frames = _positive_int("frames", P["frames"], 0)
    fam = trace_level(k, n, step=P["step"])
    outdir = _out(cfg, f"homotopy_{k}_{n}")
    outdir.mkdir(parents=True, exist_ok=True)
    rows = [(i, pt.p, pt.phi, pt.X, pt.Y, v) for i, (pt, v) in enumerate(zip(fam.chain, fam.values))]
    written = [write_table_csv(outdir / "chain.csv", ("index", "p", "phi", "X", "Y", "delta_theta_smooth"), rows)]
    tab = landmark_points(fam)
    lm = {kind.value: {"p": r.point.p, "phi": r.point.phi, "X": r.point.X, "Y": r.point.Y,
                       "residual": r.residual, "level_residual": r.level_residual, "chain_index": r.chain_index}
          for kind, r in tab.rows.items()}
    frame_rows = []
    for j, i in enumerate(frame_indices(fam, frames) if frames else []):
        curve = synthesize(fam.chain[i], fam.periods, P["per_period"], method=cfg.method)
        ang = np.unwrap(np.arctan2(curve.y, curve.x))
        winding = (ang[-1] - ang[0]) / (2.0 * math.pi)
        meta = curve_meta(curve, extra={"chain_index": i, "frame": j, "theta_winding": winding})
        written.extend(write_curve(curve, outdir / f"frame_{j:02d}.{cfg.format}", cfg.format, meta))
        frame_rows.append({"frame": j, "chain_index": i, "p": curve.constants.p, "phi": curve.constants.phi,
                           "theta_winding": winding})
    payload = {"k": k, "n": n, "level": fam.level, "landmarks": lm, "violations": tab.violations,
               "endpoint_limits": list(fam.endpoint_limits), "edge_phi": list(fam.edge_phi),
               "degenerate": fam.degenerate, "notes": fam.notes, "frames": frame_rows,
               "versions": {"elasticrods": __version__}}
    written.append(write_json(outdir / "landmarks.json", payload))
    print(f"traced {len(fam.chain)} points on level {fam.level!r}; {len(frame_rows)} frames in {outdir}")
    if tab.violations and not fam.degenerate:
        raise RodError("landmark check failed: " + "; ".join(tab.violations))
    return written


def run_stability(cfg):
    P = cfg.parameters
    _require(P, "subject")
    alpha, beta = P["alpha"], P["beta"]
    if P["subject"] == "circle":
        if P["m"] is None:
            raise ValidationError("--m is required for the circle")
        rep = circle_stability(alpha, beta, P["m"], P["L"])
    else:
        if P.get("sweep"):
            h0, h1, steps = _parse_sweep(P["sweep"])
            p = figure_eight_modulus()
            hmax = valid_h_bound(p)
            if h1 >= hmax:
                raise ValidationError(f"sweep end h1={h1} must be below the fourth periodic eigenvalue {hmax!r}")
            rows = [(h, s.H, s.int_nu_cn, s.int_nu2) for h, s in h_sweep(p, h0, h1, steps)]
            path = _out(cfg, "h_sweep.csv")
            write_table_csv(path, ("h", "H", "int_nu_cn", "int_nu2"), rows)
            print(f"wrote {len(rows)} rows to {path}")
            return [path]
        rep = figure_eight_stability(alpha, beta)
    text = json.dumps(jsonable(rep.as_dict()), indent=2, sort_keys=True)
    print(text)
    if cfg.output_path is not None:
        return [write_json(cfg.output_path, rep.as_dict())]
    return []


def run_verify(cfg):
    P = cfg.parameters
    faults = tuple(P.get("inject") or ())
    suite = P["suite"]
    kw = dict(seed=cfg.seed, tolerances=cfg.tolerances, faults=faults, quad_oracle=cfg.quad_oracle)
    rep = verify_all(**kw) if suite == "all" else run_suite(suite, **kw)
    print(rep.table())
    written = []
    if cfg.output_path is not None:
        written.append(write_json(cfg.output_path, rep.as_dict()))
    if not rep.overall:
        msg = ", ".join(f"{c.name} residual={c.residual:.3e} tol={c.tolerance:.1e}"
                        + (" [tolerance-induced]" if c.tolerance_induced else "") for c in rep.failures)
        if P.get("report_only"):
            print(f"report-only: {len(rep.failures)} failing check(s): {msg}", file=sys.stderr)
        else:
            raise RodError(f"verification failed: {msg}")
    return written


def run_selftest(cfg):
    rep = run_suite("identities", seed=cfg.seed)
    print(rep.table())
    if not rep.overall:
        raise RodError("identity self-test failed: " + ", ".join(c.name for c in rep.failures))
    return []


RUNNERS = {"locus": run_locus, "curve": run_curve, "knot": run_knot, "homotopy": run_homotopy,
           "stability": run_stability, "verify": run_verify, "specfun-selftest": run_selftest}


def dispatch(cfg):
    """Run one command; returns the exit status."""
    try:
        RUNNERS[cfg.command](cfg)
    except (ValidationError, DomainError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NoSolutionError, RodError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


# --- argument parsing ---------------------------------------------------------------------------


def _common():
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--config", help="JSON file of flag values (long names as keys)")
    c.add_argument("--out", help="output file or directory (default under $ELASTICRODS_OUT)")
    c.add_argument("--format", choices=("csv", "json", "obj"), default="csv")
    c.add_argument("--seed", type=int, default=0, help="seed for randomized property sweeps")
    c.add_argument("--quad-oracle", action="store_true", help="use quadrature in place of closed forms")
    return c


def build_parser():
    parser = argparse.ArgumentParser(prog="elasticrods", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(COMMANDS) + "}")
    com = _common()

    p = sub.add_parser("locus", parents=[com], help="sample a special locus of the disk")
    p.add_argument("--kind", choices=[k.value for k in LocusKind if k is not LocusKind.Generic])
    p.add_argument("--samples", type=int, default=200)

    p = sub.add_parser("curve", parents=[com], help="synthesize the rod at a disk point")
    p.add_argument("--X", type=float)
    p.add_argument("--Y", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--periods", type=int, default=1)
    p.add_argument("--per-period", type=int, default=256)

    p = sub.add_parser("knot", parents=[com], help="closed rod of torus-knot type (m, n)")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--constant-torsion", action="store_true")
    p.add_argument("--quadrant", choices=[q.name for q in Quadrant])
    p.add_argument("--per-period", type=int, default=256)

    p = sub.add_parser("homotopy", parents=[com], help="trace the family joining k- and n-fold circles")
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--frames", type=int, default=0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--per-period", type=int, default=256)

    p = sub.add_parser("stability", parents=[com], help="stability verdict for the circle or figure-eight")
    p.add_argument("--subject", choices=("circle", "figure8"))
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--m", type=float)
    p.add_argument("--L", type=float, default=2.0 * math.pi)
    p.add_argument("--sweep", help="h0:h1:steps, writes the H(h) table")

    p = sub.add_parser("verify", parents=[com], help="run residual check suites")
    p.add_argument("--suite", choices=("all",) + tuple(SUITES), default="all")
    p.add_argument("--tol", action="append", metavar="NAME=VALUE",
                   help="override a check tolerance; NAME may be a check, a suite or '*'")
    p.add_argument("--report-only", action="store_true", help="exit 0 even when checks fail")
    p.add_argument("--inject", action="append", choices=KNOWN_FAULTS, help=argparse.SUPPRESS)

    sub.add_parser("specfun-selftest", parents=[com])
    return parser


_GLOBAL = ("config", "out", "format", "seed", "quad_oracle", "command", "tol")


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read config {known.config}: {exc}")
    if not isinstance(cfg, dict):
        parser.error("config must be a JSON object")
    cfg = {k.lstrip("-").replace("-", "_"): v for k, v in cfg.items()}
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in subs.choices.values():
        dests = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in cfg.items() if k in dests})


def to_config(ns):
    params = {k: v for k, v in vars(ns).items() if k not in _GLOBAL}
    return RunConfig(command=ns.command, parameters=params, output_path=Path(ns.out) if ns.out else None,
                     format=ns.format, seed=ns.seed, tolerances=_parse_tolerances(getattr(ns, "tol", None)),
                     quad_oracle=ns.quad_oracle)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    _apply_config(parser, argv)
    ns = parser.parse_args(argv)
    try:
        cfg = to_config(ns)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
