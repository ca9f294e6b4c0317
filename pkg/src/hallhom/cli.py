"""Command-line front end.

Subcommands:
  generate  sample a material spec onto a voxel grid and cache it
  solve     run the corrector pipeline and write an effective-tensor report
  oracle    print closed-form values (laminate, layered, checkerboard, ...)
  sweep     run `solve` across a parameter axis, emit CSV
  verify    run a named verification suite

Exit codes: 0 success, 1 configuration error, 2 solver non-convergence,
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import effective as ef
from . import microstructure as ms
from . import oracles as oc
from . import solver as sv
from . import verify as vf
from .exceptions import HallhomError, NoConvergence


def _parse_h(text):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ValueError("h must be three comma-separated numbers")
    return np.array(parts)


def _load_config(args):
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
    if getattr(args, "resolution", None):
        cfg["resolution"] = args.resolution
    if getattr(args, "h", None):
        cfg["h"] = list(_parse_h(args.h))
    if getattr(args, "seed", None) is not None:
        cfg.setdefault("material", {}).setdefault("params", {})["seed"] = args.seed
    cfg.setdefault("resolution", 32)
    cfg.setdefault("h", [0.0, 0.0, 1.0])
    cfg.setdefault("solver", {})
    cfg.setdefault("outputs", ["sigma", "hall", "magneto", "gap", "curl"])
    return cfg


def _material_from_config(cfg):
    if "material_path" in cfg:
        with open(cfg["material_path"]) as fh:
            return ms.MaterialSpec.from_json(fh.read())
    if "material" not in cfg:
        raise ValueError("config needs a 'material' object or 'material_path'")
    m = cfg["material"]
    return ms.MaterialSpec(m["variant"], m["params"])


def _solver_config(cfg):
    s = cfg.get("solver", {})
    return sv.SolverConfig(
        reference=s.get("reference"),
        tol=s.get("tol", 1e-8),
        max_iter=s.get("max_iter", 10000),
        scheme=s.get("scheme", "conjugate_gradient"),
    )


def _run_pipeline(cfg):
    spec = _material_from_config(cfg)
    field = ms.sample(spec, int(cfg["resolution"]))
    scfg = _solver_config(cfg)
    corr = sv.solve_p0(field, scfg)
    h = np.asarray(cfg["h"], dtype=float)
    outputs = cfg["outputs"]
    if {"magneto", "gap"} & set(outputs) and np.linalg.norm(h) > 0:
        corr = sv.solve_p1(corr, h, scfg)
    return ef.assemble_report(corr, h, outputs)


def cmd_generate(args):
    cfg = _load_config(args)
    spec = _material_from_config(cfg)
    field = ms.sample(spec, int(cfg["resolution"]))
    out = args.out or "field.bin"
    field.save(out)
    print(f"wrote {out} ({field.content_hash()[:16]})")
    return 0


def cmd_solve(args):
    try:
        cfg = _load_config(args)
        report = _run_pipeline(cfg)
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (HallhomError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = report.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _print_matrix(M):
    for row in np.asarray(M):
        print("  ".join(f"{x: .10g}" for x in row))


def cmd_oracle(args):
    which = args.which
    if which == "laminate-rho":
        _print_matrix(oc.laminate_resistivity(args.theta, args.alpha2, args.h3))
    elif which == "laminate-sigma":
        _print_matrix(oc.laminate_sigma_star(args.theta, args.alpha2, args.h3))
    elif which == "laminate-mag":
        _print_matrix(oc.laminate_magnetoresistance(args.theta, args.alpha2, args.h3))
    elif which == "laminate-gap":
        d11, d22 = oc.laminate_gap_2p(args.theta, args.alpha2, args.h3, args.p)
        print(f"d11 = {d11:+.10g}")
        print(f"d22 = {d22:+.10g}")
    elif which == "layered-gap":
        prof = oc.LayeredProfile(
            np.asarray([float(x) for x in args.xi.split(",")]),
            ms.Profile1D.piecewise([float(x) for x in args.a_values.split(",")]),
            ms.Profile1D.piecewise([float(x) for x in args.r_values.split(",")]),
        )
        _print_matrix(oc.layered_gap(prof, _parse_h(args.h)))
    elif which == "checkerboard-check":
        alpha = [float(x) for x in args.alpha.split(",")]
        r = [float(x) for x in args.r.split(",")]
        r = r[0] if len(r) == 1 else r
        equal, branch = oc.checkerboard_equality_check(alpha, r, _parse_h(args.h))
        print(("EQUALITY" if equal else "NOT-EQUAL") + f" ({branch})")
    else:
        print(f"error: unknown oracle {which!r}", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args):
    cfg = _load_config(args)
    values = [v for v in args.values.split(",") if v != ""]
    axis = args.axis
    writer = csv.writer(open(args.out, "w", newline="") if args.out else sys.stdout)
    writer.writerow(
        [axis, "status", "sigma_star_11", "sigma_star_22", "sigma_star_33",
         "gap_min_eig", "curl_defect", "residual0"]
    )
    any_rows = False
    for raw in values:
        any_rows = True
        row_cfg = json.loads(json.dumps(cfg))
        val = raw
        if axis == "resolution":
            row_cfg["resolution"] = int(raw)
        elif axis in ("h1", "h2", "h3"):
            i = int(axis[1]) - 1
            row_cfg["h"][i] = float(raw)
        else:
            row_cfg.setdefault("material", {}).setdefault("params", {})[axis] = float(raw)
        try:
            rep = _run_pipeline(row_cfg)
            s = np.asarray(rep.sigma_star)
            writer.writerow(
                [val, "ok", s[0, 0], s[1, 1], s[2, 2],
                 rep.gap_min_eig if rep.gap_min_eig is not None else "",
                 rep.curl_defect if rep.curl_defect is not None else "",
                 rep.residuals[0]]
            )
        except (HallhomError, ValueError, KeyError) as exc:
            writer.writerow([val, f"failed: {exc}"] + [""] * 6)
    return 0 if (any_rows or not values) else 0


def cmd_verify(args):
    try:
        checks = vf.run_suite(args.suite)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 3 if failed else 0


def build_parser():
    p = argparse.ArgumentParser(prog="hallhom", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output path")
        sp.add_argument("--resolution", type=int, help="grid resolution override")
        sp.add_argument("--h", help="magnetic field, comma-separated x,y,z")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (reserved)")
        sp.add_argument("--seed", type=int, help="seed override for random specs")

    sp = sub.add_parser("solve", help="run the pipeline, write an effective report")
    common(sp)
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("generate", help="sample a material spec to a grid cache")
    common(sp)
    sp.set_defaults(fn=cmd_generate)

    sp = sub.add_parser("oracle", help="print closed-form values")
    sp.add_argument("which", help="laminate-rho|laminate-sigma|laminate-mag|laminate-gap|layered-gap|checkerboard-check")
    sp.add_argument("--theta", type=float, default=0.5)
    sp.add_argument("--alpha2", type=float, default=2.0)
    sp.add_argument("--h3", type=float, default=1.0)
    sp.add_argument("--p", type=int, default=1)
    sp.add_argument("--xi", default="1,0,0")
    sp.add_argument("--a-values", default="1,2")
    sp.add_argument("--r-values", default="1,2")
    sp.add_argument("--h", default="0,1,0")
    sp.add_argument("--alpha", default="1,2,3,4")
    sp.add_argument("--r", default="1")
    sp.add_argument("--out", help="output path")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(fn=cmd_oracle)

    sp = sub.add_parser("sweep", help="run solve across a parameter axis, emit CSV")
    common(sp)
    sp.add_argument("--axis", required=True, help="resolution|h1|h2|h3|<material param>")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("suite", help="|".join(sorted(vf.SUITES)) + "|all")
    sp.add_argument("--out", help="output path")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(fn=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (HallhomError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
