"""
Command-line front end.

    centroaffine catalog list
    centroaffine invariants SURFACE [--point u1,u2,.. | --grid 5x5 | --samples N]
    centroaffine check      SURFACE [--checks inequality,residuals,invariants]
    centroaffine ejiri      SURFACE
    centroaffine classify   SURFACE [--expect VERDICT]
    centroaffine identities SURFACE

SURFACE is a catalog name or the path of a surface file. Exit status: 0 when
every requested check passes, 2 when a check fails, 1 on usage errors, unknown
surfaces, unreadable files or an empty effective sample.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import analysis, catalog, dsl, geometry, report
from .errors import (
    CentroaffineError,
    DomainError,
    NotCentroaffineError,
    NotConvexError,
    OptimizerError,
    ParseError,
    UnknownSurfaceError,
)

CHECKS = ("invariants", "inequality", "ejiri", "identities", "classify", "residuals")
DEFAULT_CHECKS = {
    "invariants": ("invariants",),
    "check": ("inequality", "residuals"),
    "ejiri": ("ejiri",),
    "classify": ("classify",),
    "identities": ("identities",),
}
JOBS_ENV = "CAFF_JOBS"

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    surface: str
    command: str = "check"
    points: Optional[list] = None
    grid: Optional[list] = None
    box: Optional[list] = None
    samples: int = 20
    tolerances: analysis.Tolerances = field(default_factory=analysis.Tolerances)
    seed: int = 0
    output: str = "text"
    checks: tuple = ("inequality", "residuals")
    jobs: int = 1
    expect: Optional[str] = None
    fd_step: float = 1e-4

    def __post_init__(self):
        if self.grid is not None and min(self.grid) < 1:
            raise UsageError("grid counts must be >= 1")
        unknown = set(self.checks) - set(CHECKS)
        if unknown:
            raise UsageError(f"unknown checks: {', '.join(sorted(unknown))}")
        if self.output not in ("text", "json", "csv"):
            raise UsageError(f"unknown output format {self.output!r}")


# --------------------------------------------------------------------------
# surface resolution and sampling


def resolve_surface(name):
    try:
        return catalog.get(name)
    except UnknownSurfaceError:
        pass
    if os.path.isfile(name):
        try:
            return dsl.load_surface(name)
        except OSError as exc:
            raise UsageError(f"cannot read surface file {name!r}: {exc}") from None
        except ParseError as exc:
            raise UsageError(f"{name}: {exc}") from None
    raise UnknownSurfaceError(f"unknown surface {name!r} (not a catalog name or a readable file)")


def _box_for(surface, config):
    if config.box is not None:
        if len(config.box) != surface.n:
            raise UsageError(f"--box needs {surface.n} ranges")
        return config.box
    box = getattr(surface, "box", None)
    return list(box) if box is not None else [(-0.5, 0.5)] * surface.n


def sample_points(surface, config):
    n = surface.n
    if config.points:
        pts = np.array(config.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != n:
            raise UsageError(f"each --point needs {n} coordinates")
        return pts
    box = _box_for(surface, config)
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    if config.grid:
        counts = config.grid if len(config.grid) > 1 else config.grid * n
        if len(counts) != n:
            raise UsageError(f"--grid needs 1 or {n} counts")
        axes = [
            np.linspace(a, b, c) if c > 1 else np.array([(a + b) / 2])
            for a, b, c in zip(lo, hi, counts)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    rng = np.random.default_rng(config.seed)
    return lo + (hi - lo) * rng.random((config.samples, n))


# --------------------------------------------------------------------------
# per-point work (top level so it can run in worker processes)


def _scalar_record(data):
    rec = dict(data.scalars())
    rec["epsilon"] = int(data.epsilon)
    return rec


def evaluate_point(surface, point, checks, tol, seed=0, fd_step=1e-4):
    """Everything the requested checks need at one point, as a plain dict."""
    out = {"point": list(map(float, point))}
    try:
        data = geometry.centroaffine_data(surface, point)
    except (DomainError, NotCentroaffineError, NotConvexError) as exc:
        out["status"] = "skipped"
        out["reason"] = f"{type(exc).__name__}: {exc}"
        return out
    out["status"] = "ok"
    out["scalars"] = _scalar_record(data)
    nk2 = data.normK2
    nnk2 = data.normNablaK2
    failures = []

    if "invariants" in checks:
        traceless, tcheb = geometry.trace_residuals(data)
        csym = geometry.symmetry_defect(data.C)
        agree = abs(data.slack - data.slack_difference)
        out["invariants"] = {
            "ktilde_trace": traceless,
            "tchebychev_trace": tcheb,
            "cubic_symmetry": csym,
            "slack_agreement": agree,
        }
        lim = tol.residual * (1 + nk2)
        if max(traceless, tcheb, csym) > lim or agree > tol.inequality * (1 + nnk2):
            failures.append("invariants")

    if "inequality" in checks:
        agree = abs(data.slack - data.slack_difference)
        ok = data.slack >= -tol.inequality * (1 + nnk2) and agree <= tol.inequality * (1 + nnk2)
        out["inequality"] = {
            "slack": data.slack,
            "slack_difference": data.slack_difference,
            "agreement": agree,
            "ok": bool(ok),
        }
        if not ok:
            failures.append("inequality")

    if "residuals" in checks:
        gauss, codazzi = geometry.gauss_codazzi_residuals(data)
        sym = geometry.symmetry_defect(geometry.lowered_nabla_k(data))
        lim = tol.residual * (1 + nk2)
        out["residuals"] = {"gauss": gauss, "codazzi": codazzi, "nablaK_symmetry": sym}
        if max(gauss, codazzi, sym) > lim:
            failures.append("residuals")

    if "ejiri" in checks:
        try:
            basis = analysis.ejiri_basis(data, seed=seed)
            rep = analysis.ejiri_report(data, basis)
            out["ejiri"] = {
                "lambdas": basis.lambdas,
                "fmax": basis.fmax,
                "degenerate": basis.degenerate,
                "basis": basis.e,
                "converged_starts": basis.converged_starts,
                "total_starts": basis.total_starts,
                **rep,
            }
            ok = (
                rep["bound_ok"]
                and rep["orthonormality"] <= 1e-10
                and rep["eigen_residual"] <= 1e-8 * (1 + data.normK)
            )
        except OptimizerError as exc:
            out["ejiri"] = {"error": str(exc)}
            ok = False
        if not ok:
            failures.append("ejiri")

    if "identities" in checks:
        try:
            basis = analysis.ejiri_basis(data, seed=seed)
            grad = analysis.mu_gradient(surface, point, fd_step)
            rep = analysis.proof_identity_check(data, basis, basis.e @ grad, tol.form)
            out["identities"] = {
                "status": rep.status,
                "pure_trace_residual": rep.form_residual,
                "mu": rep.mu,
                "directional_mu": rep.directional_mu,
                "lambdas": rep.lambdas,
                "e_l_mu": rep.res_e_l_mu,
                "e_1_mu": rep.res_e_1_mu,
                "offdiag": rep.res_offdiag,
                "diag": rep.res_diag,
            }
            ok = rep.passed(tol_e_l=tol.identity / 10, tol_e_1=tol.identity, tol_k=tol.identity / 10)
        except (OptimizerError, DomainError, NotCentroaffineError, NotConvexError) as exc:
            out["identities"] = {"error": str(exc)}
            ok = False
        if not ok:
            failures.append("identities")

    pr = analysis.classify_point(data, tol)
    out["predicates"] = pr.predicates
    out["verdict"] = pr.verdict
    out["tchebychev_lambda"] = pr.tchebychev_lambda
    out["failed_checks"] = failures
    return out


def _evaluate_star(args):
    return evaluate_point(*args)


# --------------------------------------------------------------------------
# run


def _jobs(config):
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{JOBS_ENV} must be an integer, got {env!r}") from None
    return max(1, config.jobs)


def run(config, now=None):
    """Execute a run; returns (report document, exit status)."""
    surface = resolve_surface(config.surface)
    pts = sample_points(surface, config)
    checks = tuple(config.checks)
    args = [(surface, p, checks, config.tolerances, config.seed, config.fd_step) for p in pts]
    jobs = _jobs(config)
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_evaluate_star, args))
    else:
        records = [_evaluate_star(a) for a in args]

    evaluated = [r for r in records if r["status"] == "ok"]
    skipped = [r for r in records if r["status"] != "ok"]
    if not evaluated:
        raise UsageError(
            f"empty effective sample: all {len(records)} points were skipped"
            + (f" ({skipped[0]['reason']})" if skipped else "")
        )

    agg = {
        "points_evaluated": len(evaluated),
        "points_skipped": len(skipped),
        "min_slack": min(r["scalars"]["slack"] for r in evaluated),
        "max_normNablaK2": max(r["scalars"]["normNablaK2"] for r in evaluated),
    }
    if "residuals" in checks:
        agg["max_gauss_residual"] = max(r["residuals"]["gauss"] for r in evaluated)
        agg["max_codazzi_residual"] = max(r["residuals"]["codazzi"] for r in evaluated)
    point_reports = [
        analysis.PointReport(np.array(r["point"]), r["predicates"], r["verdict"],
                             r["scalars"]["mu"], r["tchebychev_lambda"])
        for r in evaluated
    ]
    cls = analysis.classify_surface(point_reports, len(skipped), config.tolerances)
    agg["verdict"] = cls.verdict
    agg["equality_everywhere"] = cls.equality_everywhere
    agg["verdict_counts"] = cls.counts

    status = {}
    for chk in checks:
        if chk == "classify":
            ok = True
            if config.expect is not None:
                ok = config.expect in (cls.verdict, cls.common_verdict)
            status[chk] = "pass" if ok else "fail"
        else:
            bad = [r for r in evaluated if chk in r["failed_checks"]]
            status[chk] = "pass" if not bad else f"fail ({len(bad)} points)"
    exit_status = EXIT_OK if all(v == "pass" for v in status.values()) else EXIT_FAIL

    cfg = {
        "command": config.command,
        "checks": list(checks),
        "seed": config.seed,
        "tolerances": asdict(config.tolerances),
        "expect": config.expect,
    }
    now = _dt.datetime.now(_dt.timezone.utc) if now is None else now
    doc = {
        "schema_version": report.SCHEMA_VERSION,
        "timestamp": now.isoformat(timespec="seconds"),
        "surface": {"name": getattr(surface, "name", config.surface), "n": surface.n},
        "config": cfg,
        "points": evaluated,
        "skipped": skipped,
        "aggregate": agg,
        "checks": status,
        "exit_status": exit_status,
    }
    return doc, exit_status


# --------------------------------------------------------------------------
# rendering


def _csv_rows(doc):
    rows = []
    for i, r in enumerate(doc["points"] + doc["skipped"]):
        row = {"index": i, "point": r["point"], "status": r["status"]}
        if r["status"] == "ok":
            row.update(r["scalars"])
            row["verdict"] = r["verdict"]
            if "residuals" in r:
                row["gauss_residual"] = r["residuals"]["gauss"]
                row["codazzi_residual"] = r["residuals"]["codazzi"]
            if "ejiri" in r and "lambdas" in r["ejiri"]:
                row["lambdas"] = r["ejiri"]["lambdas"]
        rows.append(row)
    return rows


def _fmt(x):
    return f"{x: .6e}"


def render_text(doc):
    lines = [f"surface: {doc['surface']['name']} (n={doc['surface']['n']})"]
    cols = ("eps", "|K|^2", "|nabK|^2", "|nabT|^2", "slack", "mu")
    lines.append("point".ljust(28) + "".join(c.rjust(15) for c in cols) + "  verdict")
    for r in doc["points"]:
        s = r["scalars"]
        pt = ",".join(f"{x:.4g}" for x in r["point"])
        vals = (s["epsilon"], s["normK2"], s["normNablaK2"], s["normNablaT2"], s["slack"], s["mu"])
        lines.append(
            pt[:27].ljust(28) + f"{vals[0]:+15d}" + "".join(_fmt(v).rjust(15) for v in vals[1:])
            + "  " + r["verdict"]
        )
        if "ejiri" in r and "lambdas" in r["ejiri"]:
            lam = " ".join(f"{x:.6g}" for x in r["ejiri"]["lambdas"])
            lines.append(f"    ejiri lambdas: {lam}" + (" (degenerate)" if r["ejiri"]["degenerate"] else ""))
        if "identities" in r and "status" in r["identities"]:
            idt = r["identities"]
            extra = ""
            if idt["status"] == "ok":
                extra = f": e_l(mu) {idt['e_l_mu']:.2e}, e_1(mu) {idt['e_1_mu']:.2e}"
            lines.append(f"    identities {idt['status']}{extra}")
    for r in doc["skipped"]:
        lines.append(f"skipped {r['point']}: {r['reason']}")
    agg = doc["aggregate"]
    lines.append("")
    for k, v in agg.items():
        lines.append(f"{k}: {v}")
    for k, v in doc["checks"].items():
        lines.append(f"check {k}: {v.upper() if v == 'pass' else v}")
    return "\n".join(lines) + "\n"


def render(doc, fmt):
    if fmt == "json":
        return report.to_json(doc)
    if fmt == "csv":
        return report.to_csv(_csv_rows(doc))
    return render_text(doc)


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _point(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad point {text!r}") from None


def _grid(text):
    try:
        return [int(v) for v in text.lower().split("x")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def _box(text):
    try:
        return [tuple(float(x) for x in part.split(":")) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad box {text!r}") from None


def _checks(text):
    return tuple(c.strip() for c in text.split(",") if c.strip())


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("surface", help="catalog name or surface file")
    where = common.add_argument_group("sampling")
    where.add_argument("--point", type=_point, action="append", help="chart point u1,u2,... (repeatable)")
    where.add_argument("--grid", type=_grid, help="grid counts per axis over the sample box, e.g. 5x5 or 5")
    where.add_argument("--box", type=_box, help="sample box lo:hi,lo:hi,... (default: catalog box)")
    where.add_argument("--samples", type=int, default=20, help="seeded random points when no --point/--grid")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help=f"worker processes (env {JOBS_ENV} overrides)")
    out = common.add_mutually_exclusive_group()
    out.add_argument("--json", dest="output", action="store_const", const="json")
    out.add_argument("--csv", dest="output", action="store_const", const="csv")
    tols = common.add_argument_group("tolerances")
    for f in fields(analysis.Tolerances):
        tols.add_argument(f"--tol-{f.name.replace('_', '-')}", dest=f"tol_{f.name}", type=float)

    parser = _Parser(prog="centroaffine", description="Centroaffine invariants of hypersurfaces.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    cat = sub.add_parser("catalog", help="built-in surfaces")
    cat.add_argument("action", choices=["list"])
    cat.add_argument("--json", action="store_true")

    sub.add_parser("invariants", parents=[common], help="pointwise invariants")
    chk = sub.add_parser("check", parents=[common], help="inequality and structural checks")
    chk.add_argument("--checks", type=_checks, help=f"comma list from {', '.join(CHECKS)}")
    sub.add_parser("ejiri", parents=[common], help="Ejiri basis at each point")
    cls = sub.add_parser("classify", parents=[common], help="classify points and the sample")
    cls.add_argument("--expect", help="required aggregate or common pointwise verdict")
    idt = sub.add_parser("identities", parents=[common], help="identities where nabla K is pure trace")
    idt.add_argument("--fd-step", type=float, default=1e-4)
    return parser


def config_from_args(ns):
    overrides = {
        f.name: getattr(ns, f"tol_{f.name}")
        for f in fields(analysis.Tolerances)
        if getattr(ns, f"tol_{f.name}") is not None
    }
    try:
        tol = analysis.Tolerances(**overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    checks = getattr(ns, "checks", None) or DEFAULT_CHECKS[ns.command]
    if ns.samples < 1:
        raise UsageError("--samples must be >= 1")
    return RunConfig(
        surface=ns.surface,
        command=ns.command,
        points=ns.point,
        grid=ns.grid,
        box=ns.box,
        samples=ns.samples,
        tolerances=tol,
        seed=ns.seed,
        output=ns.output or "text",
        checks=tuple(checks),
        jobs=ns.jobs,
        expect=getattr(ns, "expect", None),
        fd_step=getattr(ns, "fd_step", 1e-4),
    )


def catalog_listing(as_json=False):
    entries = catalog.catalog_entries()
    if as_json:
        return report.to_json(
            [{"name": e.name, "n": e.n, "tags": sorted(e.tags), "box": e.box,
              "description": e.description} for e in entries]
        )
    width = max(len(e.name) for e in entries)
    return "".join(
        f"{e.name.ljust(width)}  n={e.n}  [{', '.join(sorted(e.tags))}]  {e.description}\n"
        for e in entries
    )


def _join_signed_values(argv):
    """``--point -1,0`` -> ``--point=-1,0`` so argparse does not read an option."""
    out = []
    it = iter(argv)
    for arg in it:
        if arg in ("--point", "--box"):
            value = next(it, None)
            if value is not None and value.startswith("-"):
                out.append(f"{arg}={value}")
                continue
            out.append(arg)
            if value is not None:
                out.append(value)
        else:
            out.append(arg)
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = parser.parse_args(_join_signed_values(argv))
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if ns.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    if ns.command == "catalog":
        sys.stdout.write(catalog_listing(ns.json))
        return EXIT_OK
    try:
        config = config_from_args(ns)
        doc, status = run(config)
    except (UsageError, UnknownSurfaceError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"centroaffine: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except CentroaffineError as exc:
        print(f"centroaffine: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(render(doc, config.output))
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
