"""Command line entry point and report emission.

Subcommands: generate, verify, spectrum, bs-scan, identities.  Reports are
JSON with a fixed top-level key set (config, mesh_stats, curvature_summary,
identities, spectrum, birman_schwinger, verdicts, timings, schema_version);
keys a command does not compute are null.  Every judged numeric travels
with the threshold it was judged against, and the resolved configuration is
embedded verbatim so a report is reproducible from itself.

Exit codes: 0 success, 2 theorem-violation tripwire, 3 precondition or
pipeline failure (with a JSON error block), 64 usage.

Determinism: for a fixed config and seed the JSON and CSV outputs are
byte-identical when --no-embed-timings is passed; wall-clock timings are
the one intentionally nondeterministic block.

A key = value config file (--config) supplies defaults; explicit flags win.
The CURVSPEC_OUTDIR environment variable rebases relative output paths.

Flag naming note: `generate` follows the surface convention (--R major,
--r minor radius for the torus); the analysis commands use --r for the
operator order and spell out --major-radius/--minor-radius instead.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import birman, identities, surfaces, verify
from .assemble import assemble_pencil
from .curvature import compute_curvature
from .eigen import smallest_eigenpairs
from .errors import CurvSpecError
from .mesh import load_mesh, validate, write_off

SCHEMA_VERSION = "1"

_REPORT_KEYS = (
    "config", "mesh_stats", "curvature_summary", "identities", "spectrum",
    "birman_schwinger", "verdicts", "timings", "schema_version",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; 2 is taken by the theorem
    # tripwire, so route usage problems through our own exception
    def error(self, message):
        raise UsageError(message)


def _convert(text):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _read_config_file(path):
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{ln}: expected key = value")
                key, val = (p.strip() for p in line.split("=", 1))
                values[key.replace("-", "_")] = _convert(val)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    return values


def _resolve_out(path):
    if path is None:
        return None
    if os.path.isabs(path):
        return path
    return os.path.join(os.environ.get("CURVSPEC_OUTDIR", "."), path)


def _build_surface(args):
    params = {
        "sphere": {"radius": args.radius},
        "ellipsoid": {"a": args.a, "b": args.b, "c": args.c},
        "torus": {"major_radius": args.major_radius,
                  "minor_radius": args.minor_radius},
        "bumped": {"radius": args.radius, "amplitude": args.amplitude,
                   "frequency": args.frequency},
    }
    if args.shape not in params:
        raise UsageError(f"unknown shape {args.shape!r}")
    try:
        return surfaces.from_params(args.shape, **params[args.shape])
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid surface descriptor: {exc}") from exc


def _acquire_mesh(args, timings):
    if bool(args.mesh) == bool(args.shape):
        raise UsageError("provide exactly one of --mesh and --shape")
    t0 = time.perf_counter()
    if args.mesh:
        mesh = load_mesh(args.mesh)
    else:
        surf = _build_surface(args)
        mesh = surfaces.generate(surf, subdiv=args.subdiv,
                                 nu=args.nu, nv=args.nv)
    timings["mesh_s"] = time.perf_counter() - t0
    return mesh


def _mesh_stats(mesh):
    rep = validate(mesh)
    return {
        "n_vertices": rep.n_vertices,
        "n_faces": rep.n_faces,
        "n_edges": rep.n_edges,
        "euler_characteristic": rep.euler_characteristic,
        "closed": rep.closed,
        "oriented": rep.oriented,
        "total_area": float(mesh.total_area),
        "min_face_area": rep.min_face_area,
        "mean_face_area": rep.mean_face_area,
        "max_face_area": rep.max_face_area,
        "max_aspect_ratio": rep.max_aspect_ratio,
        "passed": rep.passed,
    }


def _curvature_summary(field, pencil):
    k = field.vertex_kappas
    return {
        "r": pencil.r,
        "kappa_min": float(k.min()),
        "kappa_max": float(k.max()),
        "h1_mean": float(np.mean(0.5 * (k[:, 0] + k[:, 1]))),
        "h_next_min": float(field.h_next.min()),
        "h_next_max": float(field.h_next.max()),
        "h_next_positive": bool(field.h_next_positive),
        "w_min": float(pencil.w.min()),
        "w_max": float(pencil.w.max()),
        "w_mean_sq": verify.spectral_scale(pencil),
    }


def _config_block(args, command):
    block = {"command": command}
    for key, val in sorted(vars(args).items()):
        if key == "func" or callable(val):
            continue
        block[key] = val
    return block


def _emit(report, args, timings):
    report["schema_version"] = SCHEMA_VERSION
    report["timings"] = (None if args.no_embed_timings else
                         {k: float(v) for k, v in timings.items()})
    for key in _REPORT_KEYS:
        report.setdefault(key, None)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    out = _resolve_out(args.output)
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _error_block(report, exc):
    report["verdicts"] = report.get("verdicts")
    report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    return report


def _verify_config(args):
    return verify.VerifyConfig(
        k=args.k, seed=args.seed, eig_tol=args.eig_tol, method=args.method,
        tol_sphere=args.tol_sphere, tol_sphere_factor=args.tol_sphere_factor,
        tol_identity=args.tol_identity, tol_orth=args.tol_orth,
    )


def _spectrum_block(spec):
    return {
        "eigenvalues": [float(v) for v in spec.eigenvalues],
        "residuals": [float(v) for v in spec.residuals],
        "method": spec.method,
        "seed": spec.seed,
    }


def _identities_block(rep, cfg):
    return {
        "lr_position_residual": [float(v) for v in rep.lr_position_residual],
        "minkowski_residual": float(rep.minkowski_residual),
        "orthogonality": [float(v) for v in rep.orthogonality],
        "orthogonality_raw": [float(v) for v in rep.orthogonality_raw],
        "d": [float(v) for v in rep.d],
        "d_sum": float(rep.d_sum),
        "resolvent_bound_margin": float(rep.resolvent_bound_margin),
        "chain_residual": float(rep.chain_residual),
        "dirichlet_minkowski_gap": float(rep.dirichlet_minkowski_gap),
        "tol_identity": cfg.tol_identity,
        "tol_orth": cfg.tol_orth,
    }


def cmd_generate(args):
    if args.output is None:
        raise UsageError("generate requires --output")
    if args.shape is None:
        raise UsageError("generate requires --shape")
    surf = _build_surface(args)
    try:
        mesh = surfaces.generate(surf, subdiv=args.subdiv,
                                 nu=args.nu, nv=args.nv)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _resolve_out(args.output)
    write_off(mesh, out)
    rep = validate(mesh)
    print(
        f"wrote {out}: vertices={rep.n_vertices} faces={rep.n_faces} "
        f"euler={rep.euler_characteristic} closed={rep.closed} "
        f"oriented={rep.oriented}"
    )
    return 0


def cmd_verify(args):
    timings = {}
    report = {"config": _config_block(args, "verify")}
    t_all = time.perf_counter()
    try:
        mesh = _acquire_mesh(args, timings)
        report["mesh_stats"] = _mesh_stats(mesh)
        cfg = _verify_config(args)

        t0 = time.perf_counter()
        field = compute_curvature(mesh, r=args.r)
        pencil = assemble_pencil(mesh, field, args.r)
        timings["curvature_s"] = time.perf_counter() - t0
        report["curvature_summary"] = _curvature_summary(field, pencil)

        t0 = time.perf_counter()
        theorem = verify.verify_theorem(mesh, args.r, cfg)
        lemma = verify.lemma_two_negative(mesh, args.r, cfg)
        corollary = verify.verify_corollary(mesh, args.r, cfg)
        timings["verify_s"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        ident = identities.full_report(
            mesh, field, pencil, r=args.r, mu=args.mu, trials=args.trials,
            seed=args.seed,
        )
        timings["identities_s"] = time.perf_counter() - t0
        report["identities"] = _identities_block(ident, cfg)
        report["spectrum"] = {
            "eigenvalues": [float(v) for v in theorem.eigenvalues],
            "k": cfg.k, "seed": cfg.seed,
        }
        report["verdicts"] = {
            "theorem": {
                "verdict": theorem.verdict,
                "lambda_1": theorem.lambda_1,
                "lambda_2": theorem.lambda_2,
                "tol_sphere": theorem.tol_sphere,
                "spectral_scale": theorem.spectral_scale,
                "multiplicity": theorem.multiplicity,
                "sphere_distance": theorem.sphere_distance,
                "sphere_distance_ceiling": verify.SPHERE_DISTANCE_CEILING,
                "cluster_position_alignment":
                    theorem.cluster_position_alignment,
                "d_sum": theorem.d_sum,
            },
            "corollary": {
                "lambda_2_t": corollary.lambda_2_t,
                "lambda_2_pencil": corollary.lambda_2_pencil,
                "comparison_ok": corollary.comparison_ok,
                "tol": corollary.tol,
                "domination_min_slack": corollary.domination_min_slack,
                "domination_floor": -1e-10,
            },
            "lemma": {
                "applicable": lemma.applicable,
                "witness": lemma.witness,
                "d": [float(v) for v in lemma.d],
                "thresholds": [float(v) for v in lemma.thresholds],
                "negative_count": lemma.negative_count,
                "tol_negative": lemma.tol_negative,
            },
        }
    except CurvSpecError as exc:
        timings["total_s"] = time.perf_counter() - t_all
        _emit(_error_block(report, exc), args, timings)
        print(f"error: {exc}", file=sys.stderr)
        return 3
    timings["total_s"] = time.perf_counter() - t_all
    _emit(report, args, timings)
    if report["verdicts"]["theorem"]["verdict"] == verify.VIOLATION:
        print("verdict Violation: lambda_2 above tolerance", file=sys.stderr)
        return 2
    return 0


def cmd_spectrum(args):
    timings = {}
    report = {"config": _config_block(args, "spectrum")}
    t_all = time.perf_counter()
    try:
        mesh = _acquire_mesh(args, timings)
        report["mesh_stats"] = _mesh_stats(mesh)
        t0 = time.perf_counter()
        field = compute_curvature(mesh, r=args.r)
        pencil = assemble_pencil(mesh, field, args.r)
        timings["curvature_s"] = time.perf_counter() - t0
        report["curvature_summary"] = _curvature_summary(field, pencil)
        t0 = time.perf_counter()
        maxw2 = float(np.max(pencil.w**2))
        spec = smallest_eigenpairs(
            pencil.a_matrix(), pencil.mass, k=args.k, tol=args.eig_tol,
            seed=args.seed, method=args.method,
            sigma=-1.1 * maxw2 - 0.1 * (maxw2 + 1.0),
        )
        timings["eigen_s"] = time.perf_counter() - t0
        report["spectrum"] = _spectrum_block(spec)
        if args.csv:
            spec.write_csv(_resolve_out(args.csv))
    except CurvSpecError as exc:
        timings["total_s"] = time.perf_counter() - t_all
        _emit(_error_block(report, exc), args, timings)
        print(f"error: {exc}", file=sys.stderr)
        return 3
    timings["total_s"] = time.perf_counter() - t_all
    _emit(report, args, timings)
    return 0


def cmd_bs_scan(args):
    if args.mu_min is not None and args.mu_max is not None \
            and args.mu_min >= args.mu_max:
        raise UsageError("empty mu range: need mu-min < mu-max")
    timings = {}
    report = {"config": _config_block(args, "bs-scan")}
    t_all = time.perf_counter()
    try:
        mesh = _acquire_mesh(args, timings)
        report["mesh_stats"] = _mesh_stats(mesh)
        t0 = time.perf_counter()
        field = compute_curvature(mesh, r=args.r)
        pencil = assemble_pencil(mesh, field, args.r)
        timings["curvature_s"] = time.perf_counter() - t0
        report["curvature_summary"] = _curvature_summary(field, pencil)
        t0 = time.perf_counter()
        try:
            scan = birman.scan_crossings(
                pencil, mu_min=args.mu_min, mu_max=args.mu_max,
                steps=args.steps, k=args.scan_k, seed=args.seed,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        timings["scan_s"] = time.perf_counter() - t0
        report["birman_schwinger"] = scan.to_json_dict()
        if args.csv:
            scan.write_csv(_resolve_out(args.csv))
    except CurvSpecError as exc:
        timings["total_s"] = time.perf_counter() - t_all
        _emit(_error_block(report, exc), args, timings)
        print(f"error: {exc}", file=sys.stderr)
        return 3
    timings["total_s"] = time.perf_counter() - t_all
    _emit(report, args, timings)
    return 0


def cmd_identities(args):
    timings = {}
    report = {"config": _config_block(args, "identities")}
    t_all = time.perf_counter()
    try:
        mesh = _acquire_mesh(args, timings)
        report["mesh_stats"] = _mesh_stats(mesh)
        cfg = _verify_config(args)
        t0 = time.perf_counter()
        field = compute_curvature(mesh, r=args.r)
        pencil = assemble_pencil(mesh, field, args.r)
        timings["curvature_s"] = time.perf_counter() - t0
        report["curvature_summary"] = _curvature_summary(field, pencil)
        t0 = time.perf_counter()
        ident = identities.full_report(
            mesh, field, pencil, r=args.r, mu=args.mu, trials=args.trials,
            seed=args.seed,
        )
        timings["identities_s"] = time.perf_counter() - t0
        report["identities"] = _identities_block(ident, cfg)
    except CurvSpecError as exc:
        timings["total_s"] = time.perf_counter() - t_all
        _emit(_error_block(report, exc), args, timings)
        print(f"error: {exc}", file=sys.stderr)
        return 3
    timings["total_s"] = time.perf_counter() - t_all
    _emit(report, args, timings)
    return 0


def _add_shape_flags(p, generate=False):
    p.add_argument("--shape",
                   choices=["sphere", "ellipsoid", "torus", "bumped"])
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--amplitude", type=float, default=0.05)
    p.add_argument("--frequency", type=int, default=3)
    p.add_argument("--subdiv", type=int, default=3)
    p.add_argument("--nu", type=int, default=None)
    p.add_argument("--nv", type=int, default=None)
    if generate:
        p.add_argument("--R", dest="major_radius", type=float, default=2.0,
                       help="torus major radius")
        p.add_argument("--r", dest="minor_radius", type=float, default=0.5,
                       help="torus minor radius")
    else:
        p.add_argument("--major-radius", type=float, default=2.0)
        p.add_argument("--minor-radius", type=float, default=0.5)


def _add_analysis_flags(p):
    p.add_argument("--mesh", help="input OFF/OBJ mesh path")
    _add_shape_flags(p, generate=False)
    p.add_argument("--r", type=int, default=0, help="operator order")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eig-tol", type=float, default=1e-10)
    p.add_argument("--method", choices=["auto", "dense", "iterative"],
                   default="auto")
    p.add_argument("--tol-sphere", type=float, default=None)
    p.add_argument("--tol-sphere-factor", type=float, default=0.05)
    p.add_argument("--tol-identity", type=float, default=0.05)
    p.add_argument("--tol-orth", type=float, default=1e-8)
    p.add_argument("--mu", type=float, default=1.0,
                   help="mu for the resolvent bound trials")
    p.add_argument("--trials", type=int, default=20)


def _add_common_flags(p):
    p.add_argument("--config", help="key = value defaults file")
    p.add_argument("--output", "-o", help="output path (JSON or mesh)")
    p.add_argument("--no-embed-timings", action="store_true",
                   help="null the timings block for byte-stable output")


def build_parser():
    parser = _Parser(prog="curvspec", allow_abbrev=False)
    subs = parser.add_subparsers(dest="command", required=True)
    table = {}

    g = subs.add_parser("generate", allow_abbrev=False,
                        help="write an analytic surface mesh as OFF")
    _add_shape_flags(g, generate=True)
    _add_common_flags(g)
    g.set_defaults(func=cmd_generate)
    table["generate"] = g

    for name, fn, extra in (
        ("verify", cmd_verify, ()),
        ("spectrum", cmd_spectrum, ("csv",)),
        ("bs-scan", cmd_bs_scan, ("scan",)),
        ("identities", cmd_identities, ()),
    ):
        p = subs.add_parser(name, allow_abbrev=False)
        _add_analysis_flags(p)
        _add_common_flags(p)
        if "csv" in extra:
            p.add_argument("--csv", help="also write the spectrum CSV")
        if "scan" in extra:
            p.add_argument("--csv", help="also write the scan CSV")
            p.add_argument("--mu-min", type=float, default=None)
            p.add_argument("--mu-max", type=float, default=None)
            p.add_argument("--steps", type=int, default=32)
            p.add_argument("--scan-k", type=int, default=3)
        p.set_defaults(func=fn)
        table[name] = p

    return parser, table


def main(argv=None):
    parser, table = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            file_vals = _read_config_file(args.config)
            sub = table[args.command]
            valid = {a.dest for a in sub._actions}
            for key in file_vals:
                if key not in valid:
                    raise UsageError(f"unknown config key {key!r}")
            sub.set_defaults(**file_vals)
            args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 64


if __name__ == "__main__":
    sys.exit(main())
