"""Command-line front end.

Subcommands: exact-law, simulate, clt, llt, martingale, lattice-info,
oracle-check.  Artifacts are written atomically (temp file + rename) and a
one-line JSON summary goes to stdout.  Exit codes: 0 success, 1 failed
oracle check, 2 validation error, 3 numerical-guard error.
"""

import argparse
import io
import json
import os
import sys
import tempfile

import numpy as np

from .colors import build_model, moments as model_moments, thinned_lattice, detect_span_1d
from .diagnostics import (
    cf_distance,
    ks_distance_1d,
    llt_statistic,
    random_config_convergence,
    standardize,
)
from .errors import (
    InvalidSpec,
    NotLatticeValued,
    NumericalGuard,
    UrnLabError,
    ValidationError,
)
from .exact_law import (
    SparseLaw,
    brute_force_law,
    exact_law_dp,
    exact_law_ladder,
    write_law_csv,
    DEFAULT_MAX_CELLS,
)
from .urn_process import (
    l2_bound_scan,
    martingale_trace,
    sample_path,
    second_moment_exact,
)

_FMT = ".17g"


def _fmt(x: float) -> str:
    return format(float(x), _FMT)


def _atomic_write(path: str, text: str) -> None:
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), prefix=".urnlab-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_u0(spec: str, dim: int) -> SparseLaw:
    spec = spec.strip()
    if spec.startswith("delta:"):
        parts = spec[len("delta:"):].split(",")
        try:
            coeffs = tuple(int(p) for p in parts)
        except ValueError as exc:
            raise InvalidSpec(f"bad u0 spec {spec!r}") from exc
        if len(coeffs) == 1 and dim > 1 and coeffs[0] == 0:
            coeffs = (0,) * dim
        if len(coeffs) != dim:
            raise InvalidSpec(f"u0 {spec!r} has dimension {len(coeffs)}, model needs {dim}")
        return SparseLaw.delta(coeffs)
    if spec.startswith("file:"):
        with open(spec[5:], "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        try:
            entries = {tuple(int(c) for c in e["coeffs"]): float(e["prob"])
                       for e in obj["atoms"]}
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"bad u0 file {spec!r}: {exc}") from exc
        law = SparseLaw.from_entries(entries)
        law.validate()
        return law
    raise InvalidSpec(f"unknown u0 spec {spec!r}")


def _parse_n_list(text: str) -> list[int]:
    try:
        values = [int(p) for p in text.split(",")]
    except ValueError as exc:
        raise InvalidSpec(f"bad n-list {text!r}") from exc
    if any(b <= a for a, b in zip(values, values[1:])):
        raise InvalidSpec(f"n-list must be strictly increasing, got {values}")
    return values


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",")]
    except ValueError as exc:
        raise InvalidSpec(f"bad float list {text!r}") from exc


def _check_prune_eps(value: float) -> float:
    if not (0.0 <= value <= 1e-6):
        raise InvalidSpec(f"prune-eps must be in [0, 1e-6], got {value}")
    return value


def _lambda_vector(args, dim: int) -> np.ndarray:
    if args.lam is None:
        raise InvalidSpec("--lambda is required for this command")
    vec = _parse_floats(args.lam)
    if len(vec) == 1 and dim > 1:
        vec = vec * dim
    if len(vec) != dim:
        raise InvalidSpec(f"--lambda has {len(vec)} components, model needs {dim}")
    return np.array(vec)


def _emit(summary: dict, artifact: str | None, args) -> None:
    if args.out:
        if artifact is None:
            raise InvalidSpec(f"command {args.command} produces no artifact file")
        _atomic_write(args.out, artifact)
        summary["out"] = args.out
    print(json.dumps(summary, sort_keys=True))


def _law_json(law: SparseLaw) -> str:
    emb = law.model.embedding if law.model is not None else None
    rows = []
    for coeffs, p in law.items_sorted():
        x = law._embedding(emb).embed(coeffs)
        rows.append({"coeffs": list(coeffs), "x": [float(v) for v in x], "prob": p})
    return json.dumps({"n": law.n, "pruned_mass": law.pruned_mass,
                       "entries": rows}, sort_keys=True) + "\n"


def _cmd_exact_law(args) -> int:
    model = build_model(args.model)
    u0 = _parse_u0(args.u0, model.dim)
    prune = _check_prune_eps(args.prune_eps)
    if args.n is None:
        raise InvalidSpec("--n is required for exact-law")
    law = exact_law_dp(model, u0, args.n, prune, max_cells=args.max_cells)
    if args.format == "csv":
        buf = io.StringIO()
        write_law_csv(law, buf)
        artifact = buf.getvalue()
    else:
        artifact = _law_json(law)
    _emit({
        "command": "exact-law", "model": args.model, "n": args.n,
        "entries": len(law.entries), "pruned_mass": law.pruned_mass,
        "total_mass": law.total_mass(),
    }, artifact, args)
    return 0


def _cmd_simulate(args) -> int:
    model = build_model(args.model)
    u0 = _parse_u0(args.u0, model.dim)
    if args.reps > 1:
        if args.n_list is None:
            raise InvalidSpec("replication mode needs --n-list")
        n_list = _parse_n_list(args.n_list)
        eps = _parse_floats(args.eps) if args.eps else [0.1, 0.2, 0.3]
        report = random_config_convergence(
            model, u0, n_list, args.reps, eps, base_seed=args.seed,
            use_gamma=args.use_gamma_centering)
        lines = ["n,eps,exceedance"]
        for i, n in enumerate(report["n_list"]):
            for k, e in enumerate(report["eps"]):
                lines.append(f"{n},{_fmt(e)},{_fmt(report['exceedance'][i][k])}")
        artifact = "\n".join(lines) + "\n"
        if args.format == "json":
            artifact = json.dumps({
                "n_list": report["n_list"], "eps": report["eps"],
                "reps": report["reps"], "seed": report["seed"],
                "exceedance": report["exceedance"].tolist(),
            }, sort_keys=True) + "\n"
        _emit({
            "command": "simulate", "mode": "replication", "model": args.model,
            "reps": args.reps, "seed": args.seed,
            "exceedance": report["exceedance"].tolist(),
        }, artifact, args)
        return 0
    if args.n is None:
        raise InvalidSpec("--n is required for simulate")
    path = sample_path(model, u0, args.n, args.seed)
    header = "step," + ",".join(f"c{k + 1}" for k in range(model.dim))
    lines = [header]
    for m in range(path.n):
        lines.append(str(m) + "," + ",".join(str(int(c)) for c in path.draws[m]))
    artifact = "\n".join(lines) + "\n"
    if args.format == "json":
        artifact = json.dumps({
            "seed": args.seed, "draws": path.draws.tolist(),
        }, sort_keys=True) + "\n"
    _emit({
        "command": "simulate", "mode": "path", "model": args.model,
        "n": args.n, "seed": args.seed,
        "final_color": [int(c) for c in path.draws[-1]] if path.n else None,
    }, artifact, args)
    return 0


def _cmd_clt(args) -> int:
    model = build_model(args.model)
    u0 = _parse_u0(args.u0, model.dim)
    prune = _check_prune_eps(args.prune_eps)
    if args.n_list is None:
        raise InvalidSpec("--n-list is required for clt")
    n_list = _parse_n_list(args.n_list)
    stat_kind = args.statistic
    if stat_kind == "auto":
        stat_kind = "ks" if model.dim == 1 else "cf"
    if stat_kind == "ks" and model.dim != 1:
        raise InvalidSpec("ks statistic needs a one-dimensional model")
    moms = model_moments(model)
    laws = exact_law_ladder(model, u0, n_list, prune, max_cells=args.max_cells)
    reports = []
    for law in laws:
        slaw = standardize(law, moms, use_gamma=args.use_gamma_centering)
        value = ks_distance_1d(slaw) if stat_kind == "ks" else cf_distance(slaw)
        reports.append({"n": law.n, "statistic": value,
                        "pruned_mass": law.pruned_mass})
    if args.format == "csv":
        lines = ["n,statistic"] + [f"{r['n']},{_fmt(r['statistic'])}" for r in reports]
        artifact = "\n".join(lines) + "\n"
    else:
        artifact = json.dumps(reports, sort_keys=True) + "\n"
    _emit({
        "command": "clt", "model": args.model, "statistic": stat_kind,
        "n_list": n_list, "values": [r["statistic"] for r in reports],
    }, artifact, args)
    return 0


def _cmd_llt(args) -> int:
    model = build_model(args.model)
    u0 = _parse_u0(args.u0, model.dim)
    prune = _check_prune_eps(args.prune_eps)
    if args.n_list is None:
        raise InvalidSpec("--n-list is required for llt")
    n_list = _parse_n_list(args.n_list)
    moms = model_moments(model)
    lattice = thinned_lattice(model)
    laws = exact_law_ladder(model, u0, n_list, prune, max_cells=args.max_cells)
    reports = []
    for law in laws:
        stat = llt_statistic(law, moms, lattice)
        reports.append({
            "n": stat.n, "statistic": stat.sup_value,
            "pruned_mass": law.pruned_mass,
            "argmax": [float(v) for v in stat.argmax_point],
            "normalizer": stat.normalizer,
        })
    if args.format == "csv":
        lines = ["n,statistic"] + [f"{r['n']},{_fmt(r['statistic'])}" for r in reports]
        artifact = "\n".join(lines) + "\n"
    else:
        artifact = json.dumps(reports, sort_keys=True) + "\n"
    _emit({
        "command": "llt", "model": args.model, "n_list": n_list,
        "values": [r["statistic"] for r in reports],
    }, artifact, args)
    return 0


def _cmd_martingale(args) -> int:
    model = build_model(args.model)
    u0 = _parse_u0(args.u0, model.dim)
    if args.n is None:
        raise InvalidSpec("--n is required for martingale")
    lam = _lambda_vector(args, model.dim)
    m2 = second_moment_exact(model, u0, lam, args.n)
    summary = {
        "command": "martingale", "model": args.model, "n": args.n,
        "lambda": [float(v) for v in lam],
        "m2_exact_final": float(m2[args.n]),
    }
    if args.exact_curve:
        lines = ["step,m2_value"] + [f"{j},{_fmt(v)}" for j, v in enumerate(m2)]
        artifact = "\n".join(lines) + "\n"
    else:
        path = sample_path(model, u0, args.n, args.seed)
        trace = martingale_trace(path, model, u0, lam)
        summary["seed"] = args.seed
        summary["final_m"] = float(trace.values[-1])
        lines = ["step,m_value"] + [f"{j},{_fmt(v)}" for j, v in enumerate(trace.values)]
        artifact = "\n".join(lines) + "\n"
    if args.scan_delta:
        report = l2_bound_scan(model, u0, delta=args.scan_delta_max,
                               n_max=min(args.n, 10**5), grid=args.scan_grid)
        summary["delta_star"] = report["delta_star"]
    _emit(summary, artifact, args)
    return 0


def _cmd_lattice_info(args) -> int:
    model = build_model(args.model)
    info: dict = {"command": "lattice-info", "model": args.model, "dim": model.dim}
    if model.dim == 1:
        support = [float(v) for v in model.embedded_support[:, 0]]
        try:
            spec = detect_span_1d(support, include_zero=False)
            info["span_unthinned"] = spec.det_abs
            info["offset_unthinned"] = float(spec.offset[0])
        except NotLatticeValued:
            info["span_unthinned"] = None
            info["offset_unthinned"] = None
        thin = detect_span_1d(support, include_zero=True)
        info["span_thinned"] = thin.det_abs
        info["offset_thinned"] = float(thin.offset[0])
    else:
        lattice = thinned_lattice(model)
        info["lattice_det"] = lattice.det_abs
        info["basis"] = [[float(v) for v in row] for row in lattice.basis]
        info["offset"] = [float(v) for v in lattice.offset]
    artifact = json.dumps(info, sort_keys=True) + "\n"
    _emit(info, artifact, args)
    return 0


def _cmd_oracle_check(args) -> int:
    model = build_model(args.model)
    u0 = _parse_u0(args.u0, model.dim)
    n = args.n if args.n is not None else 6
    reference = brute_force_law(model, u0, n)
    computed = exact_law_dp(model, u0, n, prune_eps=0.0, max_cells=args.max_cells)
    keys = set(reference.entries) | set(computed.entries)
    max_diff = max(abs(reference.entries.get(k, 0.0) - computed.entries.get(k, 0.0))
                   for k in keys)
    status = "PASS" if max_diff < 1e-13 else "FAIL"
    _emit({
        "command": "oracle-check", "model": args.model, "n": n,
        "status": status, "max_abs_diff": max_diff,
        "entries": len(reference.entries),
    }, None, args)
    return 0 if status == "PASS" else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="urnlab",
        description="Balanced urn schemes with lattice-indexed colors: exact "
                    "laws, simulation, and Gaussian-limit diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--model", required=True,
                       help="ssrw<d>, right-shift, triangular, or file:<path>")
        p.add_argument("--u0", default="delta:0",
                       help="initial configuration: delta:<coeffs> or file:<path>")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="artifact output path")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--prune-eps", dest="prune_eps", type=float, default=0.0,
                       help="total pruning budget in [0, 1e-6]")
        p.add_argument("--max-cells", dest="max_cells", type=int,
                       default=DEFAULT_MAX_CELLS,
                       help="law support cap (memory guard)")

    p = sub.add_parser("exact-law", help="exact law of the sampled color")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.set_defaults(func=_cmd_exact_law)

    p = sub.add_parser("simulate", help="sample urn paths / replication experiment")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--n-list", dest="n_list", default=None)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--eps", default=None, help="comma-separated thresholds")
    p.add_argument("--use-gamma-centering", dest="use_gamma_centering",
                   action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("clt", help="central-limit ladder on exact laws")
    common(p)
    p.add_argument("--n-list", dest="n_list", default=None)
    p.add_argument("--statistic", choices=("auto", "ks", "cf"), default="auto")
    p.add_argument("--use-gamma-centering", dest="use_gamma_centering",
                   action="store_true")
    p.set_defaults(func=_cmd_clt)

    p = sub.add_parser("llt", help="local-limit ladder on exact laws")
    common(p)
    p.add_argument("--n-list", dest="n_list", default=None)
    p.set_defaults(func=_cmd_llt)

    p = sub.add_parser("martingale", help="martingale traces and second moments")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--lambda", dest="lam", default=None,
                   help="comma-separated transform argument")
    p.add_argument("--exact-curve", dest="exact_curve", action="store_true",
                   help="write the exact second-moment curve instead of a trace")
    p.add_argument("--scan-delta", dest="scan_delta", action="store_true",
                   help="also scan for the second-moment boundedness region")
    p.add_argument("--scan-delta-max", dest="scan_delta_max", type=float, default=2.0)
    p.add_argument("--scan-grid", dest="scan_grid", type=int, default=2001)
    p.set_defaults(func=_cmd_martingale)

    p = sub.add_parser("lattice-info", help="span / minimal-lattice report")
    common(p)
    p.set_defaults(func=_cmd_lattice_info)

    p = sub.add_parser("oracle-check", help="dynamic program vs enumeration oracle")
    common(p)
    p.add_argument("--n", type=int, default=None, help="steps (max 8 advisable)")
    p.set_defaults(func=_cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except NumericalGuard as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 3
    except UrnLabError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
