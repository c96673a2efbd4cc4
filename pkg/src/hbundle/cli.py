"""``hb``: command-line front end.  Every subcommand prints a JSON report.

Exit status is 0 when every check passes, 1 when a check fails (the failing
checks are named on stderr) and 2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

# worker cap for BLAS and the FFT backend; must be set before numpy loads
_threads = os.environ.get("HB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import numpy as np  # noqa: E402

from .jsonio import InputError, load_json, matrix_from_json  # noqa: E402
from .report import ReportDocument  # noqa: E402

log = logging.getLogger("hbundle")


class CheckFailed(RuntimeError):
    pass


def _grid(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NxM, got {text!r}") from None
    if a < 3 or b < 3:
        raise argparse.ArgumentTypeError("grid needs at least 3 points per direction")
    return a, b


def _load_model(path: str):
    from .model import ModelMetric
    from .monodromy import jordan_matrix, log_unipotent, sl2_triple

    obj = load_json(path)
    if not isinstance(obj, dict):
        raise InputError(f"{path}: expected a JSON object")
    conv = obj.get("convention", {})
    kw = {
        "alpha": float(obj.get("alpha", 0.5)),
        "normalization": conv.get("basis", obj.get("normalization", "chain")),
        "diagonal": conv.get("d", obj.get("diagonal", "descending")),
    }
    try:
        if "profile" in obj:
            N = jordan_matrix([int(b) for b in obj["profile"]])
        elif "gamma" in obj:
            N = log_unipotent(matrix_from_json(obj["gamma"], f"{path}: gamma")).N
        elif "N" in obj:
            N = matrix_from_json(obj["N"], f"{path}: N")
        elif "sl2" in obj:
            return ModelMetric.from_json(obj)
        else:
            raise InputError(f"{path}: expected one of profile, gamma, N or sl2")
        return ModelMetric(sl2_triple(N), **kw)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: {exc}") from exc


# -- subcommands ----------------------------------------------------------


def cmd_sl2(args) -> ReportDocument:
    from .monodromy import bracket_defects, filtration_defects, log_unipotent, sl2_triple, weight_filtration

    obj = load_json(args.inp)
    key = "gamma" if isinstance(obj, dict) and "gamma" in obj else None
    gamma = matrix_from_json(obj[key] if key else obj, f"{args.inp}: gamma")
    try:
        N = log_unipotent(gamma)
    except ValueError as exc:
        raise InputError(f"{args.inp}: {exc}") from exc
    s = sl2_triple(N)
    W = weight_filtration(s)
    rep = ReportDocument("sl2", inputs={"gamma": gamma}, convention={"labels": "H0 e_j = -j e_j"})
    rep.data.update(s.to_json())
    rep.data["weights"] = list(W.weights)
    rep.data["gr_dims"] = {str(l): W.gr_dim(l) for l in W.weights}
    exact = s.exact
    for k, v in bracket_defects(s).items():
        rep.add(k, v, 0.0 if exact else 1e-9, "==" if exact else "<")
    for k, v in filtration_defects(N, W).items():
        rep.add(f"filtration_{k}", v, True, "bool")
    return rep


def cmd_model(args) -> ReportDocument:
    from .model import check_equivariance, norm_profile, random_samples

    m = _load_model(args.model)
    rep = check_equivariance(m, random_samples(m, args.samples, np.random.default_rng(args.seed)))
    rep.command = "model"
    rep.inputs.update(samples=args.samples, seed=args.seed, model=m.to_json())
    rep.data["norm_profile_y10"] = norm_profile(m, 10.0) if m.y_min < 10 else None
    return rep


def cmd_energy(args) -> ReportDocument:
    from .model import energy_report

    m = _load_model(args.model)
    rep = energy_report(m, args.y0)
    rep.inputs["model"] = m.to_json()
    return rep


def cmd_flow(args) -> ReportDocument:
    from . import flow

    m = _load_model(args.model)
    nx, ny = args.grid
    base = flow.GridMap.from_model(m, nx, ny, args.y0, args.y1)
    rep = ReportDocument(
        "flow",
        inputs={"model": m.to_json(), "grid": [nx, ny], "y": [args.y0, args.y1], "seeds": args.seeds, "perturb": args.perturb},
        convention=m.convention,
    )
    limits = []
    for s in args.seeds:
        g = flow.perturb(base, np.random.default_rng(s), args.perturb)
        lim, r = flow.relax(g, flow.FlowConfig(tol=args.tol))
        rep.merge(r, f"seed={s}_")
        limits.append(lim)
    if len(limits) > 1:
        rep.add("limits_sup_dist", max(flow.sup_dist(a, b) for a in limits for b in limits), 1e-6)
    rep.merge(flow.gradient_bound_check(limits[0]), "gradient_")
    rep.data["max_dist_to_model"] = float(flow.dist_to_model(limits[0], m).max())
    if args.csv:
        flow.write_csv(args.csv, limits[0], m)
    return rep


def cmd_higgs(args) -> ReportDocument:
    from . import higgs

    m = _load_model(args.model)
    rep = higgs.residue_report(m, tuple(args.ladder))
    rep.command = "higgs"
    rep.inputs["model"] = m.to_json()
    rep.merge(higgs.higgs_norm_check(m), "norm_")
    if args.negative_control:
        neg = higgs.higgs_norm_check(m, convention="left")
        rep.data["negative_control"] = {k: neg.data[k] for k in ("growth_exponent", "asymptotic_exponent", "sup")}
    return rep


def cmd_kahler(args) -> ReportDocument:
    from .kahler import FlatBundle, kahler_identity_check

    bundle = FlatBundle(args.rank) if args.model is None else _load_model(args.model)
    rep = kahler_identity_check(bundle, tuple(args.sizes), args.trials, args.seed, args.metric)
    return rep


def cmd_l2check(args) -> ReportDocument:
    from . import l2sheaf

    region = l2sheaf.RegionSpec(args.eps)
    try:
        region.validate()
    except ValueError as exc:
        raise InputError(f"--eps: {exc}") from exc
    if args.germs is None:
        return l2sheaf.agreement_study(args.samples, seed=args.seed, region=region)
    obj = load_json(args.germs)
    items = obj["germs"] if isinstance(obj, dict) and "germs" in obj else obj
    if not isinstance(items, list):
        raise InputError(f"{args.germs}: expected a list of germs")
    rep = ReportDocument(
        "l2check",
        inputs={"germs": items, "eps": args.eps},
        convention={"norm_model": l2sheaf.NormModel().name, "region": "L1, L2 > 1/eps"},
    )
    rows, disagree = [], 0
    for i, item in enumerate(items):
        try:
            g = l2sheaf.GermExpression.from_json(item)
        except InputError as exc:
            raise InputError(f"{args.germs}: germs[{i}]: {exc}") from exc
        except l2sheaf.ScopeError as exc:
            rows.append({"index": i, "error": str(exc)})
            continue
        num = l2sheaf.is_l2_numeric(g, region=region)
        try:
            sym = l2sheaf.is_l2(g)
        except l2sheaf.LogPowerUnsupported as exc:
            rows.append({"index": i, "predicate": None, "numeric": num.member, "note": str(exc)})
            continue
        disagree += sym.member != num.member
        rows.append({"index": i, "predicate": sym.member, "trace": sym.trace, "numeric": num.member, "estimate": num.estimate})
    rep.data["germs"] = rows
    rep.add("predicate_oracle_disagreements", disagree, 0, "==")
    return rep


def cmd_dbar(args) -> ReportDocument:
    from . import dbar

    b = dbar.WeightedLineBundle(args.k, args.alpha)
    b.require_admissible()
    grid = dbar.PolarGrid(args.grid[0], args.grid[1], args.alpha, args.span)
    if args.rhs is None:
        f, name = dbar.named_rhs("tbar_over_abs2", grid), "tbar_over_abs2"
    else:
        obj = load_json(args.rhs)
        if isinstance(obj, dict) and "case" in obj:
            name = obj["case"]
            try:
                f = dbar.named_rhs(name, grid)
            except ValueError as exc:
                raise InputError(f"{args.rhs}: case: {exc}") from exc
        elif isinstance(obj, dict) and "f" in obj:
            name = "sampled"
            try:
                f = np.array([[complex(*z) if isinstance(z, list) else complex(z) for z in row] for row in obj["f"]])
            except (TypeError, ValueError) as exc:
                raise InputError(f"{args.rhs}: f: {exc}") from exc
            if f.shape != (grid.nr, grid.nt):
                raise InputError(f"{args.rhs}: f has shape {f.shape}, grid is {(grid.nr, grid.nt)}")
        else:
            raise InputError(f"{args.rhs}: expected 'case' or 'f'")
    rep = ReportDocument(
        "dbar",
        inputs={"k": args.k, "alpha": args.alpha, "grid": list(args.grid), "span": args.span, "rhs": name},
        convention={"norm": "|sigma|^2 = L^k", "area": "dA / (r^2 L^2)"},
    )
    try:
        sol = dbar.solve_dbar(dbar.DbarProblem(f, grid), b)
    except dbar.NotL2:
        rep.add("data_L2", False, True, "bool")
        return rep
    rep.data.update(norm_u=sol.norm_u, norm_f=sol.norm_f, ratio=sol.ratio, correction=sol.correction)
    rep.add("relative_residual", sol.residual / sol.norm_f if sol.norm_f else sol.residual, args.tol)
    rep.add("norm_u_finite", sol.norm_u, None, "finite")
    if args.csv:
        _write_dbar_csv(args.csv, sol)
    return rep


def _write_dbar_csv(path, sol) -> None:
    import csv

    R, P = sol.grid.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "psi", "re_u", "im_u"])
        for r, p, u in zip(R.ravel(), P.ravel(), sol.u.ravel()):
            w.writerow([f"{r:.12g}", f"{p:.12g}", f"{u.real:.12g}", f"{u.imag:.12g}"])


def cmd_all(args) -> ReportDocument:
    from . import acceptance

    rep = ReportDocument("all", inputs={"only": args.only})
    for name, fn in acceptance.CRITERIA.items():
        key = name.split()[0]
        if args.only and key not in args.only:
            continue
        r = fn()
        print(acceptance.summary_line(name, r), file=sys.stderr)
        rep.merge(r, f"[{key}] ")
        rep.data[name] = {"pass": r.passed, "failing": r.failing()}
    return rep


# -- driver ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hb", description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="write the report here instead of stdout")
    ap.add_argument("--wall-time", action="store_true", help="include wall time in the report")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sl2", help="nilpotent log, sl2 triple and weight filtration of a monodromy")
    p.add_argument("--in", dest="inp", required=True, help="JSON with 'gamma' (or a bare matrix)")
    p.set_defaults(func=cmd_sl2)

    p = sub.add_parser("model", help="equivariance of the model metric")
    p.add_argument("--model", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("energy", help="model energy against the closed form")
    p.add_argument("--model", required=True)
    p.add_argument("--y0", type=float, default=10.0)
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("flow", help="relax perturbed model data to a harmonic map")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", type=_grid, default=(32, 24))
    p.add_argument("--y0", type=float, default=5.0)
    p.add_argument("--y1", type=float, default=20.0)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--perturb", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--csv", help="write distance-to-model per node")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("higgs", help="Higgs field residue and pointwise bound")
    p.add_argument("--model", required=True)
    p.add_argument("--ladder", type=float, nargs="+", default=[50.0, 100.0, 200.0, 400.0])
    p.add_argument("--negative-control", action="store_true")
    p.set_defaults(func=cmd_higgs)

    p = sub.add_parser("kahler", help="discrete Kaehler identities on random forms")
    p.add_argument("--model")
    p.add_argument("--rank", type=int, default=1, help="rank of the flat bundle when no model is given")
    p.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=["poincare", "euclidean"], default="poincare")
    p.set_defaults(func=cmd_kahler)

    p = sub.add_parser("l2check", help="L2 membership of germs: predicate vs numeric oracle")
    p.add_argument("--germs", help="germs.json; without it the randomized agreement study runs")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_l2check)

    p = sub.add_parser("dbar", help="weighted dbar problem on the punctured disk")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--rhs", help="JSON with 'case' (zero, one, tbar_over_abs2, sweep) or sampled 'f'")
    p.add_argument("--grid", type=_grid, default=(256, 256))
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--span", type=float, default=9.0, help="radial extent in log r")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_dbar)

    p = sub.add_parser("all", help="run the acceptance criteria")
    p.add_argument("--only", nargs="+", help="criterion numbers, e.g. 1 5 9")
    p.set_defaults(func=cmd_all)
    return ap


def main(argv=None) -> int:
    from .dbar import ExcludedWeight

    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        rep = args.func(args)
    except InputError as exc:
        print(f"hb: input error: {exc}", file=sys.stderr)
        return 2
    except ExcludedWeight as exc:
        print(f"hb: {exc}", file=sys.stderr)
        return 1
    if args.wall_time:
        rep.wall_time = time.perf_counter() - t0
    text = rep.dumps()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not rep.passed:
        print("hb: failing checks: " + ", ".join(rep.failing()), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
