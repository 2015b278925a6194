"""Command-line front end.

Exit codes: 0 success, 1 validation/domain/io failure (with an error JSON
document on stderr), 2 usage error. Numeric JSON output uses 17
significant digits so every 64-bit float round-trips exactly; CSV uses 12.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import contour as contour_mod
from . import duality, embedding, estimation, geometry, kernel, numdiff, testing
from .errors import DomainError, DppGeoError, PreconditionError, ShapeError
from .kernel import LKernel, MarginalKernel, UPoint
from .lattice import SubsetId


def _format_float(x: float) -> str:
    if x != x:
        return "NaN"
    if x in (float("inf"), float("-inf")):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return f"{x:.17g}"


def dumps(obj, indent: int = 0) -> str:
    """JSON text with floats at 17 significant digits."""
    pad = " " * indent
    if isinstance(obj, dict):
        items = ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items())
        return pad + "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return pad + "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return pad + json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return pad + str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return pad + _format_float(float(obj))
    return pad + json.dumps(obj)


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise _IoError(f"cannot read {path}: {exc}") from exc


class _IoError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _load_document(path: str):
    """Detect and parse one of the JSON document kinds by its keys."""
    doc = _load_json(path)
    if "matrix" in doc:
        return kernel.kernel_from_json(doc)
    if "u1" in doc:
        return UPoint.from_json(doc)
    if "theta" in doc:
        return embedding.ThetaPoint.from_json(doc)
    if "eta1" in doc:
        return duality.MixedPoint.from_json(doc)
    if "observations" in doc:
        return estimation.Dataset.from_json(doc)
    raise ShapeError(f"unrecognized document in {path}: keys {sorted(doc)}")


def _as_u_point(obj) -> UPoint:
    if isinstance(obj, UPoint):
        return obj
    if isinstance(obj, LKernel):
        return kernel.u_from_l(obj)
    if isinstance(obj, MarginalKernel):
        return kernel.u_from_l(kernel.k_to_l(obj))
    raise ShapeError(f"expected a kernel or u-point document, got {type(obj).__name__}")


def _as_l_kernel(obj) -> LKernel:
    if isinstance(obj, LKernel):
        return obj
    if isinstance(obj, MarginalKernel):
        return kernel.k_to_l(obj)
    if isinstance(obj, UPoint):
        return kernel.l_from_u(obj)
    raise ShapeError(f"expected a kernel or u-point document, got {type(obj).__name__}")


def _parse_subset(text: str, m: int) -> SubsetId:
    text = text.strip()
    if not text:
        return SubsetId(0, m)
    return SubsetId.from_elements([int(t) for t in text.split(",")], m)


# -- subcommand handlers -----------------------------------------------------


def _cmd_validate(args) -> int:
    obj = _load_document(args.infile)
    if isinstance(obj, (LKernel, MarginalKernel)):
        kind = "L" if isinstance(obj, LKernel) else "K"
        ev = np.linalg.eigvalsh(obj.entries)
        doc = {"valid": True, "kind": kind, "m": obj.m, "eigenvalues": ev.tolist()}
    elif isinstance(obj, UPoint):
        kernel.l_from_u(obj)
        doc = {"valid": True, "kind": "u", "m": obj.m}
    else:
        raise ShapeError("validate expects a kernel or u-point document")
    _emit(dumps(doc), args.out)
    return 0


def _cmd_convert(args) -> int:
    obj = _load_document(args.infile)
    target = args.to
    if target == "K":
        out = kernel.kernel_to_json(kernel.l_to_k(_as_l_kernel(obj)))
    elif target == "L":
        out = kernel.kernel_to_json(_as_l_kernel(obj))
    elif target == "u":
        out = _as_u_point(obj).to_json()
    elif target == "theta":
        out = embedding.theta_from_u(_as_u_point(obj)).to_json()
    else:  # pragma: no cover - argparse restricts choices
        raise ShapeError(f"unknown conversion target {target}")
    _emit(dumps(out), args.out)
    return 0


def _cmd_pmf(args) -> int:
    l = _as_l_kernel(_load_document(args.infile))
    if args.all:
        table = kernel.pmf_table(l)
        rows = [
            {"subset": SubsetId(bits, l.m).to_json(), "p": float(table[bits])}
            for bits in range(1 << l.m)
        ]
        _emit(dumps({"m": l.m, "table": rows}), args.out)
    else:
        if args.subset is None:
            raise ShapeError("pmf needs --subset or --all")
        a = _parse_subset(args.subset, l.m)
        _emit(dumps({"m": l.m, "subset": a.to_json(), "pmf": kernel.pmf(l, a)}), args.out)
    return 0


def _cmd_sample(args) -> int:
    l = _as_l_kernel(_load_document(args.infile))
    draws = kernel.sample(l, args.seed, args.n)
    doc = {"m": l.m, "seed": args.seed, "samples": [s.to_json() for s in draws]}
    _emit(dumps(doc), args.out)
    return 0


def _matrix_csv(mat: np.ndarray) -> str:
    return "\n".join(",".join(f"{v:.12g}" for v in row) for row in mat) + "\n"


def _cmd_fisher(args) -> int:
    obj = _load_document(args.infile)
    if args.coords == "theta":
        if isinstance(obj, embedding.ThetaPoint):
            mat = geometry.fisher_theta(obj).matrix
            m = obj.m
        else:
            u = _as_u_point(obj)
            mat = geometry.fisher_theta_dpp(kernel.k_from_u(u.absolute())).matrix
            m = u.m
    else:
        u = _as_u_point(obj)
        mat = geometry.fisher_u(u)
        m = u.m
    if args.format == "csv":
        _emit(_matrix_csv(mat), args.out)
        return 0
    doc = {"m": m, "coords": args.coords, "matrix": mat.tolist()}
    if args.cross_check:
        rep = geometry.fisher_u_cross_claimed(_as_u_point(obj))
        doc["cross_check"] = {
            "claimed": rep.claimed.tolist(),
            "ground_truth": rep.ground_truth.tolist(),
            "discrepancy": rep.discrepancy.tolist(),
            "max_abs_discrepancy": rep.max_abs_discrepancy,
        }
        sys.stderr.write(
            "quality-diversity Fisher cross block: published closed form vs B^T M B "
            f"ground truth disagree by max |diff| = {rep.max_abs_discrepancy:.6e}\n"
        )
    _emit(dumps(doc), args.out)
    return 0


def _cmd_curvature(args) -> int:
    u = _as_u_point(_load_document(args.infile))
    t = geometry.e_curvature(u)
    report = geometry.curvature_block_report(t)
    doc = {
        "m": t.m,
        "shape": list(t.H.shape),
        "data": t.H.ravel().tolist(),
        "squared": t.squared.tolist(),
        "ancillary_basis": t.ancillary_basis.tolist(),
        "report": report,
    }
    _emit(dumps(doc), args.out)
    if args.out is not None:
        sys.stdout.write(report + "\n")
    return 0


def _cmd_duality_check(args) -> int:
    u = _as_u_point(_load_document(args.infile))
    eta1 = duality.grad_psi_u1(u)
    fd = numdiff.gradient(lambda x: embedding.psi(UPoint(u.m, x, u.u2, u.signs)), u.u1)
    kdiag = np.diag(kernel.k_from_u(u.absolute()).entries)
    dev = float(np.max(np.abs(eta1 - fd)))
    lines = ["element  eta_a            d(psi)/d(u1_a)   K_aa             status"]
    for a in range(u.m):
        ok = "ok" if abs(eta1[a] - fd[a]) < args.tol else "DEVIATION"
        lines.append(
            f"{a + 1:>7}  {eta1[a]:<15.12f}  {fd[a]:<15.12f}  {kdiag[a]:<15.12f}  {ok}"
        )
    lines.append(f"max |eta_a - FD dpsi/du1_a| = {dev:.3e} (tol {args.tol:.0e})")
    if u.m >= 2:
        pair_fd = duality.psi_grad_u2_fd(u)
        eta = duality.eta_from_k(kernel.k_from_u(u.absolute()))
        pair_eta = eta.values[u.m : u.m + len(pair_fd)]
        lines.append("pair block (no identity asserted): eta_ab vs FD dpsi/du2_ab")
        for p in range(len(pair_fd)):
            lines.append(f"  pair {p}: {pair_eta[p]:.12f} vs {pair_fd[p]:.12f}")
    text = "\n".join(lines)
    sys.stdout.write(text + "\n")
    if args.out:
        doc = {
            "m": u.m,
            "eta1": eta1.tolist(),
            "fd_grad_psi_u1": fd.tolist(),
            "k_diag": kdiag.tolist(),
            "max_deviation": dev,
        }
        _emit(dumps(doc), args.out)
    return 0 if dev < args.tol else 1


def _cmd_kl(args) -> int:
    u = _as_u_point(_load_document(args.infile))
    v = _as_u_point(_load_document(args.infile2))
    direct = duality.kl_direct(u, v)
    doc = {"m": u.m, "kl_direct": direct}
    try:
        doc["kl_legendre"] = duality.kl_legendre(u, v)
        doc["legendre_applicable"] = True
    except PreconditionError:
        doc["kl_legendre"] = None
        doc["legendre_applicable"] = False
    _emit(dumps(doc), args.out)
    return 0


def _cmd_fit(args) -> int:
    data = _load_document(args.infile)
    if not isinstance(data, estimation.Dataset):
        raise ShapeError("fit expects a dataset document with 'observations'")
    res = estimation.fit_mle(data, max_iter=args.max_iter, tol=args.tol)
    _emit(dumps(res.to_json()), args.out)
    return 0


def _cmd_contour(args) -> int:
    names = args.vary.split(":")
    if len(names) != 2:
        raise ShapeError("--vary needs exactly two coordinates, e.g. u1:u2")
    start, stop, count = args.range.split(":")
    spec = contour_mod.ContourSpec(
        m=args.m,
        quantity=args.quantity,
        vary=(
            contour_mod.coord_position(names[0], args.m),
            contour_mod.coord_position(names[1], args.m),
        ),
        fixed=contour_mod.parse_fixed(args.fixed, args.m),
        start=float(start),
        stop=float(stop),
        count=int(count),
    )
    rows = contour_mod.contour_grid(spec)
    if args.format == "json":
        doc = {
            "m": args.m,
            "quantity": args.quantity,
            "rows": [[x, y, v] for x, y, v in rows],
        }
        _emit(dumps(doc), args.out)
    else:
        _emit(contour_mod.rows_to_csv(rows), args.out)
    return 0


def _cmd_selftest(args) -> int:
    results = testing.run_selftest(args.m, args.trials, args.seed)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        sys.stdout.write(f"{status}  {r.name:<{width}}  {r.detail}\n")
    failed = sum(not r.passed for r in results)
    sys.stdout.write(f"{len(results) - failed}/{len(results)} checks passed\n")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dppgeo",
        description="Information geometry of determinantal point processes on a finite ground set.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--out", default=None, help="write output here instead of stdout")
        return p

    p = add("validate", _cmd_validate, help="validate a kernel or u-point document")
    p.add_argument("--in", dest="infile", required=True)

    p = add("convert", _cmd_convert, help="convert between L, K, u and theta documents")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--to", required=True, choices=["L", "K", "u", "theta"])

    p = add("pmf", _cmd_pmf, help="probability of one subset or the full table")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--subset", default=None, help="comma-separated 1-based elements; empty for {}")
    p.add_argument("--all", action="store_true", help="emit the full 2^m table")

    p = add("sample", _cmd_sample, help="draw i.i.d. subsets from the exact pmf")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = add("fisher", _cmd_fisher, help="Fisher information in u or theta coordinates")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--coords", choices=["u", "theta"], default="u")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument(
        "--cross-check",
        action="store_true",
        help="include the published-formula vs ground-truth cross-block report",
    )

    p = add("curvature", _cmd_curvature, help="e-embedding curvature tensor and its square")
    p.add_argument("--in", dest="infile", required=True)

    p = add("duality-check", _cmd_duality_check, help="table of eta_a vs FD dpsi/du1_a vs K_aa")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--tol", type=float, default=1e-6)

    p = add("kl", _cmd_kl, help="KL divergence between two model points")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--in2", dest="infile2", required=True)

    p = add("fit", _cmd_fit, help="natural-gradient maximum likelihood from a dataset")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-8)

    p = add("contour", _cmd_contour, help="CSV grid of psi or theta123 over two coordinates")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--vary", required=True, help="two coordinates, e.g. u1:u2 or u12:u23")
    p.add_argument("--fixed", default="", help='e.g. "u3=-0.1,u12=log(1-0.25)"')
    p.add_argument("--range", required=True, help="start:stop:count applied to both axes")
    p.add_argument("--quantity", choices=list(contour_mod.QUANTITIES), default="psi")
    p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = add("selftest", _cmd_selftest, help="run the cross-module invariant battery")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    try:
        return args.fn(args)
    except _IoError as exc:
        sys.stderr.write(dumps({"error": "io", "detail": str(exc)}) + "\n")
        return 1
    except DppGeoError as exc:
        sys.stderr.write(dumps({"error": exc.kind, "detail": str(exc)}) + "\n")
        return 1
    except np.linalg.LinAlgError as exc:
        sys.stderr.write(dumps({"error": "domain", "detail": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
