"""Command-line front end.

Subcommands:
  verify      run the exact operator-identity suite on a model file
  gap         spectral gap / kernel scan of the Dirac square on a torus model
  fiber       randomized exact battery on the spinor fiber (no model needed)
  crosscheck  lattice cross-validation of the symbolic identity pairs

Exit codes: 0 pass, 1 mathematical violation, 2 invalid input, 3 numerical
failure.  Reports are deterministic for a fixed seed (the runtime_ms column
is measurement, not content).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import random
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import clifford_fiber as cf
from . import frame_geometry as fg
from . import operator_calculus as oc
from . import spectral as spec

EXIT_PASS = 0
EXIT_VIOLATION = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    k_min: int = 1
    k_max: int = 4
    N: int = 32
    q: int = 4
    trials: int = 100
    seed: int = 0
    tol: float = 0.05
    fmt: str = "json"
    out: str | None = None

    def validate(self) -> str | None:
        if self.k_min > self.k_max:
            return f"empty k range {self.k_min}..{self.k_max}"
        if self.N < 4 or self.N % 2:
            return f"N={self.N} must be even and >= 4"
        if self.trials < 0:
            return "trials must be >= 0"
        return None


def _parse_k_range(text: str) -> tuple[int, int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return int(lo), int(hi)
    v = int(text)
    return v, v


def _emit(config: RunConfig, payload: dict, csv_rows: list[dict] | None = None):
    """Write the report atomically (or print it); CSV only when rows given."""
    if config.fmt == "csv" and csv_rows is not None:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(csv_rows[0].keys()) if csv_rows else ["empty"])
        writer.writeheader()
        for row in csv_rows:
            writer.writerow(row)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if config.out:
        tmp = Path(config.out).with_suffix(".tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, config.out)
    else:
        sys.stdout.write(text)


def _load_model(config: RunConfig) -> fg.FrameModel | int:
    if not config.model:
        print("error: --model is required", file=sys.stderr)
        return EXIT_INVALID
    try:
        model = fg.resolve_model(config.model)
    except fg.ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    rep = fg.validate(model)
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not rep.ok:
        print(f"error: invalid model {model.name!r}: {rep.first_failure()}",
              file=sys.stderr)
        return EXIT_INVALID
    return model


# ---------------------------------------------------------------------------

def cmd_verify(config: RunConfig) -> int:
    model = _load_model(config)
    if isinstance(model, int):
        return model
    k = config.k_min if model.line_b is not None else 0
    try:
        report = oc.verify_suite(model, k=k)
    except (oc.SetupError, fg.ModelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    items = []
    rows = []
    for it in report.items:
        entry = {
            "key": it.key,
            "identity": it.label,
            "status": it.status(),
            "reported_only": it.reported_only,
        }
        if it.residual is not None:
            entry["residual"] = {"exact_zero": it.residual.exact_zero,
                                 "max_abs": it.residual.max_abs}
        if it.skipped:
            entry["reason"] = it.reason
        items.append(entry)
        rows.append({"key": it.key, "status": it.status(),
                     "max_abs": it.residual.max_abs if it.residual else ""})
    payload = {"command": "verify", "model": report.model, "k": report.k,
               "identities": items, "passed": report.all_passed,
               "identities_passed": report.counted_passes()}
    _emit(config, payload, rows)
    return EXIT_PASS if report.all_passed else EXIT_VIOLATION


def cmd_gap(config: RunConfig) -> int:
    model = _load_model(config)
    if isinstance(model, int):
        return model
    try:
        spec.require_flat_torus(model)
        if model.line_b is None:
            print("error: gap scan requires a line bundle", file=sys.stderr)
            return EXIT_INVALID
        spec.chern_number(model)
    except fg.ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if config.N < 8:
        print(f"warning: grid N={config.N} below resolution heuristic, "
              "results may be coarse", file=sys.stderr)
    ks = list(range(config.k_min, config.k_max + 1))
    try:
        reports = spec.gap_scan(model, ks, config.N)
    except spec.SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    rows = [r.row() for r in reports]
    ok = True
    notes = []
    for r in reports:
        if r.k == 0:
            notes.append("k=0: vanishing asserted only for large k; "
                         f"odd kernel dimension {r.kernel_dim_odd}")
            continue
        if r.kernel_dim_odd != 0:
            ok = False
            notes.append(f"k={r.k}: odd kernel dimension {r.kernel_dim_odd} != 0")
        target = 2 * r.k * r.m
        if r.gap < target * (1 - config.tol):
            ok = False
            notes.append(f"k={r.k}: gap {r.gap:.6g} below 2km(1-tol) "
                         f"= {target * (1 - config.tol):.6g}")
    fitted = max((r.fitted_C for r in reports), default=0.0)
    payload = {"command": "gap", "model": model.name, "N": config.N,
               "rows": rows, "fitted_C": fitted, "notes": notes, "passed": ok}
    _emit(config, payload, rows)
    return EXIT_PASS if ok else EXIT_VIOLATION


def cmd_fiber(config: RunConfig) -> int:
    if config.q % 2 or config.q < 2:
        print("error: codimension must be even and >= 2", file=sys.stderr)
        return EXIT_INVALID
    rng = random.Random(config.seed)
    result = cf.fiber_battery(rng, config.q, config.trials)
    payload = {
        "command": "fiber", "q": config.q, "trials": result.trials,
        "seed": config.seed,
        "bottom_eigenvalue_exact": result.all_exact,
        "odd_bound_margin_nonnegative": result.all_margin_nonneg,
        "failures": list(result.failures),
        "passed": result.ok,
    }
    if config.trials == 0:
        payload["note"] = "zero-trial no-op report"
    rows = [{"q": config.q, "trials": result.trials, "passed": result.ok}]
    _emit(config, payload, rows)
    return EXIT_PASS if result.ok else EXIT_VIOLATION


def _crosscheck_pairs(model: fg.FrameModel, k: int):
    """Identity pairs of the suite, each built twice (with B / with B zeroed)
    so the lattice layer can scale the curvature part to physical units."""
    model0 = dataclasses.replace(model, line_b=None)
    sp1 = oc.spinor_setup(model, k=k)
    sp0 = oc.spinor_setup(model0, k=0)
    fo1 = oc.forms_setup(model)
    fo0 = oc.forms_setup(model0)

    def both(builder, s1, s0):
        return builder(s1), builder(s0)

    def d2(s):
        d = oc.dirac(s)
        return oc.compose(d, d)

    def dp2(s):
        d = oc.dirac_prime(s)
        return oc.compose(d, d)

    def dh2(s):
        d = oc.d_horizontal(s)
        return oc.compose(d, d)

    def dhs2(s):
        d = oc.d_horizontal_star(s)
        return oc.compose(d, d)

    def sig_rhs(s):
        from .exact import rational
        half = rational(1, 2)
        return (oc.d_horizontal(s) + oc.d_horizontal_star(s)
                - oc.endo_op(s, (s.eps_vector(s.geom.tau)
                                 + s.iota_vector(s.geom.tau)).scale(half)))

    return [
        ("a", both(d2, sp1, sp0), both(oc.lichnerowicz_rhs, sp1, sp0)),
        ("b", both(dp2, sp1, sp0), both(oc.dirac_prime_square_rhs, sp1, sp0)),
        ("c", both(d2, sp1, sp0), both(oc.dirac_square_full_curvature_rhs, sp1, sp0)),
        ("e", both(oc.hodge_laplacian, fo1, fo0), both(oc.hodge_bochner_rhs, fo1, fo0)),
        ("f1", both(dh2, fo1, fo0), both(oc.dh_square_rhs, fo1, fo0)),
        ("f2", both(dhs2, fo1, fo0), both(oc.dh_star_square_rhs, fo1, fo0)),
        ("g", both(oc.dirac, fo1, fo0), both(sig_rhs, fo1, fo0)),
    ]


def cmd_crosscheck(config: RunConfig) -> int:
    model = _load_model(config)
    if isinstance(model, int):
        return model
    try:
        spec.require_flat_torus(model)
    except fg.ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    k = config.k_min if model.line_b is not None else 0
    rng = np.random.default_rng(config.seed)
    tol = 1e-8
    rows = []
    ok = True
    try:
        for key, lhs_pair, rhs_pair in _crosscheck_pairs(model, k):
            res = spec.cross_validate(lhs_pair, rhs_pair, config.N,
                                      config.trials, rng)
            rows.append({"identity": key, "residual": res, "ok": res <= tol})
            ok = ok and res <= tol
    except spec.SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    payload = {"command": "crosscheck", "model": model.name, "k": k,
               "N": config.N, "trials": config.trials, "tolerance": tol,
               "rows": rows, "passed": ok}
    if config.trials == 1:
        payload["note"] = "single-trial run"
    _emit(config, payload, rows)
    return EXIT_PASS if ok else EXIT_VIOLATION


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="transdirac",
        description="Exact transverse-Dirac identity suite and lattice spectra "
                    "on foliated frame models.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model_required=True):
        if model_required:
            p.add_argument("--model", required=True,
                           help="model file path or bundled name "
                                f"({', '.join(fg.bundled_model_names())})")
        p.add_argument("--k", default="1..4", help="tensor power range A..B or single K")
        p.add_argument("--N", type=int, default=32, help="grid points per transverse direction")
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=0.05)
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="json")
        p.add_argument("--out", default=None, help="output path (atomic write)")

    pv = sub.add_parser("verify", help="exact operator-identity suite")
    common(pv)
    pg = sub.add_parser("gap", help="spectral gap and kernel scan")
    common(pg)
    pf = sub.add_parser("fiber", help="random fiber battery")
    common(pf, model_required=False)
    pf.add_argument("--q", type=int, default=4, help="even codimension")
    pc = sub.add_parser("crosscheck", help="lattice cross-validation of identity pairs")
    common(pc)
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    k_min, k_max = _parse_k_range(args.k)
    return RunConfig(command=args.command, model=getattr(args, "model", None),
                     k_min=k_min, k_max=k_max, N=args.N,
                     q=getattr(args, "q", 4), trials=args.trials,
                     seed=args.seed, tol=args.tol, fmt=args.fmt, out=args.out)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    err = config.validate()
    if err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    handler = {"verify": cmd_verify, "gap": cmd_gap,
               "fiber": cmd_fiber, "crosscheck": cmd_crosscheck}[config.command]
    return handler(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
