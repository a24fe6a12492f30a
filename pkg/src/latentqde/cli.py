"""Command-line runner: ``latentqde run | preset | report``."""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .arith import evaluate_coefficients
from .errors import ConfigurationError, NumericalError
from .lse import solve_problem
from .model import model_coefficients
from .presets import PRESETS, preset
from .problem import ProblemSpec, dump_problem, load_problem
from .program import operator_on_register
from .training import Objective, TrainConfig, parse_overlap_mode, train

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
GRID_POINTS = 101

LOSS_HEADER = ["epoch", "l_de", "l_init", "l_bc", "total"]
SUMMARY_HEADER = ["rmse", "max_abs_error", "final_loss", "epochs_used", "seed", "wall_clock"]


def fmt(v) -> str:
    """Float with 17 significant digits (round-trips exactly)."""
    v = float(np.real(v))
    return repr(v) if math.isfinite(v) else str(v)


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def solution_table(problem: ProblemSpec, coeffs: np.ndarray, points: int = GRID_POINTS):
    """Header and rows of solution.csv on a uniform grid over each domain."""
    encs = problem.encodings()
    axes = [np.linspace(*e.domain, points) for e in encs]
    mesh = [m.ravel() for m in np.meshgrid(*axes, indexing="ij")]
    dim = problem.ndim - 1
    gen = encs[dim].generator().conj().T
    dcoeffs = operator_on_register(encs, dim, gen) @ coeffs
    f = np.real(evaluate_coefficients(encs, coeffs, *mesh))
    df = np.real(evaluate_coefficients(encs, dcoeffs, *mesh))
    if problem.analytic is not None:
        ft = problem.analytic(*mesh) * np.ones_like(f)
        try:
            dft = problem.analytic.derivative(dim)(*mesh) * np.ones_like(f)
        except ConfigurationError:
            dft = np.full_like(f, np.nan)
    else:
        ft = dft = np.full_like(f, np.nan)
    names = ["x", "y", "z"][: problem.ndim] if problem.ndim <= 3 else [f"x{i}" for i in range(problem.ndim)]
    header = names + ["f_model", "f_truth", "df_model", "df_truth", "abs_error"]
    rows = [[fmt(c[i]) for c in mesh] + [fmt(f[i]), fmt(ft[i]), fmt(df[i]), fmt(dft[i]),
                                         fmt(abs(f[i] - ft[i]))] for i in range(f.size)]
    return header, rows, (mesh, f, ft)


def _svg(problem, mesh, f, ft, history) -> str:
    """Two panels: solution vs truth (1D, or x-slices of 2D), and log10 loss."""
    W, Hh, pad = 420, 300, 40

    def polyline(xs, ys, box, rng_x, rng_y, color, dash=""):
        x0, y0, w, h = box
        (ax, bx), (ay, by) = rng_x, rng_y
        pts = []
        for x, y in zip(xs, ys):
            if not (math.isfinite(x) and math.isfinite(y)):
                continue
            px = x0 + (x - ax) / ((bx - ax) or 1) * w
            py = y0 + h - (y - ay) / ((by - ay) or 1) * h
            pts.append(f"{px:.2f},{py:.2f}")
        d = f' stroke-dasharray="{dash}"' if dash else ""
        return f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{d} points="{" ".join(pts)}"/>'

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{2 * W}" height="{Hh}">',
             '<rect width="100%" height="100%" fill="white"/>']
    box1 = (pad, pad / 2, W - 1.5 * pad, Hh - 1.5 * pad)
    box2 = (W + pad, pad / 2, W - 1.5 * pad, Hh - 1.5 * pad)
    for b in (box1, box2):
        parts.append(f'<rect x="{b[0]}" y="{b[1]}" width="{b[2]}" height="{b[3]}" fill="none" stroke="black"/>')
    if problem.ndim == 1:
        curves = [(mesh[0], ft, "black", ""), (mesh[0], f, "crimson", "5,3")]
    else:
        n = GRID_POINTS
        curves = []
        for j, col in zip((0, n // 2, n - 1), ("steelblue", "seagreen", "darkorange")):
            sl = slice(j, None, n)
            curves += [(mesh[0][sl], ft[sl], "black", ""), (mesh[0][sl], f[sl], col, "5,3")]
    ys = np.concatenate([c[1][np.isfinite(c[1])] for c in curves])
    ry = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    rx = (float(mesh[0].min()), float(mesh[0].max()))
    parts += [polyline(x, y, box1, rx, ry, c, d) for x, y, c, d in curves]
    parts.append(f'<text x="{box1[0]}" y="{Hh - 8}" font-size="11">f vs truth, y in [{ry[0]:.3g}, {ry[1]:.3g}]</text>')
    if history:
        ep = np.array([h[0] for h in history], float)
        lt = np.log10(np.maximum(np.array([h[-1] for h in history], float), 1e-300))
        parts.append(polyline(ep, lt, box2, (ep.min(), max(ep.max(), 1)), (lt.min(), lt.max()), "navy"))
        parts.append(f'<text x="{box2[0]}" y="{Hh - 8}" font-size="11">log10 total loss '
                     f'[{lt.min():.2f}, {lt.max():.2f}] over {int(ep.max())} epochs</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_artifacts(out: Path, problem, coeffs, history, seed, wall, epochs):
    out.mkdir(parents=True, exist_ok=True)
    rows_h = [[str(h.epoch), fmt(h.l_de), fmt(h.l_init), fmt(h.l_bc), fmt(h.total)] for h in history]
    _write_csv(out / "loss_history.csv", LOSS_HEADER, rows_h)
    header, rows, (mesh, f, ft) = solution_table(problem, coeffs)
    _write_csv(out / "solution.csv", header, rows)
    err = np.abs(f - ft)
    rmse = float(np.sqrt(np.mean(err ** 2)))
    final = history[-1].total if history else float("nan")
    _write_csv(out / "summary.csv", SUMMARY_HEADER,
               [[fmt(rmse), fmt(err.max()), fmt(final), str(epochs), str(seed), f"{wall:.3f}"]])
    (out / "plot.svg").write_text(_svg(problem, mesh, f, ft,
                                       [(h.epoch, h.total) for h in history]), encoding="utf-8")
    return rmse


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _load(config: str) -> ProblemSpec:
    if config.startswith("preset:"):
        return preset(config.split(":", 1)[1])
    if not os.path.exists(config) and config in PRESETS:
        return preset(config)
    return load_problem(Path(config))


def cmd_run(args) -> int:
    problem = _load(args.config)
    if args.mode:
        problem = replace(problem, mode=args.mode)
    over = problem.train_overrides
    cfg = TrainConfig.from_overrides(over, seed=args.seed, epochs=args.epochs,
                                     overlap_mode=args.overlap)
    out = Path(args.out or f"runs/{problem.name}")
    start = time.perf_counter()
    if problem.mode == "lse":
        sol = solve_problem(problem)
        coeffs = sol.coefficients
        history = [Objective(problem, replace(cfg, overlap_mode="exact")).breakdown_for(coeffs)]
        epochs = 0
    else:
        try:
            report = train(problem, cfg)
        except NumericalError as exc:
            if exc.report is not None and exc.report.history:
                r = exc.report
                write_artifacts(out, problem, model_coefficients(r.model), r.history, cfg.seed,
                                time.perf_counter() - start, r.epochs_run)
            raise
        coeffs = model_coefficients(report.model)
        history, epochs = report.history, report.epochs_run
    wall = time.perf_counter() - start
    if not np.all(np.isfinite(coeffs)):
        raise NumericalError("solution has non-finite coefficients")
    rmse = write_artifacts(out, problem, coeffs, history, cfg.seed, wall, epochs)
    print(f"{problem.name}: mode={problem.mode} epochs={epochs} final_loss={history[-1].total:.6g} "
          f"rmse={rmse:.6g} -> {out}")
    return EXIT_OK


def cmd_preset(args) -> int:
    p = preset(args.name)
    if args.emit:
        sys.stdout.write(dump_problem(p))
    else:
        print(f"{p.name}: {p.description}")
        print(f"  families={list(p.families)} qubits={list(p.qubits)} layers={p.layers} "
              f"shifted={p.shifted} terms={len(p.terms)}")
    return EXIT_OK


def _read_csv(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def cmd_report(args) -> int:
    d = Path(args.dir)
    if not (d / "summary.csv").exists() or not (d / "solution.csv").exists():
        raise ConfigurationError(f"no run artifacts in {d}", field="dir")
    sh, srows = _read_csv(d / "summary.csv")
    summary = dict(zip(sh, srows[0]))
    hh, rows = _read_csv(d / "solution.csv")
    data = np.array([[float(v) for v in r] for r in rows]) if rows else np.zeros((0, len(hh)))
    fm, ftr = data[:, hh.index("f_model")], data[:, hh.index("f_truth")]
    err = np.abs(fm - ftr)
    rmse = float(np.sqrt(np.mean(err ** 2))) if err.size else float("nan")
    bad = int(np.sum(~np.isfinite(data)))
    cols = ["rmse", "max_abs_error", "final_loss", "epochs_used", "seed", "wall_clock"]
    print(" ".join(f"{c:>16s}" for c in cols + ["rmse_recomputed"]))
    print(" ".join(f"{summary.get(c, ''):>16.16s}" for c in cols) + f" {rmse:16.6e}")
    if bad:
        print(f"warning: {bad} non-finite entries in solution.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="latentqde", description="Latent-space DE solver runner")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="solve a problem from a config file (or preset:NAME)")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--epochs", type=int)
    r.add_argument("--mode", choices=["variational", "lse"])
    r.add_argument("--overlap", help="exact or shots:N")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)
    p = sub.add_parser("preset", help="describe or emit a preset config")
    p.add_argument("name")
    p.add_argument("--emit", action="store_true", help="print the preset as a config file")
    p.set_defaults(func=cmd_preset)
    rp = sub.add_parser("report", help="summarize a run directory")
    rp.add_argument("dir")
    rp.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "overlap", None):
            parse_overlap_mode(args.overlap)
        return args.func(args)
    except ConfigurationError as exc:
        field = f"{exc.field}: " if getattr(exc, "field", None) else ""
        print(f"error: {field}{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
