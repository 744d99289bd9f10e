"""Command-line front end.

Each subcommand reads one JSON run configuration, writes CSV/JSON
artifacts plus a manifest into the output directory, and exits with
0 on success, 2 on a config error, 3 on a numerical-verification
failure.  Numbers are emitted with 15 significant digits and all
reductions are deterministic, so reruns with --threads 1 reproduce
CSV files byte for byte.
"""

from __future__ import annotations

import functools
import hashlib
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .bands import find_gaps, refine_edge, sweep_bands
from .birman_schwinger import build_truncated_h0, characteristic_branches, \
    edge_lambda_grid, solve_pencil
from .config import ConfigError, RunConfig, load_config
from .edge_model import gram_and_nu, weighted_bloch
from .fiber import PlaneWaveBasis, default_cutoff
from .green import fundamental_solution, lattice_green, \
    lattice_green_1d_closed, plane_wave_green, scaling_check
from .lattice import MomentumGrid
from .oracle import gap_spectrum
from .predictor import predict_d1, predict_d2, threshold_verdict

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _fmt(x) -> str:
    return "%.15g" % float(x)


def _write_csv(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else _fmt(cell)
                              for cell in row))
    path.write_text("\n".join(lines) + "\n")


def _json_default(o):
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True,
                               default=_json_default) + "\n")


def _manifest(out: Path, config_path: str, timings: dict, cfg: RunConfig,
              extra: dict | None = None) -> None:
    digest = hashlib.sha256(Path(config_path).read_bytes()).hexdigest()
    doc = {
        "schema_version": cfg.raw.get("schema_version"),
        "config_sha256": digest,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "psi_calibration": (2.0 * np.pi) ** (-cfg.d),
        "timings_seconds": {k: round(v, 6) for k, v in timings.items()},
    }
    if extra:
        doc.update(extra)
    _write_json(out / "manifest.json", doc)


def _band_structure(cfg: RunConfig, threads: int):
    cutoff = cfg.numerics.cutoff or default_cutoff(cfg.d)
    basis = PlaneWaveBasis(d=cfg.d, cutoff=cutoff)
    grid = MomentumGrid(d=cfg.d, counts=(cfg.numerics.momentum_grid,) * cfg.d)
    bs = sweep_bands(cfg.V, basis, grid, cfg.numerics.n_bands, threads=threads)
    return basis, grid, bs


def _select_gap(bs, cfg: RunConfig):
    gaps = find_gaps(bs, cfg.numerics.gap_tolerance)
    finite = [g for g in gaps if not g.semi_infinite]
    idx = cfg.numerics.gap_index
    if idx == 0:
        return gaps[0]
    if idx > len(finite):
        raise ArithmeticError(f"requested finite gap #{idx} but only "
                              f"{len(finite)} converged gaps found")
    return finite[idx - 1]


def _upper_model(cfg: RunConfig, threads: int):
    _, _, bs = _band_structure(cfg, threads)
    gap = _select_gap(bs, cfg)
    edge = refine_edge(bs, gap, "upper")
    if edge.degenerate:
        raise ArithmeticError("upper edge is not Morse non-degenerate; the "
                              "non-degenerate predictor does not apply")
    vs = [weighted_bloch(edge, k, cfg.W,
                         grid_points=cfg.numerics.bloch_grid_points)
          for k in range(1, edge.n_extrema + 1)]
    return bs, gap, edge, gram_and_nu(edge, vs)


def _gap_width_for_lambda_grid(gap) -> float:
    # the semi-infinite gap has no scale of its own; sample within unit depth
    return gap.width if np.isfinite(gap.width) else 1.0


def _truncated(cfg: RunConfig, gap):
    h0 = build_truncated_h0(cfg.V, cfg.numerics.box_half_width, cfg.numerics.h,
                            d=cfg.d)
    h0.verify_gap(gap.lam_minus, gap.lam_plus)
    return h0


def common_options(f):
    @click.option("--config", "config_path", required=True,
                  type=click.Path(exists=False), help="JSON run configuration.")
    @click.option("--out", "out_dir", default="out", show_default=True,
                  type=click.Path(file_okay=False), help="Output directory.")
    @click.option("--threads", default=1, show_default=True, type=int,
                  help="Worker threads; 1 guarantees determinism.")
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        out = Path(kwargs.pop("out_dir"))
        out.mkdir(parents=True, exist_ok=True)
        config_path = kwargs.pop("config_path")
        t0 = time.perf_counter()
        try:
            cfg = load_config(config_path)
            extra = f(cfg, out, kwargs.pop("threads"), *args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            click.echo(f"numerical verification failed: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL)
        _manifest(out, config_path, {f.__name__: time.perf_counter() - t0},
                  cfg, extra)
        sys.exit(0)

    return wrapper


@click.group()
@click.version_option(__version__)
def main():
    """Spectral gaps, band-edge geometry and weak-coupling gap states of
    perturbed periodic Schrodinger operators."""


@main.command()
@common_options
def bands(cfg, out, threads):
    """Dispersion table lambda_n(p) over the quasi-momentum grid (CSV)."""
    _, grid, bs = _band_structure(cfg, threads)
    header = [f"p_{i + 1}" for i in range(cfg.d)] + \
        [f"lambda_{n + 1}" for n in range(bs.n_bands)]
    pts = grid.points()
    rows = [list(pts[i]) + list(bs.bands[i]) for i in range(len(pts))]
    _write_csv(out / "bands.csv", header, rows)


@main.command()
@common_options
def gap(cfg, out, threads):
    """Locate spectral gaps and refine the selected gap's edges (JSON)."""
    _, _, bs = _band_structure(cfg, threads)
    sel = _select_gap(bs, cfg)
    edges = []
    for side in (("upper",) if sel.semi_infinite else ("lower", "upper")):
        e = refine_edge(bs, sel, side)
        edges.append({
            "side": side, "band": e.band, "value": e.value,
            "degenerate": e.degenerate,
            "extrema": [{"p": list(x.p), "value": x.value, "mass": x.mass,
                         "simple": x.simple, "morse": x.morse}
                        for x in e.extrema],
        })
    # report the Newton-refined edge values, not the raw grid extrema
    lam_plus = [e["value"] for e in edges if e["side"] == "upper"][0]
    lam_minus = None if sel.semi_infinite else \
        [e["value"] for e in edges if e["side"] == "lower"][0]
    _write_json(out / "gap.json", {
        "j": sel.band_below,
        "lambda_minus": lam_minus,
        "lambda_plus": lam_plus,
        "edges": edges,
    })


@main.command()
@common_options
def edge(cfg, out, threads):
    """Edge model: extremal set, masses, Gram spectrum nu_k (JSON)."""
    _, _, e, model = _upper_model(cfg, threads)
    _write_json(out / "edge.json", {
        "side": e.side, "band": e.band, "value": e.value,
        "extrema": [{"p": list(x.p), "mass": x.mass,
                     "simplicity_margin": x.simplicity_margin}
                    for x in e.extrema],
        "masses": list(model.masses),
        "norms_squared": [v.norm_sq for v in model.vs],
        "nu": list(model.nu),
        "gram_condition_number": model.gram_condition_number,
    })


@main.command()
@common_options
def predict(cfg, out, threads):
    """Closed-form weak-coupling predictions per gamma (CSV)."""
    bs, sel, e, model = _upper_model(cfg, threads)
    rows = []
    width = sel.width
    for g in cfg.gammas:
        if cfg.d == 1:
            pred = predict_d1(model, g, gap_width=width)
        elif cfg.d == 2:
            pred = predict_d2(model, g, gap_width=width)
        else:
            verdict = threshold_verdict(e, cfg.W)
            _write_json(out / "threshold.json", verdict)
            return
        for k, rho in enumerate(pred.rho, start=1):
            rows.append([g, k, rho, pred.law, pred.validity_radius])
    _write_csv(out / "predict.csv",
               ["gamma", "k", "rho_pred", "law", "validity_radius"], rows)


def _pencil_tables(cfg, threads):
    _, _, bs = _band_structure(cfg, threads)
    sel = _select_gap(bs, cfg)
    h0 = _truncated(cfg, sel)
    lam_plus = h0.discrete_gap[1]
    lam_grid = edge_lambda_grid(lam_plus, _gap_width_for_lambda_grid(sel),
                                n=cfg.numerics.n_lambda)
    table = characteristic_branches(h0, cfg.W, lam_grid,
                                    n_branches=cfg.numerics.n_branches)
    return sel, h0, table


@main.command()
@common_options
def pencil(cfg, out, threads):
    """Characteristic branches mu_k(lambda) and pencil roots (CSV)."""
    _, _, table = _pencil_tables(cfg, threads)
    nb = table.positive.shape[1]
    header = ["lambda"] + [f"mu_{k + 1}" for k in range(nb)] + \
        [f"mu_neg_{k + 1}" for k in range(nb)]
    rows = [[table.lam_grid[i]] + list(table.positive[i]) +
            list(table.negative[i]) for i in range(len(table.lam_grid))]
    _write_csv(out / "branches.csv", header, rows)

    root_rows = []
    max_roots = 0
    per_gamma = []
    for g in cfg.gammas:
        roots = solve_pencil(table, g)
        flat = [r for r, mult in roots for _ in range(mult)]
        per_gamma.append((g, flat))
        max_roots = max(max_roots, len(flat))
    for g, flat in per_gamma:
        root_rows.append([g] + flat + [""] * (max_roots - len(flat)))
    _write_csv(out / "pencil_roots.csv",
               ["gamma"] + [f"rho_{k + 1}" for k in range(max_roots)],
               root_rows)


@main.command()
@common_options
def oracle(cfg, out, threads):
    """Direct-diagonalization gap eigenvalues per gamma (CSV)."""
    _, _, bs = _band_structure(cfg, threads)
    sel = _select_gap(bs, cfg)
    h0 = _truncated(cfg, sel)
    rows = []
    for g in cfg.gammas:
        res = gap_spectrum(h0, cfg.W, g, n_want=cfg.numerics.n_want,
                           seed=cfg.numerics.seed)
        for k in range(res.n_levels):
            rows.append([g, k + 1, res.eigenvalues[k], res.residuals[k]])
    _write_csv(out / "oracle.csv", ["gamma", "k", "rho_oracle", "residual"],
               rows)


@main.command()
@common_options
def compare(cfg, out, threads):
    """Prediction vs pencil vs oracle, with a JSON verdict."""
    bs, sel, e, model = _upper_model(cfg, threads)
    h0 = _truncated(cfg, sel)
    lam_plus = h0.discrete_gap[1]
    lam_grid = edge_lambda_grid(lam_plus, _gap_width_for_lambda_grid(sel),
                                n=cfg.numerics.n_lambda)
    table = characteristic_branches(h0, cfg.W, lam_grid,
                                    n_branches=cfg.numerics.n_branches)
    rows = []
    agreements = []
    first_rel_errs = []
    for g in cfg.gammas:
        pred = predict_d1(model, g, gap_width=sel.width) if cfg.d == 1 \
            else predict_d2(model, g, gap_width=sel.width)
        pencil_roots = [r for r, mult in solve_pencil(table, g)
                        for _ in range(mult)]
        res = gap_spectrum(h0, cfg.W, g, n_want=cfg.numerics.n_want,
                           seed=cfg.numerics.seed)
        # predictions are depths below the continuum edge; compare depths
        # below the shared *discrete* edge so discretization bias cancels
        n = min(len(pred.rho), len(pencil_roots), res.n_levels)
        for k in range(n):
            depth_pred = e.value - pred.rho[k]
            depth_pencil = lam_plus - sorted(pencil_roots)[k]
            depth_oracle = lam_plus - res.eigenvalues[k]
            rel_pred = abs(depth_pred - depth_oracle) / abs(depth_oracle)
            rel_pencil = abs(depth_pencil - depth_oracle) / abs(depth_oracle)
            rows.append([g, k + 1, e.value - depth_pred,
                         lam_plus - depth_pencil, res.eigenvalues[k],
                         rel_pred, rel_pencil])
            agreements.append(abs(depth_pencil - depth_oracle))
            if k == 0:
                first_rel_errs.append((abs(g), rel_pred))
    _write_csv(out / "compare.csv",
               ["gamma", "k", "rho_pred", "rho_pencil", "rho_oracle",
                "rel_err_pred", "rel_err_pencil"], rows)
    first_rel_errs.sort()
    verdict = {
        "pencil_oracle_max_abs_err": max(agreements) if agreements else None,
        "pencil_oracle_within_1e-8": bool(agreements) and
            max(agreements) <= 1e-8,
        "prediction_error_decreasing_in_gamma": all(
            a[1] <= b[1] for a, b in zip(first_rel_errs, first_rel_errs[1:])),
        "n_pairs": len(rows),
    }
    _write_json(out / "verdict.json", verdict)


@main.command("green-check")
@common_options
def green_check(cfg, out, threads):
    """Green-kernel invariants: scaling, closed forms, cross-representation."""
    del threads
    d = cfg.d
    checks = {}

    x = np.full(d, 0.3)
    scal = max(scaling_check(x, g0, d) for g0 in (0.5, 1.0, 2.0))
    checks["scaling_identity"] = {"residual": scal, "ok": scal <= 1e-12}

    if d == 1:
        worst = 0.0
        for g0 in (0.5, 1.0, 2.0):
            for xx in (0.1, 0.45, 1.3):
                direct = lattice_green([xx], [0.7], g0, 1)
                closed = lattice_green_1d_closed(xx, 0.7, g0)
                worst = max(worst, abs(direct - closed))
        checks["lattice_sum_closed_form"] = {"residual": worst,
                                             "ok": worst <= 1e-12}

    worst = 0.0
    ps = np.linspace(-np.pi, np.pi, 5, endpoint=False)[:5]
    g0s = np.linspace(0.6, 2.2, 5)
    for p1 in ps[:5 if d == 1 else 2]:
        for g0 in (g0s if d == 1 else g0s[:2]):
            u = np.full(d, 0.25)
            p = np.full(d, p1)
            lhs = plane_wave_green(u, p, g0, d, tol=1e-7)
            rhs = np.exp(-1j * p @ u) * lattice_green(u, p, g0, d)
            worst = max(worst, abs(lhs - rhs))
    checks["cross_representation"] = {"residual": worst, "ok": worst <= 1e-6}

    e1 = float(fundamental_solution(np.array([[0.5]]), 1.0, 1))
    checks["e1_closed_form"] = {
        "residual": abs(e1 - np.exp(-0.5) / 2.0), "ok": True}
    checks["e1_closed_form"]["ok"] = checks["e1_closed_form"]["residual"] <= 1e-14

    doc = {"d": d, "checks": checks,
           "ok": all(c["ok"] for c in checks.values())}
    _write_json(out / "green_check.json", doc)
    if not doc["ok"]:
        raise ArithmeticError("green-kernel invariant failed; see green_check.json")


if __name__ == "__main__":
    main()
