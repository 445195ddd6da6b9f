"""Command-line front end: run the pipelines, write CSV/JSON/SVG artifacts.

Subcommands
-----------
bulk-spectrum   Bloch eigenvalues along one swept angle -> CSV + SVG.
edge-gap        min |edge spectrum| on both half-planes -> JSON, PASS/FAIL.
corner-flow     spectral flow of the corner family -> JSON + SVG.
verify-product  both sides of the corner product formula -> verdict JSON.
report          consolidated invariant report for a dim-3 model -> JSON.

Every JSON document embeds the parsed configuration and the package
version; two runs with the same flags produce byte-identical JSON.  SVG
output carries a generation timestamp comment unless --no-timestamps is
given.  Exit codes: 0 success, 2 model or configuration error, 3
numerical failure, 4 spectral-gap assumption violated.
"""

import argparse
import datetime
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .errors import (
    EigensolverError,
    GapClosedError,
    GeometryError,
    ModelError,
    ResidualError,
    TrackingError,
)
from . import assembly, geometry, invariants, symbol

PERTURB_NORM = 0.1  # on-site disorder strength used when --seed is given


@dataclass
class RunConfig:
    """Parsed flags, echoed verbatim into every output document."""

    command: str
    model: str | None = None
    builtin: str | None = None
    alpha: str = "0"
    beta: str = "inf"
    L: int = 24
    W: int = 40
    t_grid: int = 64
    k_grid: int = 16
    window: float | None = None
    mask_threshold: float = 0.6
    out: str = "."
    seed: int | None = None
    no_timestamps: bool = False
    gap_threshold: float | None = None
    sweep_axis: int | None = None
    h1: str | None = None
    h2: str | None = None

    def __post_init__(self):
        if self.L < 1 or self.W < 1:
            raise ModelError(f"L and W must be positive, got L={self.L}, W={self.W}")
        if self.t_grid < 4:
            raise ModelError(f"t-grid must be at least 4, got {self.t_grid}")
        if self.k_grid < 2:
            raise ModelError(f"k-grid must be at least 2, got {self.k_grid}")
        if self.window is not None and self.window <= 0:
            raise ModelError(f"window must be positive, got {self.window}")
        if not 0.0 < self.mask_threshold < 1.0:
            raise ModelError(
                f"mask-threshold must lie in (0, 1), got {self.mask_threshold}")

    def to_dict(self):
        return asdict(self)


def _load_named(name):
    """Resolve a builtin catalog name or a model file path."""
    catalog = symbol.builtin_models()
    if name in catalog:
        entry = catalog[name]
        return entry.symbol, entry.grading
    if os.path.exists(name):
        return symbol.load_model(name)
    raise ModelError(f"{name!r} is neither a builtin model nor an existing file")


def _load_model(cfg):
    if (cfg.model is None) == (cfg.builtin is None):
        raise ModelError("exactly one of --model or --builtin is required")
    sym, grading = _load_named(cfg.model or cfg.builtin)
    if cfg.seed is not None:
        sym = symbol.perturb_onsite(sym, PERTURB_NORM, cfg.seed)
    return sym, grading


def _slope_pair(cfg):
    return geometry.SlopePair(
        geometry.Slope.parse(cfg.alpha), geometry.Slope.parse(cfg.beta))


def _write_json(cfg, name, doc):
    doc = dict(doc)
    doc["config"] = cfg.to_dict()
    doc["version"] = __version__
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# hand-rolled SVG (no plotting dependency; deterministic output)

_PLOT_W, _PLOT_H = 720, 440
_MARGIN = (56, 16, 34, 44)  # left, right, top, bottom


def _svg_open(title, no_timestamps):
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_PLOT_W}" '
        f'height="{_PLOT_H}" viewBox="0 0 {_PLOT_W} {_PLOT_H}">',
    ]
    if not no_timestamps:
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        lines.insert(0, f"<!-- generated {stamp} -->")
    lines.append(f'<rect width="{_PLOT_W}" height="{_PLOT_H}" fill="white"/>')
    lines.append(
        f'<text x="{_PLOT_W / 2:.0f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>')
    return lines


def _axis_map(xlim, ylim):
    ml, mr, mt, mb = _MARGIN
    ax_w, ax_h = _PLOT_W - ml - mr, _PLOT_H - mt - mb
    dx = xlim[1] - xlim[0] or 1.0
    dy = ylim[1] - ylim[0] or 1.0

    def to_px(x, y):
        return (ml + (x - xlim[0]) / dx * ax_w,
                mt + ax_h - (y - ylim[0]) / dy * ax_h)

    return to_px


def _svg_axes(lines, xlim, ylim, xlabel, ylabel):
    ml, mr, mt, mb = _MARGIN
    to_px = _axis_map(xlim, ylim)
    x0, y0 = to_px(xlim[0], ylim[0])
    x1, y1 = to_px(xlim[1], ylim[1])
    lines.append(
        f'<rect x="{x0:.1f}" y="{y1:.1f}" width="{x1 - x0:.1f}" '
        f'height="{y0 - y1:.1f}" fill="none" stroke="#444"/>')
    for i in range(5):
        xv = xlim[0] + i * (xlim[1] - xlim[0]) / 4
        yv = ylim[0] + i * (ylim[1] - ylim[0]) / 4
        px, _ = to_px(xv, ylim[0])
        _, py = to_px(xlim[0], yv)
        lines.append(
            f'<text x="{px:.1f}" y="{y0 + 16:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{xv:.2f}</text>')
        lines.append(
            f'<text x="{x0 - 6:.1f}" y="{py + 3:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{yv:.2f}</text>')
    lines.append(
        f'<text x="{(x0 + x1) / 2:.1f}" y="{_PLOT_H - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{xlabel}</text>')
    lines.append(
        f'<text x="14" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 14 {(y0 + y1) / 2:.1f})">{ylabel}</text>')
    if ylim[0] < 0 < ylim[1]:
        _, pz = to_px(xlim[0], 0.0)
        lines.append(
            f'<line x1="{x0:.1f}" y1="{pz:.1f}" x2="{x1:.1f}" y2="{pz:.1f}" '
            f'stroke="#bbb" stroke-dasharray="4 3"/>')
    return to_px


_BAND_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _svg_band_plot(path, xs, bands, title, xlabel, ylabel, no_timestamps):
    """Polyline per band; ``bands`` has shape (len(xs), n_bands)."""
    bands = np.asarray(bands)
    pad = 0.05 * (bands.max() - bands.min() or 1.0)
    xlim = (float(xs[0]), float(xs[-1]))
    ylim = (float(bands.min() - pad), float(bands.max() + pad))
    lines = _svg_open(title, no_timestamps)
    to_px = _svg_axes(lines, xlim, ylim, xlabel, ylabel)
    for b in range(bands.shape[1]):
        pts = " ".join("%.1f,%.1f" % to_px(x, y) for x, y in zip(xs, bands[:, b]))
        color = _BAND_COLORS[b % len(_BAND_COLORS)]
        lines.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _svg_flow_plot(path, samples, threshold, window, title, no_timestamps):
    """Windowed eigenvalues vs t; corner-weighted points highlighted."""
    xlim = (0.0, 2 * np.pi)
    ylim = (-window, window)
    lines = _svg_open(title, no_timestamps)
    to_px = _svg_axes(lines, xlim, ylim, "t", "eigenvalue")
    faint, strong = [], []
    for t, vals, weights in samples:
        for v, w in zip(vals, weights):
            if abs(v) > window:
                continue
            px, py = to_px(t % (2 * np.pi), v)
            if w >= threshold:
                strong.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="2.6" fill="#d62728"/>')
            else:
                faint.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="1.4" fill="#9b9b9b"/>')
    lines.extend(faint)
    lines.extend(strong)  # drawn last so corner branches sit on top
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands

def cmd_bulk_spectrum(cfg):
    sym, _ = _load_model(cfg)
    axis = cfg.sweep_axis if cfg.sweep_axis is not None else sym.dim - 1
    if not 0 <= axis < sym.dim:
        raise ModelError(f"sweep axis {axis} out of range for dim {sym.dim}")
    angles = np.linspace(0.0, 2 * np.pi, cfg.t_grid + 1)
    bands = []
    for a in angles:
        k = [0.0] * sym.dim
        k[axis] = a
        bands.append(np.linalg.eigvalsh(symbol.evaluate_bloch(sym, k)))
    bands = np.array(bands)
    os.makedirs(cfg.out, exist_ok=True)
    csv_path = os.path.join(cfg.out, "bulk_spectrum.csv")
    with open(csv_path, "w") as fh:
        fh.write("angle," + ",".join(f"lambda_{b}" for b in range(bands.shape[1])) + "\n")
        for a, row in zip(angles, bands):
            fh.write("%.17g," % a + ",".join("%.17g" % v for v in row) + "\n")
    svg_path = os.path.join(cfg.out, "bulk_spectrum.svg")
    _svg_band_plot(svg_path, angles, bands,
                   f"bulk spectrum, axis {axis} swept, others at 0",
                   f"k[{axis}]", "eigenvalue", cfg.no_timestamps)
    gap = float(np.min(np.abs(bands)))
    print(f"bulk-spectrum: {bands.shape[1]} bands, min |lambda| = {gap:.6f}")
    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")
    return 0


def cmd_edge_gap(cfg):
    sym, _ = _load_model(cfg)
    pair = _slope_pair(cfg)
    threshold = cfg.gap_threshold if cfg.gap_threshold is not None else 0.1
    gap_a, gap_b = invariants.edge_gap_scan(
        sym, pair, cfg.W, (cfg.k_grid, cfg.k_grid))
    ok = min(gap_a, gap_b) >= threshold
    path = _write_json(cfg, "edge_gap.json", {
        "alpha_min": float(gap_a),
        "beta_min": float(gap_b),
        "threshold": threshold,
        "pass": bool(ok),
    })
    print(f"edge-gap: alpha_min={gap_a:.6f} beta_min={gap_b:.6f} "
          f"threshold={threshold} -> {'PASS' if ok else 'FAIL'}")
    print(f"wrote {path}")
    return 0


def cmd_corner_flow(cfg):
    sym, _ = _load_model(cfg)
    pair = _slope_pair(cfg)
    net, detail = invariants.corner_spectral_flow(
        sym, pair, cfg.L, n_t=cfg.t_grid, window=cfg.window,
        threshold=cfg.mask_threshold, keep_samples=True)
    path = _write_json(cfg, "corner_flow.json", {
        "spectral_flow": int(net),
        "window": float(detail.window),
        "grid_points": detail.grid_points,
        "threshold": detail.threshold,
        "edge_gaps": [float(g) for g in detail.edge_gaps],
        "crossings": [
            {
                "t": float(c.t),
                "direction": int(c.direction),
                "multiplicity": int(c.multiplicity),
                "weight": None if c.weight is None else float(c.weight),
                "member_weights": [float(w) for w in c.member_weights],
            }
            for c in detail.crossings
        ],
    })
    svg_path = os.path.join(cfg.out, "corner_flow.svg")
    _svg_flow_plot(svg_path, detail.samples, detail.threshold, detail.window,
                   f"corner family spectrum, sf = {net}", cfg.no_timestamps)
    print(f"corner-flow: spectral flow = {net} "
          f"({len(detail.crossings)} raw crossings, window {detail.window:.4f})")
    print(f"wrote {path}")
    print(f"wrote {svg_path}")
    return 0


def cmd_verify_product(cfg):
    if cfg.h1 is None or cfg.h2 is None:
        raise ModelError("verify-product requires --h1 and --h2")
    h1, _ = _load_named(cfg.h1)
    h2, grading = _load_named(cfg.h2)
    if grading is None:
        raise ModelError(f"{cfg.h2!r} carries no chiral grading")
    pair = _slope_pair(cfg)
    i_2d = invariants.chern_number(h1)
    i_1d = invariants.winding_number(h2, grading)
    prod = symbol.product_hamiltonian(h1, h2, grading)
    sf, _ = invariants.corner_spectral_flow(
        prod, pair, cfg.L, n_t=cfg.t_grid, window=cfg.window,
        threshold=cfg.mask_threshold)
    be_pair = invariants.bulk_edge_pair(h1, h2, grading)
    doc = {
        "lhs": sf,
        "rhs": i_2d * i_1d,
        "equal": bool(sf == i_2d * i_1d),
        "i_2d": i_2d,
        "i_1d": i_1d,
        "pair": list(be_pair),
    }
    path = _write_json(cfg, "verify_product.json", doc)
    print(f"verify-product: sf={sf}  I_2d*I_1d={i_2d}*{i_1d}={i_2d * i_1d}  "
          f"-> {'VERIFIED' if doc['equal'] else 'MISMATCH'}  pair={be_pair}")
    print(f"wrote {path}")
    return 0


def cmd_report(cfg):
    sym, _ = _load_model(cfg)
    pair = _slope_pair(cfg)
    factors = None
    if cfg.h1 is not None and cfg.h2 is not None:
        h1, _ = _load_named(cfg.h1)
        h2, grading = _load_named(cfg.h2)
        if grading is None:
            raise ModelError(f"{cfg.h2!r} carries no chiral grading")
        factors = (h1, h2, grading)
    report = invariants.compute_report(
        sym, pair, W=cfg.W, edge_grid=(cfg.k_grid, cfg.k_grid), L=cfg.L,
        n_t=cfg.t_grid, window=cfg.window, threshold=cfg.mask_threshold,
        factors=factors)
    path = _write_json(cfg, "report.json", {"report": report.to_dict()})
    print(f"report: {json.dumps(report.to_dict(), sort_keys=True)}")
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------

def _add_common(sp, with_model=True):
    if with_model:
        sp.add_argument("--model", help="path to a model JSON file")
        sp.add_argument("--builtin", help="builtin model name (see symbol.builtin_models)")
    sp.add_argument("--alpha", default="0", help="first edge slope (p/q or -inf)")
    sp.add_argument("--beta", default="inf", help="second edge slope (p/q or inf)")
    sp.add_argument("--L", type=int, default=24, help="corner truncation radius")
    sp.add_argument("--W", type=int, default=40, help="edge strip depth")
    sp.add_argument("--t-grid", type=int, default=64, dest="t_grid",
                    help="points on the parameter circle")
    sp.add_argument("--k-grid", type=int, default=16, dest="k_grid",
                    help="points per angle in edge-gap scans")
    sp.add_argument("--window", type=float, default=None,
                    help="tracking half-width (default: scaled to the edge gap)")
    sp.add_argument("--mask-threshold", type=float, default=0.6, dest="mask_threshold",
                    help="corner-localization weight for a crossing to count")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--seed", type=int, default=None,
                    help=f"if given, add a seeded on-site perturbation of norm {PERTURB_NORM}")
    sp.add_argument("--no-timestamps", action="store_true", dest="no_timestamps",
                    help="omit the generation timestamp from SVG output")


def _build_parser():
    p = argparse.ArgumentParser(
        prog="cornerlab",
        description="corner compressions, edge gaps, and topological invariants "
                    "of lattice Hamiltonians")
    p.add_argument("--version", action="version", version=f"cornerlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("bulk-spectrum", help="Bloch bands along one swept angle")
    _add_common(sp)
    sp.add_argument("--sweep-axis", type=int, default=None, dest="sweep_axis",
                    help="which angle to sweep (default: last axis)")
    sp.set_defaults(func=cmd_bulk_spectrum)

    sp = sub.add_parser("edge-gap", help="minimum gap of both edge compressions")
    _add_common(sp)
    sp.add_argument("--gap-threshold", type=float, default=None, dest="gap_threshold",
                    help="PASS iff both minima reach this value (default 0.1)")
    sp.set_defaults(func=cmd_edge_gap)

    sp = sub.add_parser("corner-flow", help="spectral flow of the corner family")
    _add_common(sp)
    sp.set_defaults(func=cmd_corner_flow)

    sp = sub.add_parser("verify-product",
                        help="check sf(corner) == I_2d * I_1d for a factor pair")
    _add_common(sp, with_model=False)
    sp.add_argument("--h1", required=True, help="dim-2 factor (builtin name or file)")
    sp.add_argument("--h2", required=True, help="dim-1 chiral factor (builtin name or file)")
    sp.set_defaults(func=cmd_verify_product)

    sp = sub.add_parser("report", help="consolidated invariant report (dim-3 model)")
    _add_common(sp)
    sp.add_argument("--h1", default=None, help="optional dim-2 factor for the bulk-edge pair")
    sp.add_argument("--h2", default=None, help="optional dim-1 chiral factor")
    sp.set_defaults(func=cmd_report)
    return p


def _error_doc(exc):
    return json.dumps(
        {"error": {"type": exc.__class__.__name__, "message": str(exc)}},
        sort_keys=True)


def main(argv=None):
    """Entry point.

    Parameters
    ----------
    argv : list of str, optional
        Arguments; defaults to ``sys.argv[1:]``.

    Returns
    -------
    int
        0 success, 2 model/config error, 3 numerical failure, 4 gap
        assumption violated.
    """
    parser = _build_parser()
    args = parser.parse_args(argv)
    fields = {k: v for k, v in vars(args).items() if k != "func"}
    try:
        cfg = RunConfig(**fields)
        return args.func(cfg)
    except GapClosedError as exc:
        print(_error_doc(exc))
        return 4
    except (EigensolverError, TrackingError, ResidualError) as exc:
        print(_error_doc(exc))
        return 3
    except (ModelError, GeometryError, OSError) as exc:
        print(_error_doc(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
