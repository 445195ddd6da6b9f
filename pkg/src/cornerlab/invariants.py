"""Integer invariants of gapped lattice models and their corner counterpart.

The bulk side: Chern number of the Fermi projection (class A, two
dimensions), winding number of the off-diagonal Bloch block (class AIII,
one dimension), and the weak two-torus invariants of a three-dimensional
symbol.  The boundary side: the grading signature of a half-line kernel
and the spectral flow of a corner-compressed family.  Sign conventions
are fixed once, so that the bulk-edge identities hold as equalities; see
the individual docstrings.

Every function either returns an exact integer (rounded only after a
residual check) or raises.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import assembly, geometry, spectra
from .errors import GapClosedError, ModelError, ResidualError
from .symbol import check_chiral, evaluate_bloch, partial_bloch

GAP_FLOOR = 1e-8
INT_RESIDUAL_TOL = 1e-6
KERNEL_TOL = 1e-6
KERNEL_WEIGHT_MIN = 0.9
NEAR_WALL_WEIGHT_MIN = 0.6
DEFAULT_MASK_THRESHOLD = 0.6
_LINK_FLOOR = 1e-3
_FLUX_CEILING = 0.99 * np.pi


class _RefineNeeded(Exception):
    """Internal: the grid is too coarse; retry once at double resolution."""


# ---------------------------------------------------------------------------
# Chern number by the lattice field-strength method

def _occupied_frame(h, where):
    vals, vecs = np.linalg.eigh(h)
    gap = float(np.min(np.abs(vals)))
    if gap <= GAP_FLOOR:
        raise GapClosedError(f"Bloch gap at 0 closes ({gap:.2e}) at {where}")
    return vecs[:, vals < 0]


def _c1_field_strength(bloch_at, n):
    """Berry flux sum of the Fermi projection over an n x n grid.

    ``bloch_at(kx, ky)`` returns the Bloch matrix.  Plaquette fluxes are
    principal-branch logs of the four-link Wilson loop; their sum over
    the whole grid divided by 2 pi is exactly integral whenever every
    plaquette is admissible (|flux| < pi), which is what makes this a
    reliable integer pipeline rather than a quadrature.
    """
    ks = 2 * np.pi * np.arange(n) / n
    frames = [
        [_occupied_frame(bloch_at(ks[i], ks[j]), f"k=({ks[i]:.3f},{ks[j]:.3f})")
         for j in range(n)]
        for i in range(n)
    ]
    ranks = {f.shape[1] for row in frames for f in row}
    if len(ranks) != 1:
        raise GapClosedError("Fermi rank is not constant across the grid")
    ux = np.empty((n, n), dtype=complex)
    uy = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            f = frames[i][j]
            ux[i, j] = np.linalg.det(f.conj().T @ frames[(i + 1) % n][j])
            uy[i, j] = np.linalg.det(f.conj().T @ frames[i][(j + 1) % n])
    if min(np.min(np.abs(ux)), np.min(np.abs(uy))) < _LINK_FLOOR:
        raise _RefineNeeded("near-singular link variable")
    # Plaquettes are traversed second-axis-first; this is the orientation
    # under which a unit-skyrmion Bloch map has occupied-band c1 = +1.  The
    # opposite traversal would flip the sign of every Chern output.
    loop = uy * np.roll(ux, -1, axis=1) * np.roll(uy, -1, axis=0).conj() * ux.conj()
    flux = np.angle(loop)
    if np.max(np.abs(flux)) >= _FLUX_CEILING:
        raise _RefineNeeded("inadmissible plaquette flux")
    return float(np.sum(flux) / (2 * np.pi))


def _c1_int(bloch_at, n, what):
    """Field-strength c1 with integrality certificate; auto-refines once."""
    reason = None
    for m in (n, 2 * n):
        try:
            total = _c1_field_strength(bloch_at, m)
        except _RefineNeeded as exc:
            reason = str(exc)
            continue
        residual = abs(total - round(total))
        if residual <= INT_RESIDUAL_TOL:
            return int(round(total)), residual, m
        reason = f"residual {residual:.2e}"
    raise ResidualError(f"{what}: not integral after refining to {2 * n}^2 ({reason})")


def _chern_detail(sym, grid):
    if sym.dim != 2:
        raise ModelError(f"Chern number needs a dim-2 symbol, got dim {sym.dim}")
    return _c1_int(lambda kx, ky: evaluate_bloch(sym, (kx, ky)), grid, "Chern number")


def chern_number(sym, grid=40):
    """Two-dimensional class-A invariant: minus the first Chern number.

    The Chern number c1 of the Fermi projection (bands below zero) is
    computed by the lattice field-strength method on a ``grid x grid``
    Brillouin mesh; the invariant returned is -c1, matching the relation
    between the TKNN number and the edge flow used throughout.

    Raises GapClosedError if the Bloch gap at zero closes on the mesh,
    and ResidualError if the flux sum is not integral even after one
    automatic grid doubling.
    """
    value, _, _ = _chern_detail(sym, grid)
    return -value


# ---------------------------------------------------------------------------
# winding number and half-line kernel signature (1-D chiral models)

def _grading_frame(sym, grading):
    if not check_chiral(sym, grading):
        raise ModelError("grading does not anticommute with the symbol")
    u, n_plus, n_minus = grading.eigenbasis()
    if n_plus != n_minus:
        raise ModelError(
            f"grading blocks have sizes {n_plus} and {n_minus}; the "
            "off-diagonal block is not square, so its determinant (and the "
            "winding number) is undefined"
        )
    return u, n_plus


def _winding_detail(sym, grading, grid):
    if sym.dim != 1:
        raise ModelError(f"winding number needs a dim-1 symbol, got dim {sym.dim}")
    u, n_plus = _grading_frame(sym, grading)
    reason = None
    for m in (grid, 2 * grid):
        ks = 2 * np.pi * np.arange(m) / m
        dets = np.empty(m, dtype=complex)
        for j, k in enumerate(ks):
            h = u.conj().T @ evaluate_bloch(sym, (k,)) @ u
            q = h[:n_plus, n_plus:]
            smin = np.linalg.svd(q, compute_uv=False)[-1]
            if smin <= GAP_FLOOR:
                raise GapClosedError(f"Bloch gap at 0 closes ({smin:.2e}) at k={k:.3f}")
            dets[j] = np.linalg.det(q)
        steps = np.angle(np.roll(dets, -1) / dets)
        if np.max(np.abs(steps)) >= _FLUX_CEILING:
            reason = "phase step too large"
            continue
        total = float(np.sum(steps) / (2 * np.pi))
        residual = abs(total - round(total))
        if residual <= INT_RESIDUAL_TOL:
            return int(round(total)), residual, m
        reason = f"residual {residual:.2e}"
    raise ResidualError(f"winding number: not integral after refining ({reason})")


def winding_number(sym, grading, grid=256):
    """One-dimensional class-AIII invariant of a chiral symbol.

    In the grading eigenbasis (plus block first) the Bloch matrix is
    off-block-diagonal; the winding of det of its upper-right block is
    accumulated around the Brillouin circle and the invariant is its
    minus.  Unequal grading blocks are rejected before any spectral
    check, since the determinant is undefined in that case.
    """
    value, _, _ = _winding_detail(sym, grading, grid)
    return -value


def _bulk_gap_on_grid(sym, n):
    """Smallest |eigenvalue| of the Bloch matrix over a full n^dim mesh."""
    ks = 2 * np.pi * np.arange(n) / n
    grids = np.meshgrid(*([ks] * sym.dim), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    gap = math.inf
    for k in points:
        vals = np.linalg.eigvalsh(evaluate_bloch(sym, k))
        gap = min(gap, float(np.min(np.abs(vals))))
    return gap


def _halfline_kernel_states(sym, grading, W):
    """Near-kernel of the half-line compression, attributed to the near wall.

    Returns (signature_form_matrix, None) on success or (None, reason) if
    some near-zero state cannot be attributed to either wall at this W.
    """
    op = assembly.assemble_halfline(sym, W)
    sl = spectra.diagonalize(op)

    def near(site):
        return site[0] < W / 2

    sl = spectra.sharpen_degeneracies(sl, near, matrix=op.matrix)
    idx = np.nonzero(np.abs(sl.eigenvalues) < KERNEL_TOL)[0]
    if idx.size == 0:
        return np.zeros((0, 0)), None
    weights = spectra.all_weights(sl, near)[idx]
    ambiguous = (weights > 1 - KERNEL_WEIGHT_MIN) & (weights < KERNEL_WEIGHT_MIN)
    if np.any(ambiguous):
        return None, (
            f"{int(np.sum(ambiguous))} near-zero state(s) spread across both "
            f"walls at W={W}"
        )
    kept = idx[weights >= KERNEL_WEIGHT_MIN]
    if kept.size == 0:
        return np.zeros((0, 0)), None
    v = sl.eigenvectors[:, kept]
    pi_full = np.kron(np.eye(W), grading.matrix)
    form = v.conj().T @ pi_full @ v
    return 0.5 * (form + form.conj().T), None


def kernel_signature(sym, grading, W=40):
    """Chiral invariant read off the kernel of the half-line compression.

    The compression onto sites 0..W-1 is diagonalized; eigenstates with
    |lambda| below the kernel tolerance and at least 90% of their weight
    on the near half represent the half-infinite kernel (their mirror
    images at the far wall belong to the opposite compression and are
    discarded).  The return value is minus the signature of the grading
    form restricted to that span, which is the orientation that makes
    the bulk-edge identity with :func:`winding_number` an equality.

    If a near-zero state straddles both walls, W is doubled once; if the
    ambiguity persists a ResidualError is raised.
    """
    if sym.dim != 1:
        raise ModelError(f"kernel signature needs a dim-1 symbol, got dim {sym.dim}")
    if not check_chiral(sym, grading):
        raise ModelError("grading does not anticommute with the symbol")
    gap = _bulk_gap_on_grid(sym, 64)
    if gap <= GAP_FLOOR:
        raise GapClosedError(f"bulk gap at 0 closes ({gap:.2e}); kernel ill-defined")
    form, reason = _halfline_kernel_states(sym, grading, W)
    if form is None:
        form, reason = _halfline_kernel_states(sym, grading, 2 * W)
    if form is None:
        raise ResidualError(
            f"half-line kernel not certifiable: {reason} even after doubling"
        )
    if form.shape[0] == 0:
        return 0
    chis = np.linalg.eigvalsh(form)
    if np.any(np.abs(chis) < KERNEL_WEIGHT_MIN):
        raise ResidualError(
            "kernel states lack definite grading sign; increase W or lower "
            "the kernel tolerance"
        )
    signature = int(np.sum(chis > 0) - np.sum(chis < 0))
    return -signature


# ---------------------------------------------------------------------------
# edge gap scan

def edge_gap_scan(sym, pair, W, grid=(16, 16)):
    """Smallest near-wall |eigenvalue| of both edge compressions.

    Both strips are diagonalized over an ``(k_edge, t)`` product grid.
    Only eigenstates carrying at least 60% of their weight within depth
    W/2 of the wall count: the far wall of a finite strip hosts the
    spectrum of the opposite compression and must not contaminate the
    minimum.  Returns ``(min_alpha, min_beta)``; a small value is a
    valid answer (the gap assumption fails), never an error.
    """
    if sym.dim != 3:
        raise ModelError(f"edge gap scan needs a dim-3 symbol, got dim {sym.dim}")
    nk, nt = grid if isinstance(grid, tuple) else (grid, grid)
    k_vals = 2 * np.pi * np.arange(nk) / nk
    t_vals = 2 * np.pi * np.arange(nt) / nt
    minima = []
    for which, slope in ((geometry.ALPHA, pair.alpha), (geometry.BETA, pair.beta)):
        def near(site, which=which, slope=slope):
            return geometry.strip_depth(slope, which, site) < W / 2

        best = math.inf
        fallback = math.inf
        for k_edge in k_vals:
            for t in t_vals:
                op = assembly.assemble_edge_strip(sym, slope, which, W, k_edge, t=t)
                sl = spectra.diagonalize(op)
                sl = spectra.sharpen_degeneracies(sl, near, matrix=op.matrix)
                absvals = np.abs(sl.eigenvalues)
                fallback = min(fallback, float(np.min(absvals)))
                eligible = spectra.all_weights(sl, near) >= NEAR_WALL_WEIGHT_MIN
                if np.any(eligible):
                    best = min(best, float(np.min(absvals[eligible])))
        # A strip whose states all hug the far wall (or spread evenly) gives
        # no attributable minimum; the unfiltered spectrum still bounds the
        # edge gap from below, so report that instead of infinity.
        minima.append(best if best < math.inf else fallback)
    return minima[0], minima[1]


# ---------------------------------------------------------------------------
# spectral flow

@dataclass
class FlowCrossing:
    """One zero crossing (grouped by multiplicity when exactly coincident)."""

    t: float
    direction: int
    multiplicity: int
    weight: float | None
    member_weights: tuple


@dataclass
class FlowDetail:
    """Everything the flow counter saw, before and after mask filtering."""

    crossings: list
    window: float
    threshold: float
    grid_points: int
    edge_gaps: tuple | None = None
    samples: list | None = None

    def net_at(self, threshold):
        """Net signed flow recounted at a different localization threshold."""
        net = 0
        for c in self.crossings:
            if not c.member_weights:
                net += c.direction * c.multiplicity
            else:
                net += c.direction * sum(1 for w in c.member_weights if w >= threshold)
        return net


def _merge_crossings(raw, tol=1e-6):
    rows = []
    for c in sorted(raw, key=lambda c: (c.t, -c.direction)):
        if rows and rows[-1].direction == c.direction and abs(rows[-1].t - c.t) <= tol:
            prev = rows[-1]
            members = prev.member_weights + ((c.weight,) if c.weight is not None else ())
            rows[-1] = FlowCrossing(
                t=prev.t,
                direction=prev.direction,
                multiplicity=prev.multiplicity + 1,
                weight=None if not members else float(np.mean(members)),
                member_weights=members,
            )
        else:
            members = (c.weight,) if c.weight is not None else ()
            rows.append(FlowCrossing(c.t, c.direction, 1, c.weight, members))
    return rows


def _parameter_rate(sym, axis):
    """Lipschitz bound on d lambda / d angle for the folded family."""
    rate = 0.0
    for off, blk in sym.hoppings.items():
        rate += abs(off[axis]) * float(np.linalg.norm(blk, 2))
    return rate


def _offset_grid(n_t):
    # Half-step offset keeps high-symmetry angles (0 and pi), where corner
    # crossings and extra degeneracies tend to sit, strictly between samples.
    return (np.arange(n_t) + 0.5) * 2 * np.pi / n_t


def _tracked_crossings(build_slice, n_t, window, weight_fn, jump_bound, max_refine):
    slices = [build_slice(t) for t in _offset_grid(n_t)]
    track = spectra.track_branches(
        slices,
        window,
        weight_fn=weight_fn,
        jump_bound=jump_bound,
        refine_fn=build_slice,
        max_refine=max_refine,
    )
    return spectra.crossings(track)


def _corner_profile(site):
    # Sharpening tiebreaker: strictly ordered weights for states sitting at
    # the true corner and at the three truncation corners, so degenerate
    # clusters rotate into geometrically pure states.
    return math.exp(-(abs(site[0]) + 1.618 * abs(site[1])) / 4.0)


def corner_spectral_flow(sym, pair, L, n_t=64, window=None, mask=None,
                         threshold=DEFAULT_MASK_THRESHOLD, edge_W=16,
                         edge_grid=(8, 8), max_refine=3, gap_floor=0.1,
                         keep_samples=False):
    """Net spectral flow of the corner-compressed family over the t circle.

    Parameters
    ----------
    sym : HamiltonianSymbol, dim 3
    pair : SlopePair
        Wedge geometry.
    L : int
        Truncation radius of the corner region (max norm).
    n_t : int
        Closed t-grid size; samples sit at half-step offsets.
    window : float, optional
        Tracking half-width.  Default: 0.45 times the smaller edge gap.
    mask : callable, optional
        Site predicate for "corner-localized".  Default: max-norm ball of
        radius L/2 around the wedge vertex.
    threshold : float
        Minimal mask weight for a crossing to count.
    gap_floor : float
        Smallest edge gap accepted as "open"; scanning below it means the
        family is not certified Fredholm.
    keep_samples : bool
        Record (t, eigenvalues, weights) for every diagonalized point,
        refinements included, in ``FlowDetail.samples`` (for plotting).

    Returns
    -------
    (int, FlowDetail)
        Net signed count of zero crossings (up = +1) among corner-masked
        branches, plus per-crossing detail.

    The edge gaps are scanned first; if the smaller one falls below
    ``gap_floor``, or does not clear twice the window, the family is not
    certified Fredholm on the circle and a GapClosedError is raised
    instead of a meaningless count.
    """
    if sym.dim != 3:
        raise ModelError(f"corner flow needs a dim-3 symbol, got dim {sym.dim}")
    gap_a, gap_b = edge_gap_scan(sym, pair, edge_W, edge_grid)
    min_gap = min(gap_a, gap_b)
    if min_gap <= gap_floor:
        raise GapClosedError(
            f"edge gaps ({gap_a:.4f}, {gap_b:.4f}) fall below the floor "
            f"{gap_floor}; corner family not certified Fredholm"
        )
    if window is None:
        window = 0.45 * min_gap
    if window <= 0 or min_gap <= 2 * window:
        raise GapClosedError(
            f"edge gaps ({gap_a:.4f}, {gap_b:.4f}) do not clear twice the "
            f"tracking window {window:.4f}; corner family not certified Fredholm"
        )
    if mask is None:
        half = L / 2

        def mask(site):
            return max(abs(site[0]), abs(site[1])) <= half

    samples = [] if keep_samples else None

    def build(t):
        op = assembly.assemble_corner(sym, pair, L, t)
        sl = spectra.diagonalize_window(op, window, k=24)
        sl = spectra.sharpen_degeneracies(sl, _corner_profile, matrix=op.matrix)
        if samples is not None:
            samples.append((t, sl.eigenvalues.copy(), spectra.all_weights(sl, mask)))
        return sl

    def weight_fn(sl, i):
        return spectra.localization_weight(sl, i, mask)

    raw = _tracked_crossings(
        build, n_t, window, weight_fn, _parameter_rate(sym, 2), max_refine
    )
    detail = FlowDetail(
        crossings=_merge_crossings(raw),
        window=window,
        threshold=threshold,
        grid_points=n_t,
        edge_gaps=(gap_a, gap_b),
        samples=sorted(samples, key=lambda row: row[0]) if samples else None,
    )
    return detail.net_at(threshold), detail


def edge_spectral_flow(sym, W=40, n_t=64, window=None,
                       threshold=DEFAULT_MASK_THRESHOLD, max_refine=3):
    """Spectral flow of the half-line family of a dim-2 symbol.

    The second axis is folded to the family parameter t, the first is
    compressed to sites 0..W-1, and zero crossings of near-wall branches
    (weight >= threshold within depth W/2) are counted over the circle.
    Cross-check partner of :func:`chern_number`: the flow equals minus
    that invariant.
    """
    if sym.dim != 2:
        raise ModelError(f"edge flow needs a dim-2 symbol, got dim {sym.dim}")
    if window is None:
        gap = _bulk_gap_on_grid(sym, 32)
        if gap <= GAP_FLOOR:
            raise GapClosedError(f"bulk gap closes ({gap:.2e}); no tracking window")
        window = 0.45 * gap

    def near(site):
        return site[0] < W / 2

    def build(t):
        # Parameter axis folded with the reversed orientation, matching the
        # dim-3 fold used by the assembly module for corner families.
        op = assembly.assemble_halfline(partial_bloch(sym, 1, -t), W)
        sl = spectra.diagonalize(op)
        return spectra.sharpen_degeneracies(sl, near, matrix=op.matrix)

    def weight_fn(sl, i):
        return spectra.localization_weight(sl, i, near)

    raw = _tracked_crossings(
        build, n_t, window, weight_fn, _parameter_rate(sym, 1), max_refine
    )
    return sum(c.direction for c in raw if c.weight is not None and c.weight >= threshold)


# ---------------------------------------------------------------------------
# weak invariants and the bulk-edge pair

def weak_invariants(sym, grid=20):
    """Chern numbers of the three coordinate sub-tori of a dim-3 symbol.

    Order: (axis0, axis1), (axis0, axis2), (axis1, axis2), with the third
    angle fixed at 0 (any fixed value is homotopic while the gap stays
    open).  Each entry is a plain first Chern number of the Fermi
    projection on that two-torus.
    """
    if sym.dim != 3:
        raise ModelError(f"weak invariants need a dim-3 symbol, got dim {sym.dim}")
    out = []
    for a, b in ((0, 1), (0, 2), (1, 2)):
        def bloch_at(x, y, a=a, b=b):
            k = [0.0, 0.0, 0.0]
            k[a], k[b] = x, y
            return evaluate_bloch(sym, k)

        value, _, _ = _c1_int(bloch_at, grid, f"weak invariant on axes ({a},{b})")
        out.append(value)
    return tuple(out)


def _negative_band_count(sym, n=12):
    counts = set()
    ks = 2 * np.pi * np.arange(n) / n
    for kx in ks:
        for ky in ks:
            vals = np.linalg.eigvalsh(evaluate_bloch(sym, (kx, ky)))
            if np.min(np.abs(vals)) <= GAP_FLOOR:
                raise GapClosedError(f"Bloch gap closes at k=({kx:.3f},{ky:.3f})")
            counts.add(int(np.sum(vals < 0)))
    if len(counts) != 1:
        raise GapClosedError("negative band count varies across the zone")
    return counts.pop()


def bulk_edge_pair(h1, h2, grading):
    """The pair (k1 * M2, product of the factor invariants).

    k1 is the number of Bloch bands of h1 below zero (the Fermi
    projection rank) and M2 the orbital count of h2.  A factor h1 with
    no negative band has a trivial Fermi projection and the first
    component loses its meaning, so that case is rejected.
    """
    if h1.dim != 2:
        raise ModelError(f"first factor must be dim 2, got dim {h1.dim}")
    if h2.dim != 1:
        raise ModelError(f"second factor must be dim 1, got dim {h2.dim}")
    k1 = _negative_band_count(h1)
    if k1 == 0:
        raise ModelError("h1 has no Bloch band below 0; k1 = 0 leaves the "
                         "first component undefined")
    i1 = chern_number(h1)
    i2 = winding_number(h2, grading)
    return (k1 * h2.norb, i1 * i2)


# ---------------------------------------------------------------------------
# consolidated report

@dataclass
class InvariantReport:
    """Computed integers plus the provenance needed to rerun them."""

    min_edge_gap_alpha: float
    min_edge_gap_beta: float
    chern_2dA: int | None = None
    winding_1dAIII: int | None = None
    kernel_signature: int | None = None
    weak: tuple | None = None
    corner_sf: int | None = None
    bulk_edge_pair: tuple | None = None
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "min_edge_gap_alpha": self.min_edge_gap_alpha,
            "min_edge_gap_beta": self.min_edge_gap_beta,
            "chern_2dA": self.chern_2dA,
            "winding_1dAIII": self.winding_1dAIII,
            "kernel_signature": self.kernel_signature,
            "weak": None if self.weak is None else list(self.weak),
            "corner_sf": self.corner_sf,
            "bulk_edge_pair": (
                None if self.bulk_edge_pair is None else list(self.bulk_edge_pair)
            ),
            "provenance": self.provenance,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def compute_report(sym, pair, *, W=40, edge_grid=(16, 16), L=24, n_t=64,
                   window=None, threshold=DEFAULT_MASK_THRESHOLD, weak_grid=20,
                   gap_floor=0.1, factors=None):
    """Run the full dim-3 pipeline: edge gaps, weak invariants, corner flow.

    The corner flow is skipped (with the reason recorded in provenance)
    when the measured edge gaps fall below ``gap_floor``, since the flow
    is only defined for a Fredholm family.  When ``factors`` is given as
    ``(h1, h2, grading)`` the factor invariants and the bulk-edge pair
    are computed as well.
    """
    gap_a, gap_b = edge_gap_scan(sym, pair, W, edge_grid)
    provenance = {
        "alpha": str(pair.alpha),
        "beta": str(pair.beta),
        "W": W,
        "edge_grid": list(edge_grid),
        "L": L,
        "t_grid": n_t,
        "mask_threshold": threshold,
        "weak_grid": weak_grid,
        "gap_floor": gap_floor,
        "residuals": {},
    }
    report = InvariantReport(
        min_edge_gap_alpha=gap_a, min_edge_gap_beta=gap_b, provenance=provenance
    )
    report.weak = weak_invariants(sym, weak_grid)
    if min(gap_a, gap_b) > gap_floor:
        sf, detail = corner_spectral_flow(
            sym, pair, L, n_t=n_t, window=window, threshold=threshold
        )
        report.corner_sf = sf
        provenance["window"] = detail.window
        provenance["corner_skipped"] = None
    else:
        provenance["window"] = window
        provenance["corner_skipped"] = (
            f"edge gaps ({gap_a:.4f}, {gap_b:.4f}) below gap floor "
            f"{gap_floor}; corner family not Fredholm-certified"
        )
    if factors is not None:
        h1, h2, grading = factors
        c, c_res, c_grid = _chern_detail(h1, 40)
        w, w_res, w_grid = _winding_detail(h2, grading, 256)
        report.chern_2dA = -c
        report.winding_1dAIII = -w
        report.kernel_signature = kernel_signature(h2, grading)
        report.bulk_edge_pair = bulk_edge_pair(h1, h2, grading)
        provenance["residuals"]["chern"] = c_res
        provenance["residuals"]["winding"] = w_res
        provenance["chern_grid"] = c_grid
        provenance["winding_grid"] = w_grid
        provenance["kernel_W"] = 40
    return report
