"""Spectra of assembled operators: diagonalization, localization weights,
and eigenvalue-branch tracking across a closed parameter grid.

Branch tracking is the raw material for spectral flow: eigenvalues inside
a symmetric window around zero are linked across neighboring parameter
values by eigenvector overlap, and the resulting branches are scanned for
signed zero crossings.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla
from scipy.optimize import linear_sum_assignment

from .errors import EigensolverError, TrackingError

RESIDUAL_REL_TOL = 1e-8
OVERLAP_MIN = 0.5
DEGENERACY_CLUSTER_TOL = 1e-4
_DENSE_CUTOFF = 600
_BLOCK_SEED = 11
_BLOCK_MAX_SWEEPS = 200


@dataclass
class SpectralSlice:
    """Eigenvalues (ascending) of one operator at one parameter point."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    kind: str
    t: float | None = None
    k_edge: float | None = None
    region: object | None = None

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(self.eigenvalues) < 0):
            raise EigensolverError("eigenvalues must be ascending")


def _check_residuals(matrix, vals, vecs, sample=None, norm_a=None):
    """Residual contract ||A v - lambda v|| <= tol * ||A|| on (a sample of) pairs."""
    if vecs is None or vals.size == 0:
        return
    if norm_a is None:
        norm_a = np.max(np.abs(vals))
    norm_a = max(norm_a, 1e-300)
    idx = np.arange(vals.size)
    if sample is not None and vals.size > sample:
        idx = np.linspace(0, vals.size - 1, sample).astype(int)
    resid = matrix @ vecs[:, idx] - vecs[:, idx] * vals[idx]
    worst = np.max(np.linalg.norm(resid, axis=0))
    if worst > RESIDUAL_REL_TOL * norm_a:
        raise EigensolverError(
            f"eigenpair residual {worst:.3e} exceeds {RESIDUAL_REL_TOL:.0e} * ||A||"
        )


def diagonalize(op, want_vectors=True):
    """Full dense spectrum of an assembled operator.

    Eigensolver failures surface as EigensolverError; the returned pairs
    satisfy the residual contract of SpectralSlice.
    """
    dense = op.dense()
    try:
        if want_vectors:
            vals, vecs = np.linalg.eigh(dense)
        else:
            vals, vecs = np.linalg.eigvalsh(dense), None
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"dense eigensolver failed: {exc}") from exc
    _check_residuals(dense, vals, vecs, sample=None if len(vals) <= 256 else 8)
    return SpectralSlice(vals, vecs, op.kind, t=op.t, k_edge=op.k_edge, region=op.region)


def _shift_factorize(csc, n):
    last_exc = None
    for sigma in (0.0, 1.3e-6, 4.1e-6):
        shifted = csc if sigma == 0.0 else csc - sigma * sparse.identity(
            n, dtype=csc.dtype, format="csc")
        try:
            return spla.splu(shifted)
        except RuntimeError as exc:
            last_exc = exc
    raise EigensolverError(f"sparse factorization failed: {last_exc}")


def _block_window_pairs(matrix, window, k):
    """Eigenpairs covering |lambda| <= window via blocked inverse iteration.

    A seeded random block of k vectors is driven by (A - sigma)^{-1} with
    a Rayleigh-Ritz extraction every sweep.  The random block has full
    projection onto every eigenspace, so multiplicities up to k come out
    whole; single-vector Krylov solvers can lose directions of the exactly
    degenerate clusters corner spectra produce, and can even return
    near-parallel duplicate vectors for them.

    The extraction diagonalizes the block compression of A^2 rather than
    A.  Chiral-symmetric operators pair every eigenvector e with a partner
    carrying -lambda, and the tail of the iterated block holds balanced
    combinations of such pairs; those have A-Rayleigh quotient near zero
    (squarely inside the window, residual of order the gap) but are exact
    eigenvectors of A^2, so in the squared metric the tail sits at
    mu ~ lambda_sea^2, far outside.  Under the tracking contract the
    spectrum splits at the window, every eigenvalue inside 1.05 * window
    or beyond twice the window, so mu <= (1.05 * window)^2 cleanly marks
    the genuine near-zero states.  The sweep loop stops once, three
    sweeps in a row, some squared Ritz interval clears window^2
    (coverage) and every inside pair is converged with a stable value
    set; signed eigenvalues then come from one small Rayleigh-Ritz with
    A on the converged subspace.  Spectra that are not actually split at
    the window stall out as EigensolverError instead of returning a
    defective set.
    """
    n = matrix.shape[0]
    norm_a = float(np.abs(matrix).sum(axis=1).max())
    tol_sq = RESIDUAL_REL_TOL * max(norm_a * norm_a, 1e-300)
    lu = _shift_factorize(matrix.tocsc(), n)
    rng = np.random.default_rng(_BLOCK_SEED)
    block = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    block, _ = np.linalg.qr(block)
    lim_sq = (1.05 * window) ** 2
    covered = False
    streak = 0
    prev_mu = None
    for sweep in range(_BLOCK_MAX_SWEEPS):
        block, _ = np.linalg.qr(lu.solve(block))
        ab = matrix @ block
        gram = ab.conj().T @ ab
        mu, rot = np.linalg.eigh(0.5 * (gram + gram.conj().T))
        y = block @ rot
        ay = ab @ rot
        r2 = np.linalg.norm(matrix @ ay - y * mu, axis=0)
        inside = mu <= lim_sq
        converged = inside & (r2 <= tol_sq)
        covered = bool(np.any(mu - r2 >= window * window))
        mu_c = mu[converged]
        settled = (covered and bool(np.all(converged | ~inside))
                   and prev_mu is not None and mu_c.size == prev_mu.size
                   and np.allclose(mu_c, prev_mu, rtol=0.0, atol=10 * tol_sq))
        streak = streak + 1 if settled else 0
        prev_mu = mu_c.copy()
        if streak >= 3 and sweep >= 11:
            keep = np.flatnonzero(converged)
            if keep.size == 0:
                return np.empty(0), np.empty((n, 0), dtype=y.dtype), True
            small = y[:, keep].conj().T @ ay[:, keep]
            theta, basis = np.linalg.eigh(0.5 * (small + small.conj().T))
            return theta, y[:, keep] @ basis, True
        block = y
    if not covered:
        return np.empty(0), np.empty((n, 0), dtype=block.dtype), False
    raise EigensolverError(
        f"window eigensolver failed to certify |lambda| <= {window:.3g} "
        f"after {_BLOCK_MAX_SWEEPS} sweeps with block {k}")


def diagonalize_window(op, window, k=32):
    """Eigenpairs covering the window |lambda| <= window around zero.

    Small operators fall back to the dense path (full spectrum).  Large
    ones use blocked inverse iteration; the block is grown until the
    computed set provably covers the window, and only pairs inside
    1.05 * window are returned.
    """
    n = op.shape[0]
    if n <= _DENSE_CUTOFF:
        return diagonalize(op, want_vectors=True)
    k = int(min(max(k, 8), n))
    while True:
        vals, vecs, covered = _block_window_pairs(op.matrix, window, k)
        if covered:
            break
        if k >= n:
            return diagonalize(op, want_vectors=True)
        k = min(2 * k, n)
    row_sums = np.abs(op.matrix).sum(axis=1)
    _check_residuals(op.matrix, vals, vecs, norm_a=float(row_sums.max()))
    return SpectralSlice(vals, vecs, op.kind, t=op.t, k_edge=op.k_edge, region=op.region)


def mask_vector(region, mask):
    """Per-degree-of-freedom weights from a site predicate or profile.

    ``mask`` maps a site to a bool (0/1 indicator) or to a float; the
    value is repeated across the site's orbitals.
    """
    flags = np.array([float(mask(site)) for site in region.sites])
    return np.repeat(flags, region.norb)


def localization_weight(sl, eigen_index, mask):
    """Probability weight of one eigenvector on the masked sites.

    ``mask`` is a predicate on (m, n) sites; the weight is the summed
    |component|^2 over masked sites and all their orbitals, normalized by
    the full norm.
    """
    if sl.eigenvectors is None:
        raise EigensolverError("localization weight needs eigenvectors")
    if not 0 <= eigen_index < sl.eigenvalues.size:
        raise IndexError(f"eigen index {eigen_index} out of range")
    v = sl.eigenvectors[:, eigen_index]
    mvec = mask_vector(sl.region, mask)
    total = float(np.vdot(v, v).real)
    return float(np.sum(mvec * np.abs(v) ** 2) / total)


def all_weights(sl, mask):
    """Localization weights of every eigenvector in the slice at once."""
    mvec = mask_vector(sl.region, mask)
    dens = np.abs(sl.eigenvectors) ** 2
    return (mvec @ dens) / np.sum(dens, axis=0)


def sharpen_degeneracies(sl, mask, matrix=None, cluster_tol=DEGENERACY_CLUSTER_TOL):
    """Rotate near-degenerate eigenvector clusters to a localization basis.

    Exactly or nearly degenerate eigenstates living at different geometric
    features (the four corners of a truncated wedge, the two walls of a
    strip) come out of a black-box eigensolver as arbitrary mixtures.
    Within each cluster of eigenvalues closer than ``cluster_tol`` this
    rediagonalizes the masked-weight form, producing states that are as
    localized or as delocalized with respect to the mask as the physics
    allows, without changing the spanned space.  When ``matrix`` is given
    the rotated states get Rayleigh-quotient eigenvalues.
    """
    if sl.eigenvectors is None or sl.eigenvalues.size < 2:
        return sl
    vals = sl.eigenvalues.copy()
    vecs = sl.eigenvectors.copy()
    mvec = mask_vector(sl.region, mask)
    splits = np.nonzero(np.diff(vals) > cluster_tol)[0] + 1
    changed = False
    for cluster in np.split(np.arange(vals.size), splits):
        if cluster.size < 2:
            continue
        block, _ = np.linalg.qr(vecs[:, cluster])
        form = block.conj().T @ (mvec[:, None] * block)
        _, rot = np.linalg.eigh(0.5 * (form + form.conj().T))
        rotated = block @ rot
        vecs[:, cluster] = rotated
        if matrix is not None:
            ray = np.real(np.sum(rotated.conj() * (matrix @ rotated), axis=0))
            vals[cluster] = ray
        changed = True
    if not changed:
        return sl
    order = np.argsort(vals, kind="stable")
    return SpectralSlice(
        vals[order], vecs[:, order], sl.kind, t=sl.t, k_edge=sl.k_edge, region=sl.region
    )


# ---------------------------------------------------------------------------
# branch tracking

@dataclass
class BranchPoint:
    grid_index: int
    value: float
    weight: float | None = None


@dataclass
class Branch:
    points: list
    closed: bool = False


@dataclass
class BranchTrack:
    grid: np.ndarray
    window: float
    branches: list = field(default_factory=list)


@dataclass
class Crossing:
    """One signed zero crossing: direction +1 going up, -1 going down."""

    t: float
    direction: int
    weight: float | None
    branch: int


def _window_indices(sl, window):
    return np.nonzero(np.abs(sl.eigenvalues) <= window)[0]


def _match(sl_a, sl_b, idx_a, idx_b):
    """Assign windowed states of two slices; returns [(ia, ib, quality, by_vec)]."""
    if idx_a.size == 0 or idx_b.size == 0:
        return []
    if sl_a.eigenvectors is not None and sl_b.eigenvectors is not None:
        ova = sl_a.eigenvectors[:, idx_a]
        ovb = sl_b.eigenvectors[:, idx_b]
        overlap = np.abs(ova.conj().T @ ovb)
        rows, cols = linear_sum_assignment(-overlap)
        return [
            (int(idx_a[r]), int(idx_b[c]), float(overlap[r, c]), True)
            for r, c in zip(rows, cols)
        ]
    dist = np.abs(sl_a.eigenvalues[idx_a][:, None] - sl_b.eigenvalues[idx_b][None, :])
    rows, cols = linear_sum_assignment(dist)
    return [
        (int(idx_a[r]), int(idx_b[c]), float(dist[r, c]), False)
        for r, c in zip(rows, cols)
    ]


def _link_interval(sl_a, sl_b, t_a, t_b, window, jump_bound, refine_fn, depth):
    """Link windowed states of two slices, refining the interval on ambiguity."""
    pairs = _match(sl_a, sl_b, _window_indices(sl_a, window), _window_indices(sl_b, window))
    bad = False
    for ia, ib, quality, by_vec in pairs:
        if by_vec and quality < OVERLAP_MIN:
            bad = True
        jump = abs(sl_b.eigenvalues[ib] - sl_a.eigenvalues[ia])
        if jump_bound is not None and jump > jump_bound * abs(t_b - t_a) + 1e-9:
            bad = True
    if not bad:
        return [(ia, ib) for ia, ib, _, _ in pairs]
    if depth <= 0 or refine_fn is None:
        raise TrackingError(
            f"ambiguous branch linking between t={t_a:.6f} and t={t_b:.6f}"
        )
    t_mid = 0.5 * (t_a + t_b)
    sl_mid = refine_fn(t_mid % (2 * np.pi))
    left = dict(_link_interval(sl_a, sl_mid, t_a, t_mid, window, jump_bound, refine_fn, depth - 1))
    right = dict(_link_interval(sl_mid, sl_b, t_mid, t_b, window, jump_bound, refine_fn, depth - 1))
    return [(ia, right[im]) for ia, im in left.items() if im in right]


def track_branches(slices, window, weight_fn=None, jump_bound=None,
                   refine_fn=None, max_refine=3):
    """Link windowed eigenvalues over a closed parameter grid into branches.

    Parameters
    ----------
    slices : list of SpectralSlice
        One per grid point, t strictly increasing in [0, 2pi); the grid is
        treated as closed (the last point links back to the first).
    window : float
        Half-width of the symmetric tracking window around zero.
    weight_fn : callable, optional
        ``weight_fn(slice, eigen_index) -> float`` stored on each branch
        point (localization weight).
    jump_bound : float, optional
        Lipschitz rate C; a linked pair with |dlambda| > C dt triggers
        local grid refinement.
    refine_fn : callable, optional
        ``refine_fn(t) -> SpectralSlice`` used to resolve ambiguous
        linkings; after ``max_refine`` bisections a TrackingError is
        raised.
    """
    n = len(slices)
    if n < 3:
        raise TrackingError("need at least 3 grid points on the circle")
    grid = np.array([sl.t for sl in slices], dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise TrackingError("slice grid must be strictly increasing")
    links = {}
    for i in range(n):
        j = (i + 1) % n
        t_b = grid[j] if j != 0 else grid[0] + 2 * np.pi
        for ia, ib in _link_interval(
            slices[i], slices[j], grid[i], t_b, window, jump_bound, refine_fn, max_refine
        ):
            links[(i, ia)] = (j, ib)
    nodes = {
        (i, int(a)) for i, sl in enumerate(slices) for a in _window_indices(sl, window)
    }
    has_prev = set(links.values())

    def walk(start, stop_at_start):
        chain = [start]
        while True:
            nxt = links.get(chain[-1])
            if nxt is None or (stop_at_start and nxt == start) or nxt not in nodes:
                return chain, nxt == start if nxt else False
            if nxt in visited:
                return chain, False
            chain.append(nxt)
            visited.add(nxt)

    visited = set()
    track = BranchTrack(grid=grid, window=window)
    starts = sorted(node for node in nodes if node not in has_prev)
    for start in starts:
        if start in visited:
            continue
        visited.add(start)
        chain, _ = walk(start, stop_at_start=False)
        track.branches.append(_make_branch(chain, slices, weight_fn, closed=False))
    for node in sorted(nodes):
        if node in visited:
            continue
        visited.add(node)
        chain, closed = walk(node, stop_at_start=True)
        track.branches.append(_make_branch(chain, slices, weight_fn, closed=closed))
    return track


def _make_branch(chain, slices, weight_fn, closed):
    points = []
    for i, a in chain:
        w = None if weight_fn is None else float(weight_fn(slices[i], a))
        points.append(BranchPoint(i, float(slices[i].eigenvalues[a]), w))
    return Branch(points=points, closed=closed)


def crossings(track):
    """Signed zero crossings of every branch, sorted by parameter value."""
    found = []
    for b_idx, branch in enumerate(track.branches):
        pts = branch.points
        pairs = list(zip(pts[:-1], pts[1:]))
        if branch.closed and len(pts) > 1:
            pairs.append((pts[-1], pts[0]))
        for p, q in pairs:
            u, v = p.value, q.value
            if (u < 0) == (v < 0):
                continue
            t_p = track.grid[p.grid_index]
            t_q = track.grid[q.grid_index]
            if t_q <= t_p:
                t_q += 2 * np.pi
            frac = u / (u - v) if u != v else 0.5
            t_c = (t_p + frac * (t_q - t_p)) % (2 * np.pi)
            weights = [w for w in (p.weight, q.weight) if w is not None]
            w_c = float(np.mean(weights)) if weights else None
            found.append(Crossing(t=float(t_c), direction=+1 if v >= 0 else -1,
                                  weight=w_c, branch=b_idx))
    return sorted(found, key=lambda c: (c.t, c.branch))


def slices_to_csv(slices, path, mask=None):
    """Export slices as CSV rows: t, k_edge, eigenvalue, localization_weight."""
    lines = ["t,k_edge,eigenvalue,localization_weight"]
    for sl in slices:
        weights = None
        if mask is not None and sl.eigenvectors is not None and sl.region is not None:
            weights = all_weights(sl, mask)
        for i, val in enumerate(sl.eigenvalues):
            t_txt = "" if sl.t is None else f"{sl.t:.17g}"
            k_txt = "" if sl.k_edge is None else f"{sl.k_edge:.17g}"
            w_txt = "" if weights is None else f"{weights[i]:.17g}"
            lines.append(f"{t_txt},{k_txt},{val:.17g},{w_txt}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
