"""Half-plane, wedge, and edge-strip geometry on the square lattice.

A boundary line through the origin with slope ``s`` splits Z^2 into the
half-planes

    alpha side:  -p m + q n >= 0        (sites on or above  n = s m)
    beta side:   -p m + q n <= 0        (sites on or below)

for s = p/q in lowest terms.  Infinite slopes follow a fixed convention:
``beta = +inf`` means m >= 0 and ``alpha = -inf`` means m <= 0, so the
pair (0, +inf) carves out the upper-right quadrant.  A wedge is the
intersection of an alpha side and a beta side with alpha < beta.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import GeometryError

ALPHA = "alpha"
BETA = "beta"


@dataclass(frozen=True)
class Slope:
    """Rational slope p/q in lowest terms (q >= 1), or one of +-inf."""

    p: int
    q: int
    kind: str = "rational"

    @staticmethod
    def rational(p, q):
        if q == 0:
            raise GeometryError("slope denominator must be nonzero; use inf slopes instead")
        frac = Fraction(p, q)
        return Slope(frac.numerator, frac.denominator, "rational")

    @staticmethod
    def plus_inf():
        return Slope(1, 0, "+inf")

    @staticmethod
    def minus_inf():
        return Slope(-1, 0, "-inf")

    @staticmethod
    def parse(text):
        """Parse '0', '1/2', '-3/4', 'inf', '-inf' (and '+inf')."""
        s = str(text).strip().lower()
        if s in ("inf", "+inf"):
            return Slope.plus_inf()
        if s == "-inf":
            return Slope.minus_inf()
        try:
            frac = Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise GeometryError(f"cannot parse slope {text!r}") from exc
        return Slope(frac.numerator, frac.denominator, "rational")

    @property
    def infinite(self):
        return self.kind != "rational"

    @property
    def value(self):
        """Extended-real value used for ordering slopes."""
        if self.kind == "+inf":
            return math.inf
        if self.kind == "-inf":
            return -math.inf
        return Fraction(self.p, self.q)

    def __str__(self):
        if self.infinite:
            return "inf" if self.kind == "+inf" else "-inf"
        return str(Fraction(self.p, self.q))


@dataclass(frozen=True)
class SlopePair:
    """Ordered pair alpha < beta bounding a wedge; at most one infinite."""

    alpha: Slope
    beta: Slope

    def __post_init__(self):
        if self.alpha.infinite and self.beta.infinite:
            raise GeometryError("alpha and beta cannot both be infinite")
        if not self.alpha.value < self.beta.value:
            raise GeometryError(
                f"slopes must satisfy alpha < beta, got {self.alpha} and {self.beta}"
            )

    def __str__(self):
        return f"({self.alpha}, {self.beta})"


def _check_side(slope, which):
    if which not in (ALPHA, BETA):
        raise GeometryError(f"which must be 'alpha' or 'beta', got {which!r}")
    if slope.kind == "+inf" and which == ALPHA:
        raise GeometryError("+inf is only valid as a beta slope")
    if slope.kind == "-inf" and which == BETA:
        raise GeometryError("-inf is only valid as an alpha slope")


def in_half_plane(slope, which, site):
    """Membership of ``site = (m, n)`` in the alpha or beta half-plane."""
    return strip_depth(slope, which, site) >= 0


def strip_depth(slope, which, site):
    """Integer distance-index of a site from the boundary line.

    Depth 0 is the boundary layer; positive depths go into the
    half-plane, negative depths lie outside it.  For rational slopes the
    depth counts lattice steps perpendicular to the edge direction within
    the site's own column.
    """
    _check_side(slope, which)
    m, n = int(site[0]), int(site[1])
    if slope.kind == "+inf":
        return m
    if slope.kind == "-inf":
        return -m
    p, q = slope.p, slope.q
    if which == ALPHA:
        return n - math.ceil(Fraction(p * m, q))
    return math.floor(Fraction(p * m, q)) - n


def edge_supercell(slope):
    """Primitive lattice vector along the boundary line.

    Rational p/q gives (q, p); infinite slopes give (0, 1), the edge
    running along the n axis.
    """
    if slope.infinite:
        return (0, 1)
    return (slope.q, slope.p)


class LatticeRegion:
    """Finite ordered set of sites with ``norb`` orbitals per site.

    Sites are stored in lexicographic (m, n) order and flat indices are
    site-major: index = site_position * norb + orbital.
    """

    def __init__(self, sites, norb):
        if not isinstance(norb, int) or norb < 1:
            raise GeometryError(f"norb must be a positive integer, got {norb!r}")
        ordered = sorted((int(m), int(n)) for m, n in sites)
        if not ordered:
            raise GeometryError("region is empty")
        if len(set(ordered)) != len(ordered):
            raise GeometryError("region has duplicate sites")
        self.sites = tuple(ordered)
        self.norb = norb
        self._site_index = {s: i for i, s in enumerate(self.sites)}

    @property
    def n_sites(self):
        return len(self.sites)

    @property
    def dof(self):
        return len(self.sites) * self.norb

    def __contains__(self, site):
        return (int(site[0]), int(site[1])) in self._site_index

    def site_position(self, site):
        """Position of a site in the ordering, or None if absent."""
        return self._site_index.get((int(site[0]), int(site[1])))

    def index(self, site, orb):
        pos = self._site_index.get((int(site[0]), int(site[1])))
        if pos is None:
            raise GeometryError(f"site {site} not in region")
        if not 0 <= orb < self.norb:
            raise GeometryError(f"orbital {orb} out of range [0, {self.norb})")
        return pos * self.norb + orb

    def unindex(self, i):
        if not 0 <= i < self.dof:
            raise GeometryError(f"flat index {i} out of range [0, {self.dof})")
        return self.sites[i // self.norb], i % self.norb

    def __repr__(self):
        return f"LatticeRegion(n_sites={self.n_sites}, norb={self.norb})"


def wedge_region(pair, L, norb):
    """Corner region: the wedge of ``pair`` cut to the max-norm ball of radius L."""
    if not isinstance(L, int) or L < 1:
        raise GeometryError(f"L must be a positive integer, got {L!r}")
    sites = [
        (m, n)
        for m in range(-L, L + 1)
        for n in range(-L, L + 1)
        if in_half_plane(pair.alpha, ALPHA, (m, n))
        and in_half_plane(pair.beta, BETA, (m, n))
    ]
    if not sites:
        raise GeometryError(f"wedge for {pair} is empty at L={L}")
    return LatticeRegion(sites, norb)


def strip_region(slope, which, W, norb):
    """One edge supercell, W layers deep into the half-plane.

    Returns
    -------
    region : LatticeRegion
        ``W * q`` sites for a rational slope p/q (W sites for infinite
        slopes), one supercell wide along the edge direction.
    depths : dict
        site -> transverse depth, 0 on the boundary layer.

    Translating the returned sites by integer multiples of
    :func:`edge_supercell` tiles the full W-layer strip exactly.
    """
    _check_side(slope, which)
    if not isinstance(W, int) or W < 1:
        raise GeometryError(f"W must be a positive integer, got {W!r}")
    sites = []
    if slope.kind == "+inf":
        sites = [(d, 0) for d in range(W)]
    elif slope.kind == "-inf":
        sites = [(-d, 0) for d in range(W)]
    else:
        p, q = slope.p, slope.q
        for m in range(q):
            if which == ALPHA:
                base = math.ceil(Fraction(p * m, q))
                sites.extend((m, base + d) for d in range(W))
            else:
                base = math.floor(Fraction(p * m, q))
                sites.extend((m, base - d) for d in range(W))
    region = LatticeRegion(sites, norb)
    depths = {site: strip_depth(slope, which, site) for site in region.sites}
    return region, depths


def reduce_to_supercell(slope, site):
    """Decompose ``site = rep + j * v`` with v the edge supercell vector.

    Returns ``(rep, j)`` where ``rep`` lies in the supercell window
    (column 0 <= m < q for rational slopes, row n = 0 for infinite ones).
    """
    m, n = int(site[0]), int(site[1])
    if slope.infinite:
        return (m, 0), n
    q, p = edge_supercell(slope)
    j = m // q
    return (m - j * q, n - j * p), j
