"""Real-space assembly: bulk fibers, half-lines, edge strips, corners."""

import numpy as np
import pytest

from cornerlab import GeometryError, ModelError, assembly, geometry, symbol
from cornerlab.assembly import (
    assemble_bulk,
    assemble_corner,
    assemble_edge_strip,
    assemble_halfline,
    dump_csv,
)
from cornerlab.geometry import Slope, SlopePair
from cornerlab.symbol import builtin_models, chiral_shift_model, partial_bloch, qwz_model

PAIR = SlopePair(Slope.rational(0, 1), Slope.plus_inf())


def test_every_assembler_yields_hermitian_matrices():
    cat = builtin_models()
    rng = np.random.default_rng(17)
    ops = []
    for t in rng.uniform(0, 2 * np.pi, size=3):
        ops.append(assemble_corner(cat["product_example"].symbol, PAIR, 8, t))
        ops.append(assemble_edge_strip(
            cat["product_example"].symbol, Slope.rational(1, 2), "alpha", 9,
            k_edge=t, t=t))
        ops.append(assemble_edge_strip(
            cat["h1_example"].symbol, Slope.plus_inf(), "beta", 9, k_edge=t))
    ops.append(assemble_halfline(cat["h2_double_shift"].symbol, 12))
    ops.append(assemble_bulk(cat["product_example"].symbol, (0.3, -0.7, 1.1)))
    for op in ops:
        dense = op.dense()
        assert np.max(np.abs(dense - dense.conj().T)) <= 1e-12


def test_bulk_fiber_equals_bloch_matrix():
    sym = qwz_model(-1.0)
    rng = np.random.default_rng(23)
    for _ in range(10):
        k = rng.uniform(-np.pi, np.pi, size=2)
        op = assemble_bulk(sym, k)
        assert np.allclose(op.dense(), symbol.evaluate_bloch(sym, k), atol=1e-14)


def test_halfline_nesting():
    """The W-site half-line is the top-left block of the 2W-site one."""
    sym, _ = chiral_shift_model(2)
    small = assemble_halfline(sym, 10).dense()
    big = assemble_halfline(sym, 20).dense()
    assert np.array_equal(small, big[: small.shape[0], : small.shape[1]])


def test_halfline_entries_match_hoppings():
    sym, _ = chiral_shift_model(1)
    op = assemble_halfline(sym, 8)
    dense = op.dense()
    for a in range(8):
        for b in range(8):
            blk = dense[2 * a: 2 * a + 2, 2 * b: 2 * b + 2]
            assert np.array_equal(blk, sym.block((a - b,)))


def test_halfline_validation():
    sym, _ = chiral_shift_model(2)
    with pytest.raises(GeometryError):
        assemble_halfline(sym, 2)
    with pytest.raises(ModelError):
        assemble_halfline(qwz_model(-1.0), 10)


def test_corner_entries_are_folded_hoppings():
    """Corner matrix entry (a, b) is sum_l h_{(a-b, l)} exp(-i l t)."""
    sym = builtin_models()["product_example"].symbol
    t = 0.9
    op = assemble_corner(sym, PAIR, 6, t)
    dense = op.dense()
    region = op.region
    folded = {}
    for (dm, dn, dl), blk in sym.hoppings.items():
        key = (dm, dn)
        folded[key] = folded.get(key, 0) + blk * np.exp(-1j * dl * t)
    rng = np.random.default_rng(29)
    sites = list(region.sites)
    for _ in range(60):
        a = sites[rng.integers(len(sites))]
        b = sites[rng.integers(len(sites))]
        ia, ib = region.index(a, 0), region.index(b, 0)
        got = dense[ia: ia + 4, ib: ib + 4]
        want = folded.get((a[0] - b[0], a[1] - b[1]), np.zeros((4, 4)))
        assert np.allclose(got, want, atol=1e-14)


def test_corner_validation():
    sym = builtin_models()["product_example"].symbol
    with pytest.raises(GeometryError):
        assemble_corner(sym, PAIR, 0, 0.0)
    with pytest.raises(ModelError):
        assemble_corner(qwz_model(-1.0), PAIR, 8, 0.0)


def test_edge_strip_slope0_equals_folded_halfline():
    """Slope-0 alpha strip of a dim-2 symbol is the Bloch-folded half-line."""
    sym = qwz_model(-1.0)
    for k in (0.0, 0.6, -2.2):
        strip = assemble_edge_strip(sym, Slope.rational(0, 1), "alpha", 14, k)
        hl = assemble_halfline(partial_bloch(sym, 0, k), 14)
        assert np.allclose(strip.dense(), hl.dense(), atol=1e-13)


def test_edge_strip_parameter_fold_orientation():
    """Dim-3 strips fold the parameter axis like the corner does."""
    sym = builtin_models()["product_example"].symbol
    t, k = 1.3, 0.4
    strip3 = assemble_edge_strip(sym, Slope.rational(1, 2), "beta", 10, k, t=t)
    folded = symbol.partial_bloch(sym, 2, -t)
    strip2 = assemble_edge_strip(folded, Slope.rational(1, 2), "beta", 10, k)
    assert np.allclose(strip3.dense(), strip2.dense(), atol=1e-13)


def test_edge_strip_bloch_phase_wraps_supercell():
    """Hops crossing the supercell boundary carry exp(i k_edge j)."""
    sym = qwz_model(-1.0)
    k = 0.8
    op = assemble_edge_strip(sym, Slope.plus_inf(), "beta", 6, k)
    dense = op.dense()
    region = op.region
    # along-edge hop (0, 1) wraps onto the same site with phase exp(i k)
    a = region.index((2, 0), 0)
    got = dense[a: a + 2, a: a + 2]
    want = (sym.block((0, 0))
            + sym.block((0, 1)) * np.exp(1j * k)
            + sym.block((0, -1)) * np.exp(-1j * k))
    assert np.allclose(got, want, atol=1e-14)


def test_edge_strip_validation():
    sym = builtin_models()["product_example"].symbol
    with pytest.raises(ModelError):
        assemble_edge_strip(sym, Slope.rational(0, 1), "alpha", 10, 0.0)
    with pytest.raises(GeometryError):
        assemble_edge_strip(sym, Slope.rational(0, 1), "alpha", 1, 0.0, t=0.0)
    with pytest.raises(ModelError):
        assemble_edge_strip(chiral_shift_model()[0], Slope.rational(0, 1),
                            "alpha", 10, 0.0)


def test_dump_csv_roundtrip(tmp_path):
    op = assemble_halfline(chiral_shift_model(1)[0], 5)
    path = tmp_path / "op.csv"
    dump_csv(op, path)
    raw = np.loadtxt(path, delimiter=",", skiprows=1)
    rebuilt = raw[:, 0::2] + 1j * raw[:, 1::2]
    assert np.allclose(rebuilt, op.dense(), atol=1e-15)
