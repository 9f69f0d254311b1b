import numpy as np
import pytest

from nhspectra import MultiPoly, UniPoly, poly_roots, resultant, sylvester
from nhspectra.errors import DegreeZero, ZeroPolynomial


def test_roots_pure_imaginary_pair():
    roots = poly_roots(UniPoly([0.25, 0.0, 1.0]))
    assert sorted(np.round(roots, 12), key=lambda z: z.imag) == [-0.5j, 0.5j]


def test_roots_cubic_times_linear_factorization():
    # (1 + b^3)(0.5 + 1.5 b): three unit-circle roots plus -1/3
    coeffs = np.zeros(5, dtype=complex)
    coeffs[0] = 0.5
    coeffs[1] = 1.5
    coeffs[3] = 0.5
    coeffs[4] = 1.5
    roots = poly_roots(UniPoly(coeffs))
    expected = np.array(
        [-1.0 / 3.0, np.exp(1j * np.pi / 3), -1.0, np.exp(5j * np.pi / 3)]
    )
    for e in expected:
        assert np.min(np.abs(roots - e)) < 1e-12


def test_random_degree7_residual_bound():
    rng = np.random.default_rng(42)
    for _ in range(20):
        p = UniPoly(rng.normal(size=8) + 1j * rng.normal(size=8))
        roots = poly_roots(p, tol=1e-10)
        assert len(roots) == p.degree
        assert np.max(np.abs(p(roots))) <= 1e-10 * p.scale()


def test_roots_sorted_by_modulus():
    roots = poly_roots(UniPoly(np.poly([3.0, 0.1, -1.0, 2.0j])[::-1]))
    assert np.all(np.diff(np.abs(roots)) >= -1e-9)


def test_multiple_root_reported_as_cluster_mean():
    # (x - 1)^2 = 1 - 2x + x^2
    roots = poly_roots(UniPoly([1.0, -2.0, 1.0]))
    assert len(roots) == 2
    assert roots[0] == roots[1]
    assert abs(roots[0] - 1.0) < 1e-7


def test_zero_polynomial_raises():
    with pytest.raises(ZeroPolynomial):
        poly_roots(UniPoly([0.0, 0.0]))
    with pytest.raises(ZeroPolynomial):
        poly_roots(UniPoly([3.0]))


def test_sylvester_band_layout_linear():
    s = sylvester(UniPoly([1.0, 2.0]), UniPoly([4.0, 3.0]))
    assert np.allclose(s.to_numeric(), [[2.0, 1.0], [3.0, 4.0]])


def test_sylvester_band_layout_mixed_degree():
    s = sylvester(UniPoly([-1.0, 0.0, 1.0]), UniPoly([-1.0, 1.0]))
    expected = [[1.0, 0.0, -1.0], [1.0, -1.0, 0.0], [0.0, 1.0, -1.0]]
    assert np.allclose(s.to_numeric(), expected)


def test_sylvester_polynomial_entries_verbatim():
    a = MultiPoly(("y",), {(1,): 2.0, (0,): 1.0})  # 2y + 1
    f = [a, MultiPoly.constant(("y",), 1.0)]  # (2y+1) + x
    g = [MultiPoly.constant(("y",), -3.0), MultiPoly.constant(("y",), 1.0)]
    fx = MultiPoly(("x", "y"), {(0, 1): 2.0, (0, 0): 1.0, (1, 0): 1.0})
    gx = MultiPoly(("x", "y"), {(0, 0): -3.0, (1, 0): 1.0})
    s = sylvester(fx, gx, var="x")
    assert s.entries[0][1].terms == a.terms  # f's constant term is 2y+1
    with pytest.raises(DegreeZero):
        sylvester(UniPoly([1.0]), UniPoly([0.0, 1.0]))


def test_resultant_difference_of_roots():
    r = resultant(UniPoly([-2.0, 1.0]), UniPoly([-5.0, 1.0]))
    assert abs(r - (2.0 - 5.0)) < 1e-12


def test_resultant_zero_iff_shared_root():
    assert abs(resultant(UniPoly([-1.0, 0.0, 1.0]), UniPoly([-1.0, 1.0]))) < 1e-12
    assert abs(resultant(UniPoly([-1.0, 0.0, 1.0]), UniPoly([-2.0, 1.0]))) > 1.0


def test_resultant_product_formula_random():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = rng.integers(2, 6)
        m = rng.integers(2, 6)
        f = UniPoly(rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1))
        g = UniPoly(rng.normal(size=m + 1) + 1j * rng.normal(size=m + 1))
        res = resultant(f, g)
        rf, rg = poly_roots(f), poly_roots(g)
        expected = f.coeffs[-1] ** g.degree * g.coeffs[-1] ** f.degree
        for xi in rf:
            for eta in rg:
                expected *= xi - eta
        assert abs(res - expected) <= 1e-8 * max(abs(expected), 1.0)


def test_roots_reconstruct_coefficients():
    rng = np.random.default_rng(5)
    for _ in range(10):
        c = rng.normal(size=6) + 1j * rng.normal(size=6)
        p = UniPoly(c)
        roots = poly_roots(p)
        rebuilt = np.array([p.coeffs[-1]], dtype=complex)
        for r in roots:
            rebuilt = np.convolve(rebuilt, np.array([-r, 1.0]))
        assert np.max(np.abs(rebuilt - p.coeffs)) <= 1e-8 * p.scale()


def test_resultant_polynomial_coeffs_matches_evaluated_scalar():
    rng = np.random.default_rng(11)
    # f = x^2 + (a + 2) x + a^2, g = (3a) x - a + 1, eliminate x
    f = MultiPoly(
        ("x", "a"), {(2, 0): 1.0, (1, 1): 1.0, (1, 0): 2.0, (0, 2): 1.0}
    )
    g = MultiPoly(("x", "a"), {(1, 1): 3.0, (0, 1): -1.0, (0, 0): 1.0})
    res = resultant(f, g, "x")
    for _ in range(8):
        a0 = complex(rng.normal(), rng.normal())
        fs = f.partial("a", a0).to_unipoly()
        gs = g.partial("a", a0).to_unipoly()
        scalar = resultant(fs, gs)
        interp = res.evaluate({"a": a0})
        assert abs(scalar - interp) <= 1e-8 * max(1.0, abs(scalar))


def test_resultant_shared_root_polynomial_coeffs_vanishes():
    # x - a and x^2 - a^2 share the root x = a for every a
    f = MultiPoly(("x", "a"), {(1, 0): 1.0, (0, 1): -1.0})
    g = MultiPoly(("x", "a"), {(2, 0): 1.0, (0, 2): -1.0})
    res = resultant(f, g, "x")
    assert res.is_zero() or res.max_abs_coeff() < 1e-10


def test_energy_resultant_of_identical_pair_vanishes():
    # the zero-phase-offset pair shares every energy root, so eliminating
    # the energy from P(beta, E) against itself must give zero for all beta
    from nhspectra import char_poly, standard_hn

    cp = char_poly(standard_hn(2.0, 0.5))
    p = MultiPoly(("beta", "E"), cp.poly.terms)
    res = resultant(p, MultiPoly(("beta", "E"), dict(cp.poly.terms)), "E")
    scale = cp.poly.max_abs_coeff() ** 2
    rng = np.random.default_rng(9)
    for _ in range(10):
        b = complex(rng.normal(), rng.normal())
        val = res.evaluate({"beta": b}) if not res.is_zero() else 0.0
        assert abs(val) <= 1e-10 * scale * max(1.0, abs(b)) ** 4
