"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line.  Tolerances are fixed here and must not be loosened."""

import time

import numpy as np

from nhspectra import (
    agbz_sample_theta,
    bloch_eval,
    char_poly,
    find_intersections,
    gbz_extract,
    hausdorff_distance,
    nfold_bloch_momenta,
    nfold_construct,
    obc_finite,
    obc_thermodynamic,
    pbc_spectrum,
    standard_hn,
    sub_boundary_zero_count,
    unit_circle,
    verify_correspondence,
    winding_bz,
    winding_contour,
    winding_raster,
)
from nhspectra.errors import OnSpectrum
from nhspectra.model import OneBandModel
from nhspectra.topology import spectrum_bbox


class _report:
    def __init__(self, num, desc):
        self.num = num
        self.desc = desc

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        print(f"\nACCEPTANCE {self.num}: {status} - {self.desc}")
        return False


def test_criterion_1_circle_law():
    rng = np.random.default_rng(101)
    with _report(1, "standard chain aGBZ is the circle of radius sqrt(t-1/t1)"):
        grid = np.linspace(0.0, 2.0 * np.pi, 182)[1:-1]
        for _ in range(10):
            t_p1 = float(rng.uniform(0.2, 3.0))
            t_m1 = float(rng.uniform(0.2, 3.0))
            model = standard_hn(t_p1, t_m1)
            radius = np.sqrt(t_m1 / t_p1)
            pts = agbz_sample_theta(model, grid)
            assert pts
            err = max(abs(abs(p.beta) - radius) for p in pts)
            assert err < 1e-6, (t_p1, t_m1, err)


def test_criterion_2_three_fold_golden(preset_models):
    with _report(2, "engineered triple point: E0 = 0, n = 3, momenta, tie indices"):
        xs = find_intersections(preset_models[-0.5])
        assert len(xs) == 1
        si = xs[0]
        assert abs(si.energy) < 1e-9
        assert si.multiplicity == 3
        expected = np.array([np.pi / 3.0, np.pi, 5.0 * np.pi / 3.0])
        assert np.max(np.abs(np.sort(si.k_solutions) - expected)) < 1e-8
        assert si.ordering_indices == (2, 4)


def test_criterion_3_winding_sets(preset_models):
    expected = {-0.3: {0, 1, 2}, -0.5: {0, 1}, -0.7: {-1, 0, 1}}
    with _report(3, "200 x 200 winding rasters reproduce the region value sets"):
        for g, model in preset_models.items():
            bbox = spectrum_bbox(pbc_spectrum(model, 512))
            raster = winding_raster(model, bbox, (200, 200))
            assert set(raster.defined_values()) == expected[g], g


def test_criterion_4_correspondence(preset_models, ssh_model):
    with _report(4, "self-intersections match aGBZ/BZ crossings with multiplicity"):
        for g, model in preset_models.items():
            rep = verify_correspondence(model, tol_e=1e-6)
            assert rep.passed, (g, rep.violations)
        started = time.time()
        rep = verify_correspondence(ssh_model, tol_e=1e-6)
        elapsed = time.time() - started
        assert rep.passed, rep.violations
        assert elapsed < 300.0, f"SSH implicit pipeline took {elapsed:.1f}s"


def test_criterion_5_winding_oracle_equivalence():
    rng = np.random.default_rng(105)
    with _report(5, "root counting equals contour integration on 50 draws"):
        circle = unit_circle(512)
        checked = 0
        while checked < 50:
            M, N = rng.integers(1, 3), rng.integers(1, 3)
            hops = {
                n: complex(rng.normal(), rng.normal())
                for n in range(-M, N + 1)
                if n != 0
            }
            try:
                model = OneBandModel(hops)
            except Exception:
                continue
            e_b = complex(2.0 * rng.normal(), 2.0 * rng.normal())
            try:
                w_roots = winding_bz(model, e_b)
            except OnSpectrum:
                continue
            assert w_roots == winding_contour(model, e_b, circle)
            checked += 1


def test_criterion_6_crossing_rule(preset_models):
    rng = np.random.default_rng(106)
    with _report(6, "winding drops by exactly 1 crossing the spectrum left to right"):
        for g, model in preset_models.items():
            es = pbc_spectrum(model, 512)[0].energies()
            diam = max(np.ptp(es.real), np.ptp(es.imag))
            eps = 1e-4 * diam
            done = 0
            while done < 20:
                k = rng.uniform(0.0, 2.0 * np.pi)
                b = np.exp(1j * k)
                tangent = 1j * b * sum(
                    n * t * b ** (n - 1) for n, t in model.hops.items()
                )
                if abs(tangent) < 1e-3:
                    continue
                normal = 1j * tangent / abs(tangent)
                e0 = bloch_eval(model, b)
                try:
                    w_left = winding_bz(model, e0 + eps * normal)
                    w_right = winding_bz(model, e0 - eps * normal)
                except OnSpectrum:
                    continue
                assert w_left - w_right == 1, (g, k)
                done += 1


def test_criterion_7_sub_boundary_enclosure(preset_models, ssh_model, sweep_cache):
    rng = np.random.default_rng(107)
    with _report(7, "each sub-boundary encloses exactly its index count of roots"):
        models = dict(preset_models)
        models["ssh"] = ssh_model
        for key, model in models.items():
            pts = sweep_cache(key) if key != "ssh" else agbz_sample_theta(model)
            cp = char_poly(model)
            labels = sorted({p.label for p in pts})
            assert labels == [(1, 2), (2, 3), (3, 4)], key
            for lo, hi in labels:
                subset = [p for p in pts if p.label == (lo, hi)]
                for _ in range(20):
                    e = complex(rng.uniform(-3.5, 3.5), rng.uniform(-3.5, 3.5))
                    assert sub_boundary_zero_count(subset, cp, e) == lo, (key, lo)


def test_criterion_8_chiral_pairing(ssh_model):
    with _report(8, "two-band spectra pair as (E, -E) for OBC and PBC"):
        for L in (20, 40, 60):
            vals = list(obc_finite(ssh_model, L).values)
            while vals:
                e = vals.pop()
                j = int(np.argmin(np.abs(np.array(vals) + e)))
                assert abs(vals[j] + e) < 1e-8, L
                vals.pop(j)
        curves = pbc_spectrum(ssh_model, 512)
        assert np.max(np.abs(curves[0].energies() + curves[1].energies())) < 1e-8


def test_criterion_9_nfold_constructor():
    rng = np.random.default_rng(109)
    with _report(9, "engineered n-fold points reproduce multiplicity and momenta"):
        for n in (2, 3, 4):
            for _ in range(5):
                phi = float(rng.uniform(0.0, 2.0 * np.pi))
                q_hops = {-1: complex(rng.uniform(0.5, 2.0)), 0: complex(
                    rng.uniform(-0.45, 0.45), rng.uniform(-0.45, 0.45)
                ) * rng.uniform(0.5, 1.0)}
                model = nfold_construct(n, phi, q_hops)
                xs = find_intersections(model, num_k=1024)
                at_zero = [si for si in xs if abs(si.energy) < 1e-7]
                assert len(at_zero) == 1, (n, phi)
                si = at_zero[0]
                assert si.multiplicity == n, (n, phi)
                expected = nfold_bloch_momenta(n, phi)
                assert np.max(np.abs(np.sort(si.k_solutions) - expected)) < 1e-8


def test_criterion_10_finite_size_sanity(std_hn, sweep_cache):
    with _report(10, "finite chains match the similarity oracle and converge"):
        sp = obc_finite(std_hn, 20)
        expected = np.sort(2.0 * np.cos(np.arange(1, 21) * np.pi / 21.0))
        assert np.max(np.abs(np.sort(sp.values.real) - expected)) < 1e-8
        assert np.max(np.abs(sp.values.imag)) < 1e-8
        thermo = obc_thermodynamic(
            std_hn, gbz_extract(sweep_cache("std"), char_poly(std_hn))
        ).values
        dists = [
            hausdorff_distance(obc_finite(std_hn, L).values, thermo)
            for L in (20, 40, 60)
        ]
        assert dists[0] >= dists[1] - 1e-3
        assert dists[1] >= dists[2] - 1e-3
