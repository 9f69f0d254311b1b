import numpy as np
import pytest

from nhspectra import (
    char_poly,
    gbz_extract,
    hausdorff_distance,
    obc_finite,
    obc_thermodynamic,
    pbc_spectrum,
    standard_hn,
)
from nhspectra.errors import SizeCapExceeded, TooSmallL


def test_pbc_sample_values(preset_models):
    curves = pbc_spectrum(preset_models[-0.3], 256)
    es, ks = curves[0].energies(), curves[0].momenta()
    assert abs(es[np.argmin(np.abs(ks))] - 4.0) < 1e-12
    curves = pbc_spectrum(preset_models[-0.5], 256)
    es, ks = curves[0].energies(), curves[0].momenta()
    i_pi = np.argmin(np.abs(ks - np.pi))
    assert abs(es[i_pi]) < 1e-12  # the triple point lies on the curve


def test_pbc_ssh_chiral_pairing_per_sample(ssh_model):
    curves = pbc_spectrum(ssh_model, 128)
    e0, e1 = curves[0].energies(), curves[1].energies()
    assert np.max(np.abs(e0 + e1)) < 1e-10


def test_band_touching_flags_tracking_ambiguity():
    from nhspectra import nh_ssh

    # the Hermitian chain with equal couplings closes its gap on the
    # Brillouin zone, so nearest-neighbor continuation cannot be trusted
    curves = pbc_spectrum(nh_ssh(1.0, 1.0, 0.0, 0.0), 128)
    assert all(c.tracking_ambiguous for c in curves)


def test_pbc_refinement_consistency(preset_models):
    coarse = pbc_spectrum(preset_models[-0.7], 64)[0]
    fine = pbc_spectrum(preset_models[-0.7], 128)[0]
    assert np.max(np.abs(coarse.energies() - fine.energies()[::2])) < 1e-12


def test_pbc_num_k_floor(std_hn):
    with pytest.raises(ValueError):
        pbc_spectrum(std_hn, 4)


def test_obc_finite_hermitian_three_site():
    sp = obc_finite(standard_hn(1.0, 1.0), 3)
    assert np.allclose(
        np.sort(sp.values.real), [-np.sqrt(2), 0.0, np.sqrt(2)], atol=1e-12
    )
    assert np.max(np.abs(sp.values.imag)) < 1e-12


def test_obc_finite_standard_hn_similarity_oracle(std_hn):
    sp = obc_finite(std_hn, 20)
    expected = np.sort(2.0 * np.cos(np.arange(1, 21) * np.pi / 21))
    assert np.max(np.abs(np.sort(sp.values.real) - expected)) < 1e-8
    assert np.max(np.abs(sp.values.imag)) < 1e-8


def test_obc_finite_counts_and_caps(preset_models, ssh_model):
    assert len(obc_finite(preset_models[-0.3], 40).values) == 40
    assert len(obc_finite(ssh_model, 20).values) == 40  # q * L
    with pytest.raises(TooSmallL):
        obc_finite(preset_models[-0.3], 4)
    with pytest.raises(SizeCapExceeded):
        obc_finite(preset_models[-0.3], 200)


def test_ssh_obc_chiral_pairing(ssh_model):
    for L in (20, 40, 60):
        vals = obc_finite(ssh_model, L).values
        remaining = list(vals)
        while remaining:
            e = remaining.pop()
            j = int(np.argmin(np.abs(np.array(remaining) + e)))
            assert abs(remaining[j] + e) < 1e-8
            remaining.pop(j)


def test_obc_thermodynamic_standard_hn_is_real_segment(std_hn, sweep_cache):
    cp = char_poly(std_hn)
    gbz = gbz_extract(sweep_cache("std"), cp)
    sp = obc_thermodynamic(std_hn, gbz)
    assert np.max(np.abs(sp.values.imag)) < 1e-9
    assert sp.values.real.min() > -2.0 - 1e-9
    assert sp.values.real.max() < 2.0 + 1e-9


def test_obc_thermodynamic_hermitian_subset_of_pbc():
    # Hermitian chain: GBZ = BZ, so the thermodynamic values must lie in the
    # closure of the PBC spectrum, here the real segment [-2, 2].
    model = standard_hn(1.0, 1.0)
    from nhspectra import agbz_sample_theta

    pts = agbz_sample_theta(model, np.linspace(0, 2 * np.pi, 102)[1:-1])
    gbz = gbz_extract(pts, char_poly(model))
    thermo = obc_thermodynamic(model, gbz).values
    assert np.max(np.abs(thermo.imag)) < 1e-9
    assert thermo.real.min() >= -2.0 - 1e-9
    assert thermo.real.max() <= 2.0 + 1e-9


def test_triple_point_energy_in_both_spectra(preset_models, sweep_cache):
    from nhspectra import agbz_sample_theta

    model = preset_models[-0.5]
    pbc = pbc_spectrum(model, 1024)[0].energies()
    assert np.min(np.abs(pbc)) < 1e-12
    # default sweep: resolution-limited approach to E = 0
    gbz = gbz_extract(sweep_cache(-0.5), char_poly(model))
    thermo = obc_thermodynamic(model, gbz).values
    assert np.min(np.abs(thermo)) < 0.02
    # a sweep containing theta = 2 pi / 3 hits the triple point exactly
    pts = agbz_sample_theta(model, np.array([2 * np.pi / 3]))
    gbz = gbz_extract(pts, char_poly(model))
    thermo = obc_thermodynamic(model, gbz).values
    assert np.min(np.abs(thermo)) < 1e-9


def test_finite_size_convergence(preset_models, sweep_cache):
    for g in (-0.3, -0.5, -0.7):
        model = preset_models[g]
        thermo = obc_thermodynamic(
            model, gbz_extract(sweep_cache(g), char_poly(model))
        ).values
        dists = [
            hausdorff_distance(obc_finite(model, L).values, thermo)
            for L in (20, 40, 60)
        ]
        assert dists[0] >= dists[1] - 1e-3
        assert dists[1] >= dists[2] - 1e-3


def test_obc_thermodynamic_raw_beta_matches_stored_energy(ssh_model):
    from nhspectra import agbz_sample_theta

    pts = agbz_sample_theta(ssh_model, np.linspace(0, 2 * np.pi, 34)[1:-1])
    pts = gbz_extract(pts, char_poly(ssh_model))[:5]
    assert pts
    via_beta = obc_thermodynamic(ssh_model, [pt.beta for pt in pts])
    via_points = obc_thermodynamic(ssh_model, pts)
    # chiral pairing makes the energy sign at a raw beta ambiguous; compare
    # the moduli multisets
    assert np.allclose(
        sorted(np.abs(via_beta.values)), sorted(np.abs(via_points.values)),
        atol=1e-9,
    )


def test_obc_thermodynamic_requires_points(std_hn):
    with pytest.raises(ValueError):
        obc_thermodynamic(std_hn, [])
