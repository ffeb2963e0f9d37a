import time

import numpy as np
import pytest

from multillum.measures import DiscreteMeasure
from multillum.optics import Psf
from multillum.spectral import (
    ConstantFamily,
    CutoffError,
    NyquistError,
    PlaneWaveFamily,
    ProfileSweep,
    SharpPeak,
    affine_degradation_sweep,
    bandpass_deconvolve,
    dft_grids,
    essential_cutoffs,
    fit_affine,
    omega_check,
    synthesize_psf_multi,
    verify_frequency_stability,
    verify_perturbed_patterns,
)

from oracles import confocal_triangle, sim_spectrum

SINC = Psf.sinc(np.pi)
SOURCES = DiscreteMeasure([0.3, 0.55, 0.7], [1.0, 0.8, 1.3])


@pytest.fixture(scope="module")
def sim_pm():
    return synthesize_psf_multi(PlaneWaveFamily(np.pi), SINC)


@pytest.fixture(scope="module")
def confocal_pm():
    return synthesize_psf_multi(ProfileSweep(Psf.sinc(np.pi)), SINC)


def test_sim_band_doubling(sim_pm):
    assert sim_pm.out_of_band_energy(2 * np.pi) < 1e-3
    cut = essential_cutoffs(sim_pm, 0.1 * sim_pm.b_upper, 1e-3 * sim_pm.b_upper)
    assert cut.omega_hat == pytest.approx(2 * np.pi, rel=0.02)


def test_sim_spectrum_matches_closed_form(sim_pm):
    xi = sim_pm.xi
    inner = np.abs(np.abs(np.abs(xi) - np.pi) - np.pi) > 0.2  # away from the jumps at 0 and +-2 pi
    inner &= np.abs(xi) > 0.2
    err = np.abs(sim_pm.spectrum - sim_spectrum(np.pi, xi))[inner]
    assert err.max() < 0.05 * np.pi**2 / 2
    assert sim_pm.b_upper == pytest.approx(np.pi**2 / 2, rel=0.1)


def test_confocal_triangle(confocal_pm):
    ref = confocal_triangle(np.pi, confocal_pm.xi)
    band = np.abs(confocal_pm.xi) <= 2 * np.pi
    err = np.abs(np.abs(confocal_pm.spectrum) - ref)[band].max()
    assert err < 1e-2 * ref.max()


def test_constant_family_is_psf_autocorrelation_spectrum():
    pm = synthesize_psf_multi(ConstantFamily(1.0), SINC)
    inside = np.abs(pm.xi) < np.pi - 0.2
    assert np.allclose(pm.spectrum[inside].real, np.pi**2, rtol=0.02)
    assert pm.omega_illu == 0


def test_exact_spectrum_replacement(confocal_pm):
    ex = confocal_pm.with_exact_spectrum()
    assert np.allclose(ex.spectrum.real, confocal_triangle(np.pi, ex.xi))
    assert ex.omega_multi == confocal_pm.omega_multi
    with pytest.raises(ValueError):
        synthesize_psf_multi(SharpPeak(0.1), SINC).with_exact_spectrum()


def test_gauss_closed_form_matches_dft():
    pm = synthesize_psf_multi(SharpPeak(0.2), Psf.gauss(0.4))
    assert np.allclose(pm.spectrum, pm.exact(pm.xi), atol=1e-9 * pm.b_upper)


def test_synthesis_runtime():
    t0 = time.perf_counter()
    synthesize_psf_multi(PlaneWaveFamily(np.pi), SINC, n_bins=4096)
    assert time.perf_counter() - t0 < 5.0


def test_dft_roundtrip(sim_pm):
    assert np.allclose(sim_pm.profile_from_spectrum(), sim_pm.profile, atol=1e-10 * np.abs(sim_pm.profile).max())


def test_parseval(sim_pm):
    du = sim_pm.lag[1] - sim_pm.lag[0]
    lhs = np.sum(np.abs(sim_pm.profile) ** 2) * du
    rhs = np.sum(np.abs(sim_pm.spectrum) ** 2) * sim_pm.dxi / (2 * np.pi)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_triangle_cutoffs_by_hand():
    # |spectrum| = (2 - |xi|)_+ on a fine grid: b = 0.5 -> omega_hat = 1.5, eps = 0.25 -> omega_check = 1.75
    lag, xi = dft_grids(1024, np.pi / 16)
    pm = synthesize_psf_multi(ConstantFamily(1.0), Psf.sinc(1.0), lag_grid=lag)
    pm = type(pm)(pm.lag, pm.profile, xi, np.clip(2 - np.abs(xi), 0, None).astype(complex), 1.0, 1.0)
    cut = essential_cutoffs(pm, 0.5, 0.25)
    assert cut.omega_hat == pytest.approx(1.5, abs=1e-9)
    assert cut.omega_check == pytest.approx(1.75, abs=1e-9)
    assert cut.check_resolved
    with pytest.raises(CutoffError, match="threshold exceeds peak"):
        essential_cutoffs(pm, 3.0, 0.1)
    assert omega_check(pm, 5.0) == (0.0, True)
    with pytest.raises(CutoffError):
        omega_check(pm, 0.0)


def test_nyquist_violation():
    lag = (np.arange(64) - 32) * 0.6
    with pytest.raises(NyquistError, match="Nyquist violation"):
        synthesize_psf_multi(PlaneWaveFamily(np.pi), SINC, lag_grid=lag)


def test_cutoffs_grow_with_narrower_peak():
    hats = []
    for w in (0.4, 0.2, 0.1):
        pm = synthesize_psf_multi(SharpPeak(w), SINC)
        hats.append(essential_cutoffs(pm, 0.1 * pm.b_upper, 1e-3 * pm.b_upper).omega_check)
    assert hats[0] < hats[1] < hats[2]


def test_bandpass_deconvolve_recovers_measure(confocal_pm):
    psi = confocal_pm.spectrum * SOURCES.fourier(confocal_pm.xi)
    b = 0.1 * confocal_pm.b_upper
    rec = bandpass_deconvolve(psi, confocal_pm, b)
    keep = ~rec.mask
    assert np.allclose(rec.data[keep], SOURCES.fourier(confocal_pm.xi[keep]))
    assert np.all(np.abs(confocal_pm.spectrum[rec.mask]) <= b)
    with pytest.raises(CutoffError):
        bandpass_deconvolve(psi, confocal_pm, 10 * confocal_pm.b_upper)


@pytest.fixture(scope="module")
def sim_setup(sim_pm):
    return dict(f=SOURCES, seq=PlaneWaveFamily(np.pi).sequence(), psf=SINC, pm=sim_pm)


def test_stability_zero_noise_is_exact(sim_setup):
    rep = verify_frequency_stability(sim_setup["f"], sim_setup["seq"], SINC, 0.0, trials=3, pm=sim_setup["pm"])
    assert np.all(rep.errors == 0)


def test_stability_halving_noise(sim_setup):
    s = sim_setup
    a = verify_frequency_stability(s["f"], s["seq"], SINC, 1e-2, trials=20, pm=s["pm"])
    b = verify_frequency_stability(s["f"], s["seq"], SINC, 5e-3, trials=20, pm=s["pm"])
    assert 0.4 <= b.max_error / a.max_error <= 0.6
    assert a.spread < 3
    assert np.all(a.constants > 0)


def test_zero_pattern_error_is_bit_identical(sim_setup):
    s = sim_setup
    a = verify_frequency_stability(s["f"], s["seq"], SINC, 1e-2, trials=4, pm=s["pm"], seed=5)
    b = verify_perturbed_patterns(s["f"], s["seq"], 0.0, SINC, 1e-2, 4, pm=s["pm"], seed=5)
    assert np.array_equal(a.errors, b.errors)


def test_pattern_error_scales_linearly(sim_setup):
    s = sim_setup
    e1 = verify_perturbed_patterns(s["f"], s["seq"], 1e-3, SINC, 0.0, 3, pm=s["pm"], seed=2).errors
    e2 = verify_perturbed_patterns(s["f"], s["seq"], 2e-3, SINC, 0.0, 3, pm=s["pm"], seed=2).errors
    assert np.allclose(e2, 2 * e1, rtol=1e-9)


def test_fit_affine_recovers_coefficients():
    s = np.array([1e-3, 2e-3, 0.0, 1e-3])
    e = np.array([0.0, 1e-3, 1e-3, 2e-3])
    fit = fit_affine(s, e, 3 * s + 0.5 * e)
    assert fit.a == pytest.approx(3)
    assert fit.b == pytest.approx(0.5)
    with pytest.raises(ValueError):
        fit_affine([1.0], [0.0], [0.0])


def test_affine_degradation(sim_setup):
    s = sim_setup
    fit = affine_degradation_sweep(s["f"], s["seq"], SINC, [0.0, 5e-3, 1e-2], [0.0, 5e-3, 1e-2], trials=5,
                                   pm=s["pm"])
    assert fit.a >= 0 and fit.b >= 0
    assert fit.relative_residual.max() < 0.2
