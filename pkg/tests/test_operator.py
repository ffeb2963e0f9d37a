import numpy as np
import pytest
from scipy import special

from multillum.measures import DiscreteMeasure, GridFunction, NoiseBound
from multillum.operator import (
    DECODE_MAPS,
    CameraGrid,
    ImageStack,
    SupportError,
    add_noise,
    adjoint,
    adjoint_values,
    discrete_kernel,
    forward,
    general_decode,
    imaging_kernel,
    quadrature_convergence,
)
from multillum.optics import IlluminationSequence, Psf, illumination_correlation, psf_autocorrelation

from oracles import sinc_autocorrelation
from support import decoded_out_of_band, duality_defect, random_triple

SINC = Psf.sinc(np.pi)


def test_forward_constant_illumination_is_shifted_psf():
    cam = CameraGrid(8.0, 256)
    img = forward(DiscreteMeasure([0.3], [1.0]), IlluminationSequence.constant(1.0), SINC, cam)
    assert np.allclose(img.data[0], SINC(cam.axis - 0.3))


def test_forward_plane_wave_modulates():
    cam = CameraGrid(8.0, 128)
    seq = IlluminationSequence.plane_waves(2.0, (1.0,))
    img = forward(DiscreteMeasure([0.4], [1.0]), seq, SINC, cam)
    assert np.allclose(img.data[0], np.exp(1j * 2.0 * 0.4) * SINC(cam.axis - 0.4))


def test_forward_superposition():
    cam = CameraGrid(8.0, 128)
    img = forward(DiscreteMeasure([0.2, 0.8], [1.0, 1.0]), IlluminationSequence.constant(1.0), SINC, cam)
    x = cam.axis
    assert np.allclose(img.data[0], SINC(x - 0.2) + SINC(x - 0.8))


def test_forward_support_violation():
    with pytest.raises(SupportError, match="support violation"):
        forward(DiscreteMeasure([1.2], [1.0]), IlluminationSequence.constant(1.0), SINC)


def test_forward_grid_source_matches_exact_integral():
    cam = CameraGrid(8.0, 64)
    src = GridFunction.on_box(0, 1, 201, lambda p: np.ones(len(p)))
    img = forward(src, IlluminationSequence.constant(1.0), Psf.gauss(0.5), cam)
    # integral over [0, 1] of exp(-(x-y)^2/0.5) dy in closed form; the grid rule is first order in h = 0.005
    x = cam.axis
    ref = 0.5 * np.sqrt(0.5 * np.pi) * (special.erf(x / np.sqrt(0.5)) - special.erf((x - 1) / np.sqrt(0.5)))
    assert np.abs(img.data[0].real - ref).max() < 2 * 0.005 * ref.max()


def test_adjoint_of_zero_is_zero():
    seq = IlluminationSequence.plane_waves(np.pi)
    cam = CameraGrid(8.0, 64)
    out = adjoint(ImageStack(np.zeros((2, 64)), cam), seq, SINC, np.linspace(0, 1, 11))
    assert np.all(out.values == 0)


def test_adjoint_frame_count_mismatch():
    seq = IlluminationSequence.plane_waves(np.pi)
    cam = CameraGrid(8.0, 64)
    with pytest.raises(ValueError):
        adjoint_values(ImageStack(np.zeros((3, 64)), cam), seq, SINC, [0.5])


@pytest.mark.parametrize("psf", [Psf.gauss(0.3), Psf.sinc2(np.pi)])
def test_adjoint_forward_matches_kernel(psf):
    seq = IlluminationSequence.plane_waves(np.pi)
    cam = CameraGrid(16.0, 2048)
    z = np.linspace(0, 1, 9)
    img = forward(DiscreteMeasure([0.35], [1.0]), seq, psf, cam)
    a_star = adjoint_values(img, seq, psf, z)
    G = imaging_kernel(seq, psf, z, [0.35], exact=psf.kind == "gauss").values[:, 0]
    assert np.abs(a_star - G).max() < 1e-4 * np.abs(G).max()


def test_duality_random_triples():
    rng = np.random.default_rng(11)
    worst = 0.0
    for i in range(30):
        f, seq, cam, g = random_triple(rng, ("plane", "profile", "constant")[i % 3])
        worst = max(worst, duality_defect(f, seq, Psf.sinc(np.pi), cam, g))
    assert worst < 1e-6


def test_sim_kernel_closed_form():
    seq = IlluminationSequence.plane_waves(np.pi)
    z = np.linspace(0, 1, 11)
    Z, Y = np.meshgrid(z, z, indexing="ij")
    G = imaging_kernel(seq, SINC, z, z).values
    assert np.allclose(G, np.cos(np.pi * (Z - Y)) * sinc_autocorrelation(np.pi, Z - Y), atol=1e-12)


def test_constant_kernel_is_psf_autocorrelation():
    z = np.linspace(0, 1, 6)
    Z, Y = np.meshgrid(z, z, indexing="ij")
    G = imaging_kernel(IlluminationSequence.constant(1.0), SINC, z, z).values
    assert np.allclose(G, sinc_autocorrelation(np.pi, Z - Y))


def test_kernel_diagonal_positive_and_hermitian():
    seq = IlluminationSequence.plane_waves(2.0, (1.0, -1.0, 1.0))
    z = np.linspace(0, 1, 13)
    K = imaging_kernel(seq, SINC, z, z)
    assert np.all(np.diag(K.values).real > 0)
    assert K.hermitian_defect() <= 1e-12


def test_kernel_factorization_matches_quadrature_product():
    seq = IlluminationSequence.profile_sweep(Psf.sinc(2.0), np.linspace(-3, 3, 13))
    psf = Psf.sinc2(np.pi)
    z = np.linspace(0, 1, 11)
    K = imaging_kernel(seq, psf, z, z, exact=False).values
    lag = np.linspace(-1, 1, 21)
    ac = psf_autocorrelation(psf, lag)
    Z, Y = np.meshgrid(z, z, indexing="ij")
    idx = np.rint((Z - Y + 1) / 0.1).astype(int)
    ref = illumination_correlation(seq, Z, Y) * ac.values[idx]
    assert np.abs(K - ref).max() <= 1e-10 * np.abs(ref).max()


def test_kernel_direct_path_agrees():
    seq = IlluminationSequence.plane_waves(np.pi)
    z = np.linspace(0, 1, 5)
    fact = imaging_kernel(seq, Psf.gauss(0.3), z, z).values
    direct = imaging_kernel(seq, Psf.gauss(0.3), z, z, method="direct").values
    assert np.abs(fact - direct).max() < 1e-6 * np.abs(fact).max()


def test_discrete_kernel_converges_to_continuous():
    seq = IlluminationSequence.plane_waves(np.pi)
    psf = Psf.gauss(0.3)
    z = np.linspace(0, 1, 6)
    R = 8.0
    W = discrete_kernel(seq, psf, z, z, 8192, R).values
    G = imaging_kernel(seq, psf, z, z).values
    assert np.abs(2 * R * W - G).max() < 1e-3 * np.abs(G).max()


def test_discrete_kernel_minimal_and_positive():
    seq = IlluminationSequence.constant(1.0)
    W = discrete_kernel(seq, SINC, [0.2, 0.7], [0.2, 0.7], 2, 1.0).values
    assert np.all(np.diag(W).real > 0)
    with pytest.raises(ValueError):
        discrete_kernel(seq, SINC, [0.2], [0.2], 1, 1.0)


def test_quadrature_rate_first_order():
    seq = IlluminationSequence.plane_waves(np.pi)
    z = np.linspace(0, 1, 5)
    study = quadrature_convergence(seq, Psf.sinc(0.02), z, z, R=8)
    assert -1.2 <= study.slope <= -0.8


def test_quadrature_error_decreases_with_window_for_concentrated_psf():
    # for a PSF narrower than the window the boundary terms decay with R, so the
    # error constant does not grow linearly; it still follows the 1/M rate
    seq = IlluminationSequence.plane_waves(np.pi)
    z = np.linspace(0, 1, 5)
    a = quadrature_convergence(seq, SINC, z, z, R=8)
    b = quadrature_convergence(seq, SINC, z, z, R=16)
    assert -1.2 <= a.slope <= -0.8
    assert b.constant < a.constant


def test_general_decode_reduces_to_adjoint():
    seq = IlluminationSequence.plane_waves(np.pi)
    cam = CameraGrid(8.0, 256)
    f = DiscreteMeasure([0.3, 0.6], [1.0, 0.5])
    img = forward(f, seq, SINC, cam)
    z = np.linspace(0, 1, 7)
    ref = adjoint_values(img, seq, SINC, z)
    assert np.allclose(general_decode(img, seq, SINC, np.conj, lambda v: v, z), ref)
    assert np.allclose(general_decode(img, seq, SINC, np.conj, np.conj, z), ref)
    real_seq = IlluminationSequence.profile_sweep(Psf.sinc(2.0), np.linspace(-2, 2, 9))
    img2 = forward(f, real_seq, SINC, cam)
    assert np.allclose(general_decode(img2, real_seq, SINC, lambda v: v, lambda v: v, z),
                       adjoint_values(img2, real_seq, SINC, z))


def test_general_decode_overflow():
    seq = IlluminationSequence.constant(1.0)
    cam = CameraGrid(8.0, 64)
    img = forward(DiscreteMeasure([0.5], [1.0]), seq, SINC, cam)
    with pytest.raises(FloatingPointError):
        general_decode(img, seq, SINC, lambda v: np.exp(1e4 * v.real), lambda v: v, [0.5])


@pytest.mark.parametrize("name", ["identity", "conj", "cube", "clamp"])
def test_decode_spectral_confinement(name):
    g = DECODE_MAPS[name]
    assert decoded_out_of_band(g, DECODE_MAPS["identity"]) < 1e-3


def test_noise_zero_sigma_is_identity():
    cam = CameraGrid(8.0, 64)
    img = ImageStack(np.ones((2, 64)), cam)
    assert add_noise(img, NoiseBound(0.0)) is img


def test_uniform_noise_respects_l1_bound():
    cam = CameraGrid(8.0, 128)
    img = ImageStack(np.zeros((4, 128)), cam)
    noisy = add_noise(img, NoiseBound(0.02), rng=np.random.default_rng(3))
    l1 = noisy.l1_norms()
    assert np.all(l1 <= 0.02)
    assert np.all(l1 > 0.02 * (1 - 1e-9))


def test_worst_case_sine_spectrum_bounded():
    cam = CameraGrid(8.0, 512)
    img = ImageStack(np.zeros((1, 512)), cam)
    noisy = add_noise(img, NoiseBound(0.01), mode="worst_case_sine", frequency=3.0)
    x = cam.axis
    xi = np.linspace(0, 10, 1001)
    dft = np.abs(np.exp(1j * np.outer(xi, x)) @ noisy.data[0]) * cam.step
    assert dft.max() <= 0.01
    assert abs(xi[np.argmax(dft)] - 3.0) < 0.05
