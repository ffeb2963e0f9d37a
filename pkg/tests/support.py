"""Shared experiment setups for the test modules."""
import numpy as np

from multillum.measures import DiscreteMeasure
from multillum.operator import CameraGrid, ImageStack, adjoint_values, forward, general_decode, source_inner
from multillum.optics import IlluminationSequence, Psf

OMEGA = np.pi


def decoded_out_of_band(g1, g2, profile=None, slack_bins=2):
    """Relative spectral energy of a decoded point source outside the band W_psf + W_illu.

    A point source at 0.5 is imaged through a sinc PSF under a dense sweep
    of translated profiles; the decoded image on [-32, 32] is transformed by
    FFT and the energy beyond the band plus ``slack_bins`` bins is reported.
    """
    psf = Psf.sinc(OMEGA)
    profile = Psf.sinc(OMEGA) if profile is None else profile
    step = 0.9 * np.pi / (2 * profile.cutoff)
    seq = IlluminationSequence.profile_sweep(profile, np.arange(-64, 64 + 1e-9, step))
    camera = CameraGrid(48.0, 384)
    images = forward(DiscreteMeasure([0.5], [1.0]), seq, psf, camera)
    z = np.linspace(-32, 32, 1024, endpoint=False)
    decoded = general_decode(images, seq, psf, g1, g2, z)
    spec = np.fft.fftshift(np.fft.fft(decoded))
    xi = np.fft.fftshift(np.fft.fftfreq(len(z), d=z[1] - z[0])) * 2 * np.pi
    band = psf.cutoff + profile.cutoff + slack_bins * (xi[1] - xi[0])
    p = np.abs(spec) ** 2
    return float(p[np.abs(xi) > band].sum() / p.sum())


def random_triple(rng, kind):
    """Random source measure, pattern sequence of a given family, camera and image stack."""
    if kind == "plane":
        seq = IlluminationSequence.plane_waves(rng.uniform(1, 4), tuple(rng.choice([-1.0, 1.0], 3)))
    elif kind == "profile":
        seq = IlluminationSequence.profile_sweep(Psf.sinc(rng.uniform(1, 4)), rng.uniform(-3, 3, 5))
    else:
        seq = IlluminationSequence.constant(rng.uniform(0.5, 2), 2)
    n = rng.integers(1, 5)
    f = DiscreteMeasure(np.sort(rng.uniform(0, 1, n)) + np.arange(n) * 1e-6, rng.normal(size=n) + 1j * rng.normal(size=n))
    cam = CameraGrid(8.0, 200)
    g = ImageStack(rng.normal(size=(len(seq), 200)) + 1j * rng.normal(size=(len(seq), 200)), cam)
    return f, seq, cam, g


def duality_defect(f, seq, psf, cam, g):
    """``|<Af, g> - <f, A*g>| / (||Af|| ||g||)``."""
    Af = forward(f, seq, psf, cam)
    lhs = Af.inner(g)
    rhs = source_inner(f, adjoint_values(g, seq, psf, f.locations[:, 0]))
    return abs(lhs - rhs) / (Af.norm() * g.norm())
