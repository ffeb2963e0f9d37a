"""Effective PSF spectra of widefield, SIM and confocal-style acquisitions.

Prints the essential cutoffs of each modality for a sinc PSF with cutoff pi.
"""
import numpy as np

from multillum.optics import Psf
from multillum.spectral import ConstantFamily, PlaneWaveFamily, ProfileSweep, SharpPeak, essential_cutoffs, synthesize_psf_multi

psf = Psf.sinc(np.pi)
families = {
    "widefield": ConstantFamily(1.0),
    "sim": PlaneWaveFamily(np.pi),
    "confocal": ProfileSweep(Psf.sinc(np.pi)),
    "smlm (peak width 0.1)": SharpPeak(0.1),
}

print(f"{'modality':24s} {'omega_hat':>10s} {'omega_check':>12s} {'out-of-band':>12s}")
for name, fam in families.items():
    pm = synthesize_psf_multi(fam, psf)
    cut = essential_cutoffs(pm, 0.1 * pm.b_upper, 1e-3 * pm.b_upper)
    print(f"{name:24s} {cut.omega_hat:10.4f} {cut.omega_check:12.4f} {pm.out_of_band_energy():12.2e}")
