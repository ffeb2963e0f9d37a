"""Resolution limits of a confocal-style acquisition as the source count grows."""
import numpy as np

from multillum import limits as lim
from multillum.optics import Psf
from multillum.spectral import ProfileSweep, synthesize_psf_multi

pm = synthesize_psf_multi(ProfileSweep(Psf.sinc(np.pi)), Psf.sinc(np.pi)).with_exact_spectrum()
sigma = 1e-3 * pm.b_upper
rows = lim.limit_table(pm, range(2, 7), sigma, 1.0, 0.1 * pm.b_upper, c_supp=1.0, c_num=1.0)

cols = ["n", "location_lower", "location_upper", "number_lower", "number_upper", "cluster_spacing"]
print(" ".join(f"{c:>16s}" for c in cols))
for r in rows:
    print(" ".join(f"{r[c]:16.4g}" for c in cols))

im = np.array([[1.0, 0.5], [0.5, 1.0], [0.2, -0.3]])
inc = lim.illumination_incoherence(im)
print(f"\nincoherence of a 3x2 illumination matrix: {inc:.4f}")
print(f"unknown-pattern limit, n = 2: {lim.unknown_pattern_limit(2, 0.05, 1.0, np.pi, inc):.4f}")
