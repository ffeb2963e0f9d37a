"""Effective PSF of multi-illumination imaging, its spectrum and stability audits.

When the illumination correlation depends only on ``u = z - y``, the
kernel of ``A*A`` is a convolution kernel ``psf_multi(u) = f_ilf(u) f_psf(u)``,
the product of the illumination correlation and the PSF autocorrelation.
Its spectrum is supported, up to tails, in ``[-(W_psf + W_illu), W_psf + W_illu]``.

All transforms use ``F[h](xi) = integral h(u) exp(+i xi u) du``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import optimize

from .measures import DiscreteMeasure, NoiseBound, fourier_of_measure
from .operator import CameraGrid, ImageStack, adjoint_values, forward, noise_stack
from .optics import (Composite, Constant, IlluminationSequence, PlaneWave, Psf, TranslatedProfile,
                     psf_autocorrelation_values, psf_values)

DEFAULT_BINS = 4096
DEFAULT_SPAN = 4.0
# relative spectral energy allowed outside the nominal band
BAND_AUDIT_TOL = 1e-3


class NyquistError(ValueError):
    pass


class CutoffError(ValueError):
    pass


# -- illumination families ---------------------------------------------------------


@dataclass(frozen=True)
class PlaneWaveFamily:
    """Plane waves ``exp(i W d_q y)`` with unit directions ``d_q`` (1D: +1 or -1)."""

    frequency: float
    directions: tuple = (1.0, -1.0)
    label: str = "plane_waves"

    @property
    def cutoff(self) -> float:
        return abs(self.frequency)

    def correlation(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        d = np.asarray(self.directions, dtype=float)
        return np.mean(np.exp(-1j * self.frequency * d[:, None] * u.reshape(-1)[None, :]), axis=0).reshape(u.shape)

    def correlation_spectrum_shifts(self):
        """Frequencies at which the correlation places its delta masses, with weight 1/N each."""
        return self.frequency * np.asarray(self.directions, dtype=float)

    def sequence(self) -> IlluminationSequence:
        return IlluminationSequence.plane_waves(self.frequency, self.directions)


@dataclass(frozen=True)
class ProfileSweep:
    """A profile translated continuously over the line; correlation is its autocorrelation."""

    profile: Psf
    label: str = "translated_profile"

    @property
    def cutoff(self) -> float:
        return self.profile.cutoff

    def correlation(self, u) -> np.ndarray:
        return psf_autocorrelation_values(self.profile, u).astype(complex)

    def sequence(self, centers) -> IlluminationSequence:
        return IlluminationSequence.profile_sweep(self.profile, centers)


@dataclass(frozen=True)
class CompositeSweep:
    """Translated composites ``sum_l b_l IP(y - t - c_l)`` swept over t."""

    profile: Psf
    weights: tuple
    offsets: tuple
    label: str = "composite"

    def __post_init__(self):
        if len(self.weights) != len(self.offsets) or len(self.weights) == 0:
            raise ValueError("composite needs matching, nonempty weights and offsets")

    @property
    def cutoff(self) -> float:
        return self.profile.cutoff

    def correlation(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        b = np.asarray(self.weights, dtype=complex)
        c = np.asarray(self.offsets, dtype=float)
        out = np.zeros(u.shape, dtype=complex)
        for l in range(len(b)):
            for m in range(len(b)):
                out += np.conj(b[l]) * b[m] * psf_autocorrelation_values(self.profile, u - c[l] + c[m])
        return out

    def sequence(self, centers) -> IlluminationSequence:
        return IlluminationSequence(tuple(
            Composite(self.profile, self.weights, tuple(t + np.asarray(self.offsets))) for t in np.atleast_1d(centers)))


class SharpPeak(ProfileSweep):
    """Unit-mass Gaussian peak of the given width, a smooth stand-in for a delta illumination."""

    def __init__(self, width: float):
        if not width > 0:
            raise ValueError("peak width must be positive")
        prof = Psf.gauss(width, amplitude=1 / (width * np.sqrt(2 * np.pi)))
        super().__init__(prof, "sharp_peak")
        object.__setattr__(self, "width", float(width))


@dataclass(frozen=True)
class ConstantFamily:
    level: complex = 1.0
    label: str = "constant"

    @property
    def cutoff(self) -> float:
        return 0.0

    def correlation(self, u) -> np.ndarray:
        return np.full(np.shape(u), abs(self.level) ** 2, dtype=complex)

    def sequence(self) -> IlluminationSequence:
        return IlluminationSequence.constant(self.level)


def family_of(seq: IlluminationSequence):
    """Recognize the translation-invariant family a sequence samples, or raise."""
    pats = seq.patterns
    if all(isinstance(p, PlaneWave) for p in pats) and len({p.frequency for p in pats}) == 1:
        return PlaneWaveFamily(pats[0].frequency, tuple(p.direction[0] for p in pats))
    if all(isinstance(p, TranslatedProfile) for p in pats) and len({p.profile for p in pats}) == 1:
        return ProfileSweep(pats[0].profile)
    if all(isinstance(p, Constant) for p in pats) and len({p.level for p in pats}) == 1:
        return ConstantFamily(pats[0].level)
    raise ValueError("illumination sequence is not a recognized translation-invariant family")


def _sinc_overlap(W1, W2, xi):
    # length of [-W1, W1] intersected with [xi - W2, xi + W2]
    xi = np.abs(xi)
    return np.clip(np.minimum(W1, xi + W2) - np.maximum(-W1, xi - W2), 0, None)


def analytic_spectrum(family, psf: Psf) -> Callable | None:
    """Closed-form spectrum of ``psf_multi`` for the cases where one is available."""
    if psf.spectrum(0.0) is None:
        return None
    otf2 = lambda xi: psf.spectrum(xi) ** 2  # transform of the PSF autocorrelation
    if isinstance(family, PlaneWaveFamily):
        shifts = family.correlation_spectrum_shifts()
        return lambda xi: np.mean([otf2(np.asarray(xi, dtype=float) - s) for s in shifts], axis=0).astype(complex)
    if isinstance(family, ConstantFamily):
        return lambda xi: abs(family.level) ** 2 * otf2(xi).astype(complex)
    if isinstance(family, ProfileSweep) and not isinstance(family, CompositeSweep):
        ip = family.profile
        if ip.kind == psf.kind == "sinc":
            k = (np.pi * ip.amplitude) ** 2 * (np.pi * psf.amplitude) ** 2 / (2 * np.pi)
            return lambda xi: k * _sinc_overlap(ip.scale, psf.scale, np.asarray(xi, dtype=float)).astype(complex)
        if ip.kind == psf.kind == "gauss":
            # |F[ip]|^2 and |F[psf]|^2 are Gaussians; their convolution is again Gaussian
            a1 = (ip.amplitude * ip.scale * np.sqrt(2 * np.pi)) ** 2
            a2 = (psf.amplitude * psf.scale * np.sqrt(2 * np.pi)) ** 2
            v1, v2 = 1 / (2 * ip.scale**2), 1 / (2 * psf.scale**2)  # variances of the squared spectra
            v = v1 + v2
            c = a1 * a2 * np.sqrt(2 * np.pi * v1 * v2 / v) / (2 * np.pi)
            return lambda xi: (c * np.exp(-np.asarray(xi, dtype=float) ** 2 / (2 * v))).astype(complex)
    return None


# -- PSF_multi -----------------------------------------------------------------------


@dataclass(frozen=True)
class PsfMulti:
    """Sampled effective PSF and its spectrum on the reciprocal DFT grid.

    ``lag`` and ``xi`` are centered grids of equal length ``n`` with
    ``dxi = 2 pi / (n du)``; ``spectrum[m] = du * sum_k profile[k] exp(i xi_m lag_k)``.
    """

    lag: np.ndarray
    profile: np.ndarray
    xi: np.ndarray
    spectrum: np.ndarray
    omega_psf: float
    omega_illu: float
    label: str = ""
    exact: Callable | None = field(default=None, compare=False, repr=False)

    @property
    def omega_multi(self) -> float:
        return self.omega_psf + self.omega_illu

    @property
    def b_upper(self) -> float:
        return float(np.abs(self.spectrum).max())

    @property
    def dxi(self) -> float:
        return float(self.xi[1] - self.xi[0])

    def spectrum_at(self, xi, exact: bool = False) -> np.ndarray:
        """Spectrum at arbitrary frequencies; linear interpolation, zero outside the grid."""
        xi = np.asarray(xi, dtype=float)
        if exact and self.exact is not None:
            return self.exact(xi)
        re = np.interp(xi, self.xi, self.spectrum.real, left=0.0, right=0.0)
        im = np.interp(xi, self.xi, self.spectrum.imag, left=0.0, right=0.0)
        return re + 1j * im

    def out_of_band_energy(self, band: float | None = None) -> float:
        """Fraction of ``sum |spectrum|^2`` carried by ``|xi| > band`` (default ``omega_multi``)."""
        band = self.omega_multi if band is None else band
        p = np.abs(self.spectrum) ** 2
        return float(p[np.abs(self.xi) > band].sum() / p.sum())

    def with_exact_spectrum(self) -> "PsfMulti":
        """Copy whose sampled spectrum is replaced by the closed form on the same grid."""
        if self.exact is None:
            raise ValueError("no closed-form spectrum for this PsfMulti")
        return replace(self, spectrum=np.asarray(self.exact(self.xi), dtype=complex))

    def profile_from_spectrum(self) -> np.ndarray:
        """Invert the DFT: recovers the sampled profile."""
        n = len(self.lag)
        du = self.lag[1] - self.lag[0]
        return np.fft.fftshift(np.fft.fft(np.fft.ifftshift(self.spectrum))) / (n * du)


def dft_grids(n: int, du: float):
    """Centered lag grid with step ``du`` and its reciprocal frequency grid."""
    k = np.arange(n) - n // 2
    return k * du, k * (2 * np.pi / (n * du))


def _dft(profile: np.ndarray, du: float) -> np.ndarray:
    # du * sum_k p(u_k) exp(+i xi_m u_k) on centered grids
    n = len(profile)
    return np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(profile))) * n * du


def synthesize_psf_multi(family, psf: Psf, lag_grid=None, n_bins: int = DEFAULT_BINS,
                         span: float = DEFAULT_SPAN) -> PsfMulti:
    """Sample ``psf_multi = f_ilf * f_psf`` on a lag grid and take its DFT.

    By default the lag grid has ``n_bins`` points and a step chosen so that the
    frequency grid spans ``+-span * (W_psf + W_illu)``.

    Raises
    ------
    NyquistError
        If a supplied lag grid is too coarse to resolve ``W_psf + W_illu``.
    """
    if psf.dim != 1:
        raise ValueError("spectral synthesis is one-dimensional")
    omega_multi = psf.cutoff + family.cutoff
    if lag_grid is None:
        du = np.pi / (span * omega_multi)
        lag, xi = dft_grids(n_bins, du)
    else:
        lag = np.asarray(lag_grid, dtype=float)
        if lag.ndim != 1 or len(lag) < 4:
            raise ValueError("lag grid must be a 1D array of at least 4 points")
        steps = np.diff(lag)
        du = float(steps[0])
        if not np.allclose(steps, du, rtol=1e-9):
            raise ValueError("lag grid must be uniform")
        if du >= np.pi / omega_multi:
            raise NyquistError(
                f"Nyquist violation: lag step {du:.4g} cannot resolve frequency {omega_multi:.4g} "
                f"(need step < {np.pi / omega_multi:.4g})")
        n = len(lag)
        if not np.isclose(lag[n // 2], 0.0, atol=1e-9 * du):
            raise ValueError("lag grid must be centered with 0 at index n // 2")
        _, xi = dft_grids(n, du)
    profile = family.correlation(lag) * psf_autocorrelation_values(psf, lag)
    spec = _dft(profile, du)
    return PsfMulti(lag, profile, xi, spec, psf.cutoff, family.cutoff, getattr(family, "label", ""),
                    analytic_spectrum(family, psf))


# -- cutoffs and deconvolution ----------------------------------------------------------


@dataclass(frozen=True)
class CutoffReport:
    b_lower: float
    omega_hat: float
    eps: float
    omega_check: float
    b_upper: float
    check_resolved: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def _crossing(x0, x1, v0, v1, level):
    # linear interpolation of the abscissa where v crosses level between two samples
    if v1 == v0:
        return x1
    return x0 + (level - v0) * (x1 - x0) / (v1 - v0)


def _sides(pm: PsfMulti):
    mag = np.abs(pm.spectrum)
    c = int(np.argmin(np.abs(pm.xi)))
    return [(pm.xi[c:], mag[c:]), (-pm.xi[c::-1], mag[c::-1])]


def _outer_radius(sides, eps):
    # smallest radius beyond which every sample is below eps; False if that is the grid edge
    checks = []
    resolved = True
    for r, m in sides:
        big = np.nonzero(m >= eps)[0]
        if len(big) == 0:
            checks.append(0.0)
        elif big[-1] == len(m) - 1:
            checks.append(r[-1])
            resolved = False
        else:
            k = big[-1]
            checks.append(_crossing(r[k], r[k + 1], m[k], m[k + 1], eps))
    return float(max(checks)), resolved


def omega_check(pm: PsfMulti, eps: float) -> tuple[float, bool]:
    """Radius beyond which ``|F[psf_multi]| < eps``, and whether it lies inside the grid."""
    if not eps > 0:
        raise CutoffError("threshold must be positive")
    return _outer_radius(_sides(pm), eps)


def essential_cutoffs(pm: PsfMulti, b_lower: float, eps: float) -> CutoffReport:
    """Radius inside which ``|F[psf_multi]| > b_lower`` and beyond which it is ``< eps``.

    Both radii are located on the DFT grid and refined by linear interpolation
    between the bracketing samples.

    Raises
    ------
    CutoffError
        ``threshold exceeds peak`` if ``b_lower`` is above the spectral maximum.
    """
    if not (b_lower > 0 and eps > 0):
        raise CutoffError("thresholds must be positive")
    mag = np.abs(pm.spectrum)
    b_upper = float(mag.max())
    if b_lower > b_upper:
        raise CutoffError(f"threshold exceeds peak: b_lower={b_lower:.4g} > max |spectrum|={b_upper:.4g}")
    sides = _sides(pm)
    hats = []
    for r, m in sides:
        bad = np.nonzero(m <= b_lower)[0]
        if len(bad) == 0:
            hats.append(r[-1])
        elif bad[0] == 0:
            hats.append(0.0)
        else:
            k = bad[0]
            hats.append(_crossing(r[k - 1], r[k], m[k - 1], m[k], b_lower))
    check, resolved = _outer_radius(sides, eps)
    return CutoffReport(float(b_lower), float(min(hats)), float(eps), check, b_upper, resolved)


def bandpass_deconvolve(psi, pm: PsfMulti, b_lower: float) -> np.ma.MaskedArray:
    """Divide a measured spectrum by ``F[psf_multi]`` where the latter exceeds ``b_lower``.

    Bins at or below the threshold are masked.
    """
    psi = np.asarray(psi)
    if psi.shape != pm.spectrum.shape:
        raise ValueError("measured spectrum must be sampled on the PsfMulti frequency grid")
    keep = np.abs(pm.spectrum) > b_lower
    if not np.any(keep):
        raise CutoffError("no usable bandpass above the threshold")
    out = np.zeros_like(psi, dtype=complex)
    out[keep] = psi[keep] / pm.spectrum[keep]
    return np.ma.masked_array(out, mask=~keep)


# -- stability audits --------------------------------------------------------------------


def adjoint_spectrum(images: ImageStack, seq: IlluminationSequence, psf: Psf, xi,
                     y_step: float | None = None) -> np.ndarray:
    """Fourier transform of ``A*g`` at frequencies ``xi`` (1D).

    For plane-wave patterns and a PSF with a closed-form spectrum this is
    evaluated exactly in the source variable:
    ``(1/N) sum_q F[PSF](xi - W d_q) sum_x g_q(x) exp(i (xi - W d_q) x) dx``.
    Otherwise ``A*g`` is sampled over the camera window and summed.
    """
    xi = np.asarray(xi, dtype=float)
    x = images.camera.points()
    dx = images.camera.pixel_area
    if all(isinstance(p, PlaneWave) for p in seq.patterns) and psf.spectrum(0.0) is not None:
        out = np.zeros(xi.shape, dtype=complex)
        for q, p in enumerate(seq.patterns):
            eta = xi - p.frequency * p.direction[0]
            out += psf.spectrum(eta) * (np.exp(1j * np.outer(eta, x)) @ images.data[q]) * dx
        return out / len(seq)
    R = images.camera.half_width
    if y_step is None:
        y_step = np.pi / (4 * (psf.cutoff + seq.cutoff))
    m = int(np.ceil(2 * R / y_step))
    y = -R + (np.arange(m) + 0.5) * (2 * R / m)
    vals = adjoint_values(images, seq, psf, y)
    return (np.exp(1j * np.outer(xi, y)) @ vals) * (2 * R / m)


def _audit_frequencies(pm: PsfMulti, b_lower: float, max_points: int) -> np.ndarray:
    keep = np.abs(pm.spectrum) > b_lower
    xi = pm.xi[keep]
    if len(xi) > max_points:
        xi = xi[np.linspace(0, len(xi) - 1, max_points).round().astype(int)]
    return xi


@dataclass
class StabilityReport:
    """Empirical constants ``sup_band |F[g - f]| |F[psf_multi]| / sigma`` per trial."""

    sigma: float
    eps: float
    trials: int
    errors: np.ndarray
    omega_hat: float
    omega_check: float
    b_upper: float
    b_lower: float
    pipeline_error: float

    @property
    def constants(self) -> np.ndarray:
        if self.sigma == 0:
            return np.zeros_like(self.errors)
        return self.errors / self.sigma

    @property
    def empirical_constant(self) -> float:
        return float(self.constants.max())

    @property
    def max_error(self) -> float:
        return float(self.errors.max())

    @property
    def spread(self) -> float:
        c = self.constants
        return float(c.max() / c.min()) if c.min() > 0 else np.inf

    def to_dict(self) -> dict:
        return {
            "empirical_constant": self.empirical_constant,
            "trials": self.trials,
            "sigma": self.sigma,
            "eps": self.eps,
            "omega_hat": self.omega_hat,
            "omega_check": self.omega_check,
            "b_upper": self.b_upper,
            "b_lower": self.b_lower,
            "max_weighted_error": self.max_error,
            "spread": self.spread if np.isfinite(self.spread) else None,
            "pipeline_error": self.pipeline_error,
            "per_trial": self.errors.tolist(),
        }


def random_pattern_error(n_patterns: int, eps: float, rng: np.random.Generator, modes: int = 6):
    """Smooth complex perturbations supported on [0, 1] with L1 norm ``eps`` each.

    Returns a function ``e(y)`` of shape ``(n_patterns,) + y.shape``.
    """
    coef = rng.standard_normal((n_patterns, modes)) + 1j * rng.standard_normal((n_patterns, modes))
    k = np.arange(1, modes + 1)
    fine = (np.arange(4096) + 0.5) / 4096
    base = np.sin(np.pi * np.outer(fine, k)) @ coef.T  # (4096, N)
    l1 = np.abs(base).mean(axis=0)
    coef = coef * (eps / l1)[:, None]

    def err(y):
        y = np.asarray(y, dtype=float)
        inside = (y >= 0) & (y <= 1)
        vals = np.sin(np.pi * y.reshape(-1, 1) * k[None, :]) @ coef.T  # (n, N)
        vals[~inside.reshape(-1)] = 0
        return vals.T.reshape((n_patterns,) + y.shape)

    return err


def _pattern_error_spectrum(images: ImageStack, psf: Psf, err: Callable, xi, n_z: int = 512) -> np.ndarray:
    # F[E* g](xi) with E* g(z) = (1/N) sum_q conj(e_q(z)) integral PSF(x - z) g_q(x) dx, z in [0, 1]
    z = (np.arange(n_z) + 0.5) / n_z
    K = psf_values(psf, images.camera.points()[:, None] - z[None, :])
    proj = images.flat() @ K * images.camera.pixel_area
    vals = np.mean(np.conj(err(z)) * proj, axis=0)
    return (np.exp(1j * np.outer(xi, z)) @ vals) / n_z


def _stability_setup(f, seq, psf, pm, b_lower_rel, eps_check, camera):
    if pm is None:
        pm = synthesize_psf_multi(family_of(seq), psf)
    b_lower = b_lower_rel * pm.b_upper
    cut = essential_cutoffs(pm, b_lower, eps_check * pm.b_upper)
    camera = CameraGrid.for_psf(psf) if camera is None else camera
    return pm, b_lower, cut, camera


def verify_perturbed_patterns(f: DiscreteMeasure, seq: IlluminationSequence, eps: float, psf: Psf,
                              sigma: NoiseBound | float, trials: int = 20, pm: PsfMulti | None = None,
                              b_lower_rel: float = 0.1, camera: CameraGrid | None = None,
                              mode: str = "uniform_bounded", seed: int = 0, max_freqs: int = 1024,
                              eps_check: float = 1e-3) -> StabilityReport:
    """Reconstruct with estimated patterns ``I_q + e_q`` and measure the bandpass error.

    Data ``h = Af + noise`` are decoded with the adjoint of the perturbed
    operator; the weighted error ``|F[g - f]| |F[psf_multi]|`` equals
    ``|F[A_est* h] - F[A*A f]|`` on the band. The noiseless term is computed by
    the same discretized pipeline so that camera-window truncation cancels.
    Trial ``i`` draws noise and pattern errors from ``default_rng(seed ^ i)``.
    """
    sigma = sigma if isinstance(sigma, NoiseBound) else NoiseBound(float(sigma))
    if eps < 0:
        raise ValueError("pattern error level must be nonnegative")
    pm, b_lower, cut, camera = _stability_setup(f, seq, psf, pm, b_lower_rel, eps_check, camera)
    xi = _audit_frequencies(pm, b_lower, max_freqs)
    clean = forward(f, seq, psf, camera)
    ref = adjoint_spectrum(clean, seq, psf, xi)
    S = pm.spectrum_at(xi, exact=True)
    pipeline_error = float(np.abs(ref / S - fourier_of_measure(f, xi)).max() * np.abs(S).max())
    errors = np.empty(trials)
    for i in range(trials):
        rng = np.random.default_rng(seed ^ i)
        noise = noise_stack(camera, len(seq), sigma, mode, rng)
        data = clean + noise
        measured = adjoint_spectrum(data, seq, psf, xi)
        if eps > 0:
            measured = measured + _pattern_error_spectrum(data, psf, random_pattern_error(len(seq), eps, rng), xi)
        g_hat = measured / S
        f_hat = ref / S
        errors[i] = (np.abs(g_hat - f_hat) * np.abs(S)).max()
    return StabilityReport(sigma.sigma, float(eps), trials, errors, cut.omega_hat, cut.omega_check,
                           pm.b_upper, b_lower, pipeline_error)


def verify_frequency_stability(f: DiscreteMeasure, seq: IlluminationSequence, psf: Psf,
                               sigma: NoiseBound | float, trials: int = 100, **kw) -> StabilityReport:
    """Bandpass stability audit with exactly known patterns; see :func:`verify_perturbed_patterns`."""
    return verify_perturbed_patterns(f, seq, 0.0, psf, sigma, trials, **kw)


@dataclass
class AffineFit:
    a: float
    b: float
    sigmas: np.ndarray
    epss: np.ndarray
    errors: np.ndarray

    @property
    def fitted(self) -> np.ndarray:
        return self.a * self.sigmas + self.b * self.epss

    @property
    def relative_residual(self) -> np.ndarray:
        fit = self.fitted
        return np.abs(self.errors - fit) / fit

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "sigma": self.sigmas.tolist(), "eps": self.epss.tolist(),
                "error": self.errors.tolist(), "max_relative_residual": float(self.relative_residual.max())}


def fit_affine(sigmas, epss, errors) -> AffineFit:
    """Nonnegative least-squares fit ``error ~ a sigma + b eps`` in relative terms.

    Each row is divided by its observed error, so the fit minimizes the sum
    of squared relative residuals; errors span orders of magnitude across
    a sweep and an absolute fit would ignore the small ones.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    epss = np.asarray(epss, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.any(errors <= 0):
        raise ValueError("affine fit needs positive errors")
    A = np.column_stack([sigmas, epss]) / errors[:, None]
    (a, b), _ = optimize.nnls(A, np.ones_like(errors))
    return AffineFit(float(a), float(b), sigmas, epss, errors)


def affine_degradation_sweep(f: DiscreteMeasure, seq: IlluminationSequence, psf: Psf, sigmas, epss,
                             trials: int = 10, seed: int = 0, **kw) -> AffineFit:
    """Mean weighted error over trials on a (sigma, eps) grid, fitted by ``a sigma + b eps``.

    Every grid point reuses the same per-trial random streams.
    """
    S, E, errs = [], [], []
    for s in sigmas:
        for e in epss:
            if s == 0 and e == 0:
                continue
            rep = verify_perturbed_patterns(f, seq, e, psf, s, trials, seed=seed, **kw)
            S.append(s)
            E.append(e)
            errs.append(rep.errors.mean())
    return fit_affine(S, E, errs)
