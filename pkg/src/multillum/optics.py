"""Point spread functions, illumination patterns and their correlations.

PSF families (string keys used in config files):

==========  ===========================================  =================
key         profile                                      nominal cutoff
==========  ===========================================  =================
``sinc``    sin(W x) / x                                 W
``sinc2``   (sin(W x) / x)**2                            2 W
``airy2``   (J1(W r) / r)**2, 2D only                    2 W
``gauss``   exp(-|x|^2 / (2 w^2))                        sqrt(2 ln 1000)/w
``sampled`` values on a :class:`GridFunction`            user supplied
==========  ===========================================  =================

The Gaussian cutoff is an essential one: the frequency at which its
spectrum has dropped to 1e-3 of its peak.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .measures import GridError, GridFunction

PSF_KINDS = ("sinc", "sinc2", "airy2", "gauss", "sampled")

# spectrum level (relative to peak) that defines the Gaussian's essential cutoff
GAUSS_CUTOFF_LEVEL = 1e-3


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class Psf:
    """A real point spread function profile.

    Parameters
    ----------
    kind : str
        One of ``sinc``, ``sinc2``, ``airy2``, ``gauss``, ``sampled``.
    scale : float
        Frequency ``W`` for the sinc-type families, width ``w`` for ``gauss``.
        Ignored for sampled profiles.
    dim : int
        Spatial dimension. ``airy2`` is always 2D; ``sinc`` and ``sinc2``
        are 1D only.
    grid : GridFunction, optional
        Samples for the ``sampled`` kind.
    sampled_cutoff : float, optional
        Nominal cutoff of a sampled profile.
    amplitude : float
        Overall multiplicative factor.
    """

    kind: str
    scale: float = np.pi
    dim: int = 1
    grid: GridFunction | None = None
    sampled_cutoff: float | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in PSF_KINDS:
            raise ValueError(f"unknown PSF kind {self.kind!r}; expected one of {PSF_KINDS}")
        if self.kind == "airy2" and self.dim != 2:
            object.__setattr__(self, "dim", 2)
        if self.kind in ("sinc", "sinc2") and self.dim != 1:
            raise ValueError(f"{self.kind} PSF is one-dimensional")
        if self.kind == "sampled":
            if self.grid is None:
                raise ValueError("sampled PSF needs a grid")
            if np.iscomplexobj(self.grid.values) and np.any(self.grid.values.imag != 0):
                raise ValueError("PSF samples must be real")
            if self.sampled_cutoff is None or not self.sampled_cutoff > 0:
                raise ValueError("sampled PSF needs a positive cutoff")
            object.__setattr__(self, "dim", self.grid.dim)
        elif not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError("PSF scale must be positive")
        if not np.isfinite(self.amplitude) or self.amplitude == 0:
            raise ValueError("PSF amplitude must be finite and nonzero")

    @classmethod
    def sinc(cls, omega: float) -> "Psf":
        return cls("sinc", omega)

    @classmethod
    def sinc2(cls, omega: float) -> "Psf":
        return cls("sinc2", omega)

    @classmethod
    def airy2(cls, omega: float) -> "Psf":
        return cls("airy2", omega, dim=2)

    @classmethod
    def gauss(cls, width: float, dim: int = 1, amplitude: float = 1.0) -> "Psf":
        return cls("gauss", width, dim=dim, amplitude=amplitude)

    @classmethod
    def sampled(cls, grid: GridFunction, cutoff: float) -> "Psf":
        return cls("sampled", grid=grid, sampled_cutoff=cutoff)

    @property
    def cutoff(self) -> float:
        """Nominal (or essential, for Gaussians) cutoff frequency."""
        if self.kind == "sinc":
            return self.scale
        if self.kind in ("sinc2", "airy2"):
            return 2 * self.scale
        if self.kind == "gauss":
            return np.sqrt(-2 * np.log(GAUSS_CUTOFF_LEVEL)) / self.scale
        return float(self.sampled_cutoff)

    def __call__(self, x) -> np.ndarray:
        return psf_values(self, x)

    def spectrum(self, xi) -> np.ndarray | None:
        """Closed-form Fourier transform in 1D, or None when unavailable."""
        if self.dim != 1:
            return None
        xi = np.abs(np.asarray(xi, dtype=float))
        W, a = self.scale, self.amplitude
        if self.kind == "sinc":
            return a * np.pi * (xi < W).astype(float) + a * 0.5 * np.pi * (xi == W)
        if self.kind == "sinc2":
            return a * 0.5 * np.pi * np.clip(2 * W - xi, 0, None)
        if self.kind == "gauss":
            return a * W * np.sqrt(2 * np.pi) * np.exp(-0.5 * (W * xi) ** 2)
        return None

    def autocorrelation_exact(self, u) -> np.ndarray | None:
        """Closed-form ``u -> integral PSF(x - u) PSF(x) dx`` where one is known."""
        a2 = self.amplitude**2
        if self.kind == "sinc":
            u = np.asarray(u, dtype=float)
            W = self.scale
            return a2 * np.pi * W * np.sinc(W * u / np.pi)
        if self.kind == "gauss":
            u = np.asarray(u, dtype=float)
            r2 = u**2 if self.dim == 1 else (u**2).sum(-1)
            w = self.scale
            return a2 * (w * np.sqrt(np.pi)) ** self.dim * np.exp(-r2 / (4 * w**2))
        return None

    def decay_bound(self, r):
        """Envelope ``B(r) >= |PSF(x)|`` for ``|x| >= r``, used for truncation estimates."""
        r = np.maximum(np.asarray(r, dtype=float), 1e-300)
        a = abs(self.amplitude)
        if self.kind == "sinc":
            return a / r
        if self.kind == "sinc2":
            return a / r**2
        if self.kind == "airy2":
            # sqrt(t) |J1(t)| <= sqrt(2 / pi) for t > 0
            return a * (2 / (np.pi * self.scale)) / r**3
        if self.kind == "gauss":
            return a * np.exp(-(r**2) / (2 * self.scale**2))
        return np.zeros_like(r)


def _sinc_type(W, x):
    # sin(W x) / x with the limit W at x = 0
    return W * np.sinc(W * x / np.pi)


def psf_values(psf: Psf, x) -> np.ndarray:
    """Vectorized PSF evaluation.

    In 1D ``x`` may have any shape; in 2D its trailing axis must have length 2.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("PSF argument must be finite")
    a = psf.amplitude
    if psf.kind == "sinc":
        return a * _sinc_type(psf.scale, x)
    if psf.kind == "sinc2":
        return a * _sinc_type(psf.scale, x) ** 2
    if psf.kind == "gauss":
        r2 = x**2 if psf.dim == 1 else (x**2).sum(-1)
        return a * np.exp(-r2 / (2 * psf.scale**2))
    if psf.kind == "airy2":
        if x.shape[-1:] != (2,):
            raise ValueError("airy2 PSF expects 2D points")
        r = np.sqrt((x**2).sum(-1))
        W = psf.scale
        out = np.full(r.shape, (W / 2) ** 2)
        nz = r > 0
        out[nz] = (special.j1(W * r[nz]) / r[nz]) ** 2
        return a * out
    # sampled
    shape = x.shape if psf.dim == 1 else x.shape[:-1]
    vals = psf.grid.interpolate(x.reshape(-1, psf.dim))
    return a * np.real(vals).reshape(shape)


def _psf_values_zero_fill(psf: Psf, x) -> np.ndarray:
    # sampled profiles are treated as zero outside their grid during integration
    if psf.kind != "sampled":
        return psf_values(psf, x)
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, psf.dim)
    inside = psf.grid.contains(pts)
    out = np.zeros(len(pts))
    if np.any(inside):
        out[inside] = psf_values(psf, pts[inside])
    return out.reshape(x.shape if psf.dim == 1 else x.shape[:-1])


def evaluate_psf(psf: Psf, x) -> float:
    """PSF value at a single point ``x``."""
    x = np.asarray(x, dtype=float)
    if psf.dim == 2:
        x = x.reshape(2)
    elif x.size != 1:
        raise ValueError("expected a single 1D point")
    else:
        x = x.reshape(())
    try:
        return float(psf_values(psf, x))
    except GridError as exc:
        raise GridError("out of domain") from exc


# -- illumination patterns ---------------------------------------------------


@dataclass(frozen=True)
class PlaneWave:
    """``I(y) = exp(i * frequency * direction . y)``."""

    direction: tuple
    frequency: float

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.direction, dtype=float))
        if not np.isclose(np.linalg.norm(d), 1.0, atol=1e-12):
            raise ValueError("plane-wave direction must be a unit vector")
        object.__setattr__(self, "direction", tuple(d))

    @property
    def cutoff(self) -> float:
        return abs(self.frequency)

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        d = np.asarray(self.direction)
        phase = y * d[0] if len(d) == 1 else y @ d
        return np.exp(1j * self.frequency * phase)


@dataclass(frozen=True)
class TranslatedProfile:
    """A real profile shifted to ``center``: ``I(y) = profile(y - center)``."""

    profile: Psf
    center: tuple

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(np.atleast_1d(np.asarray(self.center, dtype=float))))

    @property
    def cutoff(self) -> float:
        return self.profile.cutoff

    def __call__(self, y) -> np.ndarray:
        c = np.asarray(self.center)
        y = np.asarray(y, dtype=float)
        return psf_values(self.profile, y - (c[0] if len(c) == 1 else c)).astype(complex)


@dataclass(frozen=True)
class Composite:
    """Weighted sum of one profile at several centers, ``sum_l b_l IP(y - c_l)``."""

    profile: Psf
    weights: tuple
    centers: tuple

    def __post_init__(self):
        w = tuple(complex(b) for b in np.atleast_1d(self.weights))
        c = np.asarray(self.centers, dtype=float)
        c = c.reshape(len(w), -1)
        if len(w) == 0:
            raise ValueError("composite pattern needs at least one component")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "centers", tuple(map(tuple, c)))

    @property
    def cutoff(self) -> float:
        return self.profile.cutoff

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape if self.profile.dim == 1 else y.shape[:-1], dtype=complex)
        for b, c in zip(self.weights, self.centers):
            shift = c[0] if self.profile.dim == 1 else np.asarray(c)
            out += b * psf_values(self.profile, y - shift)
        return out


@dataclass(frozen=True)
class Constant:
    level: complex = 1.0

    @property
    def cutoff(self) -> float:
        return 0.0

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.full(y.shape if y.ndim <= 1 or y.shape[-1] != 2 else y.shape[:-1], complex(self.level))


@dataclass(frozen=True)
class SampledPattern:
    grid: GridFunction
    cutoff: float = 0.0

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        shape = y.shape if self.grid.dim == 1 else y.shape[:-1]
        return np.asarray(self.grid.interpolate(y.reshape(-1, self.grid.dim)), dtype=complex).reshape(shape)


@dataclass(frozen=True)
class IlluminationSequence:
    """An ordered list of N illumination patterns, indexed from 0."""

    patterns: tuple = field(default_factory=tuple)

    def __post_init__(self):
        pats = tuple(self.patterns)
        if len(pats) < 1:
            raise ValueError("illumination sequence needs at least one pattern")
        object.__setattr__(self, "patterns", pats)

    def __len__(self) -> int:
        return len(self.patterns)

    @property
    def n_patterns(self) -> int:
        return len(self.patterns)

    @property
    def cutoff(self) -> float:
        """Largest nominal frequency among the patterns (the illumination band)."""
        return max(p.cutoff for p in self.patterns)

    def values(self, y) -> np.ndarray:
        """All patterns at points ``y``; shape ``(N,) + point_shape``."""
        return np.stack([np.asarray(p(y), dtype=complex) for p in self.patterns])

    @classmethod
    def plane_waves(cls, frequency: float, directions: Sequence = (1.0, -1.0)) -> "IlluminationSequence":
        return cls(tuple(PlaneWave(np.atleast_1d(d), frequency) for d in directions))

    @classmethod
    def profile_sweep(cls, profile: Psf, centers) -> "IlluminationSequence":
        return cls(tuple(TranslatedProfile(profile, c) for c in np.atleast_1d(centers)))

    @classmethod
    def constant(cls, level: complex = 1.0, count: int = 1) -> "IlluminationSequence":
        return cls(tuple(Constant(level) for _ in range(count)))


def evaluate_illumination(seq: IlluminationSequence, q: int, y) -> complex:
    """Value of pattern ``q`` (0-based) at a single point ``y``."""
    if not 0 <= q < len(seq):
        raise IndexError(f"pattern index {q} out of range for {len(seq)} patterns")
    return complex(np.asarray(seq.patterns[q](np.asarray(y, dtype=float))).reshape(-1)[0])


def illumination_correlation(seq: IlluminationSequence, z, y) -> np.ndarray:
    """``(1/N) sum_q conj(I_q(z)) I_q(y)``, broadcast over matching point arrays."""
    Iz = seq.values(z)
    Iy = seq.values(y)
    return np.mean(np.conj(Iz) * Iy, axis=0)


# -- PSF autocorrelation -----------------------------------------------------

# default relative truncation tolerance of the autocorrelation quadrature
AUTOCORR_TOL = 1e-4


def quadrature_step(psf: Psf) -> float:
    """Node spacing for products of two PSFs: four nodes per period of the product band."""
    return np.pi / (4 * psf.cutoff)


def truncation_bound(psf: Psf, R: float, lag: float = 0.0) -> float:
    """Upper bound on the part of ``integral |PSF(s - u/2) PSF(s + u/2)| ds`` outside ``|s|_inf <= R``.

    Uses ``|ab| <= (a^2 + b^2)/2`` and the fact that both arguments have norm
    at least ``R - |u|/2`` there, so the tail is at most the integral of the
    squared decay envelope over the exterior of that ball.
    """
    r0 = R - abs(lag) / 2
    if r0 <= 0:
        return np.inf
    if psf.dim == 1:
        f = lambda r: 2 * float(psf.decay_bound(r)) ** 2
    else:
        f = lambda r: 2 * np.pi * r * float(psf.decay_bound(r)) ** 2
    val, _ = integrate.quad(f, r0, np.inf, limit=200)
    return float(val)


def default_window(psf: Psf, max_lag: float = 1.0, tol: float = AUTOCORR_TOL) -> float:
    """Smallest half-width R whose truncation bound is below ``tol`` times the zero-lag value."""
    if psf.kind == "sampled":
        lo, hi = zip(*psf.grid.domain)
        return float(max(np.abs(lo).max(), np.abs(hi).max()) + max_lag / 2)
    peak = _zero_lag(psf)
    R = max(1.0, 2.0 / psf.cutoff) + max_lag / 2
    while truncation_bound(psf, R, max_lag) > tol * peak:
        R *= 1.25
    return float(R)


def _zero_lag(psf: Psf) -> float:
    a2 = psf.amplitude**2
    W = psf.scale
    if psf.kind == "sinc":
        return a2 * np.pi * W
    if psf.kind == "sinc2":
        return a2 * 2 * np.pi * W**3 / 3
    if psf.kind == "airy2":
        # 2 pi W^2 times the integral of J1(t)^4 / t^3 over t > 0
        return a2 * 2 * np.pi * W**2 * 0.0574525437
    if psf.kind == "gauss":
        return a2 * (W * np.sqrt(np.pi)) ** psf.dim
    g = psf.grid
    return float((g.values.real**2).sum() * g.cell_volume) * a2


def _midpoint_nodes(R: float, h: float) -> tuple[np.ndarray, float]:
    m = max(2, int(np.ceil(2 * R / h)))
    step = 2 * R / m
    return -R + step * (np.arange(m) + 0.5), step


def autocorrelation_window(psf: Psf, R: float | None = None, max_lag: float = 1.0, tol: float = AUTOCORR_TOL):
    """Quadrature nodes and weight for the lag integral; checks an explicit R against ``tol``."""
    if R is None:
        R = default_window(psf, max_lag, tol)
    elif psf.kind != "sampled":
        bound = truncation_bound(psf, R, max_lag)
        peak = _zero_lag(psf)
        if bound > tol * peak:
            need = default_window(psf, max_lag, tol)
            raise QuadratureError(
                f"truncation half-width R={R:g} leaves a tail bound of {bound / peak:.2e} "
                f"(relative) for lags up to {max_lag:g}; tolerance {tol:g} needs R >= {need:.4g}"
            )
    s, step = _midpoint_nodes(R, quadrature_step(psf))
    if psf.dim == 1:
        return s, step
    S1, S2 = np.meshgrid(s, s, indexing="ij")
    return np.stack([S1.ravel(), S2.ravel()], axis=-1), step**2


def psf_autocorrelation(psf: Psf, u_grid, R: float | None = None, tol: float = AUTOCORR_TOL,
                        chunk: int = 2_000_000) -> GridFunction:
    """Autocorrelation ``u -> integral PSF(x - u) PSF(x) dx`` by truncated midpoint quadrature.

    The integral is written symmetrically as ``integral PSF(s - u/2) PSF(s + u/2) ds``
    over ``|s| <= R``. When ``R`` is None it is chosen from the decay envelope
    of the PSF so that the truncated tail stays below ``tol`` times the
    zero-lag value for every requested lag.

    Parameters
    ----------
    u_grid : array_like or tuple of arrays
        Uniform lag axis (1D) or pair of axes (2D).

    Raises
    ------
    QuadratureError
        If an explicit ``R`` is too small for ``tol``.
    """
    axes = (np.asarray(u_grid, dtype=float),) if psf.dim == 1 else tuple(np.asarray(a, dtype=float) for a in u_grid)
    probe = GridFunction(axes, np.zeros(tuple(len(a) for a in axes)))
    lags = probe.points()
    max_lag = float(np.sqrt((lags**2).sum(-1)).max())
    nodes, weight = autocorrelation_window(psf, R, max_lag, tol)
    vals = np.empty(len(lags))
    per = max(1, chunk // len(nodes))
    for i in range(0, len(lags), per):
        u = lags[i:i + per]
        if psf.dim == 1:
            a = _psf_values_zero_fill(psf, nodes[None, :] - 0.5 * u[:, :1])
            b = _psf_values_zero_fill(psf, nodes[None, :] + 0.5 * u[:, :1])
        else:
            a = _psf_values_zero_fill(psf, nodes[None, :, :] - 0.5 * u[:, None, :])
            b = _psf_values_zero_fill(psf, nodes[None, :, :] + 0.5 * u[:, None, :])
        vals[i:i + per] = (a * b).sum(-1) * weight
    return GridFunction(axes, vals.reshape(probe.shape))


def psf_autocorrelation_values(psf: Psf, u, exact: bool = True, R: float | None = None) -> np.ndarray:
    """Autocorrelation at arbitrary lags, using the closed form when one exists."""
    u = np.asarray(u, dtype=float)
    if exact:
        v = psf.autocorrelation_exact(u)
        if v is not None:
            return v
    flat = u.reshape(-1) if psf.dim == 1 else u.reshape(-1, 2)
    max_lag = float(np.abs(flat).max()) * (1 if psf.dim == 1 else np.sqrt(2)) if flat.size else 0.0
    nodes, weight = autocorrelation_window(psf, R, max(max_lag, 1e-9))
    out = np.empty(len(flat))
    per = max(1, 2_000_000 // len(nodes))
    for i in range(0, len(flat), per):
        blk = flat[i:i + per]
        if psf.dim == 1:
            a = _psf_values_zero_fill(psf, nodes[None, :] - 0.5 * blk[:, None])
            b = _psf_values_zero_fill(psf, nodes[None, :] + 0.5 * blk[:, None])
        else:
            a = _psf_values_zero_fill(psf, nodes[None] - 0.5 * blk[:, None, :])
            b = _psf_values_zero_fill(psf, nodes[None] + 0.5 * blk[:, None, :])
        out[i:i + per] = (a * b).sum(-1) * weight
    return out.reshape(u.shape if psf.dim == 1 else u.shape[:-1])
