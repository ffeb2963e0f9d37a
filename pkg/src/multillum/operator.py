"""Forward model of multi-illumination imaging and its adjoint.

For patterns ``I_q`` (q = 0..N-1) and a real PSF, frame ``q`` of the
measurement is

    Af(x, q) = integral PSF(x - y) I_q(y) f(y) dy,   y in [0, 1]^d,

and the adjoint with respect to ``<g, h> = (1/N) sum_q integral g conj(h) dx`` is

    A*g(y) = (1/N) sum_q conj(I_q(y)) integral PSF(x - y) g(x, q) dx.

The composition ``A*A`` is an integral operator whose kernel factors into
an illumination correlation and the PSF autocorrelation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .measures import DiscreteMeasure, GridFunction, NoiseBound, _as_points
from .optics import (IlluminationSequence, Psf, _psf_values_zero_fill, autocorrelation_window,
                     illumination_correlation, psf_autocorrelation_values, psf_values, quadrature_step)

DEFAULT_CAMERA_HALF_WIDTH = 8.0
SUPPORT_TOL = 1e-12


class SupportError(ValueError):
    pass


@dataclass(frozen=True)
class CameraGrid:
    """Midpoint sampling of the camera box ``[-R, R]^d`` with ``samples`` pixels per axis."""

    half_width: float = DEFAULT_CAMERA_HALF_WIDTH
    samples: int = 128
    dim: int = 1

    def __post_init__(self):
        if self.half_width < 1:
            raise ValueError("camera half-width must be at least 1")
        if self.samples < 2:
            raise ValueError("camera needs at least 2 samples per axis")

    @classmethod
    def for_psf(cls, psf: Psf, half_width: float = DEFAULT_CAMERA_HALF_WIDTH, oversample: float = 4.0):
        """Pixel pitch ``pi / (oversample * cutoff)``, i.e. ``oversample`` times finer than Nyquist."""
        h = np.pi / (oversample * psf.cutoff)
        return cls(half_width, int(np.ceil(2 * half_width / h)), psf.dim)

    @property
    def step(self) -> float:
        return 2 * self.half_width / self.samples

    @property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.step * (np.arange(self.samples) + 0.5)

    @property
    def pixel_area(self) -> float:
        return self.step**self.dim

    def points(self) -> np.ndarray:
        """Pixel centers, shape (M,) in 1D or (M*M, 2) in 2D."""
        if self.dim == 1:
            return self.axis
        X1, X2 = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([X1.ravel(), X2.ravel()], axis=-1)


@dataclass(frozen=True)
class ImageStack:
    """N camera frames, one per illumination pattern.

    ``data`` has shape ``(N, M)`` in 1D or ``(N, M, M)`` in 2D, sampled at the
    pixel centers of ``camera``.
    """

    data: np.ndarray
    camera: CameraGrid

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        want = (self.camera.samples,) * self.camera.dim
        if data.shape[1:] != want:
            raise ValueError(f"frame shape {data.shape[1:]} does not match camera {want}")
        object.__setattr__(self, "data", data)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> list:
        axes = (self.camera.axis,) * self.camera.dim
        return [GridFunction(axes, d) for d in self.data]

    def flat(self) -> np.ndarray:
        return self.data.reshape(self.n_frames, -1)

    def l1_norms(self) -> np.ndarray:
        return np.abs(self.flat()).sum(-1) * self.camera.pixel_area

    def inner(self, other: "ImageStack") -> complex:
        """``(1/N) sum_q sum_x self conj(other) dx``."""
        return complex(np.mean((self.flat() * np.conj(other.flat())).sum(-1)) * self.camera.pixel_area)

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self).real))

    def __add__(self, other: "ImageStack") -> "ImageStack":
        return ImageStack(self.data + other.data, self.camera)


@dataclass(frozen=True)
class KernelMatrix:
    """Dense kernel ``values[i, j] = K(z_i, y_j)``."""

    z_points: np.ndarray
    y_points: np.ndarray
    values: np.ndarray

    def hermitian_defect(self) -> float:
        if self.values.shape[0] != self.values.shape[1] or not np.array_equal(self.z_points, self.y_points):
            raise ValueError("Hermitian defect needs equal z and y grids")
        return float(np.abs(self.values - self.values.conj().T).max())


def _check_support(pts: np.ndarray):
    if np.any(pts < -SUPPORT_TOL) or np.any(pts > 1 + SUPPORT_TOL):
        raise SupportError("support violation: source must lie in the unit box")


def _pairwise_psf(psf: Psf, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # PSF(x_i - y_j) for camera points x and source points y
    if psf.dim == 1:
        return psf_values(psf, x[:, None] - y[None, :])
    return psf_values(psf, x[:, None, :] - y[None, :, :])


def _source_samples(f, dim: int):
    """Source points, weights (amplitude times cell volume) for a measure or grid source."""
    if isinstance(f, DiscreteMeasure):
        pts = f.locations if f.dim > 1 else f.locations[:, 0]
        return pts, np.asarray(f.amplitudes)
    if isinstance(f, GridFunction):
        pts = f.points()
        if f.dim == 1:
            pts = pts[:, 0]
        return pts, f.values.ravel().astype(complex) * f.cell_volume
    raise TypeError("source must be a DiscreteMeasure or GridFunction")


def forward(f, seq: IlluminationSequence, psf: Psf, camera: CameraGrid | None = None) -> ImageStack:
    """Apply the imaging operator to a point-source measure or a sampled source.

    Raises
    ------
    SupportError
        If any source point lies outside ``[0, 1]^d``.
    """
    if camera is None:
        camera = CameraGrid.for_psf(psf)
    pts, w = _source_samples(f, psf.dim)
    _check_support(np.asarray(pts))
    K = _pairwise_psf(psf, camera.points(), pts)
    illum = seq.values(pts)  # (N, n_src)
    frames = (illum * w[None, :]) @ K.T
    return ImageStack(frames.reshape((len(seq),) + (camera.samples,) * camera.dim), camera)


def adjoint_values(images: ImageStack, seq: IlluminationSequence, psf: Psf, y) -> np.ndarray:
    """``A*g`` evaluated at arbitrary points ``y`` (flat array in 1D, (n, 2) in 2D)."""
    if images.n_frames != len(seq):
        raise ValueError(f"image stack has {images.n_frames} frames but sequence has {len(seq)} patterns")
    y = np.asarray(y, dtype=float)
    K = _pairwise_psf(psf, images.camera.points(), y)  # (M, n)
    proj = images.flat() @ K * images.camera.pixel_area  # (N, n)
    return np.mean(np.conj(seq.values(y)) * proj, axis=0)


def adjoint(images: ImageStack, seq: IlluminationSequence, psf: Psf, y_axes) -> GridFunction:
    """``A*g`` sampled on the grid spanned by ``y_axes`` (one axis in 1D, two in 2D)."""
    axes = (np.asarray(y_axes, dtype=float),) if psf.dim == 1 else tuple(np.asarray(a, dtype=float) for a in y_axes)
    probe = GridFunction(axes, np.zeros(tuple(len(a) for a in axes)))
    pts = probe.points()
    vals = adjoint_values(images, seq, psf, pts[:, 0] if psf.dim == 1 else pts)
    return GridFunction(axes, vals.reshape(probe.shape))


def source_inner(f, values_at_source: np.ndarray) -> complex:
    """``<f, h>`` for a source ``f`` and ``h`` sampled at the source points of ``f``."""
    _, w = _source_samples(f, 1 if isinstance(f, DiscreteMeasure) and f.dim == 1 else 2)
    return complex(np.sum(w * np.conj(values_at_source)))


def _points(p, dim):
    p = np.asarray(p, dtype=float)
    return p.reshape(-1) if dim == 1 else _as_points(p, 2)


def imaging_kernel(seq: IlluminationSequence, psf: Psf, z, y, method: str = "factorized",
                   R: float | None = None, exact: bool = True) -> KernelMatrix:
    """Kernel of ``A*A`` on points ``z`` x ``y``.

    ``method="factorized"`` multiplies the illumination correlation by the
    PSF autocorrelation (closed form when available). ``method="direct"``
    integrates ``conj(Q(x, z, q)) Q(x, y, q)`` over the camera variable for each
    pair, with ``Q(x, y, q) = PSF(x - y) I_q(y)``, using the same symmetric
    quadrature window as :func:`multillum.optics.psf_autocorrelation`.
    """
    z = _points(z, psf.dim)
    y = _points(y, psf.dim)
    if psf.dim == 1:
        Z, Y = np.meshgrid(z, y, indexing="ij")
        lag = Z - Y
        mid = 0.5 * (Z + Y)
    else:
        Z = np.repeat(z[:, None, :], len(y), axis=1)
        Y = np.repeat(y[None, :, :], len(z), axis=0)
        lag = Z - Y
        mid = 0.5 * (Z + Y)
    if method == "factorized":
        ilf = illumination_correlation(seq, Z, Y)
        return KernelMatrix(z, y, ilf * psf_autocorrelation_values(psf, lag, exact=exact and R is None, R=R))
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    max_lag = float(np.sqrt((lag.reshape(-1, psf.dim) ** 2).sum(-1)).max())
    nodes, weight = autocorrelation_window(psf, R, max(max_lag, 1e-9))
    Iz = seq.values(Z)
    Iy = seq.values(Y)
    flat_mid = mid.reshape(-1, psf.dim)
    flat_z = Z.reshape(-1, psf.dim)
    flat_y = Y.reshape(-1, psf.dim)
    n_pairs = len(flat_mid)
    psf_int = np.empty(n_pairs)
    per = max(1, 2_000_000 // len(nodes))
    for i in range(0, n_pairs, per):
        sl = slice(i, i + per)
        if psf.dim == 1:
            x = flat_mid[sl, :1] + nodes[None, :]
            a = _psf_values_zero_fill(psf, x - flat_z[sl, :1])
            b = _psf_values_zero_fill(psf, x - flat_y[sl, :1])
        else:
            x = flat_mid[sl, None, :] + nodes[None, :, :]
            a = _psf_values_zero_fill(psf, x - flat_z[sl, None, :])
            b = _psf_values_zero_fill(psf, x - flat_y[sl, None, :])
        psf_int[sl] = (a * b).sum(-1) * weight
    psf_int = psf_int.reshape(lag.shape[:2])
    vals = np.mean(np.conj(Iz) * psf_int[None] * Iy, axis=0)
    return KernelMatrix(z, y, vals)


def camera_nodes(M: int, R: float, dim: int = 1) -> np.ndarray:
    """Left-endpoint nodes ``-R + j 2R / M``, j = 0..M-1, of the hypercube partition of ``[-R, R]^d``."""
    ax = -R + 2 * R * np.arange(M) / M
    if dim == 1:
        return ax
    X1, X2 = np.meshgrid(ax, ax, indexing="ij")
    return np.stack([X1.ravel(), X2.ravel()], axis=-1)


def discrete_kernel(seq: IlluminationSequence, psf: Psf, z, y, M: int, R: float) -> KernelMatrix:
    """Kernel of ``A*A`` when the camera records ``M^d`` point samples on ``[-R, R]^d``.

    ``W(z, y) = f_ILF(z, y) * M^-d * sum_j PSF(x_j - z) PSF(x_j - y)`` with
    left-endpoint nodes ``x_j``; ``(2R)^d W`` approximates the continuous kernel.
    """
    if M < 2:
        raise ValueError("need at least 2 samples per axis")
    if R < 1:
        raise ValueError("camera half-width must be at least 1")
    z = _points(z, psf.dim)
    y = _points(y, psf.dim)
    x = camera_nodes(M, R, psf.dim)
    Kz = _pairwise_psf(psf, x, z)
    Ky = _pairwise_psf(psf, x, y)
    psf_part = Kz.T @ Ky / M**psf.dim
    if psf.dim == 1:
        Z, Y = np.meshgrid(z, y, indexing="ij")
    else:
        Z = np.repeat(z[:, None, :], len(y), axis=1)
        Y = np.repeat(y[None, :, :], len(z), axis=0)
    return KernelMatrix(z, y, illumination_correlation(seq, Z, Y) * psf_part)


def _gauss_legendre_window(psf: Psf, R: float, order: int = 8):
    """Composite Gauss-Legendre nodes on [-R, R] with panels a quarter of the quadrature step."""
    h = quadrature_step(psf)
    panels = int(np.ceil(2 * R / h))
    g, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-R, R, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def truncated_kernel(seq: IlluminationSequence, psf: Psf, z, y, R: float) -> KernelMatrix:
    """Reference kernel with the camera integral restricted to ``[-R, R]`` (1D), by Gauss-Legendre."""
    if psf.dim != 1:
        raise ValueError("reference kernel is implemented in 1D")
    z = _points(z, 1)
    y = _points(y, 1)
    x, w = _gauss_legendre_window(psf, R)
    Kz = _pairwise_psf(psf, x, z)
    Ky = _pairwise_psf(psf, x, y)
    Z, Y = np.meshgrid(z, y, indexing="ij")
    return KernelMatrix(z, y, illumination_correlation(seq, Z, Y) * ((Kz * w[:, None]).T @ Ky))


@dataclass
class ConvergenceStudy:
    """Discrepancy ``max |W - G_R / (2R)^d|`` of the sampled kernel at each sample count."""

    R: float
    M: np.ndarray
    error: np.ndarray
    slope: float
    constant: float

    def to_dict(self) -> dict:
        return {"R": self.R, "M": self.M.tolist(), "error": self.error.tolist(),
                "slope": self.slope, "constant": self.constant}


def quadrature_convergence(seq: IlluminationSequence, psf: Psf, z, y, Ms=(64, 128, 256, 512),
                           R: float = DEFAULT_CAMERA_HALF_WIDTH) -> ConvergenceStudy:
    """Fit ``error(M) ~ constant * M**slope`` over the sample counts ``Ms``.

    The error is the max over the (z, y) grid of ``|W - G_R / (2R)|``, where
    ``G_R`` is the kernel with the camera integral truncated to the same
    window, so only the discretization error is measured. ``constant`` is the
    geometric mean of ``error * M``, the coefficient of a ``1/M`` model.
    """
    ref = truncated_kernel(seq, psf, z, y, R).values / (2 * R)
    Ms = np.asarray(Ms)
    err = np.array([np.abs(discrete_kernel(seq, psf, z, y, int(M), R).values - ref).max() for M in Ms])
    slope, _ = np.polyfit(np.log(Ms), np.log(err), 1)
    constant = float(np.exp(np.mean(np.log(err * Ms))))
    return ConvergenceStudy(float(R), Ms, err, float(slope), constant)


# -- encode / decode ------------------------------------------------------------

def _safe_cube(v):
    return v**3


DECODE_MAPS: dict[str, Callable] = {
    "identity": lambda v: v,
    "conj": np.conj,
    "cube": _safe_cube,
    "clamp": lambda v: np.clip(v.real, -1.0, 1.0) + 1j * np.clip(v.imag, -1.0, 1.0),
}
for _k in (2, 4, 5):
    DECODE_MAPS[f"power{_k}"] = (lambda k: (lambda v: v**k))(_k)
DECODE_MAPS["power3"] = _safe_cube


def general_decode(images: ImageStack, seq: IlluminationSequence, psf: Psf, g1: Callable, g2: Callable,
                   z) -> np.ndarray:
    """Decode ``D g(z) = (1/N) sum_q g1(I_q(z)) integral g2(PSF(x - z)) g(x, q) dx``.

    With ``g1 = conj`` and ``g2 = identity`` this is the adjoint. For real
    patterns ``g1 = identity`` gives the same result.

    Raises
    ------
    FloatingPointError
        If ``g1`` or ``g2`` produce non-finite values.
    """
    if images.n_frames != len(seq):
        raise ValueError("image stack and illumination sequence disagree on N")
    z = np.asarray(z, dtype=float)
    with np.errstate(over="raise", invalid="raise"):
        try:
            K = g2(_pairwise_psf(psf, images.camera.points(), z).astype(complex))
            weights = g1(seq.values(z))
        except FloatingPointError as exc:
            raise FloatingPointError("decode map overflow") from exc
    if not (np.all(np.isfinite(K)) and np.all(np.isfinite(weights))):
        raise FloatingPointError("decode map produced non-finite values")
    proj = images.flat() @ K * images.camera.pixel_area
    return np.mean(weights * proj, axis=0)


# -- noise ------------------------------------------------------------------------

NOISE_MODES = ("uniform_bounded", "worst_case_sine")
# keep the realized L1 norm strictly below the bound
NOISE_SAFETY = 1 - 1e-12


def noise_stack(camera: CameraGrid, n_frames: int, bound: NoiseBound, mode: str = "uniform_bounded",
                rng: np.random.Generator | None = None, frequency: float = 0.0) -> ImageStack:
    """Noise frames whose discrete L1 norm equals ``sigma`` (up to a 1e-12 safety margin).

    ``uniform_bounded`` draws i.i.d. uniform samples on [-1, 1] and rescales
    each frame. ``worst_case_sine`` puts all of the budget into a cosine at
    ``frequency``, the perturbation that maximizes the frame spectrum there.
    """
    if mode not in NOISE_MODES:
        raise ValueError(f"unknown noise mode {mode!r}")
    shape = (n_frames,) + (camera.samples,) * camera.dim
    if bound.sigma == 0:
        return ImageStack(np.zeros(shape, dtype=complex), camera)
    if mode == "uniform_bounded":
        rng = np.random.default_rng() if rng is None else rng
        raw = rng.uniform(-1, 1, size=shape).astype(complex)
    else:
        pts = camera.points()
        phase = pts if camera.dim == 1 else pts[:, 0]
        raw = np.broadcast_to(np.cos(frequency * phase), (n_frames, len(phase))).reshape(shape).astype(complex)
    l1 = np.abs(raw.reshape(n_frames, -1)).sum(-1) * camera.pixel_area
    scale = bound.sigma * NOISE_SAFETY / l1
    return ImageStack(raw * scale.reshape((-1,) + (1,) * camera.dim), camera)


def add_noise(images: ImageStack, bound: NoiseBound, mode: str = "uniform_bounded",
              rng: np.random.Generator | None = None, frequency: float = 0.0) -> ImageStack:
    """Perturb every frame by noise of discrete L1 norm at most ``sigma``."""
    if bound.sigma == 0:
        return images
    return images + noise_stack(images.camera, images.n_frames, bound, mode, rng, frequency)
