"""Discrete point-source measures, sampled grid functions and noise bounds.

Fourier transforms throughout the package use the convention

    F[mu](xi) = integral of exp(+i xi . x) dmu(x),

so for a discrete measure ``mu = sum_j a_j delta_{y_j}`` the transform is the
exponential sum ``sum_j a_j exp(i y_j . xi)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# locations closer than this are treated as the same atom
DEDUP_TOL = 1e-12


class MeasureError(ValueError):
    pass


def _as_points(locations, dim=None) -> np.ndarray:
    pts = np.asarray(locations, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(-1, 1) if dim in (None, 1) else pts.reshape(1, -1)
    if pts.ndim != 2:
        raise MeasureError("locations must be a list of points")
    return pts


@dataclass(frozen=True)
class DiscreteMeasure:
    """A finite sum of weighted Dirac masses ``sum_j a_j delta_{y_j}`` in R^d, d in {1, 2}.

    Parameters
    ----------
    locations : array_like, shape (n,) or (n, d)
        Atom positions. A flat array is read as n points in 1D.
    amplitudes : array_like, shape (n,)
        Complex weights; none may be exactly zero.
    positive : bool
        Assert that every amplitude is real and strictly positive. Checked
        at construction.
    """

    locations: np.ndarray
    amplitudes: np.ndarray
    positive: bool = False

    def __post_init__(self):
        pts = _as_points(self.locations)
        amps = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))
        if amps.ndim != 1 or len(amps) != len(pts):
            raise MeasureError("amplitudes must match locations in length")
        if pts.shape[1] not in (1, 2):
            raise MeasureError(f"dimension must be 1 or 2, got {pts.shape[1]}")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(amps))):
            raise MeasureError("locations and amplitudes must be finite")
        if np.any(amps == 0):
            raise MeasureError("zero amplitude")
        if len(pts) > 1:
            diff = pts[:, None, :] - pts[None, :, :]
            dist = np.sqrt((diff**2).sum(-1))
            np.fill_diagonal(dist, np.inf)
            if dist.min() < DEDUP_TOL:
                raise MeasureError("duplicate locations")
        if self.positive and not (np.all(amps.imag == 0) and np.all(amps.real > 0)):
            raise MeasureError("positivity flag set but amplitudes are not all real and positive")
        pts.setflags(write=False)
        amps.setflags(write=False)
        object.__setattr__(self, "locations", pts)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_arrays(cls, locations, amplitudes, positive=None) -> "DiscreteMeasure":
        """Build a measure, inferring the positivity flag when ``positive`` is None."""
        amps = np.asarray(amplitudes, dtype=complex)
        if positive is None:
            positive = bool(np.all(amps.imag == 0) and np.all(amps.real > 0))
        return cls(locations, amps, positive)

    @property
    def n(self) -> int:
        return len(self.amplitudes)

    @property
    def dim(self) -> int:
        return self.locations.shape[1]

    def fourier(self, xi) -> np.ndarray:
        return fourier_of_measure(self, xi)

    def shifted(self, s) -> "DiscreteMeasure":
        s = np.broadcast_to(np.asarray(s, dtype=float), (self.dim,))
        return DiscreteMeasure(self.locations + s, self.amplitudes, self.positive)

    def __mul__(self, c) -> "DiscreteMeasure":
        c = complex(c)
        if c == 0:
            raise MeasureError("scaling by zero empties the measure")
        pos = self.positive and c.imag == 0 and c.real > 0
        return DiscreteMeasure(self.locations, self.amplitudes * c, pos)

    __rmul__ = __mul__

    def __neg__(self) -> "DiscreteMeasure":
        return self * -1

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        if other.dim != self.dim:
            raise MeasureError("dimension mismatch")
        pts = list(self.locations)
        amps = list(self.amplitudes)
        for p, a in zip(other.locations, other.amplitudes):
            d = np.sqrt(((np.asarray(pts) - p) ** 2).sum(-1))
            k = int(np.argmin(d))
            if d[k] < DEDUP_TOL:
                amps[k] += a
            else:
                pts.append(p)
                amps.append(a)
        amps = np.asarray(amps)
        keep = amps != 0
        if not np.any(keep):
            raise MeasureError("sum cancels to the empty measure")
        return DiscreteMeasure.from_arrays(np.asarray(pts)[keep], amps[keep])

    def __sub__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        return self + (-other)


def _frequency_points(xi, dim: int) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if dim == 1:
        return xi.reshape(-1, 1)
    xi = np.atleast_2d(xi)
    if xi.shape[-1] != dim:
        raise MeasureError(f"frequency points must have {dim} components")
    return xi.reshape(-1, dim)


def fourier_of_measure(mu: DiscreteMeasure, xi) -> np.ndarray:
    """Evaluate ``F[mu](xi) = sum_j a_j exp(i y_j . xi)`` at each frequency.

    ``xi`` is a flat array of frequencies in 1D, or an (m, 2) array in 2D.
    The result has one complex value per frequency point.
    """
    if mu is None or mu.n == 0:
        raise MeasureError("empty measure")
    pts = _frequency_points(xi, mu.dim)
    if len(pts) == 0:
        raise MeasureError("empty frequency grid")
    phase = pts @ mu.locations.T
    return np.exp(1j * phase) @ mu.amplitudes


def min_separation(mu: DiscreteMeasure) -> float:
    """Minimum pairwise Euclidean distance between atoms."""
    if mu.n < 2:
        raise MeasureError("separation undefined for fewer than 2 sources")
    diff = mu.locations[:, None, :] - mu.locations[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())


def min_amplitude(mu: DiscreteMeasure) -> float:
    if mu.n == 0:
        raise MeasureError("empty measure")
    return float(np.abs(mu.amplitudes).min())


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridFunction:
    """Complex samples on a uniform axis-aligned grid in R^d.

    ``axes`` holds one increasing, uniformly spaced coordinate array per
    dimension and ``values`` has shape ``tuple(len(a) for a in axes)``.
    Quadrature against a grid function uses the cell volume (product of
    spacings) as the weight of each sample.
    """

    axes: tuple
    values: np.ndarray

    def __post_init__(self):
        axes = self.axes
        if isinstance(axes, np.ndarray) and axes.ndim == 1:
            axes = (axes,)
        axes = tuple(np.asarray(a, dtype=float) for a in axes)
        if len(axes) not in (1, 2):
            raise GridError("grid dimension must be 1 or 2")
        for a in axes:
            if a.ndim != 1 or len(a) < 2:
                raise GridError("each axis needs at least 2 samples")
            step = np.diff(a)
            if np.any(step <= 0):
                raise GridError("grid spacing must be positive")
            if not np.allclose(step, step[0], rtol=1e-9, atol=0):
                raise GridError("grid axes must be uniformly spaced")
        values = np.asarray(self.values)
        if values.dtype.kind not in "fc":
            values = values.astype(float)
        if values.shape != tuple(len(a) for a in axes):
            raise GridError(f"values shape {values.shape} does not match grid")
        if not np.all(np.isfinite(values)):
            raise GridError("grid samples must be finite")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", values)

    @classmethod
    def on_box(cls, lo, hi, n, fn=None, dim=1) -> "GridFunction":
        """Uniform grid of ``n`` samples per axis from ``lo`` to ``hi`` inclusive."""
        axes = tuple(np.linspace(lo, hi, n) for _ in range(dim))
        g = cls(axes, np.zeros((n,) * dim))
        if fn is not None:
            vals = np.asarray(fn(g.points()))
            g = cls(axes, vals.reshape(g.shape))
        return g

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(len(a) for a in self.axes)

    @property
    def spacing(self) -> tuple:
        return tuple(float(a[1] - a[0]) for a in self.axes)

    @property
    def domain(self) -> tuple:
        return tuple((float(a[0]), float(a[-1])) for a in self.axes)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def points(self) -> np.ndarray:
        """All grid points, shape (prod(shape), d), in C order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def integral(self) -> complex:
        return complex(self.values.sum() * self.cell_volume)

    def l1_norm(self) -> float:
        return float(np.abs(self.values).sum() * self.cell_volume)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.axes, values)

    def contains(self, pts, tol=1e-12) -> np.ndarray:
        pts = _as_points(pts, self.dim)
        ok = np.ones(len(pts), dtype=bool)
        for k, (lo, hi) in enumerate(self.domain):
            ok &= (pts[:, k] >= lo - tol) & (pts[:, k] <= hi + tol)
        return ok

    def interpolate(self, pts) -> np.ndarray:
        """Multilinear interpolation at ``pts``; raises outside the grid domain."""
        pts = _as_points(pts, self.dim)
        if not np.all(self.contains(pts)):
            raise GridError("out of domain")
        if self.dim == 1:
            v = self.values
            if np.iscomplexobj(v):
                return np.interp(pts[:, 0], self.axes[0], v.real) + 1j * np.interp(pts[:, 0], self.axes[0], v.imag)
            return np.interp(pts[:, 0], self.axes[0], v)
        from scipy.interpolate import RegularGridInterpolator

        clipped = np.column_stack([np.clip(pts[:, k], lo, hi) for k, (lo, hi) in enumerate(self.domain)])
        return RegularGridInterpolator(self.axes, self.values)(clipped)


@dataclass(frozen=True)
class NoiseBound:
    """Per-frame noise level: the L1 norm of each noise frame is at most ``sigma``."""

    sigma: float = field(default=0.0)

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError("noise level must be a finite nonnegative number")


def pairwise_distances(points: Sequence) -> np.ndarray:
    pts = _as_points(points)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff**2).sum(-1))
