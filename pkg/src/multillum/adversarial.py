"""Worst-case pairs of discrete measures that the imaging system cannot tell apart.

Every construction places ``k`` nodes ``t_j`` on a line, takes the one
dimensional null vector ``a`` of the moment matrix with columns
``(1, t_j, ..., t_j^degree)`` and splits ``sum_j a_j delta_{t_j}`` into two
measures ``mu`` and ``mu_hat`` with ``mu_hat - mu = -sum_j a_j delta_{t_j}``.
Vanishing moments make ``F[mu_hat - mu]`` flat to high order at the origin, so
the two measures look alike through any kernel whose spectrum is small outside
a band ``[-omega_check, omega_check]``.

Four layouts are supported:

``complex_location``
    2n equispaced nodes, ``mu`` takes the first n of them.
``positive_location``
    2n equispaced nodes, ``mu`` takes the even-indexed ones. Both measures are
    positive.
``positive_cluster``
    n clusters of three nodes (every other cluster collapsed to one node),
    spread by a factor ``s``. Both measures are positive.
``number_ambiguity``
    2n - 1 equispaced nodes. ``mu`` has n atoms and ``mu_hat`` has n - 1.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .measures import DiscreteMeasure
from .spectral import PsfMulti, omega_check as _omega_check

KINDS = ("complex_location", "positive_location", "positive_cluster", "number_ambiguity")
KIND_ALIASES = {
    "complex": "complex_location",
    "positive": "positive_location",
    "cluster": "positive_cluster",
    "number": "number_ambiguity",
}
MOMENT_TOL = 1e-10
# smallest admissible singular value of the scaled moment matrix, relative to the largest
RANK_TOL = 1e-13
MIN_AUDIT_POINTS = 2048
SAMPLES_PER_PERIOD = 16
AUDIT_SPAN = 1.5
DEFAULT_CLUSTER_SPREAD = 4.0


class AdversarialError(ValueError):
    pass


class ConditioningError(AdversarialError, ArithmeticError):
    pass


def _log_factorial(k: int) -> float:
    return math.lgamma(k + 1)


def lagrange_weights(nodes, t) -> np.ndarray:
    """Lagrange basis polynomials of ``nodes`` evaluated at ``t``.

    ``w_j = prod_{q != j} (t - t_q) / (t_j - t_q)``. The weights sum to one.
    """
    x = np.asarray(nodes, dtype=float).ravel()
    if len(x) == 0:
        raise AdversarialError("no nodes")
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.any(diff == 0):
        raise AdversarialError("duplicate nodes")
    w = np.empty(len(x))
    for j in range(len(x)):
        others = np.delete(x, j)
        w[j] = np.prod((t - others) / (x[j] - others))
    return w


@dataclass(frozen=True)
class MomentSystem:
    """Moment matrix ``A[k, j] = t_j**k`` for ``k = 0..degree``."""

    nodes: np.ndarray
    degree: int

    def __post_init__(self):
        t = np.asarray(self.nodes, dtype=float).ravel()
        if len(t) < 2:
            raise AdversarialError("need at least 2 nodes")
        if np.any(np.diff(t) <= 0):
            raise AdversarialError("nodes must be strictly increasing")
        if not 0 <= self.degree <= len(t) - 2:
            raise AdversarialError("degree must lie in [0, node count - 2]")
        object.__setattr__(self, "nodes", t)

    @classmethod
    def for_nodes(cls, nodes) -> "MomentSystem":
        """System whose null space is one dimensional (degree = node count - 2)."""
        t = np.asarray(nodes, dtype=float).ravel()
        return cls(t, len(t) - 2)

    @property
    def matrix(self) -> np.ndarray:
        return np.vander(self.nodes, self.degree + 1, increasing=True).T

    def residuals(self, a) -> np.ndarray:
        """Moments ``Q_k = sum_j a_j t_j**k``, k = 0..degree."""
        return self.matrix @ np.asarray(a)

    def residual_scales(self, a) -> np.ndarray:
        """``sum_j |a_j| * max_j |t_j|**k``; the natural size of each moment."""
        tmax = np.abs(self.nodes).max()
        return np.abs(a).sum() * tmax ** np.arange(self.degree + 1)


def nullspace_amplitudes(system: MomentSystem) -> np.ndarray:
    """Unit vector spanning the null space of the moment matrix.

    The nodes are centred and scaled to [-1, 1] first; the null space is
    unchanged because the scaled monomials span the same polynomial space.
    The last right singular vector of the scaled matrix is returned with its
    first entry made positive.

    Raises
    ------
    ConditioningError
        If the scaled matrix is numerically rank deficient, or an entry of the
        null vector vanishes.
    """
    if system.degree != len(system.nodes) - 2:
        raise AdversarialError("null space is one dimensional only for degree = node count - 2")
    t = system.nodes
    centre = 0.5 * (t[0] + t[-1])
    half = 0.5 * (t[-1] - t[0])
    scaled = np.vander((t - centre) / half, system.degree + 1, increasing=True).T
    _, sv, vh = np.linalg.svd(scaled)
    if sv[-1] < RANK_TOL * sv[0]:
        raise ConditioningError(f"ill-conditioned moment system: singular value ratio {sv[-1] / sv[0]:.3g}")
    a = vh[-1].real
    a = a / np.linalg.norm(a)
    if np.abs(a).min() < 1e-12:
        raise ConditioningError("ill-conditioned moment system: vanishing amplitude")
    return a * np.sign(a[0])


@dataclass(frozen=True)
class Certificate:
    max_spectral_gap: float
    passed: bool
    moment_residuals: list
    moment_scales: list
    moments_ok: bool
    tail_value: float
    tail_ok: bool
    observed_tail: float
    audit_points: int
    audit_span: float

    def to_dict(self) -> dict:
        return {
            "max_spectral_gap": self.max_spectral_gap,
            "passed": self.passed,
            "moment_residuals": list(self.moment_residuals),
            "moment_scales": list(self.moment_scales),
            "moments_ok": self.moments_ok,
            "tail_value": self.tail_value,
            "tail_ok": self.tail_ok,
            "observed_tail": self.observed_tail,
            "audit_points": self.audit_points,
            "audit_span": self.audit_span,
        }


@dataclass(frozen=True)
class AdversarialPair:
    """Two measures whose blurred spectra differ by less than ``sigma``.

    ``nodes`` and ``amplitudes`` hold the full signed vector ``a``, so that
    ``mu_hat - mu = -sum_j a_j delta_{t_j}``.
    """

    mu: DiscreteMeasure
    mu_hat: DiscreteMeasure
    tau: float
    sigma: float
    m_min: float
    kind: str
    n: int
    nodes: np.ndarray
    amplitudes: np.ndarray
    omega_check: float
    threshold: float
    b_upper: float
    spread: float | None = None
    certificate: Certificate | None = None

    @property
    def system(self) -> MomentSystem:
        return MomentSystem.for_nodes(self.nodes)

    def with_certificate(self, cert: Certificate) -> "AdversarialPair":
        return replace(self, certificate=cert)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "n": self.n,
            "tau": self.tau,
            "sigma": self.sigma,
            "m_min": self.m_min,
            "omega_check": self.omega_check,
            "threshold": self.threshold,
            "b_upper": self.b_upper,
            "spread": self.spread,
            "nodes": self.nodes.tolist(),
            "amplitudes": self.amplitudes.tolist(),
        }
        if self.certificate is not None:
            out["max_gap"] = self.certificate.max_spectral_gap
            out["moment_residuals"] = list(self.certificate.moment_residuals)
            out["certificate"] = self.certificate.to_dict()
        return out


def _kind(kind: str) -> str:
    kind = KIND_ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise AdversarialError(f"unknown kind {kind!r}; expected one of {KINDS}")
    return kind


def cluster_amplitude_constant(n: int, s: float) -> float:
    """Amplitude-sum constant for the cluster layout, ``2n e^11 s^2 (n+1)^10 2^(2n-8) / pi^2``."""
    return float(
        math.exp(math.log(2 * n) + 11 + 2 * math.log(s) + 10 * math.log(n + 1) + (2 * n - 8) * math.log(2) - 2 * math.log(math.pi))
    )


def amplitude_sum_constant(kind: str, n: int, s: float | None = None) -> float:
    """Bound on ``sum_j |a_j| / m_min`` for each layout."""
    kind = _kind(kind)
    if kind in ("complex_location", "positive_location"):
        return math.exp(_log_factorial(2 * n) - _log_factorial(n - 1) - _log_factorial(n))
    if kind == "number_ambiguity":
        return math.exp(_log_factorial(2 * n - 1) - 2 * _log_factorial(n - 1))
    return cluster_amplitude_constant(n, s)


def kernel_threshold(kind: str, n: int, sigma: float, m_min: float, s: float | None = None) -> float:
    """Spectral level that defines ``omega_check`` for each layout.

    It is ``sigma / (m_min * C)`` with ``C`` the amplitude-sum constant, so that
    the amplitude sum times the threshold is at most ``sigma``.
    """
    return sigma / (m_min * amplitude_sum_constant(kind, n, s))


def spacing_exponent(kind: str, n: int) -> float:
    return 1.0 / (2 * n - 2) if _kind(kind) == "number_ambiguity" else 1.0 / (2 * n - 1)


def node_spacing(kind: str, n: int, ratio: float, omega_check: float, s: float | None = None) -> float:
    """Node spacing ``tau`` for a layout.

    ``ratio`` is ``sigma / (m_min * b_upper)``.
    """
    kind = _kind(kind)
    if not omega_check > 0:
        raise AdversarialError("omega_check must be positive")
    p = spacing_exponent(kind, n)
    if kind == "positive_cluster":
        return 0.2 * math.exp(-1) / (omega_check * s ** ((2 * n + 1) / (2 * n - 1))) * ratio**p
    return math.exp(-1) / omega_check * ratio**p


def node_layout(kind: str, n: int, tau: float, s: float | None = None) -> np.ndarray:
    """Node positions ``t_1..t_k`` in index order (which is also increasing order)."""
    kind = _kind(kind)
    if kind in ("complex_location", "positive_location"):
        j = np.arange(1, 2 * n + 1)
        return (j - n - 0.5) * tau
    if kind == "number_ambiguity":
        j = np.arange(1, 2 * n)
        return (j - n) * tau
    if s is None or not s > 2:
        raise AdversarialError(f"cluster collision: spread factor must exceed 2, got {s}")
    t = np.empty(2 * n + 1)  # 1-based scratch
    for j in range(2, 2 * n + 1, 2):
        t[j] = -((s * n - 2) / 2) * tau + ((j - 2) * s / 2) * tau
    for j in range(1, 2 * n, 2):
        anchor = 4 * math.ceil((j + 1) / 4) - 2
        t[j] = t[anchor] + (-1) ** ((j + 1) // 2) * tau
    return t[1:]


def _check_inputs(kind, n, sigma, m_min, b_upper):
    lowest = 1 if kind == "complex_location" else 2
    if int(n) != n or n < lowest:
        raise AdversarialError(f"{kind} needs n >= {lowest}, got {n}")
    if not (sigma > 0 and m_min > 0):
        raise AdversarialError("sigma and m_min must be positive")
    if sigma >= m_min * b_upper:
        raise AdversarialError(
            f"noise exceeds admissible range: sigma={sigma:.4g} >= m_min*b_upper={m_min * b_upper:.4g}"
        )


def construct_pair(
    kind: str,
    n: int,
    sigma: float,
    m_min: float,
    pm: PsfMulti,
    s: float | None = None,
    normalize_all: bool = False,
    certify: bool = True,
) -> AdversarialPair:
    """Build the indistinguishable pair of a given layout.

    Parameters
    ----------
    kind : str
        One of ``KINDS`` or a short alias (complex, positive, cluster, number).
    n : int
        Number of atoms in ``mu``.
    sigma, m_min : float
        Noise level and minimal amplitude, ``0 < sigma < m_min * b_upper``.
    pm : PsfMulti
        Effective PSF; supplies ``b_upper`` and the outer cutoff ``omega_check``.
    s : float, optional
        Cluster spread factor (> 2), cluster layout only.
    normalize_all : bool
        For ``complex_location``, scale so the minimum over all 2n amplitudes
        equals ``m_min`` instead of the minimum over the first n.
    certify : bool
        Attach ``certify_pair`` output.
    """
    kind = _kind(kind)
    n = int(n)
    if kind == "positive_cluster" and s is None:
        s = DEFAULT_CLUSTER_SPREAD
    b_upper = pm.b_upper
    _check_inputs(kind, n, sigma, m_min, b_upper)
    thr = kernel_threshold(kind, n, sigma, m_min, s)
    check, resolved = _omega_check(pm, thr)
    if not resolved:
        warnings.warn(
            f"spectrum stays above {thr:.3g} up to the grid edge; omega_check is a lower estimate",
            RuntimeWarning,
            stacklevel=2,
        )
    tau = node_spacing(kind, n, sigma / (m_min * b_upper), check, s)
    nodes = node_layout(kind, n, tau, s)
    a = nullspace_amplitudes(MomentSystem.for_nodes(nodes))

    if kind == "complex_location":
        ref = np.abs(a) if normalize_all else np.abs(a[:n])
        a = a * (m_min / ref.min())
        mu_idx = np.arange(n)
        hat_idx = np.arange(n, 2 * n)
    elif kind == "number_ambiguity":
        a = a * np.sign(a[0])
        a = a * (m_min / np.abs(a[0::2]).min())
        mu_idx = np.arange(0, 2 * n - 1, 2)
        hat_idx = np.arange(1, 2 * n - 1, 2)
    else:
        a = a * np.sign(a[-1])
        a = a * (m_min / np.abs(a[1::2]).min())
        mu_idx = np.arange(1, 2 * n, 2)
        hat_idx = np.arange(0, 2 * n, 2)
    positive = kind != "complex_location"
    mu = DiscreteMeasure(nodes[mu_idx], a[mu_idx], positive=positive)
    mu_hat = DiscreteMeasure(nodes[hat_idx], -a[hat_idx], positive=positive)
    pair = AdversarialPair(
        mu, mu_hat, float(tau), float(sigma), float(m_min), kind, n, nodes, a, float(check), float(thr),
        float(b_upper), None if s is None else float(s),
    )
    if certify:
        pair = pair.with_certificate(certify_pair(pair, pm))
    return pair


def audit_grid(pair: AdversarialPair, points: int | None = None) -> np.ndarray:
    """Frequencies over ``[-1.5 omega_check, 1.5 omega_check]``, dense enough for the node extent."""
    half = AUDIT_SPAN * pair.omega_check
    tmax = np.abs(pair.nodes).max()
    per_period = int(np.ceil(2 * half * tmax / (2 * np.pi) * SAMPLES_PER_PERIOD)) + 1
    m = max(MIN_AUDIT_POINTS, per_period, points or 0)
    return np.linspace(-half, half, m)


def _check_grid(pair, xi):
    half = AUDIT_SPAN * pair.omega_check
    if xi.ndim != 1 or len(xi) < 2:
        raise AdversarialError("audit grid must be a 1D array")
    if len(xi) < MIN_AUDIT_POINTS:
        raise AdversarialError(f"grid too coarse: audit grid needs at least {MIN_AUDIT_POINTS} points, got {len(xi)}")
    if xi.min() > -half * (1 - 1e-12) or xi.max() < half * (1 - 1e-12):
        raise AdversarialError(f"grid too coarse: audit grid must cover [-{half:.4g}, {half:.4g}]")
    step = np.max(np.diff(np.sort(xi)))
    tmax = np.abs(pair.nodes).max()
    if step * tmax > 2 * np.pi / SAMPLES_PER_PERIOD * (1 + 1e-9):
        raise AdversarialError(f"grid too coarse: step {step:.3g} exceeds 1/16 period for nodes up to {tmax:.3g}")


def spectral_gap(pair: AdversarialPair, pm: PsfMulti, xi) -> np.ndarray:
    """``|F[psf_multi](xi)| * |F[mu_hat - mu](xi)|`` on the given frequencies."""
    xi = np.asarray(xi, dtype=float)
    diff = np.exp(1j * np.outer(xi, pair.nodes)) @ pair.amplitudes
    spec = pm.spectrum_at(xi, exact=pm.exact is not None)
    return np.abs(spec) * np.abs(diff)


def certify_pair(pair: AdversarialPair, pm: PsfMulti, xi_grid=None) -> Certificate:
    """Audit the indistinguishability of a pair.

    Checks three things:

    * ``max |F[psf_multi]| |F[mu_hat - mu]| < sigma`` on an audit grid covering
      ``1.5 omega_check`` with at least 2048 points and 16 samples per period
      of the fastest node oscillation;
    * the amplitude sum times the kernel threshold is at most ``sigma``; since
      ``|F[psf_multi]|`` is strictly below the threshold beyond ``omega_check``,
      the gap stays below ``sigma`` there as well;
    * the moments ``Q_k`` vanish to ``1e-10`` of their natural scale.

    ``passed`` is the conjunction of the three.
    """
    xi = audit_grid(pair) if xi_grid is None else np.asarray(xi_grid, dtype=float)
    _check_grid(pair, xi)
    gap = spectral_gap(pair, pm, xi)
    max_gap = float(gap.max())

    total = float(np.abs(pair.amplitudes).sum())
    tail_value = total * pair.threshold
    outside = np.abs(xi) >= pair.omega_check
    observed = float(gap[outside].max()) if np.any(outside) else 0.0

    sys = pair.system
    q = sys.residuals(pair.amplitudes)
    scales = sys.residual_scales(pair.amplitudes)
    moments_ok = bool(np.all(np.abs(q) <= MOMENT_TOL * scales))
    tail_ok = tail_value <= pair.sigma * (1 + 1e-12)
    passed = max_gap < pair.sigma and tail_ok and moments_ok
    return Certificate(
        max_gap, bool(passed), [float(v) for v in np.abs(q)], [float(v) for v in scales], moments_ok,
        tail_value, bool(tail_ok), observed, int(len(xi)), float(AUDIT_SPAN * pair.omega_check),
    )


def perturbed_pair(pair: AdversarialPair, index: int = -1, shift: float = 10.0) -> AdversarialPair:
    """Copy with one node moved by ``shift * tau`` (a negative control).

    The amplitudes are kept, so the moment conditions no longer hold.
    """
    in_mu = np.isin(pair.nodes, pair.mu.locations[:, 0])
    nodes = pair.nodes.copy()
    nodes[index] += shift * pair.tau
    order = np.argsort(nodes)
    nodes, a, mu_mask = nodes[order], pair.amplitudes[order], in_mu[order]
    positive = pair.mu.positive
    mu = DiscreteMeasure(nodes[mu_mask], a[mu_mask], positive=positive)
    mu_hat = DiscreteMeasure(nodes[~mu_mask], -a[~mu_mask], positive=positive)
    return replace(pair, mu=mu, mu_hat=mu_hat, nodes=nodes, amplitudes=a, certificate=None)


@dataclass(frozen=True)
class AmplitudeAudit:
    amplitude_sum: float
    sum_bound: float
    sum_ok: bool
    ratio: float
    ratio_bound: float | None
    ratio_ok: bool | None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "amplitude_sum": self.amplitude_sum,
            "sum_bound": self.sum_bound,
            "sum_ok": self.sum_ok,
            "ratio": self.ratio,
            "ratio_bound": self.ratio_bound,
            "ratio_ok": self.ratio_ok,
        }


def amplitude_bounds_audit(pair: AdversarialPair) -> AmplitudeAudit:
    """Compare the amplitude sum and the max/min ratio with their factorial bounds.

    The ratio bound ``(2n-1)! / ((n-1)! n!)`` applies to the equispaced 2n-node
    layouts only; it is reported as None for the others.
    """
    a = np.abs(pair.amplitudes)
    n = pair.n
    total = float(a.sum())
    bound = amplitude_sum_constant(pair.kind, n, pair.spread) * pair.m_min
    ratio = float(a.max() / a.min())
    rb = None
    rok = None
    if pair.kind in ("complex_location", "positive_location"):
        rb = math.exp(_log_factorial(2 * n - 1) - _log_factorial(n - 1) - _log_factorial(n))
        rok = bool(ratio <= rb * (1 + 1e-12))
    return AmplitudeAudit(total, bound, bool(total <= bound * (1 + 1e-12)), ratio, rb, rok)
