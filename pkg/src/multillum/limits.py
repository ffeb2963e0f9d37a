"""Closed-form resolution limits and the illumination incoherence functional.

All limits depend on the noise level and the minimal amplitude only through
``sigma / m_min`` and are therefore unchanged when both are scaled together.
The dimensionless constants ``c_supp``, ``c_num`` and ``c_post`` have no known
numerical values; they default to 1.0 and a warning is emitted, since the
outputs are then formula evaluations rather than certified limits.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linprog

from .adversarial import kernel_threshold, node_spacing
from .measures import _as_points
from .spectral import PsfMulti, essential_cutoffs

COMPLEX_ANGLES = 16


class LimitError(ValueError):
    pass


def _constant(value, name):
    if value is None:
        warnings.warn(f"{name} not supplied; using 1.0 (formula evaluation, not a certified constant)",
                      UserWarning, stacklevel=3)
        return 1.0
    if not value > 0:
        raise LimitError(f"{name} must be positive")
    return float(value)


@dataclass(frozen=True)
class LimitQuery:
    """Inputs shared by the limit evaluators.

    ``omega_check`` is the outer cutoff at the threshold of the evaluator being
    called; ``query_for`` fills it in from a PsfMulti.
    """

    n: int
    sigma: float
    m_min: float
    b_lower: float
    b_upper: float
    omega_hat: float
    omega_check: float
    d: int = 1
    c_supp: float | None = None
    c_num: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise LimitError("n must be a positive integer")
        if not (self.sigma > 0 and self.m_min > 0):
            raise LimitError("sigma and m_min must be positive")
        if not (0 < self.b_lower <= self.b_upper):
            raise LimitError("need 0 < b_lower <= b_upper")
        if self.sigma >= self.m_min * self.b_upper:
            raise LimitError("noise exceeds admissible range: sigma >= m_min*b_upper")
        if not (self.omega_hat > 0 and self.omega_check > 0):
            raise LimitError("cutoff frequencies must be positive")
        if self.d not in (1, 2):
            raise LimitError("dimension must be 1 or 2")

    @property
    def ratio_lower(self) -> float:
        return self.sigma / (self.m_min * self.b_lower)

    @property
    def ratio_upper(self) -> float:
        return self.sigma / (self.m_min * self.b_upper)

    def to_dict(self) -> dict:
        return asdict(self)


def _need_two(q):
    if q.n < 2:
        raise LimitError("n must be at least 2")


def location_limit_upper(q: LimitQuery) -> float:
    """Separation above which n sources are stably located: ``(c_supp/omega_hat) r^(1/(2n-1))``."""
    _need_two(q)
    c = _constant(q.c_supp, "c_supp")
    return c / q.omega_hat * q.ratio_lower ** (1.0 / (2 * q.n - 1))


def location_limit_lower(q: LimitQuery) -> float:
    """Spacing of the equispaced indistinguishable pair, ``(e^-1/omega_check) r^(1/(2n-1))``."""
    return node_spacing("complex_location", q.n, q.ratio_upper, q.omega_check)


def number_limit_upper(q: LimitQuery) -> float:
    """Separation above which the source count is stably recovered; exponent ``1/(2n-2)``."""
    _need_two(q)
    c = _constant(q.c_num, "c_num")
    return c / q.omega_hat * q.ratio_lower ** (1.0 / (2 * q.n - 2))


def number_limit_lower(q: LimitQuery) -> float:
    """Minimum separation of the n-atom measure that mimics an (n-1)-atom one, ``2 tau``."""
    _need_two(q)
    return 2.0 * node_spacing("number_ambiguity", q.n, q.ratio_upper, q.omega_check)


def cluster_limit(q: LimitQuery, s: float) -> tuple[float, float]:
    """Intra-cluster spacing ``tau`` and cluster spacing ``s*tau`` of the clustered pair."""
    _need_two(q)
    if not s > 2:
        raise LimitError(f"cluster collision: spread factor must exceed 2, got {s}")
    tau = node_spacing("positive_cluster", q.n, q.ratio_upper, q.omega_check, s)
    return tau, s * tau


def post_estimate(n: int, sigma: float, m_min: float, omega: float, srf: float, c_post: float | None = None) -> float:
    """Location error bound ``(c_post/omega) srf^(2n-2) sigma/m_min`` once sources are resolved.

    ``omega`` and ``srf`` (super-resolution factor) are supplied by the caller.
    """
    if not (sigma > 0 and m_min > 0 and omega > 0 and srf > 0):
        raise LimitError("inputs must be positive")
    c = _constant(c_post, "c_post")
    return c / omega * srf ** (2 * n - 2) * sigma / m_min


def support_radius(n: int, omega_hat: float) -> float:
    """Radius ``(n-1)/(2 omega_hat)`` of the ball the sources must lie in."""
    return (n - 1) / (2.0 * omega_hat)


def support_contained(locations, n: int, omega_hat: float) -> bool:
    pts = _as_points(locations)
    r = np.sqrt((pts**2).sum(-1)).max()
    return bool(r <= support_radius(n, omega_hat) * (1 + 1e-12))


def unknown_pattern_limit(n: int, sigma: float, m_min: float, omega: float, incoherence: float) -> float:
    """Separation bound ``(2.2 e pi/omega) ((sigma/m_min)/incoherence)^(1/n)`` for unknown patterns."""
    if incoherence == 0:
        raise LimitError("degenerate illumination matrix: incoherence is zero")
    if not (incoherence > 0 and sigma > 0 and m_min > 0 and omega > 0 and n >= 1):
        raise LimitError("inputs must be positive")
    return 2.2 * math.e * math.pi / omega * (sigma / m_min / incoherence) ** (1.0 / n)


def _pinned_real(im: np.ndarray, j: int) -> float:
    # min t  s.t.  |(im x)_i| <= t,  x_j = 1,  |x_k| <= 1
    N, k = im.shape
    c = np.zeros(k + 1)
    c[-1] = 1.0
    A = np.vstack([np.hstack([im, -np.ones((N, 1))]), np.hstack([-im, -np.ones((N, 1))])])
    b = np.zeros(2 * N)
    bounds = [(-1.0, 1.0)] * k + [(0, None)]
    bounds[j] = (1.0, 1.0)
    res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if not res.success:
        raise LimitError(f"incoherence subproblem failed: {res.message}")
    return float(res.fun)


def _pinned_complex(im: np.ndarray, j: int, angles: int) -> float:
    # moduli bounded through a polygon of half-planes Re(z e^{-i theta}) <= r
    N, k = im.shape
    th = 2 * np.pi * np.arange(angles) / angles
    cs, sn = np.cos(th), np.sin(th)
    nv = 2 * k + 1
    ar, ai = im.real, im.imag
    rows, rhs = [], []
    for i in range(N):
        # (im x)_i = sum (ar + i ai)(u + i v): real part ar u - ai v, imag part ai u + ar v
        re = np.concatenate([ar[i], -ai[i]])
        imp = np.concatenate([ai[i], ar[i]])
        for c_, s_ in zip(cs, sn):
            rows.append(np.concatenate([c_ * re + s_ * imp, [-1.0]]))
            rhs.append(0.0)
    for m in range(k):
        for c_, s_ in zip(cs, sn):
            r = np.zeros(nv)
            r[m], r[k + m] = c_, s_
            rows.append(r)
            rhs.append(1.0)
    c = np.zeros(nv)
    c[-1] = 1.0
    bounds = [(None, None)] * (2 * k) + [(0, None)]
    bounds[j] = (1.0, 1.0)
    bounds[k + j] = (0.0, 0.0)
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if not res.success:
        raise LimitError(f"incoherence subproblem failed: {res.message}")
    return float(res.fun)


def illumination_incoherence(im, complex_search: bool = False, angles: int = COMPLEX_ANGLES) -> float:
    """``min over ||x||_inf >= 1 of ||IM x||_inf`` for an N x n illumination matrix.

    The objective is homogeneous, so the minimum is attained with one
    coordinate pinned to modulus one and the rest inside the unit ball. Each
    pinned subproblem is a linear program. By default ``x`` is real; with
    ``complex_search`` the moduli are approximated by regular polygons with
    ``angles`` sides and a complex matrix is allowed.
    """
    im = np.asarray(im)
    if im.ndim != 2 or im.shape[0] < 1 or im.shape[1] < 1:
        raise LimitError("illumination matrix must be N x n with N, n >= 1")
    if not np.all(np.isfinite(im)):
        raise LimitError("illumination matrix must be finite")
    if complex_search or np.iscomplexobj(im) and np.any(im.imag != 0):
        if not complex_search:
            raise LimitError("complex illumination matrix needs complex_search=True")
        return min(_pinned_complex(im.astype(complex), j, angles) for j in range(im.shape[1]))
    im = im.real.astype(float)
    return min(_pinned_real(im, j) for j in range(im.shape[1]))


def query_for(kind: str, pm: PsfMulti, n: int, sigma: float, m_min: float, b_lower: float,
              s: float | None = None, d: int = 1, c_supp=None, c_num=None) -> LimitQuery:
    """LimitQuery whose cutoffs come from ``pm`` at the thresholds of a given pair kind."""
    thr = kernel_threshold(kind, n, sigma, m_min, s if s is not None else 4.0)
    report = essential_cutoffs(pm, b_lower, thr)
    return LimitQuery(n, sigma, m_min, b_lower, report.b_upper, report.omega_hat, report.omega_check, d, c_supp, c_num)


def limit_table(pm: PsfMulti, ns, sigma: float, m_min: float, b_lower: float, s: float = 4.0,
                c_supp=None, c_num=None) -> list[dict]:
    """One row of every limit per source count, cutoffs taken from ``pm``."""
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        for n in ns:
            ql = query_for("complex_location", pm, n, sigma, m_min, b_lower, c_supp=c_supp, c_num=c_num)
            qn = query_for("number_ambiguity", pm, n, sigma, m_min, b_lower, c_supp=c_supp, c_num=c_num)
            qc = query_for("positive_cluster", pm, n, sigma, m_min, b_lower, s=s)
            tau_c, st_c = cluster_limit(qc, s)
            rows.append({
                "n": n,
                "omega_hat": ql.omega_hat,
                "omega_check_location": ql.omega_check,
                "omega_check_number": qn.omega_check,
                "omega_check_cluster": qc.omega_check,
                "location_upper": location_limit_upper(ql),
                "location_lower": location_limit_lower(ql),
                "number_upper": number_limit_upper(qn),
                "number_lower": number_limit_lower(qn),
                "cluster_tau": tau_c,
                "cluster_spacing": st_c,
            })
    return rows
