"""Reference values computed without the package under test.

Each oracle uses a closed form or a brute-force search that shares no code
with ``multillum``.
"""
import math

import numpy as np
from scipy import integrate


def sinc_autocorrelation(W, u):
    # integral of sin(W x)/x * sin(W (x+u))/(x+u) dx = pi sin(W u)/u
    u = np.asarray(u, dtype=float)
    safe = np.where(u == 0, 1.0, u)
    return np.where(u == 0, np.pi * W, np.pi * np.sin(W * safe) / safe)


def sinc_autocorrelation_quad(W, u, R=4000.0):
    # direct numerical integration over [-R, R] with oscillatory weights split by period
    f = lambda x: np.sinc(W * x / np.pi) * W * np.sinc(W * (x - u) / np.pi) * W
    edges = np.linspace(-R, R, 4001)
    return sum(integrate.quad(f, a, b)[0] for a, b in zip(edges[:-1], edges[1:]))


def gauss_autocorrelation(w, u):
    # exp(-x^2/2w^2) correlated with itself: w sqrt(pi) exp(-u^2/4w^2)
    return w * np.sqrt(np.pi) * np.exp(-np.asarray(u) ** 2 / (4 * w**2))


def sim_spectrum(W, xi):
    # cos(W u) * pi sin(W u)/u has transform (pi^2/2)(1[|xi-W|<W] + 1[|xi+W|<W])
    xi = np.asarray(xi, dtype=float)
    return 0.5 * np.pi**2 * ((np.abs(xi - W) < W).astype(float) + (np.abs(xi + W) < W))


def confocal_triangle(W, xi):
    # (pi sin(W u)/u)^2 has transform pi^2 (pi/2)(2W - |xi|)_+
    return np.pi**2 * 0.5 * np.pi * np.clip(2 * W - np.abs(np.asarray(xi, dtype=float)), 0, None)


def divided_difference_weights(t):
    """Null vector of the moment matrix with degree len(t) - 2: a_j = 1/prod_{q != j}(t_j - t_q)."""
    t = np.asarray(t, dtype=float)
    return np.array([1.0 / np.prod([t[j] - t[q] for q in range(len(t)) if q != j]) for j in range(len(t))])


def lagrange_direct(nodes, t):
    out = []
    for j, tj in enumerate(nodes):
        v = 1.0
        for q, tq in enumerate(nodes):
            if q != j:
                v *= (t - tq) / (tj - tq)
        out.append(v)
    return np.array(out)


def factorial_ratio(n):
    return math.factorial(2 * n) / (math.factorial(n - 1) * math.factorial(n))


def brute_incoherence(im, n_grid=401, zooms=4):
    """min over x with one coordinate pinned to 1 and the rest in [-1, 1] of max_i |(im x)_i|.

    A dense grid over the free coordinates, then repeated zooming around the best point.
    """
    im = np.asarray(im, dtype=float)
    k = im.shape[1]
    best = np.inf
    for j in range(k):
        free = [q for q in range(k) if q != j]
        if not free:
            best = min(best, float(np.abs(im[:, j]).max()))
            continue
        lo = -np.ones(len(free))
        hi = np.ones(len(free))
        centre = None
        for _ in range(zooms + 1):
            axes = [np.linspace(a, b, n_grid if len(free) == 1 else 121) for a, b in zip(lo, hi)]
            mesh = np.meshgrid(*axes, indexing="ij")
            x = np.zeros((mesh[0].size, k))
            x[:, j] = 1.0
            for q, m in zip(free, mesh):
                x[:, q] = m.ravel()
            vals = np.abs(x @ im.T).max(axis=1)
            i = int(np.argmin(vals))
            centre = x[i, free]
            width = np.array([ax[1] - ax[0] for ax in axes]) * 4
            lo = np.maximum(centre - width, -1)
            hi = np.minimum(centre + width, 1)
            cand = float(vals[i])
        best = min(best, cand)
    return best
