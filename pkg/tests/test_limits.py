import math
import warnings

import numpy as np
import pytest

from multillum import adversarial as adv
from multillum import limits as lim
from multillum.optics import Psf
from multillum.spectral import ProfileSweep, synthesize_psf_multi

from oracles import brute_incoherence


def query(n=2, sigma=1e-3, m_min=1.0, b_lower=1.0, b_upper=1.0, omega_hat=2 * np.pi, omega_check=4 * np.pi,
          c_supp=1.0, c_num=1.0):
    return lim.LimitQuery(n, sigma, m_min, b_lower, b_upper, omega_hat, omega_check, 1, c_supp, c_num)


def test_location_upper_example():
    assert lim.location_limit_upper(query()) == pytest.approx(0.1 / (2 * np.pi))
    assert lim.location_limit_upper(query()) == pytest.approx(0.0159, abs=5e-5)


def test_location_upper_monotone_and_inverse():
    vals = [lim.location_limit_upper(query(sigma=s)) for s in (1e-2, 1e-3, 1e-4, 1e-6)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert lim.location_limit_upper(query(omega_hat=4 * np.pi)) == pytest.approx(
        0.5 * lim.location_limit_upper(query()))


def test_location_lower_example():
    assert lim.location_limit_lower(query()) == pytest.approx(2.93e-3, abs=5e-6)
    q1 = query(n=1, sigma=0.05, b_upper=2.0)
    assert lim.location_limit_lower(q1) == pytest.approx(math.exp(-1) * 0.05 / (4 * np.pi * 2.0))


def test_number_limits():
    q = query(sigma=1e-4)
    assert lim.number_limit_upper(q) == pytest.approx(1e-2 / (2 * np.pi))
    assert lim.number_limit_upper(query(sigma=1e-4, c_num=3.0)) == pytest.approx(3 * lim.number_limit_upper(q))
    # exponent 1/(2n-2) exceeds 1/(2n-1), so for ratios below one the count is
    # resolved at a smaller separation than the locations
    for n in range(2, 6):
        qn = query(n=n)
        assert lim.number_limit_upper(qn) < lim.location_limit_upper(qn)
    tau = math.exp(-1) / (4 * np.pi) * 1e-3 ** 0.5
    assert lim.number_limit_lower(query()) == pytest.approx(2 * tau)
    assert adv.kernel_threshold("number", 2, 1.0, 1.0) == pytest.approx(1 / 6)
    lows = [lim.number_limit_lower(query(omega_check=w)) for w in (1.0, 2.0, 5.0)]
    assert lows[0] > lows[1] > lows[2]


def test_cluster_limit():
    q = query()
    tau, spacing = lim.cluster_limit(q, 4.0)
    assert spacing / tau == pytest.approx(4.0, rel=1e-15)
    t2, _ = lim.cluster_limit(q, 8.0)
    assert math.log(tau / t2, 2) == pytest.approx(5 / 3)
    spacings = [lim.cluster_limit(query(n=3), s)[1] for s in range(3, 11)]
    assert all(a > b for a, b in zip(spacings, spacings[1:]))
    with pytest.raises(lim.LimitError, match="cluster collision"):
        lim.cluster_limit(q, 2.0)


def test_unknown_pattern_limit():
    v = lim.unknown_pattern_limit(2, 0.05, 1.0, np.pi, 0.2)
    assert v == pytest.approx(2.2 * math.e * 0.5)
    assert v == pytest.approx(2.990, abs=1e-3)
    assert lim.unknown_pattern_limit(2, 0.2, 1.0, np.pi, 0.2) == pytest.approx(2 * v)
    assert lim.unknown_pattern_limit(2, 0.05, 1.0, np.pi, 1e12) < 1e-4
    with pytest.raises(lim.LimitError, match="degenerate illumination matrix"):
        lim.unknown_pattern_limit(2, 0.05, 1.0, np.pi, 0.0)


def test_query_validation():
    with pytest.raises(lim.LimitError, match="noise exceeds admissible range"):
        query(sigma=2.0)
    with pytest.raises(lim.LimitError):
        query(omega_hat=0.0)
    with pytest.raises(lim.LimitError):
        lim.location_limit_upper(query(n=1))


def test_missing_constant_warns():
    with pytest.warns(UserWarning, match="not a certified constant"):
        v = lim.location_limit_upper(query(c_supp=None))
    assert v == pytest.approx(lim.location_limit_upper(query()))


def test_post_estimate_and_support():
    assert lim.post_estimate(2, 0.01, 1.0, np.pi, 2.0, 1.0) == pytest.approx(4 * 0.01 / np.pi)
    assert lim.support_radius(3, 2.0) == pytest.approx(0.5)
    assert lim.support_contained([0.1, -0.4], 3, 2.0)
    assert not lim.support_contained([0.6], 3, 2.0)


EVALUATORS = [
    lim.location_limit_upper,
    lim.location_limit_lower,
    lim.number_limit_upper,
    lim.number_limit_lower,
    lambda q: lim.cluster_limit(q, 4.0)[0],
    lambda q: lim.cluster_limit(q, 4.0)[1],
]


@pytest.mark.parametrize("c", [1e-3, 0.37, 7.0, 1e4])
def test_homogeneity(c):
    for n in (2, 3, 5):
        base = query(n=n, sigma=2e-3, m_min=0.8)
        scaled = query(n=n, sigma=2e-3 * c, m_min=0.8 * c)
        for f in EVALUATORS:
            assert f(scaled) == pytest.approx(f(base), rel=1e-12)
        u0 = lim.unknown_pattern_limit(n, 2e-3, 0.8, np.pi, 0.3)
        assert lim.unknown_pattern_limit(n, 2e-3 * c, 0.8 * c, np.pi, 0.3) == pytest.approx(u0, rel=1e-12)


@pytest.fixture(scope="module")
def confocal():
    return synthesize_psf_multi(ProfileSweep(Psf.sinc(np.pi)), Psf.sinc(np.pi)).with_exact_spectrum()


def test_lower_below_upper_sweep(confocal):
    b_lower = 0.1 * confocal.b_upper
    sigma = 1e-3 * confocal.b_upper
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        for n in range(2, 6):
            q = lim.query_for("complex_location", confocal, n, sigma, 1.0, b_lower)
            assert lim.location_limit_lower(q) < lim.location_limit_upper(q)


@pytest.mark.parametrize("kind", ["complex", "positive", "number", "cluster"])
def test_pair_spacing_equals_lower_formula(kind, confocal):
    sigma = 1e-3 * confocal.b_upper
    for n in (2, 3):
        pair = adv.construct_pair(kind, n, sigma, 1.0, confocal, certify=False)
        q = lim.query_for(kind, confocal, n, sigma, 1.0, 0.1 * confocal.b_upper, s=4.0)
        if kind in ("complex", "positive"):
            formula = lim.location_limit_lower(q)
        elif kind == "number":
            formula = lim.number_limit_lower(q) / 2
        else:
            formula = lim.cluster_limit(q, 4.0)[0]
        assert pair.tau == pytest.approx(formula, rel=1e-12)
        assert np.diff(pair.nodes).min() == pytest.approx(pair.tau, rel=1e-9)


def test_limit_table(confocal):
    rows = lim.limit_table(confocal, [2, 3], 1e-3 * confocal.b_upper, 1.0, 0.1 * confocal.b_upper)
    assert [r["n"] for r in rows] == [2, 3]
    for r in rows:
        assert r["cluster_spacing"] == pytest.approx(4 * r["cluster_tau"])
        assert r["location_lower"] < r["location_upper"]


def test_incoherence_analytic():
    assert lim.illumination_incoherence(np.eye(2)) == pytest.approx(1.0, abs=1e-3)
    assert lim.illumination_incoherence(np.ones((2, 2))) == pytest.approx(0.0, abs=1e-3)
    assert lim.illumination_incoherence([[1, 0.5], [0.5, 1]]) == pytest.approx(0.5, abs=1e-3)
    assert lim.illumination_incoherence([[3.0]]) == pytest.approx(3.0)


def test_incoherence_random_against_brute_force():
    rng = np.random.default_rng(2024)
    for i in range(20):
        k = 2 if i < 10 else 3
        im = rng.uniform(-1, 1, (rng.integers(k, k + 3), k))
        assert lim.illumination_incoherence(im) == pytest.approx(brute_incoherence(im), abs=1e-3)


def test_incoherence_complex_search():
    im = np.array([[1, 0.5], [0.5, 1]])
    real = lim.illumination_incoherence(im)
    cplx = lim.illumination_incoherence(im, complex_search=True)
    # polygon moduli at 16 angles: within cos(pi/16) of the real optimum and never above it by more
    assert cplx <= real * (1 + 1e-9) / np.cos(np.pi / 16)
    assert cplx >= real * np.cos(np.pi / 16) - 1e-9
    with pytest.raises(lim.LimitError):
        lim.illumination_incoherence(np.array([[1j, 0.0]]))


def test_incoherence_validation():
    with pytest.raises(lim.LimitError):
        lim.illumination_incoherence(np.zeros((0, 2)))
    with pytest.raises(lim.LimitError):
        lim.illumination_incoherence([[np.nan, 1.0]])
