import math

import numpy as np
import pytest
from scipy import integrate, stats

import fpplab as F
from fpplab import DomainError, UnsupportedKindError


CONTINUOUS_SPECS = [
    "gamma:a=0.5,b=1",
    "gamma:a=2,b=0.5",
    "exp:rate=1",
    "exp:rate=2.5",
    "uniform:lo=0,hi=1",
    "uniform:lo=1,hi=2",
    "halfnormal",
    "trunc(exp:rate=1;k=10,c5=0.5)",
    "trunc(gamma:a=2,b=1;k=50,c5=1)",
]


def _interior_grid(d, lo_q=1e-6, hi_q=1 - 1e-6, num=400):
    return np.asarray(d.quantile(np.linspace(lo_q, hi_q, num)))


def _kinks(d):
    """Breakpoints where the density is non-smooth, for the quad oracle."""
    if isinstance(d, F.Truncated):
        return [d.cut, d.top]
    if isinstance(d, F.Tabulated):
        return list(d.xs)
    return []


def _quad_pdf(d, lo, hi):
    pts = [p for p in _kinks(d) if lo < p < hi]
    val, _ = integrate.quad(
        d.pdf, lo, hi, points=pts or None, limit=max(300, 50 + 10 * len(pts)),
        epsabs=1e-12, epsrel=1e-11,
    )
    return val


@pytest.mark.parametrize("spec", CONTINUOUS_SPECS)
def test_cdf_matches_integrated_density(spec):
    d = F.parse_spec(spec)
    lo, _ = d.support
    xs = _interior_grid(d, 1e-4, 1 - 1e-4, 60)
    for x in xs:
        val = _quad_pdf(d, lo, float(x))
        assert abs(val - float(d.cdf(float(x)))) <= 1e-8


@pytest.mark.parametrize("spec", CONTINUOUS_SPECS)
def test_density_integrates_to_one(spec):
    d = F.parse_spec(spec)
    lo, hi = d.support
    upper = hi if math.isfinite(hi) else float(d.quantile(1 - 1e-14)) + 40.0
    val = _quad_pdf(d, lo, upper)
    assert val == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("spec", CONTINUOUS_SPECS)
def test_quantile_cdf_roundtrip(spec):
    d = F.parse_spec(spec)
    xs = _interior_grid(d)
    back = np.asarray(d.quantile(np.asarray(d.cdf(xs))))
    scale = np.maximum(np.abs(xs), 1e-12)
    assert np.max(np.abs(back - xs) / scale) <= 1e-10


@pytest.mark.parametrize("spec", CONTINUOUS_SPECS)
def test_cdf_monotone_and_normalized(spec):
    d = F.parse_spec(spec)
    lo, hi = d.support
    xs = np.linspace(lo - 1.0, (hi if math.isfinite(hi) else float(d.quantile(1 - 1e-12))) + 1.0, 800)
    vals = np.asarray(d.cdf(xs))
    assert np.all(np.diff(vals) >= -1e-15)
    assert vals[0] == 0.0
    assert vals[-1] == pytest.approx(1.0, abs=1e-12)


def test_sampling_is_deterministic():
    d = F.parse_spec("exp:rate=1")
    a = d.sample(np.random.default_rng(np.random.SeedSequence((5, 0))), 10)
    b = d.sample(np.random.default_rng(np.random.SeedSequence((5, 0))), 10)
    assert np.array_equal(a, b)
    first = float(d.sample(np.random.default_rng(np.random.SeedSequence((5, 0)))))
    assert first == a[0]


def test_bernoulli_sampling_frequency(rng):
    d = F.parse_spec("bernoulli:a=1,b=2,p=0.5")
    draws = d.sample(rng, 100_000)
    freq = float(np.mean(draws == 2.0))
    assert abs(freq - 0.5) <= 0.01


@pytest.mark.parametrize(
    "spec",
    ["uniform:lo=0,hi=1", "exp:rate=1", "gamma:a=2,b=1", "halfnormal",
     "trunc(exp:rate=1;k=10,c5=0.5)"],
)
def test_sampling_passes_ks(spec, rng):
    d = F.parse_spec(spec)
    draws = np.asarray(d.sample(rng, 100_000))
    stat, pvalue = stats.kstest(draws, lambda x: np.asarray(d.cdf(x)))
    assert pvalue > 1e-3


def test_upper_mean_matches_quadrature():
    for spec in ("exp:rate=2", "gamma:a=1.5,b=1", "uniform:lo=0,hi=3", "halfnormal"):
        d = F.parse_spec(spec)
        for c in (0.0, 0.4, 1.7):
            ref = integrate.quad(
                lambda y: max(y - c, 0.0) * d.pdf(y),
                d.support[0],
                float(d.quantile(1 - 1e-15)) + 30.0 if not math.isfinite(d.support[1]) else d.support[1],
                limit=400,
            )[0]
            assert d.upper_mean(c) == pytest.approx(ref, rel=1e-7, abs=1e-12)
    b = F.parse_spec("bernoulli:a=1,b=2,p=0.3")
    assert b.upper_mean(1.5) == pytest.approx(0.3 * 0.5)


def test_lsi_constant_examples():
    assert F.lsi_constant_bernoulli(0.5) == 2.0
    assert F.lsi_constant_bernoulli(0.9) == pytest.approx(math.log(9.0) / 0.8, rel=1e-14)
    # dyadic parameters have exact binary complements: equality is bitwise
    assert F.lsi_constant_bernoulli(0.25) == F.lsi_constant_bernoulli(0.75)
    assert F.lsi_constant_bernoulli(0.3) == pytest.approx(
        F.lsi_constant_bernoulli(0.7), rel=1e-15
    )
    for p in (1e-9, 1e-3, 0.47, 0.5 + 1e-12):
        c = F.lsi_constant_bernoulli(p)
        assert c >= 2.0
    with pytest.raises(DomainError):
        F.lsi_constant_bernoulli(0.0)
    with pytest.raises(DomainError):
        F.lsi_constant_bernoulli(1.0)


def test_lsi_constant_symmetry_sweep(rng):
    for p in rng.uniform(0.01, 0.99, 200):
        c1 = F.lsi_constant_bernoulli(float(p))
        c2 = F.lsi_constant_bernoulli(float(1.0 - p))
        assert abs(c1 - c2) <= 1e-15 * max(c1, c2) * 10  # complement rounding only


def test_lsi_constant_continuity_at_half():
    c_left = F.lsi_constant_bernoulli(0.5 - 1e-9)
    c_right = F.lsi_constant_bernoulli(0.5 + 1e-9)
    assert c_left == pytest.approx(2.0, abs=1e-12)
    assert c_right == pytest.approx(2.0, abs=1e-12)


# ---------------------------------------------------------------------------
# truncation


def test_truncate_support_and_head():
    base = F.parse_spec("exp:rate=1")
    nu = F.truncate(base, 100, 1.0)
    cut = math.log(100.0)
    assert nu.cut == pytest.approx(cut)
    assert float(nu.cdf(2 * cut)) == pytest.approx(1.0, abs=1e-12)
    xs = np.linspace(0.0, cut, 500)
    assert np.max(np.abs(np.asarray(nu.cdf(xs)) - np.asarray(base.cdf(xs)))) == 0.0


def test_truncate_dominates_on_dense_grid():
    base = F.parse_spec("exp:rate=1")
    nu = F.truncate(base, 100, 1.0)
    xs = np.linspace(0.0, nu.top * 1.2, 10_000)
    defect = np.asarray(base.cdf(xs)) - np.asarray(nu.cdf(xs))
    assert defect.max() <= 1e-12


def test_truncate_noop_when_mass_already_low():
    base = F.parse_spec("uniform:lo=0,hi=1")
    nu = F.truncate(base, 100, 1.0)  # cut = log(100) = 4.6 > 1
    xs = np.linspace(-0.5, 2.0, 400)
    assert np.max(np.abs(np.asarray(nu.cdf(xs)) - np.asarray(base.cdf(xs)))) <= 1e-12


def test_truncate_randomized_postconditions(rng):
    bases = ["exp:rate=1", "exp:rate=0.5", "gamma:a=2,b=1", "gamma:a=0.5,b=2", "halfnormal"]
    combos = 0
    while combos < 20:
        spec = bases[int(rng.integers(len(bases)))]
        k = int(rng.integers(2, 2000))
        c5 = float(rng.uniform(0.2, 6.0))
        base = F.parse_spec(spec)
        nu = F.truncate(base, k, c5)
        xs = np.linspace(0.0, nu.top * 1.1, 2000)
        h_b = np.asarray(base.cdf(xs))
        h_k = np.asarray(nu.cdf(xs))
        assert (h_b - h_k).max() <= 1e-12, (spec, k, c5)
        head = xs <= nu.cut
        assert np.abs(h_b[head] - h_k[head]).max() <= 1e-12
        assert float(nu.cdf(nu.top)) == pytest.approx(1.0, abs=1e-12)
        combos += 1


def test_truncate_custom_bump_and_validation():
    base = F.parse_spec("exp:rate=1")
    tri = lambda s: np.where((np.asarray(s) >= 0) & (np.asarray(s) <= 1),
                             2.0 * (1.0 - np.abs(2.0 * np.asarray(s) - 1.0)), 0.0)
    nu = F.truncate(base, 50, 1.0, bump=tri)
    xs = np.linspace(0, nu.top, 3000)
    assert (np.asarray(base.cdf(xs)) - np.asarray(nu.cdf(xs))).max() <= 1e-12
    with pytest.raises(DomainError):
        F.truncate(base, 1, 1.0)
    with pytest.raises(DomainError):
        F.truncate(base, 50, 1.0, bump=lambda s: np.full_like(np.asarray(s, dtype=float), 0.5))
    with pytest.raises(UnsupportedKindError):
        F.truncate(F.parse_spec("bernoulli:a=1,b=2,p=0.5"), 50, 1.0)


def test_truncated_quantile_accuracy_in_bump_region():
    base = F.parse_spec("exp:rate=1")
    nu = F.truncate(base, 10, 0.5)  # cut = 1.15, real mass beyond it
    us = np.linspace(float(base.cdf(nu.cut)) + 1e-6, 1 - 1e-9, 300)
    xs = np.asarray(nu.quantile(us))
    back = np.asarray(nu.cdf(xs))
    assert np.max(np.abs(back - us)) <= 1e-10
    assert np.all(xs <= nu.top)


# ---------------------------------------------------------------------------
# tabulated kind


def test_tabulated_roundtrip_and_moments(rng):
    xs = np.linspace(0.5, 3.0, 41)
    hs = 1.0 + np.sin(xs) ** 2
    d = F.Tabulated(xs, hs)
    val = _quad_pdf(d, 0.5, 3.0)
    assert val == pytest.approx(1.0, abs=1e-9)
    us = rng.uniform(1e-6, 1 - 1e-6, 500)
    pts = np.asarray(d.quantile(us))
    assert np.max(np.abs(np.asarray(d.cdf(pts)) - us)) <= 1e-10
    with pytest.raises(DomainError):
        F.Tabulated([1.0, 1.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        F.Tabulated([0, 1], [-1.0, 1.0])


# ---------------------------------------------------------------------------
# spec grammar


def test_parse_spec_grammar():
    assert F.parse_spec("gamma:a=1,b=1").kind == "gamma"
    assert F.parse_spec("exp:rate=1").kind == "exponential"
    assert F.parse_spec("uniform:lo=0,hi=1").kind == "uniform"
    assert F.parse_spec("bernoulli:a=1,b=2,p=0.5").kind == "bernoulli"
    assert F.parse_spec("halfnormal").kind == "halfnormal"
    assert F.parse_spec("dirac:c=1").kind == "dirac"
    t = F.parse_spec("trunc(exp:rate=1;k=100,c5=8)")
    assert t.kind == "truncated" and t.k == 100 and t.c5 == 8.0
    assert F.parse_spec(t.spec_string()).spec_string() == t.spec_string()
    for bad in ("nope", "gamma:a=1", "gamma:a=1,b=1,c=3", "trunc(exp:rate=1)", "exp:rate=-1"):
        with pytest.raises((DomainError,)):
            F.parse_spec(bad)


def test_discrete_kinds_have_no_density():
    with pytest.raises(UnsupportedKindError):
        F.parse_spec("bernoulli:a=1,b=2,p=0.5").pdf(1.0)
    d = F.parse_spec("dirac:c=2")
    assert float(d.quantile(0.37)) == 2.0


def test_default_c5():
    assert F.default_c5(2, 1.0) == 8.0
    with pytest.raises(DomainError):
        F.default_c5(2, 0.0)
