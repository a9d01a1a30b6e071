"""Edge-time distribution toolkit.

Each distribution knows its density, CDF, quantile and log-scale variants,
samples by inverse transform (so quantile coupling across laws is exact),
and reports its support and continuity. Everything is vectorized over
numpy arrays; scalars in give scalars out.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import special, stats

from .errors import DomainError, UnsupportedKindError

DENSITY_FLOOR = 1e-300


def _as_float_array(y):
    arr = np.asarray(y, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


class Distribution:
    """Abstract one-dimensional edge-time law."""

    kind: str = "abstract"
    continuous: bool = True
    density_continuous: bool = True  # h continuous on {h > 0}; discrete kinds N/A

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    # Subclasses implement the array versions of these.
    def pdf(self, y):
        raise UnsupportedKindError(f"{self.kind} has no density")

    def log_pdf(self, y):
        raise UnsupportedKindError(f"{self.kind} has no density")

    def cdf(self, y):
        raise NotImplementedError

    def log_cdf(self, y):
        arr, scalar = _as_float_array(self.cdf(y))
        with np.errstate(divide="ignore"):
            out = np.log(arr)
        return _ret(out, scalar)

    def sf(self, y):
        arr, scalar = _as_float_array(self.cdf(y))
        return _ret(1.0 - arr, scalar)

    def log_sf(self, y):
        arr, scalar = _as_float_array(self.sf(y))
        with np.errstate(divide="ignore"):
            out = np.log(arr)
        return _ret(out, scalar)

    def quantile(self, u):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def upper_mean(self, c: float) -> float:
        """E[(Y - c)+], the mean excess over level c."""
        raise NotImplementedError

    def exp_moment_rate(self) -> float:
        """A rate delta with E[exp(delta Y)] finite, used by diagnostics."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-transform sampling; deterministic given the generator state."""
        u = rng.random(size)
        return self.quantile(u)

    def spec_string(self) -> str:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<Distribution {self.spec_string()}>"


class Gamma(Distribution):
    """Gamma law with shape a and rate b (density ~ y^(a-1) e^(-b y))."""

    kind = "gamma"
    continuous = True

    def __init__(self, a: float, b: float):
        if not (a > 0 and b > 0):
            raise DomainError("gamma requires a > 0 and b > 0")
        self.a = float(a)
        self.b = float(b)
        self._frozen = stats.gamma(self.a, scale=1.0 / self.b)

    @property
    def support(self):
        return (0.0, math.inf)

    def pdf(self, y):
        arr, scalar = _as_float_array(y)
        return _ret(self._frozen.pdf(arr), scalar)

    def log_pdf(self, y):
        arr, scalar = _as_float_array(y)
        return _ret(self._frozen.logpdf(arr), scalar)

    def cdf(self, y):
        arr, scalar = _as_float_array(y)
        return _ret(self._frozen.cdf(arr), scalar)

    def log_cdf(self, y):
        arr, scalar = _as_float_array(y)
        return _ret(self._frozen.logcdf(arr), scalar)

    def sf(self, y):
        arr, scalar = _as_float_array(y)
        return _ret(self._frozen.sf(arr), scalar)

    def log_sf(self, y):
        arr, scalar = _as_float_array(y)
        return _ret(self._frozen.logsf(arr), scalar)

    def quantile(self, u):
        arr, scalar = _as_float_array(u)
        return _ret(self._frozen.ppf(arr), scalar)

    def isf(self, q):
        arr, scalar = _as_float_array(q)
        return _ret(self._frozen.isf(arr), scalar)

    def mean(self):
        return self.a / self.b

    def upper_mean(self, c):
        if c <= 0:
            return self.mean() - c
        # E(Y-c)+ = (a/b) S_{a+1}(c) - c S_a(c), both tails at the same rate
        s_a1 = stats.gamma.sf(c, self.a + 1.0, scale=1.0 / self.b)
        s_a = self._frozen.sf(c)
        return float((self.a / self.b) * s_a1 - c * s_a)

    def exp_moment_rate(self):
        return self.b / 2.0

    def spec_string(self):
        return f"gamma:a={self.a:g},b={self.b:g}"


class Exponential(Distribution):
    """Exponential law; closed forms throughout."""

    kind = "exponential"
    continuous = True

    def __init__(self, rate: float):
        if not rate > 0:
            raise DomainError("exponential requires rate > 0")
        self.rate = float(rate)

    @property
    def support(self):
        return (0.0, math.inf)

    def pdf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.where(arr >= 0, self.rate * np.exp(-self.rate * arr), 0.0)
        return _ret(out, scalar)

    def log_pdf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.where(arr >= 0, math.log(self.rate) - self.rate * arr, -np.inf)
        return _ret(out, scalar)

    def cdf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.where(arr >= 0, -np.expm1(-self.rate * np.maximum(arr, 0.0)), 0.0)
        return _ret(out, scalar)

    def log_cdf(self, y):
        arr, scalar = _as_float_array(y)
        with np.errstate(divide="ignore"):
            out = np.where(
                arr >= 0,
                np.log(-np.expm1(-self.rate * np.maximum(arr, 0.0))),
                -np.inf,
            )
        return _ret(out, scalar)

    def sf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.where(arr >= 0, np.exp(-self.rate * np.maximum(arr, 0.0)), 1.0)
        return _ret(out, scalar)

    def log_sf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.where(arr >= 0, -self.rate * np.maximum(arr, 0.0), 0.0)
        return _ret(out, scalar)

    def quantile(self, u):
        arr, scalar = _as_float_array(u)
        out = -np.log1p(-arr) / self.rate
        return _ret(out, scalar)

    def isf(self, q):
        arr, scalar = _as_float_array(q)
        return _ret(-np.log(arr) / self.rate, scalar)

    def mean(self):
        return 1.0 / self.rate

    def upper_mean(self, c):
        if c <= 0:
            return self.mean() - c
        return math.exp(-self.rate * c) / self.rate

    def exp_moment_rate(self):
        return self.rate / 2.0

    def spec_string(self):
        return f"exp:rate={self.rate:g}"


class Uniform(Distribution):
    kind = "uniform"
    continuous = True

    def __init__(self, lo: float, hi: float):
        if not hi > lo:
            raise DomainError("uniform requires hi > lo")
        self.lo = float(lo)
        self.hi = float(hi)
        self.width = self.hi - self.lo

    @property
    def support(self):
        return (self.lo, self.hi)

    def pdf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.where((arr >= self.lo) & (arr <= self.hi), 1.0 / self.width, 0.0)
        return _ret(out, scalar)

    def log_pdf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.where(
            (arr >= self.lo) & (arr <= self.hi), -math.log(self.width), -np.inf
        )
        return _ret(out, scalar)

    def cdf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.clip((arr - self.lo) / self.width, 0.0, 1.0)
        return _ret(out, scalar)

    def sf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.clip((self.hi - arr) / self.width, 0.0, 1.0)
        return _ret(out, scalar)

    def log_sf(self, y):
        arr, scalar = _as_float_array(self.sf(y))
        with np.errstate(divide="ignore"):
            out = np.log(arr)
        return _ret(out, scalar)

    def quantile(self, u):
        arr, scalar = _as_float_array(u)
        return _ret(self.lo + arr * self.width, scalar)

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def upper_mean(self, c):
        if c <= self.lo:
            return self.mean() - c
        if c >= self.hi:
            return 0.0
        return (self.hi - c) ** 2 / (2.0 * self.width)

    def exp_moment_rate(self):
        return 1.0

    def spec_string(self):
        return f"uniform:lo={self.lo:g},hi={self.hi:g}"


class HalfNormal(Distribution):
    """|N| for a standard Gaussian N."""

    kind = "halfnormal"
    continuous = True
    _C = math.sqrt(2.0 / math.pi)

    @property
    def support(self):
        return (0.0, math.inf)

    def pdf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.where(arr >= 0, self._C * np.exp(-0.5 * arr * arr), 0.0)
        return _ret(out, scalar)

    def log_pdf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.where(arr >= 0, math.log(self._C) - 0.5 * arr * arr, -np.inf)
        return _ret(out, scalar)

    def cdf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.where(arr >= 0, special.erf(np.maximum(arr, 0.0) / math.sqrt(2)), 0.0)
        return _ret(out, scalar)

    def sf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.where(arr >= 0, special.erfc(np.maximum(arr, 0.0) / math.sqrt(2)), 1.0)
        return _ret(out, scalar)

    def log_sf(self, y):
        # sf(y) = 2 G(-y); log_ndtr keeps the deep tail exact
        arr, scalar = _as_float_array(y)
        out = np.where(
            arr >= 0, math.log(2.0) + special.log_ndtr(-np.maximum(arr, 0.0)), 0.0
        )
        return _ret(out, scalar)

    def quantile(self, u):
        arr, scalar = _as_float_array(u)
        near1 = arr > 0.5
        out = np.empty_like(arr)
        out[~near1] = special.erfinv(arr[~near1]) * math.sqrt(2)
        out[near1] = special.erfcinv(1.0 - arr[near1]) * math.sqrt(2)
        return _ret(out, scalar)

    def isf(self, q):
        arr, scalar = _as_float_array(q)
        return _ret(special.erfcinv(arr) * math.sqrt(2), scalar)

    def mean(self):
        return self._C

    def upper_mean(self, c):
        if c <= 0:
            return self.mean() - c
        return self._C * math.exp(-0.5 * c * c) - c * float(self.sf(c))

    def exp_moment_rate(self):
        return 1.0

    def spec_string(self):
        return "halfnormal"


class Bernoulli(Distribution):
    """Two-point law: value a with probability 1-p, value b with probability p."""

    kind = "bernoulli"
    continuous = False

    def __init__(self, a: float, b: float, p: float):
        if not a <= b:
            raise DomainError("bernoulli requires a <= b")
        if not (0.0 < p < 1.0):
            raise DomainError("bernoulli requires p in (0, 1)")
        self.a = float(a)
        self.b = float(b)
        self.p = float(p)

    @property
    def support(self):
        return (self.a, self.b)

    def cdf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.where(arr < self.a, 0.0, np.where(arr < self.b, 1.0 - self.p, 1.0))
        return _ret(out, scalar)

    def quantile(self, u):
        arr, scalar = _as_float_array(u)
        out = np.where(arr < 1.0 - self.p, self.a, self.b)
        return _ret(out, scalar)

    def mean(self):
        return (1.0 - self.p) * self.a + self.p * self.b

    def upper_mean(self, c):
        return (1.0 - self.p) * max(self.a - c, 0.0) + self.p * max(self.b - c, 0.0)

    def exp_moment_rate(self):
        return 1.0

    def spec_string(self):
        return f"bernoulli:a={self.a:g},b={self.b:g},p={self.p:g}"


class Dirac(Distribution):
    """Point mass; handy as a deterministic edge-time baseline."""

    kind = "dirac"
    continuous = False

    def __init__(self, c: float):
        self.c = float(c)

    @property
    def support(self):
        return (self.c, self.c)

    def cdf(self, y):
        arr, scalar = _as_float_array(y)
        return _ret(np.where(arr >= self.c, 1.0, 0.0), scalar)

    def quantile(self, u):
        arr, scalar = _as_float_array(u)
        return _ret(np.full_like(arr, self.c), scalar)

    def mean(self):
        return self.c

    def upper_mean(self, c):
        return max(self.c - c, 0.0)

    def exp_moment_rate(self):
        return 1.0

    def spec_string(self):
        return f"dirac:c={self.c:g}"


class HatBump:
    """Default repatriation bump: the C1 hat 6 s (1 - s) on [0, 1]."""

    def pdf(self, s):
        arr, scalar = _as_float_array(s)
        out = np.where((arr >= 0) & (arr <= 1), 6.0 * arr * (1.0 - arr), 0.0)
        return _ret(out, scalar)

    def cdf(self, s):
        arr, scalar = _as_float_array(s)
        sc = np.clip(arr, 0.0, 1.0)
        return _ret(sc * sc * (3.0 - 2.0 * sc), scalar)

    def sf(self, s):
        arr, scalar = _as_float_array(s)
        sc = np.clip(arr, 0.0, 1.0)
        return _ret((1.0 - sc) ** 2 * (1.0 + 2.0 * sc), scalar)


class CallableBump:
    """Wraps a user density on [0, 1]; CDF by dense trapezoid accumulation."""

    def __init__(self, fn: Callable, gridsize: int = 8193):
        self._fn = fn
        mass_in = float(
            np.trapezoid(
                fn(np.linspace(0.0, 1.0, gridsize)), np.linspace(0.0, 1.0, gridsize)
            )
        )
        probes = np.array([-0.5, -1e-6, 1.0 + 1e-6, 1.5])
        outside = np.max(np.abs(np.asarray(fn(probes), dtype=float)))
        if outside > 0 or abs(mass_in - 1.0) > 1e-6:
            raise DomainError("bump must be a density supported in [0, 1]")
        ends = np.abs(np.asarray(fn(np.array([0.0, 1.0])), dtype=float))
        if np.max(ends) > 1e-9:
            raise DomainError("a continuous bump supported in [0, 1] must vanish at 0 and 1")
        self._xs = np.linspace(0.0, 1.0, gridsize)
        vals = np.asarray(fn(self._xs), dtype=float)
        if np.any(vals < 0):
            raise DomainError("bump density must be nonnegative")
        cum = np.concatenate(
            [[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(self._xs))]
        )
        self._cum = cum / cum[-1]

    def pdf(self, s):
        arr, scalar = _as_float_array(s)
        out = np.where((arr >= 0) & (arr <= 1), self._fn(np.clip(arr, 0, 1)), 0.0)
        return _ret(out, scalar)

    def cdf(self, s):
        arr, scalar = _as_float_array(s)
        return _ret(np.interp(arr, self._xs, self._cum, left=0.0, right=1.0), scalar)

    def sf(self, s):
        arr, scalar = _as_float_array(self.cdf(s))
        return _ret(1.0 - arr, scalar)


class Truncated(Distribution):
    """Bounded-support modification of a base law on [0, +inf).

    Below T = c5*log(k) it agrees with the base; the base's mass beyond 2T
    is spread continuously over [T, 2T] with a bump density, so the result
    is supported in [0, 2T], matches the base CDF up to T, and dominates
    the base CDF everywhere (hence is stochastically smaller).
    """

    kind = "truncated"
    continuous = True

    def __init__(self, base: Distribution, k: int, c5: float, bump=None):
        if not isinstance(k, (int, np.integer)) or k < 2:
            raise DomainError("truncation index k must be an integer >= 2")
        if not c5 > 0:
            raise DomainError("c5 must be positive")
        if not base.continuous:
            raise UnsupportedKindError("truncation requires a continuous base law")
        if base.support[0] < 0:
            raise DomainError("base law must be supported on [0, +inf)")
        self.base = base
        self.k = int(k)
        self.c5 = float(c5)
        self.cut = self.c5 * math.log(self.k)  # T
        self.top = 2.0 * self.cut
        if bump is None:
            self.bump = HatBump()
        elif isinstance(bump, (HatBump, CallableBump)):
            self.bump = bump
        else:
            self.bump = CallableBump(bump)
        self.tail_mass = float(base.sf(self.top))

    @property
    def support(self):
        return (max(self.base.support[0], 0.0), min(self.base.support[1], self.top))

    def _s(self, y):
        return (y - self.cut) / self.cut

    def pdf(self, y):
        arr, scalar = _as_float_array(y)
        out = self.base.pdf(arr) + self.bump.pdf(self._s(arr)) * (
            self.tail_mass / self.cut
        )
        out = np.where(arr <= self.top, out, 0.0)
        return _ret(out, scalar)

    def log_pdf(self, y):
        arr, scalar = _as_float_array(self.pdf(y))
        with np.errstate(divide="ignore"):
            out = np.log(arr)
        return _ret(out, scalar)

    def cdf(self, y):
        arr, scalar = _as_float_array(y)
        out = self.base.cdf(arr) + self.tail_mass * self.bump.cdf(self._s(arr))
        out = np.where(arr >= self.top, 1.0, out)
        return _ret(out, scalar)

    def sf(self, y):
        # base.sf(y) - base.sf(2T) avoids cancellation: both terms are tail-sized
        arr, scalar = _as_float_array(y)
        out = (np.asarray(self.base.sf(arr)) - self.tail_mass) + (
            self.tail_mass * self.bump.sf(self._s(arr))
        )
        out = np.where(arr >= self.top, 0.0, np.maximum(out, 0.0))
        return _ret(out, scalar)

    def log_sf(self, y):
        arr, scalar = _as_float_array(self.sf(y))
        with np.errstate(divide="ignore"):
            out = np.log(arr)
        return _ret(out, scalar)

    def quantile(self, u):
        arr, scalar = _as_float_array(u)
        out = np.asarray(self.base.quantile(arr), dtype=float).copy()
        h_cut = float(self.base.cdf(self.cut))
        in_tail = arr > h_cut
        if np.any(in_tail):
            out[in_tail] = self._tail_quantile(arr[in_tail])
        return _ret(out, scalar)

    def _tail_quantile(self, u):
        lo = np.full(u.shape, self.cut)
        hi = np.full(u.shape, self.top)
        # bisection is branch-free and robust to flat spots of the bump
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            below = np.asarray(self.cdf(mid)) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def mean(self):
        grid = np.linspace(0.0, self.top, 20001)
        return float(np.trapezoid(np.asarray(self.sf(grid)), grid))

    def upper_mean(self, c):
        if c >= self.top:
            return 0.0
        grid = np.linspace(max(c, 0.0), self.top, 20001)
        return float(np.trapezoid(np.asarray(self.sf(grid)), grid))

    def exp_moment_rate(self):
        return 1.0  # bounded support

    def spec_string(self):
        return f"trunc({self.base.spec_string()};k={self.k},c5={self.c5:g})"


class Tabulated(Distribution):
    """Piecewise-linear density through (x, h) grid points, renormalized."""

    kind = "tabulated"
    continuous = True

    def __init__(self, xs, hs):
        xs = np.asarray(xs, dtype=float)
        hs = np.asarray(hs, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or np.any(np.diff(xs) <= 0):
            raise DomainError("tabulated grid must be strictly increasing")
        if hs.shape != xs.shape or np.any(hs < 0) or not np.any(hs > 0):
            raise DomainError("tabulated densities must be nonnegative, not all zero")
        mass = np.trapezoid(hs, xs)
        self.xs = xs
        self.hs = hs / mass
        self._cum = np.concatenate(
            [[0.0], np.cumsum(0.5 * (self.hs[1:] + self.hs[:-1]) * np.diff(xs))]
        )
        self._cum[-1] = 1.0

    @property
    def support(self):
        return (float(self.xs[0]), float(self.xs[-1]))

    def pdf(self, y):
        arr, scalar = _as_float_array(y)
        out = np.interp(arr, self.xs, self.hs, left=0.0, right=0.0)
        return _ret(out, scalar)

    def log_pdf(self, y):
        arr, scalar = _as_float_array(self.pdf(y))
        with np.errstate(divide="ignore"):
            out = np.log(arr)
        return _ret(out, scalar)

    def cdf(self, y):
        arr, scalar = _as_float_array(y)
        idx = np.clip(np.searchsorted(self.xs, arr, side="right") - 1, 0, self.xs.size - 2)
        x0 = self.xs[idx]
        h0 = self.hs[idx]
        slope = (self.hs[idx + 1] - h0) / (self.xs[idx + 1] - x0)
        d = np.clip(arr - x0, 0.0, self.xs[idx + 1] - x0)
        out = self._cum[idx] + h0 * d + 0.5 * slope * d * d
        out = np.where(arr <= self.xs[0], 0.0, np.where(arr >= self.xs[-1], 1.0, out))
        return _ret(np.clip(out, 0.0, 1.0), scalar)

    def quantile(self, u):
        arr, scalar = _as_float_array(u)
        idx = np.clip(np.searchsorted(self._cum, arr, side="right") - 1, 0, self.xs.size - 2)
        x0 = self.xs[idx]
        h0 = self.hs[idx]
        dx = self.xs[idx + 1] - x0
        slope = (self.hs[idx + 1] - h0) / dx
        rem = np.maximum(arr - self._cum[idx], 0.0)
        # solve 0.5 slope d^2 + h0 d = rem per segment; the rationalized root
        # 2 rem / (h0 + sqrt(h0^2 + 2 slope rem)) is stable for either slope
        # sign and degrades gracefully to the linear case
        disc = np.sqrt(np.maximum(h0 * h0 + 2.0 * slope * rem, 0.0))
        denom = h0 + disc
        with np.errstate(invalid="ignore", divide="ignore"):
            d = np.where(denom > 0, 2.0 * rem / np.where(denom > 0, denom, 1.0), 0.0)
        out = x0 + np.clip(d, 0.0, dx)
        return _ret(out, scalar)

    def mean(self):
        return float(np.trapezoid(self.xs * self.hs, self.xs))

    def upper_mean(self, c):
        grid = np.linspace(max(c, self.xs[0]), self.xs[-1], 4001)
        if grid[0] >= grid[-1]:
            return 0.0
        return float(np.trapezoid(np.asarray(self.sf(grid)), grid))

    def exp_moment_rate(self):
        return 1.0

    def spec_string(self):
        return f"tabulated:n={self.xs.size}"


def lsi_constant_bernoulli(p: float) -> float:
    """Log-Sobolev constant for the two-point measure with parameter p.

    c(p) = (log p - log(1-p)) / (p - (1-p)), with the removable singularity
    at p = 1/2 filled by its limit 2. Written via atanh(|2p-1|) so the
    p <-> 1-p symmetry is exact whenever 2p-1 and 1-2p negate exactly.
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"Bernoulli parameter must lie in (0, 1), got {p!r}")
    u = abs(2.0 * p - 1.0)
    if u == 0.0:
        return 2.0
    return 2.0 * math.atanh(u) / u


def truncate(base: Distribution, k: int, c5: float, bump=None) -> Truncated:
    """Bounded-support version of `base`: equal below c5*log k, supported in
    [0, 2*c5*log k], stochastically smaller than the base."""
    return Truncated(base, k, c5, bump)


def sample(d: Distribution, rng: np.random.Generator, size=None):
    """Inverse-transform sample(s) from d using rng's uniform stream."""
    return d.sample(rng, size)


def default_c5(d: int, delta: float) -> float:
    """Truncation scale constant: 4d over the exponential-moment rate."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    return 4.0 * d / delta


def parse_spec(spec: str) -> Distribution:
    """Parse the CLI distribution grammar.

    Forms: gamma:a=<f>,b=<f> | exp:rate=<f> | uniform:lo=<f>,hi=<f> |
    bernoulli:a=<f>,b=<f>,p=<f> | halfnormal | dirac:c=<f> |
    trunc(<spec>;k=<int>,c5=<f>)
    """
    spec = spec.strip()
    if spec.startswith("trunc(") and spec.endswith(")"):
        inner = spec[len("trunc(") : -1]
        if ";" not in inner:
            raise DomainError(f"malformed truncation spec: {spec!r}")
        base_part, arg_part = inner.rsplit(";", 1)
        args = _parse_kv(arg_part, {"k", "c5"})
        return Truncated(parse_spec(base_part), int(args["k"]), float(args["c5"]))
    if spec == "halfnormal":
        return HalfNormal()
    if ":" not in spec:
        raise DomainError(f"unrecognized distribution spec: {spec!r}")
    head, rest = spec.split(":", 1)
    if head == "gamma":
        kv = _parse_kv(rest, {"a", "b"})
        return Gamma(float(kv["a"]), float(kv["b"]))
    if head == "exp":
        kv = _parse_kv(rest, {"rate"})
        return Exponential(float(kv["rate"]))
    if head == "uniform":
        kv = _parse_kv(rest, {"lo", "hi"})
        return Uniform(float(kv["lo"]), float(kv["hi"]))
    if head == "bernoulli":
        kv = _parse_kv(rest, {"a", "b", "p"})
        return Bernoulli(float(kv["a"]), float(kv["b"]), float(kv["p"]))
    if head == "dirac":
        kv = _parse_kv(rest, {"c"})
        return Dirac(float(kv["c"]))
    raise DomainError(f"unrecognized distribution kind: {head!r}")


def _parse_kv(text: str, expected: set[str]) -> dict[str, str]:
    out = {}
    for piece in text.split(","):
        if "=" not in piece:
            raise DomainError(f"malformed parameter {piece!r}")
        key, val = piece.split("=", 1)
        key = key.strip()
        if key not in expected:
            raise DomainError(f"unexpected parameter {key!r}")
        out[key] = val.strip()
    missing = expected - set(out)
    if missing:
        raise DomainError(f"missing parameters: {sorted(missing)}")
    return out
