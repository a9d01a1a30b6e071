"""Monte Carlo experiment harness.

Runs replica-parallel lattice passage-time experiments with fully
deterministic outputs: replica r of a run always draws from a generator
seeded by (master_seed, r), and aggregation folds results in replica
order, so the worker count never changes a single output bit.

Covered here: variance scaling across a grid of distances, scaling-law
model comparison, empirical tail profiles, influence diagnostics with and
without the randomized offset, time-constant estimates, the coupled
truncation comparison, and geodesic length statistics.
"""

from __future__ import annotations

import math
import os
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sstats

from ._version import __version__ as _pkg_version
from .averaging import AveragingMap
from .distributions import parse_spec, truncate
from .errors import ConfigError, DomainError
from .fpp_core import LatticeBox, WeightField, edge_breakpoint, passage_time
from .neargamma import classify_nearly_gamma

DEFAULT_N_GRID = (25, 50, 100, 200)
DEFAULT_T_GRID = tuple(np.arange(0.25, 3.01, 0.25)) + tuple(np.arange(3.5, 6.01, 0.5))


@dataclass(frozen=True)
class ExperimentConfig:
    """Immutable description of one experiment family."""

    dist_spec: str
    dim: int = 2
    n_list: tuple = DEFAULT_N_GRID
    replicas: int = 2000
    master_seed: int = 0
    m_policy: str = "none"  # "none" | "auto" | integer literal as str
    margin_factor: float = 0.5
    workers: int | None = None

    def __post_init__(self):
        parse_spec(self.dist_spec)  # fail fast on bad grammar
        if self.dim not in (2, 3):
            raise ConfigError("dimension must be 2 or 3")
        if self.replicas < 2:
            raise ConfigError("at least 2 replicas are needed for a variance")
        if not self.n_list or any(int(n) < 1 for n in self.n_list):
            raise ConfigError("all distances n must be >= 1")
        if self.margin_factor <= 0:
            raise ConfigError("margin factor must be positive")
        self.m_for(int(self.n_list[0]))  # validate the policy string

    def m_for(self, n: int) -> int:
        if self.m_policy == "none":
            return 0
        if self.m_policy == "auto":
            return int(math.ceil(n**0.25))
        try:
            m = int(self.m_policy)
        except ValueError as exc:
            raise ConfigError(f"bad m policy {self.m_policy!r}") from exc
        if m < 0:
            raise ConfigError("m must be nonnegative")
        return m

    def echo(self) -> dict:
        return {
            "dist_spec": self.dist_spec,
            "dim": self.dim,
            "n_list": [int(n) for n in self.n_list],
            "replicas": self.replicas,
            "master_seed": self.master_seed,
            "m_policy": str(self.m_policy),
            "margin_factor": self.margin_factor,
            "seed_scheme": "numpy SeedSequence((master_seed, replica)) -> PCG64",
        }


def resolve_workers(requested: int | None) -> int:
    cap = os.environ.get("FPPLAB_WORKERS")
    n = requested if requested else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(int(cap), 1))
    return max(int(n), 1)


def box_for(cfg: ExperimentConfig, n: int) -> LatticeBox:
    """Box with margin around the segment [0, n e1], sized for the m policy."""
    m = cfg.m_for(n)
    margin = int(math.ceil(cfg.margin_factor * n))
    if m > margin:
        raise ConfigError(
            f"margin {margin} cannot absorb offsets up to m={m}; enlarge margin_factor"
        )
    lo = tuple([-margin] * cfg.dim)
    hi = tuple([n + margin] + [margin + m] * (cfg.dim - 1))
    return LatticeBox(lo, hi)


# ---------------------------------------------------------------------------
# replica execution (module-level for pickling)

_BOX_CACHE: dict = {}


def _cached_box(lo, hi) -> LatticeBox:
    key = (lo, hi)
    if key not in _BOX_CACHE:
        _BOX_CACHE[key] = LatticeBox(lo, hi)
    return _BOX_CACHE[key]


def _offset_bits(master_seed: int, replica: int, m: int, d: int) -> np.ndarray:
    rng = np.random.default_rng(
        np.random.SeedSequence((master_seed, replica, 0x0FF5E7))
    )
    return rng.integers(0, 2, size=(d, m * m), dtype=np.uint8)


def _replica_chunk(args) -> list:
    """One contiguous block of replicas; returns per-replica tuples."""
    (spec, lo, hi, n, master_seed, r0, r1, m, want_edges, probe_ids) = args
    box = _cached_box(lo, hi)
    dist = parse_spec(spec)
    amap = AveragingMap(m) if m > 0 else None
    probe_ids = np.asarray(probe_ids, dtype=np.int64)
    out = []
    for r in range(r0, r1):
        field = WeightField.generate(box, dist, master_seed, r)
        if m > 0:
            bits = _offset_bits(master_seed, r, m, box.d)
            z = np.array([amap.level(row) for row in bits], dtype=np.int64)
        else:
            z = np.zeros(box.d, dtype=np.int64)
        u = tuple(int(c) for c in z)
        v_arr = z.copy()
        v_arr[0] += n
        res = passage_time(field, u, tuple(int(c) for c in v_arr))
        presence = res.edge_bitset[probe_ids] if probe_ids.size else np.empty(0, bool)
        geo_edges = res.edge_ids if want_edges else None
        out.append(
            (
                res.time,
                res.length,
                res.ties,
                presence.astype(np.uint8),
                geo_edges,
                field.weights[res.edge_ids] if want_edges else None,
            )
        )
    return out


def _run_replicas(
    cfg: ExperimentConfig,
    n: int,
    m: int,
    want_edges: bool = False,
    probe_ids=(),
    replicas: int | None = None,
):
    box = box_for(cfg, n)
    reps = replicas if replicas is not None else cfg.replicas
    workers = resolve_workers(cfg.workers)
    chunk = max(8, reps // (workers * 8) or 1)
    ranges = [(r, min(r + chunk, reps)) for r in range(0, reps, chunk)]
    argslist = [
        (
            cfg.dist_spec,
            box.lo,
            box.hi,
            n,
            cfg.master_seed,
            r0,
            r1,
            m,
            want_edges,
            tuple(int(e) for e in probe_ids),
        )
        for (r0, r1) in ranges
    ]
    if workers <= 1 or len(argslist) <= 1:
        chunks = [_replica_chunk(a) for a in argslist]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_replica_chunk, argslist))
    flat = [item for ch in chunks for item in ch]
    return box, flat


@dataclass
class ReplicaBatch:
    """Raw per-replica observables for one (n, m) cell."""

    n: int
    m: int
    times: np.ndarray
    geo_len: np.ndarray
    ties: np.ndarray
    presence: np.ndarray  # (replicas, n_probes) uint8
    probe_ids: np.ndarray
    geo_edges: list | None = None
    geo_weights: list | None = None
    seconds: float = 0.0


def collect_batch(
    cfg: ExperimentConfig,
    n: int,
    m: int | None = None,
    want_edges: bool = False,
    probe_ids=(),
    replicas: int | None = None,
) -> ReplicaBatch:
    t0 = _time.perf_counter()
    m_eff = cfg.m_for(n) if m is None else m
    box, flat = _run_replicas(
        cfg, n, m_eff, want_edges=want_edges, probe_ids=probe_ids, replicas=replicas
    )
    elapsed = _time.perf_counter() - t0
    return ReplicaBatch(
        n=n,
        m=m_eff,
        times=np.array([f[0] for f in flat]),
        geo_len=np.array([f[1] for f in flat], dtype=float),
        ties=np.array([f[2] for f in flat], dtype=np.int64),
        presence=(
            np.stack([f[3] for f in flat])
            if probe_ids
            else np.empty((len(flat), 0), dtype=np.uint8)
        ),
        probe_ids=np.asarray(probe_ids, dtype=np.int64),
        geo_edges=[f[4] for f in flat] if want_edges else None,
        geo_weights=[f[5] for f in flat] if want_edges else None,
        seconds=elapsed,
    )


# ---------------------------------------------------------------------------
# variance scaling


def jackknife_variance_ci(x: np.ndarray, level: float = 0.95):
    """Sample variance with a leave-one-out jackknife normal CI."""
    x = np.asarray(x, dtype=float)
    r = x.size
    if r < 3:
        raise DomainError("jackknife needs at least 3 replicas")
    v = float(x.var(ddof=1))
    s1 = x.sum()
    s2 = float(np.dot(x, x))
    vi = (s2 - x**2 - (s1 - x) ** 2 / (r - 1)) / (r - 2)
    se = math.sqrt((r - 1) / r * float(np.sum((vi - vi.mean()) ** 2)))
    z = _sstats.norm.ppf(0.5 + level / 2)
    return v, max(v - z * se, 0.0), v + z * se


@dataclass
class ScalingRow:
    n: int
    mean: float
    var: float
    var_lo: float
    var_hi: float
    geo_len_mean: float
    geo_len_sq_mean: float
    ties: int
    seconds: float

    def as_csv_row(self, deterministic: bool = True):
        return [
            self.n,
            self.mean,
            self.var,
            self.var_lo,
            self.var_hi,
            self.geo_len_mean,
            self.geo_len_sq_mean,
            self.ties,
            0.0 if deterministic else self.seconds,
        ]

    def summary(self, deterministic: bool = True) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "var": self.var,
            "var_lo": self.var_lo,
            "var_hi": self.var_hi,
            "geo_len_mean": self.geo_len_mean,
            "geo_len_sq_mean": self.geo_len_sq_mean,
            "ties": self.ties,
            "seconds": 0.0 if deterministic else self.seconds,
        }


SCALING_CSV_HEADER = [
    "n",
    "mean",
    "var",
    "var_lo",
    "var_hi",
    "geo_len_mean",
    "geo_len_sq_mean",
    "ties",
    "seconds",
]


def row_from_batch(batch: ReplicaBatch) -> ScalingRow:
    v, lo, hi = jackknife_variance_ci(batch.times)
    return ScalingRow(
        n=batch.n,
        mean=float(batch.times.mean()),
        var=v,
        var_lo=lo,
        var_hi=hi,
        geo_len_mean=float(batch.geo_len.mean()),
        geo_len_sq_mean=float((batch.geo_len**2).mean()),
        ties=int(np.count_nonzero(batch.ties)),
        seconds=batch.seconds,
    )


def run_variance_scaling(cfg: ExperimentConfig, batches: dict | None = None):
    """One ScalingRow per n; optionally fills `batches` for reuse."""
    rows = []
    for n in cfg.n_list:
        batch = collect_batch(cfg, int(n), m=0)
        if batches is not None:
            batches[int(n)] = batch
        rows.append(row_from_batch(batch))
    return rows


@dataclass
class FitReport:
    c_linear: float
    rss_linear: float
    c_over_log: float
    rss_over_log: float
    preferred: str  # "linear" | "linear-over-log" | "inconclusive"
    noise_floor: float

    def summary(self) -> dict:
        return {
            "c_linear": self.c_linear,
            "rss_linear": self.rss_linear,
            "c_over_log": self.c_over_log,
            "rss_over_log": self.rss_over_log,
            "preferred": self.preferred,
            "noise_floor": self.noise_floor,
        }


def fit_scaling(rows) -> FitReport:
    """Least squares on log Var against the shapes c*n and c*n/log n.

    Preference is withheld when the residual gap is inside the noise floor
    implied by the per-row CIs: at desk scale the two shapes differ by a
    nearly constant factor, so an honest "inconclusive" is the common case.
    """
    if len(rows) < 3:
        raise DomainError("need at least 3 rows to compare scaling models")
    n = np.array([float(r.n) for r in rows])
    var = np.array([float(r.var) for r in rows])
    if np.any(var <= 0):
        raise DomainError("variances must be positive to fit on the log scale")
    if np.any(n <= 1):
        raise DomainError("model n/log n needs n > 1")
    logv = np.log(var)
    sig = np.zeros(len(rows))
    for i, r in enumerate(rows):
        if r.var_hi > r.var_lo > 0:
            sig[i] = (math.log(r.var_hi) - math.log(r.var_lo)) / (2 * 1.959963984540054)
    out = {}
    for label, shape in (("linear", n), ("linear-over-log", n / np.log(n))):
        logc = float(np.mean(logv - np.log(shape)))
        rss = float(np.sum((logv - logc - np.log(shape)) ** 2))
        out[label] = (math.exp(logc), rss)
    # the residual gap fluctuates on the scale 2 |shape difference| sigma,
    # so demanding gap > 4 sum(sigma^2) is a two-sigma separation criterion
    noise_floor = 4.0 * float(np.sum(sig**2))
    delta = abs(out["linear"][1] - out["linear-over-log"][1])
    if delta <= max(noise_floor, 1e-12):
        preferred = "inconclusive"
    else:
        preferred = min(out, key=lambda k: out[k][1])
    return FitReport(
        c_linear=out["linear"][0],
        rss_linear=out["linear"][1],
        c_over_log=out["linear-over-log"][0],
        rss_over_log=out["linear-over-log"][1],
        preferred=preferred,
        noise_floor=noise_floor,
    )


# ---------------------------------------------------------------------------
# tail profile


@dataclass
class TailRow:
    t: float
    threshold: float
    count: int
    p_hat: float
    p_lo: float
    p_hi: float
    method: str


@dataclass
class TailFit:
    slope: float
    intercept: float
    r2: float
    slope_se: float
    points: int

    @property
    def rate(self) -> float:
        """Empirical exponential rate (positive for a decaying tail)."""
        return -self.slope

    def summary(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "slope_se": self.slope_se,
            "points": self.points,
            "rate": self.rate,
        }


@dataclass
class TailProfile:
    n: int
    scale: float
    rows: list
    fit: TailFit | None
    flags: list

    def summary(self) -> dict:
        return {
            "n": self.n,
            "scale": self.scale,
            "rows": [vars(r) for r in self.rows],
            "fit": self.fit.summary() if self.fit else None,
            "flags": list(self.flags),
        }


def _count_ci(k: int, n: int, level: float = 0.95):
    """Normal CI for counts >= 20, Clopper-Pearson below."""
    alpha = 1.0 - level
    p = k / n
    if k >= 20:
        z = _sstats.norm.ppf(1 - alpha / 2)
        half = z * math.sqrt(max(p * (1 - p), 1e-300) / n)
        return max(p - half, 0.0), min(p + half, 1.0), "normal"
    lo = 0.0 if k == 0 else float(_sstats.beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(_sstats.beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi, "clopper-pearson"


def tail_profile(
    cfg: ExperimentConfig,
    n: int,
    batch: ReplicaBatch | None = None,
    t_grid=DEFAULT_T_GRID,
    min_fit_count: int = 20,
) -> TailProfile:
    """Empirical exceedance of |f - mean| over t * sqrt(n / log n).

    The exponential-rate fit uses only grid points with at least
    `min_fit_count` exceedances; sparser rows are reported with exact
    binomial intervals and excluded from the fit.
    """
    if batch is None:
        if cfg.replicas < 1000:
            raise ConfigError("tail profile needs at least 1000 replicas")
        batch = collect_batch(cfg, n, m=0)
    times = batch.times
    reps = times.size
    center = float(times.mean())
    scale = math.sqrt(n / math.log(n)) if n > 1 else 1.0
    rows = []
    flags = []
    for t in t_grid:
        thr = float(t) * scale
        k = int(np.sum(np.abs(times - center) > thr))
        lo, hi, method = _count_ci(k, reps)
        rows.append(
            TailRow(
                t=float(t),
                threshold=thr,
                count=k,
                p_hat=k / reps,
                p_lo=lo,
                p_hi=hi,
                method=method,
            )
        )
    usable = [r for r in rows if r.count >= min_fit_count]
    if any(r.count == 0 for r in rows):
        flags.append("grid-truncated")
    fit = None
    if len(usable) >= 2:
        x = np.array([r.t for r in usable])
        y = np.log(np.array([r.p_hat for r in usable]))
        a = np.vstack([x, np.ones_like(x)]).T
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        yhat = a @ coef
        ss_res = float(np.sum((y - yhat) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
        dof = max(len(usable) - 2, 1)
        s2 = ss_res / dof
        sxx = float(np.sum((x - x.mean()) ** 2))
        slope_se = math.sqrt(s2 / sxx) if sxx > 0 else math.inf
        fit = TailFit(
            slope=float(coef[0]),
            intercept=float(coef[1]),
            r2=float(r2),
            slope_se=slope_se,
            points=len(usable),
        )
    else:
        flags.append("insufficient-exceedances")
    return TailProfile(n=n, scale=scale, rows=rows, fit=fit, flags=flags)


# ---------------------------------------------------------------------------
# influence diagnostics


@dataclass
class ProbeStat:
    edge: int
    endpoints: tuple
    presence: float
    w_sq_mean: float  # mean of exact W_{e,+}^2 over the exact subsample
    r_hat: float


@dataclass
class ConcentrationDiagnostics:
    n: int
    m: int
    r_hat: float
    s_hat: float
    s_hat_bound: float
    mean_f: float
    k_const: float
    l_of_k: float | None
    l_defined: bool
    probes: list
    flags: list

    def summary(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "r_hat": self.r_hat,
            "s_hat": self.s_hat,
            "s_hat_bound": self.s_hat_bound,
            "mean_f": self.mean_f,
            "k_const": self.k_const,
            "l_of_k": self.l_of_k,
            "l_defined": self.l_defined,
            "probes": [vars(p) for p in self.probes],
            "flags": list(self.flags),
        }


def l_of_k(k_const: float, rs: float) -> float:
    """K / log(K / (rs log(K / rs))); defined only for K > e * rs."""
    if rs <= 0 or k_const <= math.e * rs:
        raise DomainError("l(K) requires K > e * r * s")
    inner = math.log(k_const / rs)
    return k_const / math.log(k_const / (rs * inner))


def influence_diagnostics(
    cfg: ExperimentConfig,
    n: int,
    probe_radius: int = 1,
    exact_replicas: int = 200,
) -> dict:
    """Paired influence run: identical weight seeds with m = 0 and with the
    configured m policy (auto by default at m = ceil(n^(1/4))).

    Edge-presence probabilities near the origin come from all replicas.
    Exact per-probe influences W_{e,+} (breakpoint solve + mean excess in
    closed form) are averaged over a smaller subsample; whole-geodesic
    influence sums use the 1-Lipschitz upper bound, which is what the
    diagnostics r and s stand in for anyway.
    """
    dist = parse_spec(cfg.dist_spec)
    m_auto = cfg.m_for(n) if cfg.m_policy != "none" else int(math.ceil(n**0.25))
    box = box_for(cfg, n)
    probe_ids = [int(e) for e in box.edges_near(tuple([0] * cfg.dim), probe_radius)]
    out = {}
    for m in (0, m_auto):
        batch = collect_batch(cfg, n, m=m, probe_ids=probe_ids)
        exact_n = min(exact_replicas, cfg.replicas)
        w_sq = np.zeros(len(probe_ids))
        s_sq_sum = 0.0
        for r in range(exact_n):
            w_e, w_plus = _exact_probe_influence(
                cfg, box, dist, n, m, r, probe_ids
            )
            w_sq += w_e**2
            s_sq_sum += w_plus**2
        w_sq /= max(exact_n, 1)
        s_sq = s_sq_sum / max(exact_n, 1)
        mean_f = float(batch.times.mean())
        ey = dist.mean()
        s_bound = ey * math.sqrt(float((batch.geo_len**2).mean()))
        r_hat = float(np.sqrt(w_sq.max())) if len(probe_ids) else 0.0
        s_hat = math.sqrt(s_sq)
        flags = []
        k_const = _k_const(cfg, dist, mean_f, m, n, flags)
        rs = r_hat * s_hat
        l_val = None
        defined = k_const > math.e * rs and rs > 0
        if defined:
            l_val = l_of_k(k_const, rs)
        else:
            flags.append("l(K) undefined: K <= e*r*s or degenerate r*s")
        probes = [
            ProbeStat(
                edge=eid,
                endpoints=box.edge_endpoints(eid),
                presence=float(batch.presence[:, j].mean()),
                w_sq_mean=float(w_sq[j]),
                r_hat=float(math.sqrt(w_sq[j])),
            )
            for j, eid in enumerate(probe_ids)
        ]
        out[m] = ConcentrationDiagnostics(
            n=n,
            m=m,
            r_hat=r_hat,
            s_hat=s_hat,
            s_hat_bound=s_bound,
            mean_f=mean_f,
            k_const=k_const,
            l_of_k=l_val,
            l_defined=defined,
            probes=probes,
            flags=flags,
        )
    base = out[0]
    rand = out[m_auto]
    return {
        "m0": base,
        "randomized": rand,
        "max_presence_m0": max((p.presence for p in base.probes), default=0.0),
        "max_presence_randomized": max((p.presence for p in rand.probes), default=0.0),
    }


def _exact_probe_influence(cfg, box, dist, n, m, replica, probe_ids):
    """Exact W_{e,+} for probe edges plus the Lipschitz bound on W_+."""
    field = WeightField.generate(box, dist, cfg.master_seed, replica)
    if m > 0:
        bits = _offset_bits(cfg.master_seed, replica, m, box.d)
        amap = AveragingMap(m)
        z = np.array([amap.level(row) for row in bits], dtype=np.int64)
    else:
        z = np.zeros(box.d, dtype=np.int64)
    u = tuple(int(c) for c in z)
    v = list(u)
    v[0] += n
    res = passage_time(field, u, tuple(v))
    w_e = np.zeros(len(probe_ids))
    for j, eid in enumerate(probe_ids):
        if not res.edge_bitset[eid]:
            continue
        t0, t_inf = edge_breakpoint(field, res, eid)
        level = res.time - t0
        w_e[j] = dist.upper_mean(level) - dist.upper_mean(t_inf - t0)
    # 1-Lipschitz bound: resampling edge e can add at most (Y - x_e)+
    w_plus = float(
        np.sum([dist.upper_mean(float(x)) for x in field.weights[res.edge_ids]])
    )
    return w_e, w_plus


def _k_const(cfg, dist, mean_f, m, n, flags) -> float:
    """Stand-in for the energy constant: 4 C E(F) + D (1 + 2/C)."""
    if dist.kind == "bernoulli":
        from .distributions import lsi_constant_bernoulli

        c_e = lsi_constant_bernoulli(dist.p) * (dist.b - dist.a) ** 2 / (4 * dist.a)
    elif dist.continuous:
        verdict = classify_nearly_gamma(dist)
        if not verdict.direct_pass:
            flags.append("edge law failed the direct nearly-gamma check")
            c_e = 1.0
        else:
            c_e = verdict.bound_a
    else:
        flags.append("no energy constant for this kind; using 1.0")
        c_e = 1.0
    c5 = 4.0 * cfg.dim / dist.exp_moment_rate()
    d_const = (c5**2) * m * (math.log(n) ** 2) if m > 0 else 0.0
    return 4.0 * c_e * mean_f + d_const * (1.0 + 2.0 / c_e)


# ---------------------------------------------------------------------------
# time constant


@dataclass
class TimeConstantRow:
    n: int
    mean: float
    mean_lo: float
    mean_hi: float
    ratio: float
    ratio_lo: float
    ratio_hi: float


@dataclass
class TimeConstantReport:
    direction: tuple
    rows: list
    subadditivity: list  # (n, 2n, ok) triples
    nonincreasing_within_ci: bool

    def summary(self) -> dict:
        return {
            "direction": list(self.direction),
            "rows": [vars(r) for r in self.rows],
            "subadditivity": [list(t) for t in self.subadditivity],
            "nonincreasing_within_ci": self.nonincreasing_within_ci,
        }


def estimate_time_constant(
    cfg: ExperimentConfig, batches: dict | None = None
) -> TimeConstantReport:
    """f(n)/n along e1 with normal CIs plus mean-subadditivity checks."""
    rows = []
    cache = batches if batches is not None else {}
    for n in cfg.n_list:
        n = int(n)
        if n not in cache:
            cache[n] = collect_batch(cfg, n, m=0)
        t = cache[n].times
        mu = float(t.mean())
        half = 1.959963984540054 * float(t.std(ddof=1)) / math.sqrt(t.size)
        rows.append(
            TimeConstantRow(
                n=n,
                mean=mu,
                mean_lo=mu - half,
                mean_hi=mu + half,
                ratio=mu / n,
                ratio_lo=(mu - half) / n,
                ratio_hi=(mu + half) / n,
            )
        )
    ns = {r.n: r for r in rows}
    sub = []
    for r in rows:
        if 2 * r.n in ns:
            r2 = ns[2 * r.n]
            sub.append((r.n, 2 * r.n, bool(r2.mean_lo <= 2 * r.mean_hi)))
    noninc = all(
        ns[b].ratio_lo <= ns[a].ratio_hi
        for a, b in zip(sorted(ns), sorted(ns)[1:])
    )
    return TimeConstantReport(
        direction=tuple([1] + [0] * (cfg.dim - 1)),
        rows=rows,
        subadditivity=sub,
        nonincreasing_within_ci=noninc,
    )


# ---------------------------------------------------------------------------
# truncation comparison


@dataclass
class TruncationReport:
    k: int
    c5: float
    cut: float
    grid_ok: bool
    grid_max_defect: float
    coupling_violations: int
    distance_violations: int
    replicas: int
    gap_mean: float
    gap_max: float
    zero_gap_replicas: int

    def summary(self) -> dict:
        return dict(vars(self))


def truncation_experiment(
    cfg: ExperimentConfig,
    k: int,
    c5: float,
    n: int | None = None,
    grid_points: int = 10_000,
    replicas: int | None = None,
) -> TruncationReport:
    """Quantile-coupled comparison of the base law and its truncation.

    The same uniforms drive both quantiles, so the truncated weights are
    pointwise no larger; distances inherit the ordering exactly, and both
    facts are asserted per replica, not assumed.
    """
    base = parse_spec(cfg.dist_spec)
    if not base.continuous:
        raise ConfigError("truncation comparison needs a continuous base law")
    nu_k = truncate(base, k, c5)
    n = int(n if n is not None else min(cfg.n_list))
    reps = int(replicas if replicas is not None else min(cfg.replicas, 1000))

    lo_q = float(base.quantile(1e-9))
    hi_q = max(float(nu_k.top), float(base.quantile(1.0 - 1e-9)))
    grid = np.linspace(lo_q, hi_q, grid_points)
    defect = np.asarray(base.cdf(grid)) - np.asarray(nu_k.cdf(grid))
    grid_max_defect = float(defect.max())
    grid_ok = bool(grid_max_defect <= 1e-12)

    box = box_for(cfg, n)
    src = box.vertex_index(tuple([0] * cfg.dim))
    tgt_coord = [0] * cfg.dim
    tgt_coord[0] = n
    tgt = box.vertex_index(tuple(tgt_coord))
    coupling_viol = 0
    dist_viol = 0
    gaps = np.empty(reps)
    for r in range(reps):
        rng = np.random.default_rng(
            np.random.SeedSequence((cfg.master_seed, r, 0x7A))
        )
        u = rng.random(box.n_edges)
        x = np.asarray(base.quantile(u))
        x_t = np.asarray(nu_k.quantile(u))
        coupling_viol += int(np.count_nonzero(x_t > x))
        d_full = box.solve(x, src)[0][tgt]
        d_trunc = box.solve(x_t, src)[0][tgt]
        if d_trunc > d_full:
            dist_viol += 1
        gaps[r] = d_full - d_trunc
    return TruncationReport(
        k=int(k),
        c5=float(c5),
        cut=nu_k.cut,
        grid_ok=grid_ok,
        grid_max_defect=grid_max_defect,
        coupling_violations=coupling_viol,
        distance_violations=dist_viol,
        replicas=reps,
        gap_mean=float(gaps.mean()),
        gap_max=float(gaps.max()),
        zero_gap_replicas=int(np.count_nonzero(gaps == 0.0)),
    )


# ---------------------------------------------------------------------------
# geodesic statistics


@dataclass
class GeodesicStats:
    n: int
    mean_len: float
    mean_len_sq: float
    len_sq_over_n_sq: float
    ball_counts: dict  # m -> mean |geodesic ∩ ball(probe edge, d*m)|
    replicas: int

    def summary(self) -> dict:
        return {
            "n": self.n,
            "mean_len": self.mean_len,
            "mean_len_sq": self.mean_len_sq,
            "len_sq_over_n_sq": self.len_sq_over_n_sq,
            "ball_counts": {str(k): v for k, v in self.ball_counts.items()},
            "replicas": self.replicas,
        }


def geodesic_stats(
    cfg: ExperimentConfig,
    n: int,
    ball_ms=(2, 3, 4),
    batch: ReplicaBatch | None = None,
) -> GeodesicStats:
    """Length moments plus geodesic counts in balls around a mid-path edge."""
    if batch is None or batch.geo_edges is None:
        batch = collect_batch(cfg, n, m=0, want_edges=True)
    box = box_for(cfg, n)
    center = [0] * cfg.dim
    center[0] = n // 2
    lo_coords = (
        np.stack(np.unravel_index(box.edge_u, box.shape), axis=1) + np.asarray(box.lo)
    )
    ball_counts = {}
    for m in ball_ms:
        radius = cfg.dim * m
        total = 0
        for eids in batch.geo_edges:
            d1 = np.abs(lo_coords[eids] - np.asarray(center)).sum(axis=1)
            total += int(np.count_nonzero(d1 <= radius))
        ball_counts[int(m)] = total / len(batch.geo_edges)
    return GeodesicStats(
        n=n,
        mean_len=float(batch.geo_len.mean()),
        mean_len_sq=float((batch.geo_len**2).mean()),
        len_sq_over_n_sq=float((batch.geo_len**2).mean() / n**2),
        ball_counts=ball_counts,
        replicas=batch.times.size,
    )


# ---------------------------------------------------------------------------
# assembled report


def full_report(cfg: ExperimentConfig, deterministic: bool = True) -> dict:
    """Scaling rows, model fit and time-constant summary as one document."""
    batches: dict = {}
    rows = run_variance_scaling(cfg, batches=batches)
    fit = fit_scaling(rows) if len(rows) >= 3 else None
    tc = estimate_time_constant(cfg, batches=batches)
    return {
        "version": _pkg_version,
        "config": cfg.echo(),
        "rows": [r.summary(deterministic) for r in rows],
        "fit": fit.summary() if fit else None,
        "time_constant": tc.summary(),
    }
