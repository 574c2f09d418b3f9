"""Service-time distributions and the survival-ratio operator calculus.

Everything downstream (the event simulator, the fluid solver, the limit
engine) talks to service laws through the ServiceDistribution record built
here: cdf G, density g, hazard h = g/(1-G), support endpoint L, and a
sampler.  Laws are normalized so the mean service requirement is 1 unless
the caller opts out.

The module also owns the two operator families built from survival ratios,

    (Phi_t f)(x)   = f(x+t) (1-G(x+t)) / (1-G(x))
    (Psi_t f)(x,s) = f(x + (t-s)^+) (1-G(x + (t-s)^+)) / (1-G(x))

the scalar kernel psi_h, the renewal function U (Volterra solve), and the
Holder-ratio fitter used as a regularity gate.  Ratios are evaluated through
survival functions directly (never 1 - cdf) so they stay meaningful far into
the tail; wherever the denominator survival is 0 the ratio is 0 by the
convention that mass beyond the support is dead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg, stats

__all__ = [
    "ServiceDistribution",
    "ArrivalSpec",
    "HolderReport",
    "make_service_dist",
    "renewal_function",
    "holder_check",
    "phi_op",
    "psi_op",
    "psi_h",
    "as_rate",
]

_MEAN_TOL = 1e-6


@dataclass(frozen=True)
class ServiceDistribution:
    """Immutable service law: G, g, h, support endpoint, mean, sampler.

    cdf/density/hazard/sf accept scalars or arrays and return ndarrays.
    sampler(rng, size) draws service durations; conditional(rng, ages) draws
    full durations v ~ G given v > age (used for initially-in-service
    customers).  Safe to share across threads and replicates.
    """

    name: str
    cdf: Callable
    density: Callable
    hazard: Callable
    support_end: float
    mean: float
    sampler: Callable
    sf: Callable = field(repr=False, default=None)
    conditional: Callable = field(repr=False, default=None)

    def survival_ratio(self, x, t):
        """(1-G(x+t))/(1-G(x)), with the dead-mass convention 0/0 -> 0."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        den = self.sf(x)
        num = self.sf(x + t)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
        return out


def _from_scipy(name, frozen, support_end=np.inf, mean=None):
    mean = float(frozen.mean()) if mean is None else float(mean)

    def cdf(x):
        return frozen.cdf(np.asarray(x, dtype=float))

    def density(x):
        return frozen.pdf(np.asarray(x, dtype=float))

    def sf(x):
        return frozen.sf(np.asarray(x, dtype=float))

    def hazard(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            h = np.exp(frozen.logpdf(x) - frozen.logsf(x))
        return np.where(np.isfinite(h), h, 0.0)

    def sampler(rng, size=None):
        return frozen.rvs(size=size, random_state=rng)

    def conditional(rng, ages):
        # v ~ G given v > a, via the inverse survival function
        ages = np.asarray(ages, dtype=float)
        u = rng.uniform(size=ages.shape)
        v = frozen.isf(u * frozen.sf(ages))
        return np.maximum(v, ages)

    return ServiceDistribution(
        name=name, cdf=cdf, density=density, hazard=hazard,
        support_end=float(support_end), mean=mean, sampler=sampler,
        sf=sf, conditional=conditional,
    )


def _make_exponential(params, normalize):
    rate = float(params.pop("rate", 1.0))
    if rate <= 0:
        raise ValueError("exponential rate must be positive")
    if normalize:
        rate = 1.0
    return _from_scipy(f"exponential(rate={rate:g})",
                       stats.expon(scale=1.0 / rate), mean=1.0 / rate)


def _make_lognormal(params, normalize):
    sigma = float(params.pop("sigma", 0.5))
    if sigma <= 0:
        raise ValueError("lognormal sigma must be positive")
    mu = float(params.pop("mu", 0.0))
    if normalize:
        mu = -sigma * sigma / 2.0  # mean exp(mu + sigma^2/2) = 1
    return _from_scipy(f"lognormal(sigma={sigma:g})",
                       stats.lognorm(s=sigma, scale=math.exp(mu)))


def _make_weibull(params, normalize):
    shape = float(params.pop("shape", 1.5))
    if shape <= 0:
        raise ValueError("weibull shape must be positive")
    scale = float(params.pop("scale", 1.0))
    if normalize:
        scale = 1.0 / math.gamma(1.0 + 1.0 / shape)
    return _from_scipy(f"weibull(shape={shape:g})",
                       stats.weibull_min(c=shape, scale=scale))


def _make_gamma(params, normalize):
    shape = float(params.pop("shape", 2.0))
    if shape <= 0:
        raise ValueError("gamma shape must be positive")
    scale = float(params.pop("scale", 1.0))
    if normalize:
        scale = 1.0 / shape
    return _from_scipy(f"gamma(shape={shape:g})",
                       stats.gamma(a=shape, scale=scale))


def _make_pareto(params, normalize):
    # Lomax / Pareto-II so that the support starts at 0 with G(0) = 0
    a = float(params.pop("a", 1.5))
    if a <= 1.0:
        raise ValueError("pareto exponent must exceed 1 for a finite mean")
    scale = float(params.pop("scale", 1.0))
    if normalize:
        scale = a - 1.0
    return _from_scipy(f"pareto(a={a:g})", stats.lomax(c=a, scale=scale))


def _make_logistic(params, normalize):
    # half-logistic: the positive-support form of the logistic law
    scale = float(params.pop("scale", 1.0))
    if scale <= 0:
        raise ValueError("logistic scale must be positive")
    if normalize:
        scale = 1.0 / math.log(4.0)
    return _from_scipy(f"logistic(scale={scale:g})",
                       stats.halflogistic(scale=scale))


def _make_phasetype(params, normalize):
    alpha = np.asarray(params.pop("alpha", (0.5, 0.5)), dtype=float)
    S = np.asarray(params.pop("S", ((-2.0, 0.0), (0.0, -0.5))), dtype=float)
    if alpha.ndim != 1 or S.shape != (alpha.size, alpha.size):
        raise ValueError("phase-type needs alpha (m,) and S (m, m)")
    if abs(alpha.sum() - 1.0) > 1e-12 or np.any(alpha < 0):
        raise ValueError("phase-type alpha must be a probability vector")
    if np.any(np.diag(S) >= 0) or np.any(S - np.diag(np.diag(S)) < 0):
        raise ValueError("phase-type S must be a subgenerator")
    ones = np.ones(alpha.size)
    raw_mean = float(-alpha @ np.linalg.solve(S, ones))
    if not np.isfinite(raw_mean) or raw_mean <= 0:
        raise ValueError("phase-type mean is not finite and positive")
    if normalize:
        S = S * raw_mean
    exit_rates = -S @ ones
    mean = float(-alpha @ np.linalg.solve(S, ones))

    # spectral form G(x) = 1 - sum c_i exp(l_i x); S subgenerators are
    # diagonalizable for the families used here, fall back to expm otherwise
    try:
        lam, V = linalg.eig(S)
        Vinv = np.linalg.inv(V)
        cond_ok = np.linalg.cond(V) < 1e8
    except np.linalg.LinAlgError:
        cond_ok = False
    if cond_ok:
        w_sf = (alpha @ V) * (Vinv @ ones)       # sf(x) = sum w exp(lam x)
        w_g = (alpha @ V) * (Vinv @ exit_rates)  # g(x)  = sum w exp(lam x)

        def sf(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            val = np.real(np.exp(np.outer(x, lam)) @ w_sf)
            return np.clip(val, 0.0, 1.0).reshape(np.shape(x))

        def density(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            val = np.real(np.exp(np.outer(x, lam)) @ w_g)
            return np.maximum(val, 0.0).reshape(np.shape(x))
    else:
        def sf(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            return np.array([float(alpha @ linalg.expm(S * xi) @ ones) for xi in x])

        def density(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            return np.array([float(alpha @ linalg.expm(S * xi) @ exit_rates) for xi in x])

    def cdf(x):
        return 1.0 - sf(x)

    def hazard(x):
        s = sf(x)
        g = density(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(s > 0.0, g / np.where(s > 0.0, s, 1.0), 0.0)

    rates = -np.diag(S)
    jump = S - np.diag(np.diag(S))
    with np.errstate(invalid="ignore"):
        probs = jump / rates[:, None]
    absorb = 1.0 - probs.sum(axis=1)

    def _simulate_from(rng, phase0):
        # one CTMC passage time per entry of phase0
        out = np.zeros(phase0.shape, dtype=float)
        active = phase0.copy()
        alive = active >= 0
        while np.any(alive):
            idx = active[alive]
            out[alive] += rng.exponential(1.0 / rates[idx])
            u = rng.uniform(size=idx.size)
            nxt = np.full(idx.size, -1)
            cum = np.zeros(idx.size)
            for j in range(alpha.size):
                p = probs[idx, j]
                take = (u >= cum) & (u < cum + p)
                nxt[take] = j
                cum += p
            active[alive] = nxt
            alive = active >= 0
        return out

    def sampler(rng, size=None):
        n = int(np.prod(size)) if size is not None else 1
        phase0 = rng.choice(alpha.size, size=n, p=alpha)
        out = _simulate_from(rng, phase0)
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def conditional(rng, ages):
        # phase occupancy at the attained age, then resume the chain
        ages = np.asarray(ages, dtype=float)
        flat = ages.reshape(-1)
        phase0 = np.empty(flat.size, dtype=int)
        for i, a in enumerate(flat):
            occ = np.real(alpha @ linalg.expm(S * a))
            tot = occ.sum()
            if tot <= 0:
                phase0[i] = int(np.argmax(alpha))
            else:
                phase0[i] = rng.choice(alpha.size, p=np.maximum(occ, 0.0) / np.maximum(occ, 0.0).sum())
        resid = _simulate_from(rng, phase0)
        return (flat + resid).reshape(ages.shape)

    del absorb
    return ServiceDistribution(
        name=f"phasetype(m={alpha.size})", cdf=cdf, density=density,
        hazard=hazard, support_end=np.inf, mean=mean, sampler=sampler,
        sf=sf, conditional=conditional,
    )


def _make_piecewise(params, normalize):
    # piecewise-constant density on [0, L); the one bounded-support family
    breaks = np.asarray(params.pop("breaks", (0.0, 1.0, 2.0)), dtype=float)
    values = np.asarray(params.pop("values", (0.75, 0.25)), dtype=float)
    if breaks.ndim != 1 or breaks.size < 2 or np.any(np.diff(breaks) <= 0) or breaks[0] != 0.0:
        raise ValueError("piecewise breaks must increase from 0")
    if values.size != breaks.size - 1 or np.any(values < 0):
        raise ValueError("piecewise needs one nonnegative density value per cell")
    widths = np.diff(breaks)
    total = float(values @ widths)
    if total <= 0:
        raise ValueError("piecewise density has zero mass")
    values = values / total
    raw_mean = float(values @ ((breaks[1:] ** 2 - breaks[:-1] ** 2) / 2.0))
    if normalize:
        breaks = breaks / raw_mean
        values = values * raw_mean
    L = float(breaks[-1])
    mean = float(values @ ((breaks[1:] ** 2 - breaks[:-1] ** 2) / 2.0))
    cum = np.concatenate([[0.0], np.cumsum(values * np.diff(breaks))])
    cum[-1] = 1.0

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, breaks, cum, left=0.0, right=1.0)

    def sf(x):
        return 1.0 - cdf(x)

    def density(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.clip(np.searchsorted(breaks, x, side="right") - 1, 0, values.size - 1)
        out = np.where((x >= 0.0) & (x < L), values[idx], 0.0)
        return out.reshape(np.shape(x)) if np.ndim(x) else out

    def hazard(x):
        s = sf(x)
        g = density(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(s > 0.0, g / np.where(s > 0.0, s, 1.0), 0.0)

    def ppf(q):
        q = np.asarray(q, dtype=float)
        return np.interp(q, cum, breaks)

    def sampler(rng, size=None):
        return ppf(rng.uniform(size=size))

    def conditional(rng, ages):
        ages = np.asarray(ages, dtype=float)
        u = rng.uniform(size=ages.shape)
        v = ppf(1.0 - u * sf(ages))
        return np.maximum(v, ages)

    return ServiceDistribution(
        name=f"piecewise(L={L:g})", cdf=cdf, density=density, hazard=hazard,
        support_end=L, mean=mean, sampler=sampler, sf=sf, conditional=conditional,
    )


_FAMILIES = {
    "exponential": _make_exponential,
    "lognormal": _make_lognormal,
    "weibull": _make_weibull,
    "gamma": _make_gamma,
    "pareto": _make_pareto,
    "logistic": _make_logistic,
    "phasetype": _make_phasetype,
    "piecewise": _make_piecewise,
}


def make_service_dist(spec=None, /, normalize=True, **params):
    """Build a ServiceDistribution from a family name or a spec mapping.

    Accepts make_service_dist("lognormal", sigma=0.5) or the config form
    make_service_dist({"family": "lognormal", "sigma": 0.5}).  With
    normalize=True (default) a scale parameter is chosen so the mean is 1.
    """
    if isinstance(spec, dict):
        params = {**spec, **params}
        family = params.pop("family", None)
        normalize = params.pop("normalize", normalize)
    else:
        family = spec
    if not isinstance(family, str) or family not in _FAMILIES:
        raise ValueError(f"unsupported service family: {family!r}")
    dist = _FAMILIES[family](dict(params), normalize)
    if normalize and abs(dist.mean - 1.0) > _MEAN_TOL:
        raise ValueError(f"{family}: normalization failed, mean={dist.mean}")
    return dist


def renewal_function(dist, T, dt):
    """Renewal function U on the grid {0, dt, ..., ~T}.

    Solves U(t) = 1 + int_0^t g(t-s) U(s) ds by trapezoidal Volterra
    stepping; U(0) = 1 and U is nondecreasing.  First-order accurate
    (the density may be nonsmooth at 0).  A non-finite density value at a
    grid node (bounded-support or shape<1 laws) is replaced by that cell's
    average mass so the stepping stays finite.
    """
    if dt <= 0 or dt > T:
        raise ValueError("need 0 < dt <= T")
    n = int(round(T / dt))
    t = np.arange(n + 1) * dt
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        g = np.asarray(dist.density(t), dtype=float)
    bad = ~np.isfinite(g)
    if np.any(bad):
        lo = np.maximum(t[bad] - dt / 2.0, 0.0)
        hi = t[bad] + dt / 2.0
        g[bad] = (dist.cdf(hi) - dist.cdf(lo)) / (hi - lo)
    U = np.ones(n + 1)
    denom = 1.0 - dt * g[0] / 2.0
    if denom <= 0:
        raise ValueError("dt too large for this density at 0")
    for k in range(1, n + 1):
        acc = 0.5 * g[k] * U[0] + float(g[k - 1:0:-1] @ U[1:k])
        U[k] = (1.0 + dt * acc) / denom
    return np.maximum.accumulate(U)


@dataclass(frozen=True)
class HolderReport:
    """Fitted survival-ratio Holder bound on a grid."""

    C_G: float
    gamma_G: float
    max_violation: float
    grid_used: dict

    def as_dict(self):
        return {"C_G": self.C_G, "gamma_G": self.gamma_G,
                "max_violation": self.max_violation, "grid_used": self.grid_used}


def _holder_ratios(dist, x_grid, y_grid, gamma):
    x = np.asarray(x_grid, dtype=float)[:, None, None]
    y = np.asarray(y_grid, dtype=float)
    Y, Yp = np.meshgrid(y, y, indexing="ij")
    gap = np.abs(Y - Yp)[None]
    num = np.abs(dist.cdf(x + Y[None]) - dist.cdf(x + Yp[None]))
    den = dist.sf(x[:, 0, 0])[:, None, None] * gap ** gamma
    ok = (gap > 0) & (den > 0)
    return num[ok] / den[ok]


def _density_explodes(dist, z_lo, z_hi):
    # probe two depths near the low end of the touched range: a density
    # unbounded at 0 (shape < 1 laws) keeps growing as the probe descends,
    # a bounded one flattens out.  Decay toward z_hi is irrelevant.
    z1 = max(z_lo, 1e-12)
    z2 = min(z1 * 100.0, z_hi)
    if z2 <= z1:
        return False
    g1 = float(np.atleast_1d(dist.density(np.array([z1])))[0])
    g2 = float(np.atleast_1d(dist.density(np.array([z2])))[0])
    if not np.isfinite(g1):
        return True
    gmid = float(np.atleast_1d(dist.density(np.array([(z_lo + z_hi) / 2.0])))[0])
    return g1 > 1.5 * g2 and g1 > 2.0 * max(gmid, 1e-300)


def holder_check(dist, x_grid, y_grid, gamma=None, C=None):
    """Fit the smallest grid constant for the survival-ratio Holder bound.

    Exponent search is restricted to {1, 1/2}.  gamma=1 is reported (its
    constant is sup g / survival on the touched range) unless the density
    blows up at the low end of that range, where no finite Lipschitz
    constant survives grid refinement; then 1/2 is reported.  Passing an
    explicit (gamma, C) turns the call into a pure check and the report's
    max_violation is the worst exceedance of that bound on the grid.
    """
    x = np.asarray(x_grid, dtype=float)
    y = np.asarray(y_grid, dtype=float)
    grid_used = {"x": [float(x.min()), float(x.max()), int(x.size)],
                 "y": [float(y.min()), float(y.max()), int(y.size)]}
    if gamma is not None:
        if gamma not in (1.0, 0.5):
            raise ValueError("gamma must be 1 or 0.5")
        ratios = _holder_ratios(dist, x, y, gamma)
        fit = float(ratios.max()) if ratios.size else 0.0
        if C is None:
            return HolderReport(fit, gamma, 0.0, grid_used)
        viol = max(0.0, fit - float(C)) if ratios.size else 0.0
        return HolderReport(float(C), gamma, viol, grid_used)
    z_lo = float(x.min() + y.min())
    z_hi = float(x.max() + y.max())
    if _density_explodes(dist, z_lo, z_hi):
        c_half = float(_holder_ratios(dist, x, y, 0.5).max())
        return HolderReport(c_half, 0.5, 0.0, grid_used)
    c1 = float(_holder_ratios(dist, x, y, 1.0).max())
    return HolderReport(c1, 1.0, 0.0, grid_used)


def phi_op(dist, f, t):
    """x -> f(x+t) (1-G(x+t))/(1-G(x)); 0 wherever G(x) = 1."""
    if t < 0:
        raise ValueError("t must be nonnegative")

    def phi(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(f(x + t), dtype=float) * dist.survival_ratio(x, t)

    return phi


def psi_op(dist, f, t):
    """(x, s) -> f(x + (t-s)^+) (1-G(x + (t-s)^+))/(1-G(x))."""
    if t < 0:
        raise ValueError("t must be nonnegative")

    def psi(x, s):
        x = np.asarray(x, dtype=float)
        lag = np.maximum(t - np.asarray(s, dtype=float), 0.0)
        return np.asarray(f(x + lag), dtype=float) * dist.survival_ratio(x, lag)

    return psi


def psi_h(dist, x, t):
    """Survival kernel: (1-G(x))/(1-G(x-t)) for t <= x, else 1-G(x)."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    x, t = np.broadcast_arrays(x, t)
    shifted = dist.sf(np.maximum(x - t, 0.0))
    sfx = dist.sf(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(shifted > 0.0, sfx / np.where(shifted > 0.0, shifted, 1.0), 0.0)
    return np.where(t <= x, ratio, sfx)


def as_rate(spec):
    """Turn a config rate spec into a callable of t.

    Accepted forms: a number, a callable, {"const": c},
    {"affine": [a, b]} meaning a + b t, or
    {"pwlin": {"t": [...], "v": [...]}} (linear interpolation, clamped).
    """
    if callable(spec):
        return spec
    if isinstance(spec, (int, float)):
        c = float(spec)
        return lambda t: np.full_like(np.asarray(t, dtype=float), c, dtype=float)
    if isinstance(spec, dict):
        if "const" in spec:
            c = float(spec["const"])
            return lambda t: np.full_like(np.asarray(t, dtype=float), c, dtype=float)
        if "affine" in spec:
            a, b = (float(v) for v in spec["affine"])
            return lambda t: a + b * np.asarray(t, dtype=float)
        if "pwlin" in spec:
            tt = np.asarray(spec["pwlin"]["t"], dtype=float)
            vv = np.asarray(spec["pwlin"]["v"], dtype=float)
            return lambda t: np.interp(np.asarray(t, dtype=float), tt, vv)
    raise ValueError(f"unrecognized rate spec: {spec!r}")


@dataclass(frozen=True)
class ArrivalSpec:
    """Arrival stream in the square-root staffing regime.

    kind "renewal": i.i.d. interarrivals with mean 1/rate_N and variance
    (sigma2/lambda_bar)/rate_N^2, realized as a gamma law (shape
    lambda_bar/sigma2); sigma2 = lambda_bar recovers the Poisson stream.
    kind "inhom_poisson": intensity lambda_bar(t) N - beta(t) sqrt(N),
    sampled by thinning.  lambda_bar and beta may be numbers or rate specs
    understood by as_rate.
    """

    kind: str
    lambda_bar: object = 1.0
    beta: object = 0.0
    sigma2: float = None

    def __post_init__(self):
        if self.kind not in ("renewal", "inhom_poisson"):
            raise ValueError(f"unknown arrival kind: {self.kind!r}")
        if self.kind == "renewal":
            lb = float(self.lambda_bar)
            s2 = lb if self.sigma2 is None else float(self.sigma2)
            if lb <= 0 or s2 <= 0:
                raise ValueError("renewal arrivals need lambda_bar > 0 and sigma2 > 0")
            object.__setattr__(self, "sigma2", s2)

    def rate_fn(self, N):
        """t -> lambda^(N)(t); constant in t for the renewal kind."""
        rootN = math.sqrt(N)
        if self.kind == "renewal":
            lam = float(self.lambda_bar) * N - float(self.beta) * rootN
            return lambda t: np.full_like(np.asarray(t, dtype=float), lam, dtype=float)
        lb = as_rate(self.lambda_bar)
        bt = as_rate(self.beta)
        return lambda t: lb(t) * N - bt(t) * rootN

    def validate_for(self, N, T):
        rate = self.rate_fn(N)
        probe = np.linspace(0.0, T, 513)
        if np.any(np.asarray(rate(probe)) <= 0.0 if self.kind == "renewal"
                  else np.asarray(rate(probe)) < 0.0):
            raise ValueError(f"arrival rate not admissible for N={N} on [0,{T}]")

    def diffusion_coeffs(self):
        """(sigma(t), beta(t)) callables for the centered-arrival diffusion."""
        if self.kind == "renewal":
            s = math.sqrt(self.sigma2)
            b = float(self.beta)
            return (lambda t: np.full_like(np.asarray(t, dtype=float), s, dtype=float),
                    lambda t: np.full_like(np.asarray(t, dtype=float), b, dtype=float))
        lb = as_rate(self.lambda_bar)
        bt = as_rate(self.beta)
        return (lambda t: np.sqrt(np.maximum(lb(t), 0.0)), bt)

    def interarrival_sampler(self, N):
        """Sampler of i.i.d. interarrival times (renewal kind only)."""
        if self.kind != "renewal":
            raise ValueError("interarrivals are defined for the renewal kind")
        lam = float(self.lambda_bar) * N - float(self.beta) * math.sqrt(N)
        if lam <= 0:
            raise ValueError(f"arrival rate {lam} not positive at N={N}")
        shape = float(self.lambda_bar) / self.sigma2
        scale = self.sigma2 / (float(self.lambda_bar) * lam)
        if abs(shape - 1.0) < 1e-12:
            return lambda rng, size=None: rng.exponential(scale, size=size)
        return lambda rng, size=None: rng.gamma(shape, scale, size=size)
