"""Frozen expected values for hazard bounds and limit-object variances.

All computations here use scipy/sympy directly on the mathematical
definitions; nothing imports the package under test.

1. Lognormal(sigma_ln = 0.5) normalized to mean 1 (mu = -sigma^2/2):
   numeric max of g/(1-G) on a refined grid -> finite bound (hazard rises to
   a peak then decays); frozen peak value used as the boundedness witness.
2. Lomax/Pareto-II (a = 1.5, mean 1 -> scale 0.5): Holder ratio
   sup |G(x+y)-G(x+y')| / ((1-G(x)) |y-y'|) equals sup h = a/scale = 3,
   confirmed by grid search.
3. Var Ehat(1) for inhomogeneous rate lambda(t) = 1 + t: integral of lambda
   over [0,1] = 1.5.
4. exp/critical-invariant white-noise variances:
   Var Mhat_t(1) = t; Var Mhat_t(e^{-x} weight) = t * int e^{-2x} g dx = t/3;
   Var Hhat_t(1) = int_0^t e^{-2(t-s)} ds = (1 - e^{-2t})/2.
5. gamma-map closed case: K(u) = u, exponential, f = 1, t = 1:
   value = K(1) - int_0^1 u g(1-u) du = 1 - exp(-1)  (sympy).
6. Half-logistic and Lomax mean-1 scale factors.

Run:  python tests/oracles/hazard_and_limits_oracle.py
"""
import numpy as np
import sympy as sp
from scipy import stats, integrate


def lognormal_hazard_peak(sigma=0.5):
    mu = -sigma**2 / 2.0
    d = stats.lognorm(s=sigma, scale=np.exp(mu))
    x = np.linspace(1e-9, 60.0, 4_000_001)
    h = np.exp(d.logpdf(x) - d.logsf(x))
    i = np.argmax(h)
    return x[i], h[i]


def lomax_holder(a=1.5):
    lam = a - 1.0  # mean = lam/(a-1) = 1
    d = stats.lomax(c=a, scale=lam)
    xg = np.linspace(0.0, 5.0, 201)
    yg = np.linspace(0.0, 3.0, 151)
    best = 0.0
    sf = d.sf(xg)[:, None, None]
    Y, Yp = np.meshgrid(yg, yg, indexing="ij")
    num = np.abs(d.cdf(xg[:, None, None] + Y[None]) - d.cdf(xg[:, None, None] + Yp[None]))
    den = sf * np.abs(Y - Yp)[None]
    mask = den > 0
    best = np.max(num[mask] / den[mask])
    return best, a / lam


def hw_variances():
    t = sp.symbols("t", positive=True)
    x, u = sp.symbols("x u", positive=True)
    var_m1 = sp.integrate(sp.exp(-x), (x, 0, sp.oo))  # <h, nu*> = int g = 1
    var_mexp = sp.integrate(sp.exp(-2 * x) * sp.exp(-x), (x, 0, sp.oo))
    var_h1 = sp.integrate(sp.exp(-2 * (t - u)), (u, 0, t))
    return var_m1, var_mexp, sp.simplify(var_h1)


def gamma_map_case():
    u = sp.symbols("u")
    val = 1 - sp.integrate(u * sp.exp(-(1 - u)), (u, 0, 1))
    return sp.simplify(val), float(val)


if __name__ == "__main__":
    xpk, hpk = lognormal_hazard_peak()
    print(f"lognormal(0.5) hazard peak at x={xpk:.6f}, h={hpk:.10f}")
    viol, bound = lomax_holder()
    print(f"lomax(1.5) holder grid max ratio={viol:.8f} vs sup h={bound}")
    print("Var Ehat(1), lambda=1+t:", integrate.quad(lambda s: 1 + s, 0, 1)[0])
    m1, me, h1 = hw_variances()
    print("Var Mhat_t(1)/t =", m1, "; Var Mhat_t(e^-x)/t =", me, "; Var Hhat_t(1) =", h1)
    expr, num = gamma_map_case()
    print("gamma_map case value =", expr, "=", repr(num))
