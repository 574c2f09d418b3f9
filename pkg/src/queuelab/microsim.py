"""Exact event-driven simulator for the N-server age-tracking queue.

The state is (arrivals so far, headcount, the multiset of in-service ages).
No time discretization enters the path itself: arrivals, service starts and
departures are processed one event at a time, so the counting identities

    D(t) = X(0) - X(t) + E(t)
    K(t) = B(t) - B(0) + D(t)          B = number in service
    N - B(t) = (N - X(t))^+
    K(t) = X(t)^N - X(0)^N + D(t)      x^N meaning min(x, N)
    every departure event moves D by exactly 1

hold to the last bit, and the tests demand exactly that.  Quadrature enters
only through the read-out helpers (compensator, centered departure measure,
transport representation, restart consistency), all first-order in their dt.

Policies are fixed: FCFS, arrivals join the lowest-index idle server, a
departure and an arrival at the same instant process the departure first.
Randomness is split into independent child streams (arrivals, services,
initial data) of SeedSequence(seed, spawn_key=(replicate,)), so a
(seed, replicate) pair pins the whole path.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dists import ArrivalSpec, ServiceDistribution

__all__ = [
    "ARRIVAL",
    "DEPARTURE",
    "SERVICE_START",
    "KIND_NAMES",
    "InitialCondition",
    "SimConfig",
    "PathRecord",
    "simulate",
    "invariant_ages",
    "conservation_check",
    "eval_age_functional",
    "compensator",
    "martingale",
    "representation_residual",
    "shift_consistency_check",
]

ARRIVAL, DEPARTURE, SERVICE_START = 0, 1, 2
KIND_NAMES = {ARRIVAL: "arrival", DEPARTURE: "departure", SERVICE_START: "service_start"}


@dataclass(frozen=True)
class InitialCondition:
    """Time-0 population: x0 customers, ages for the min(x0, N) in service.

    ages: explicit array, "invariant" (sampled from the stationary age
    density 1-G), or None meaning all ages 0.  residual_sampling picks how
    remaining work of the initially-in-service is drawn: "conditional"
    (duration ~ G given it exceeds the age) or "fresh" (a full new draw).
    """

    x0: int = 0
    ages: object = None
    residual_sampling: str = "conditional"

    def __post_init__(self):
        if self.x0 < 0:
            raise ValueError("x0 must be nonnegative")
        if self.residual_sampling not in ("conditional", "fresh"):
            raise ValueError("residual_sampling must be 'conditional' or 'fresh'")

    def draw_ages(self, n, dist, rng):
        if n == 0:
            return np.zeros(0)
        if self.ages is None:
            return np.zeros(n)
        if isinstance(self.ages, str):
            if self.ages != "invariant":
                raise ValueError(f"unknown ages spec: {self.ages!r}")
            return invariant_ages(dist, n, rng)
        ages = np.asarray(self.ages, dtype=float)
        if ages.size != n or np.any(ages < 0):
            raise ValueError(f"need {n} nonnegative ages, got {ages.size}")
        return ages


@dataclass(frozen=True)
class SimConfig:
    N: int
    arrival: ArrivalSpec
    service: ServiceDistribution
    T: float
    initial: InitialCondition = field(default_factory=InitialCondition)
    seed: int = 0
    replicate: int = 0
    snapshot_times: Optional[Sequence] = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.T <= 0:
            raise ValueError("T must be positive")


@dataclass
class PathRecord:
    """One simulated path: event log, counters, spans, departures.

    Counter arrays hold post-event values; index -1 of counters_at covers
    t before the first event.  Spans carry theta (effective service start,
    negative for an initial age), begin = max(theta, 0), end (departure
    time, +inf if still in service at T) and whether the span is a fresh
    start (those are the ones K counts).
    """

    N: int
    T: float
    x0: int
    seed: int
    replicate: int
    initial_ages: np.ndarray
    ev_time: np.ndarray
    ev_kind: np.ndarray
    ev_id: np.ndarray
    ev_age: np.ndarray
    E: np.ndarray
    D: np.ndarray
    K: np.ndarray
    X: np.ndarray
    B: np.ndarray
    span_theta: np.ndarray
    span_begin: np.ndarray
    span_end: np.ndarray
    span_fresh: np.ndarray
    span_cust: np.ndarray
    dep_time: np.ndarray
    dep_age: np.ndarray
    snapshots: list = field(default_factory=list)

    @property
    def b0(self):
        return min(self.x0, self.N)

    def counters_at(self, t):
        """(E, D, K, X, B) at time t (right-continuous step evaluation)."""
        i = int(np.searchsorted(self.ev_time, t, side="right")) - 1
        if i < 0:
            return 0, 0, 0, self.x0, self.b0
        return (int(self.E[i]), int(self.D[i]), int(self.K[i]),
                int(self.X[i]), int(self.B[i]))

    def ages_at(self, t):
        """Ages of everyone in service at time t (unordered)."""
        alive = (self.span_begin <= t) & (t < self.span_end)
        return t - self.span_theta[alive]


def invariant_ages(dist, n, rng):
    """Sample n ages from the stationary age density (1 - G(x)) / mean."""
    # numeric inverse of the integrated tail on a grid reaching sf < 1e-9
    hi = 1.0
    while dist.sf(np.array([hi]))[0] > 1e-9 and hi < 1e6:
        hi *= 2.0
    hi = min(hi, dist.support_end)
    x = np.linspace(0.0, hi, 4097)
    tail = dist.sf(x)
    cdf = np.concatenate([[0.0], np.cumsum((tail[1:] + tail[:-1]) / 2.0 * np.diff(x))])
    cdf /= cdf[-1]
    return np.interp(rng.uniform(size=n), cdf, x)


def _arrival_feed(arrival, N, T, rng):
    """Yield arrival times in (0, T] one at a time, deterministically."""
    if arrival.kind == "renewal":
        sampler = arrival.interarrival_sampler(N)
        t = 0.0
        while True:
            block = sampler(rng, size=256)
            for dt in block:
                t += dt
                if t > T:
                    return
                yield t
    else:
        rate = arrival.rate_fn(N)
        probe = np.linspace(0.0, T, 2049)
        M = float(np.max(rate(probe))) * (1.0 + 1e-9)
        if M <= 0:
            return
        t = 0.0
        while True:
            t += rng.exponential(1.0 / M)
            if t > T:
                return
            if rng.uniform() * M <= float(np.atleast_1d(rate(np.array([t])))[0]):
                yield t


def simulate(config):
    """Run one path of the event-driven N-server queue."""
    N, T = config.N, float(config.T)
    config.arrival.validate_for(N, T)
    dist = config.service
    ss = np.random.SeedSequence(config.seed, spawn_key=(config.replicate,))
    ss_arr, ss_svc, ss_init = ss.spawn(3)
    rng_arr = np.random.default_rng(ss_arr)
    rng_svc = np.random.default_rng(ss_svc)
    rng_init = np.random.default_rng(ss_init)

    x0 = config.initial.x0
    b0 = min(x0, N)
    ages0 = config.initial.draw_ages(b0, dist, rng_init)

    # spans: parallel lists, one entry per service episode
    span_theta, span_begin, span_end = [], [], []
    span_fresh, span_cust = [], []
    # heap entries (departure_time, sequence, server, customer, span_index)
    heap = []
    seq = 0
    idle = list(range(b0, N))
    heapq.heapify(idle)
    queue = deque(range(b0, x0))  # FIFO of initial waiters

    if b0 > 0:
        if config.initial.residual_sampling == "conditional":
            remaining0 = np.asarray(dist.conditional(rng_init, ages0)) - ages0
        else:
            remaining0 = np.asarray(dist.sampler(rng_init, size=b0), dtype=float)
        remaining0 = np.maximum(remaining0, 0.0)
        for j in range(b0):
            span_theta.append(-float(ages0[j]))
            span_begin.append(0.0)
            span_end.append(np.inf)
            span_fresh.append(False)
            span_cust.append(j)
            heapq.heappush(heap, (float(remaining0[j]), seq, j, j, len(span_theta) - 1))
            seq += 1

    ev_time, ev_kind, ev_id, ev_age = [], [], [], []
    cE, cD, cK, cX, cB = [], [], [], [], []
    dep_time, dep_age = [], []
    E, D, K, X, B = 0, 0, 0, x0, b0

    snapshots = []
    snap_iter = iter(sorted(float(s) for s in (config.snapshot_times or [])))
    next_snap = next(snap_iter, None)

    def record(t, kind, cid, age):
        ev_time.append(t)
        ev_kind.append(kind)
        ev_id.append(cid)
        ev_age.append(age)
        cE.append(E)
        cD.append(D)
        cK.append(K)
        cX.append(X)
        cB.append(B)

    def take_snapshots_until(t):
        nonlocal next_snap
        while next_snap is not None and next_snap < t:
            if next_snap <= T:
                alive_ages = [next_snap - th for th, en in zip(span_theta, span_end)
                              if max(th, 0.0) <= next_snap < en]
                snapshots.append((next_snap, np.sort(np.asarray(alive_ages))))
            next_snap = next(snap_iter, None)

    svc_buf = np.empty(0)
    svc_pos = 0

    def draw_service():
        # block-buffered draws: one rvs call per 256 starts, same stream
        nonlocal svc_buf, svc_pos
        if svc_pos >= svc_buf.size:
            svc_buf = np.asarray(dist.sampler(rng_svc, size=256), dtype=float)
            svc_pos = 0
        v = float(svc_buf[svc_pos])
        svc_pos += 1
        return v

    def begin_span(t, cid, server):
        # state mutation only; the caller records rows once the whole
        # transition has settled, so every row satisfies the identities
        nonlocal K, B, seq
        K += 1
        B += 1
        span_theta.append(t)
        span_begin.append(t)
        span_end.append(np.inf)
        span_fresh.append(True)
        span_cust.append(cid)
        heapq.heappush(heap, (t + draw_service(), seq, server, cid, len(span_theta) - 1))
        seq += 1

    feed = _arrival_feed(config.arrival, N, T, rng_arr)
    next_arr = next(feed, None)
    next_cid = x0

    while True:
        t_dep = heap[0][0] if heap else np.inf
        t_arr = next_arr if next_arr is not None else np.inf
        if t_dep <= t_arr:  # departures win ties
            t = t_dep
            if t > T:
                break
            take_snapshots_until(t)
            _, _, server, cid, si = heapq.heappop(heap)
            age = t - span_theta[si]
            span_end[si] = t
            D += 1
            X -= 1
            B -= 1
            dep_time.append(t)
            dep_age.append(age)
            if queue:
                cid2 = queue.popleft()
                begin_span(t, cid2, server)
                record(t, DEPARTURE, cid, age)
                record(t, SERVICE_START, cid2, 0.0)
            else:
                heapq.heappush(idle, server)
                record(t, DEPARTURE, cid, age)
        else:
            t = t_arr
            if t > T:
                break
            take_snapshots_until(t)
            E += 1
            X += 1
            cid = next_cid
            next_cid += 1
            if idle:
                begin_span(t, cid, heapq.heappop(idle))
                record(t, ARRIVAL, cid, np.nan)
                record(t, SERVICE_START, cid, 0.0)
            else:
                queue.append(cid)
                record(t, ARRIVAL, cid, np.nan)
            next_arr = next(feed, None)
    take_snapshots_until(np.inf)

    return PathRecord(
        N=N, T=T, x0=x0, seed=config.seed, replicate=config.replicate,
        initial_ages=ages0,
        ev_time=np.asarray(ev_time), ev_kind=np.asarray(ev_kind, dtype=np.int8),
        ev_id=np.asarray(ev_id, dtype=np.int64), ev_age=np.asarray(ev_age),
        E=np.asarray(cE, dtype=np.int64), D=np.asarray(cD, dtype=np.int64),
        K=np.asarray(cK, dtype=np.int64), X=np.asarray(cX, dtype=np.int64),
        B=np.asarray(cB, dtype=np.int64),
        span_theta=np.asarray(span_theta), span_begin=np.asarray(span_begin),
        span_end=np.asarray(span_end), span_fresh=np.asarray(span_fresh, dtype=bool),
        span_cust=np.asarray(span_cust, dtype=np.int64),
        dep_time=np.asarray(dep_time), dep_age=np.asarray(dep_age),
        snapshots=snapshots,
    )


def conservation_check(path):
    """Max absolute violation of each exact counting identity on the path.

    All five are integer identities; anything nonzero is a simulator bug.
    """
    E, D, K, X, B = path.E, path.D, path.K, path.X, path.B
    x0, N, b0 = path.x0, path.N, path.b0
    # departure_steps is 0 when every departure moves D by exactly 1
    steps = np.diff(np.concatenate([[0], D[path.ev_kind == DEPARTURE]]))
    return {
        "departure_balance": int(np.max(np.abs(D - (x0 - X + E)), initial=0)),
        "entry_balance": int(np.max(np.abs(K - (B - b0 + D)), initial=0)),
        "non_idling": int(np.max(np.abs((N - B) - np.maximum(N - X, 0)), initial=0)),
        "entry_balance_capped": int(np.max(np.abs(
            K - (np.minimum(X, N) - min(x0, N) + D)), initial=0)),
        "departure_steps": int(np.max(np.abs(steps - 1), initial=0)),
    }


def eval_age_functional(path, f, t):
    """<f, nu_t>: sum of f over the ages in service at time t (exact)."""
    ages = path.ages_at(t)
    if ages.size == 0:
        return 0.0
    return float(np.sum(f(ages)))


def _left_nodes(path, t0, t1, dt):
    """(span index, node time, age) pairs for left-rule nodes on [t0, t1).

    Node s_k = t0 + k dt carries every span with begin <= s_k < end.
    Returns (span_idx, k, s, ages, n_nodes).
    """
    n = int(round((t1 - t0) / dt))
    if n <= 0 or abs(t0 + n * dt - t1) > 1e-9 * max(1.0, abs(t1)):
        raise ValueError("quadrature window must be a whole number of steps")
    begin, end, theta = path.span_begin, path.span_end, path.span_theta
    k_lo = np.maximum(np.ceil((begin - t0) / dt - 1e-9), 0.0).astype(np.int64)
    k_hi = np.minimum(np.ceil((end - t0) / dt - 1e-9), float(n)).astype(np.int64)
    counts = np.maximum(k_hi - k_lo, 0)
    live = counts > 0
    counts = counts[live]
    span_idx = np.repeat(np.nonzero(live)[0], counts)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    k = (np.arange(offsets[-1]) - np.repeat(offsets[:-1], counts)
         + np.repeat(k_lo[live], counts))
    s = t0 + k * dt
    ages = s - theta[span_idx]
    return span_idx, k, s, ages, n


def compensator(path, dist, t, dt, phi=None):
    """Quadrature reconstruction of the departure compensator profile.

    Returns (grid, A) with grid = {0, dt, ..., t} and
    A(t_m) ~ int_0^{t_m} <phi(., s) h(.), nu_s> ds by the left rule, so the
    error is O(dt).  phi(age, s) defaults to 1.  The age process nu_s is
    rebuilt exactly from the span log; only the time integral is discrete.
    """
    span_idx, k, s, ages, n = _left_nodes(path, 0.0, t, dt)
    with np.errstate(over="ignore"):
        vals = dist.hazard(ages)
        if phi is not None:
            vals = vals * phi(ages, s)
    node_sums = np.bincount(k, weights=vals, minlength=n)
    grid = np.arange(n + 1) * dt
    A = np.concatenate([[0.0], np.cumsum(node_sums) * dt])
    return grid, A


def martingale(path, dist, t, dt, phi=None):
    """Centered departure functional M = Q - A on the grid {0, dt, ..., t}.

    Q is the exact sum of phi(age, time) over departures; A is the
    compensator quadrature from `compensator`.  Returns (grid, M, Q, A).
    """
    grid, A = compensator(path, dist, t, dt, phi=phi)
    if path.dep_time.size:
        w = np.ones_like(path.dep_time) if phi is None else phi(path.dep_age, path.dep_time)
        order = np.argsort(path.dep_time, kind="stable")
        dt_sorted = path.dep_time[order]
        cum = np.concatenate([[0.0], np.cumsum(w[order])])
        Q = cum[np.searchsorted(dt_sorted, grid, side="right")]
    else:
        Q = np.zeros_like(grid)
    return grid, Q - A, Q, A


def representation_residual(path, dist, f, t, dt):
    """Transport representation defect at time t, O(dt) by construction.

    Compares the exact <f, nu_t> against
        (initial transport) - (centered departures) + (fresh-entry kernel)
    where only the compensator inside the centered term is quadrature.
    """
    lhs = eval_age_functional(path, f, t)
    init = ~path.span_fresh
    a0 = -path.span_theta[init]
    S = float(np.sum(np.asarray(f(a0 + t)) * dist.survival_ratio(a0, t)))
    fresh = path.span_fresh & (path.span_begin <= t)
    u = path.span_begin[fresh]
    lag = t - u
    Kf = float(np.sum(np.asarray(f(lag)) * dist.sf(lag)))

    def psi_tf(x, s):
        lag = np.maximum(t - s, 0.0)
        return np.asarray(f(x + lag)) * dist.survival_ratio(x, lag)

    take = path.dep_time <= t
    Qpsi = float(np.sum(psi_tf(path.dep_age[take], path.dep_time[take])))
    _, A = compensator(path, dist, t, dt, phi=psi_tf)
    H = Qpsi - A[-1]
    return lhs - (S - H + Kf)


def shift_consistency_check(path, dist, f, s, t, dt):
    """Restart defect: rebuild <f, nu_{s+t}> from the state at time s.

    Transports the exact age population at s forward by t, adds the kernel
    of fresh entries in (s, s+t], subtracts the centered departure term of
    that window (compensator by left-rule quadrature on [s, s+t]).  O(dt).
    """
    lhs = eval_age_functional(path, f, s + t)
    ages_s = path.ages_at(s)
    S = float(np.sum(np.asarray(f(ages_s + t)) * dist.survival_ratio(ages_s, t)))
    fresh = path.span_fresh & (path.span_begin > s) & (path.span_begin <= s + t)
    lag = s + t - path.span_begin[fresh]
    Kf = float(np.sum(np.asarray(f(lag)) * dist.sf(lag)))

    def psi_tf_shift(x, r):
        # r is absolute time; the window-local clock is r - s
        lag = np.maximum(s + t - r, 0.0)
        return np.asarray(f(x + lag)) * dist.survival_ratio(x, lag)

    take = (path.dep_time > s) & (path.dep_time <= s + t)
    Qpsi = float(np.sum(psi_tf_shift(path.dep_age[take], path.dep_time[take])))
    span_idx, k, nodes, ages, n = _left_nodes(path, s, s + t, dt)
    with np.errstate(over="ignore"):
        vals = dist.hazard(ages) * psi_tf_shift(ages, nodes)
    A = float(vals.sum()) * dt
    H = Qpsi - A
    return lhs - (S - H + Kf)
